//! The experiment families behind the command-line subcommands. Each runs
//! one or more ensembles from a [`RunConfig`] and condenses them into a
//! report; [`write_report`] lays the result out on disk.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{
    fit_power_law, fit_theta, fit_theta_by_collapse, optimize_collapse, shape_summary, tail_fit_range, Histogram,
    PercolationCurve, ScalingCollapse, SearchBox, ShapeSummary, ThetaFit,
};
use crate::config::RunConfig;
use crate::ensemble::{fnv1a, run_ensemble, EnsembleOutput, StopRule};
use crate::error::{Error, Result};
use crate::output::{prepare_output_dir, write_ensemble, write_json, CONFIG_FILE, MANIFEST_FILE};
use crate::params::Exponent;
use crate::rng::RNG_ALGORITHM;

/// One ensemble of a multi-point experiment.
#[derive(Clone, Debug)]
pub struct Point {
    /// Subdirectory name.
    pub label: String,
    pub config: RunConfig,
    pub output: EnsembleOutput,
}

pub fn run_point(cfg: &RunConfig) -> Result<EnsembleOutput> {
    run_ensemble(&cfg.experiment()?, &cfg.to_config_text())
}

fn point(label: String, cfg: RunConfig) -> Result<Point> {
    let output = run_point(&cfg)?;
    Ok(Point { label, config: cfg, output })
}

fn sizes(cfg: &RunConfig, at_least: usize, what: &str) -> Result<Vec<usize>> {
    if cfg.sizes.len() < at_least {
        return Err(Error::invalid(format!("{what} needs at least {at_least} entries in `sizes`")));
    }
    Ok(cfg.sizes.clone())
}

fn size_points(cfg: &RunConfig, sizes: &[usize]) -> Result<Vec<Point>> {
    sizes
        .iter()
        .map(|&n| point(format!("n{n}"), cfg.point(n, cfg.alpha, cfg.beta)))
        .collect()
}

fn mean_positive(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.filter(|&x| x > 0.0).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// What every experiment hands to [`write_report`].
pub trait Report {
    fn points(&self) -> &[Point];
    /// File name and contents of the table summarizing the points.
    fn summary_csv(&self) -> (&'static str, String);
    fn summary_json(&self) -> Result<serde_json::Value>;
    /// Additional files for the point at `index`.
    fn point_files(&self, _index: usize) -> Vec<(String, String)> {
        Vec::new()
    }
}

#[derive(Serialize)]
struct ExperimentManifest<'a> {
    version: &'static str,
    command: &'a str,
    rng_algorithm: &'static str,
    master_seed: u64,
    config_hash: String,
    config_text: String,
    points: Vec<&'a str>,
    summary: serde_json::Value,
}

/// Writes each point into its own subdirectory, the summary table, and a
/// top-level manifest naming the points.
pub fn write_report(dir: &Path, command: &str, cfg: &RunConfig, report: &dyn Report, force: bool) -> Result<()> {
    prepare_output_dir(dir, force)?;
    for (k, p) in report.points().iter().enumerate() {
        let sub = dir.join(&p.label);
        prepare_output_dir(&sub, force)?;
        write_ensemble(&sub, &p.output)?;
        for (name, text) in report.point_files(k) {
            std::fs::write(sub.join(name), text)?;
        }
    }
    let (name, text) = report.summary_csv();
    std::fs::write(dir.join(name), text)?;
    let config_text = cfg.to_config_text();
    std::fs::write(dir.join(CONFIG_FILE), &config_text)?;
    let manifest = ExperimentManifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        rng_algorithm: RNG_ALGORITHM,
        master_seed: cfg.master_seed,
        config_hash: fnv1a(&config_text),
        config_text,
        points: report.points().iter().map(|p| p.label.as_str()).collect(),
        summary: report.summary_json()?,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

/// A single ensemble at the configured size and exponents.
pub fn simulate(cfg: &RunConfig) -> Result<EnsembleOutput> {
    run_point(cfg)
}

pub fn write_simulation(dir: &Path, out: &EnsembleOutput, force: bool) -> Result<()> {
    prepare_output_dir(dir, force)?;
    write_ensemble(dir, out)?;
    Ok(())
}

// ---- pareto ----

#[derive(Clone, Debug, Serialize)]
pub struct ParetoRow {
    pub n: usize,
    pub nu: Option<f64>,
    pub stderr: Option<f64>,
    pub fit_range: Option<(f64, f64)>,
}

/// Wealth tails at each size in `sizes`.
pub struct ParetoReport {
    pub points: Vec<Point>,
    pub rows: Vec<ParetoRow>,
}

pub fn pareto(cfg: &RunConfig) -> Result<ParetoReport> {
    let points = size_points(cfg, &sizes(cfg, 1, "pareto")?)?;
    let rows = points
        .iter()
        .map(|p| {
            let f = p.output.manifest.fits.wealth_tail.as_ref();
            ParetoRow {
                n: p.config.n_traders,
                nu: f.map(|f| f.exponent - 1.0),
                stderr: f.map(|f| f.stderr),
                fit_range: f.map(|f| f.fit_range),
            }
        })
        .collect();
    Ok(ParetoReport { points, rows })
}

impl Report for ParetoReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("n,nu,stderr,fit_low,fit_high\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.n,
                opt(r.nu),
                opt(r.stderr),
                opt(r.fit_range.map(|f| f.0)),
                opt(r.fit_range.map(|f| f.1))
            );
        }
        ("pareto.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.rows)?)
    }
}

// ---- percolation ----

/// Giant-component growth at each size, with the threshold exponent from
/// both the threshold scaling and the `rho N^theta` collapse.
pub struct PercolationReport {
    pub points: Vec<Point>,
    pub thresholds: BTreeMap<usize, f64>,
    pub theta: ThetaFit,
    pub collapse_theta: f64,
}

pub fn percolation(cfg: &RunConfig) -> Result<PercolationReport> {
    let points = size_points(cfg, &sizes(cfg, 3, "percolation")?)?;
    let mut thresholds = BTreeMap::new();
    let mut curves: Vec<PercolationCurve> = Vec::new();
    for p in &points {
        let n = p.config.n_traders;
        let curve = p
            .output
            .percolation
            .clone()
            .ok_or_else(|| Error::insufficient(format!("no percolation curve at N = {n}")))?;
        let rho = curve.threshold().map_err(|_| {
            Error::insufficient(format!(
                "the giant component never reaches half the traders at N = {n}; grow the networks further"
            ))
        })?;
        thresholds.insert(n, rho);
        curves.push(curve);
    }
    let theta = fit_theta(&thresholds)?;
    let collapse_theta = fit_theta_by_collapse(&curves, 0.5, 1.5)?;
    Ok(PercolationReport { points, thresholds, theta, collapse_theta })
}

impl Report for PercolationReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("n,rho_c\n");
        for (n, r) in &self.thresholds {
            let _ = writeln!(s, "{n},{r}");
        }
        ("thresholds.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "thresholds": self.thresholds,
            "theta": self.theta,
            "collapse_theta": self.collapse_theta,
        }))
    }
}

// ---- collapse ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Degree,
    Weight,
    Strength,
}

impl Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::Degree => "degree",
            Observable::Weight => "weight",
            Observable::Strength => "strength",
        })
    }
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::Degree, Observable::Weight, Observable::Strength];

    pub fn histogram(self, out: &EnsembleOutput) -> Option<&Histogram> {
        match self {
            Observable::Degree => out.degree_hist.as_ref(),
            Observable::Weight => out.weight_hist.as_ref(),
            Observable::Strength => out.strength_hist.as_ref(),
        }
    }

    /// Mean over nodes or links with a nonzero value.
    pub fn mean(self, out: &EnsembleOutput) -> f64 {
        let s = &out.samples;
        match self {
            Observable::Degree => mean_positive(s.degree.iter().map(|&k| k as f64)),
            Observable::Weight => mean_positive(s.weight.iter().copied()),
            Observable::Strength => mean_positive(s.strength.iter().copied()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseRow {
    pub observable: Observable,
    pub collapse: Option<ScalingCollapse>,
    /// Tail exponent fitted directly at the largest size.
    pub direct_exponent: Option<f64>,
}

/// Finite-size scaling of the degree, weight and strength distributions.
pub struct CollapseReport {
    pub points: Vec<Point>,
    pub rows: Vec<CollapseRow>,
}

/// Collapses the tails (bins above the mean) of one observable across sizes.
pub fn collapse_tails(points: &[Point], obs: Observable, search: &SearchBox) -> Result<ScalingCollapse> {
    let mut hists = BTreeMap::new();
    for p in points {
        let h = obs
            .histogram(&p.output)
            .ok_or_else(|| Error::insufficient(format!("no {obs} histogram at N = {}", p.config.n_traders)))?;
        hists.insert(p.config.n_traders, h.tail(obs.mean(&p.output)));
    }
    optimize_collapse(&hists, search)
}

pub fn collapse(cfg: &RunConfig) -> Result<CollapseReport> {
    let points = size_points(cfg, &sizes(cfg, 2, "collapse")?)?;
    let largest = points.iter().max_by_key(|p| p.config.n_traders).unwrap();
    let rows = Observable::ALL
        .iter()
        .map(|&obs| CollapseRow {
            observable: obs,
            collapse: collapse_tails(&points, obs, &SearchBox::default()).ok(),
            direct_exponent: obs.histogram(&largest.output).and_then(|h| {
                fit_power_law(h, tail_fit_range(h, obs.mean(&largest.output)))
                    .ok()
                    .map(|f| f.exponent)
            }),
        })
        .collect();
    Ok(CollapseReport { points, rows })
}

impl Report for CollapseReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("observable,eta,zeta,gamma,score,direct_exponent\n");
        for r in &self.rows {
            let c = r.collapse.as_ref();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.observable,
                opt(c.map(|c| c.eta)),
                opt(c.map(|c| c.zeta)),
                opt(c.map(|c| c.derived_gamma)),
                opt(c.map(|c| c.score)),
                opt(r.direct_exponent)
            );
        }
        ("collapse.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.rows)?)
    }
}

// ---- sweep ----

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub alpha: Exponent,
    pub chi: Option<f64>,
    pub chi_stderr: Option<f64>,
    pub nu: Option<f64>,
    pub gamma_k: Option<f64>,
    pub gamma_w: Option<f64>,
    pub gamma_s: Option<f64>,
    pub rho_c: Option<f64>,
    pub phi: Option<f64>,
    pub mu: Option<f64>,
}

/// Every per-ensemble fit along the line alpha = beta.
pub struct SweepReport {
    pub points: Vec<Point>,
    pub rows: Vec<SweepRow>,
}

fn alpha_label(a: Exponent) -> String {
    format!("alpha_{a}")
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepReport> {
    if cfg.sweep_alphas.is_empty() {
        return Err(Error::invalid("sweep needs `sweep_alphas`"));
    }
    let points: Vec<Point> = cfg
        .sweep_alphas
        .iter()
        .map(|&a| point(alpha_label(a), cfg.point(cfg.n_traders, a, a)))
        .collect::<Result<_>>()?;
    let rows = points
        .iter()
        .map(|p| {
            let f = &p.output.manifest.fits;
            SweepRow {
                alpha: p.config.alpha,
                chi: f.chi,
                chi_stderr: f.chi_stderr,
                nu: f.nu,
                gamma_k: f.degree_tail.as_ref().map(|t| t.exponent),
                gamma_w: f.weight_tail.as_ref().map(|t| t.exponent),
                gamma_s: f.strength_tail.as_ref().map(|t| t.exponent),
                rho_c: f.percolation_threshold,
                phi: f.phi,
                mu: f.mu,
            }
        })
        .collect();
    Ok(SweepReport { points, rows })
}

impl Report for SweepReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("alpha,chi,chi_stderr,nu,gamma_k,gamma_w,gamma_s,rho_c,phi,mu\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.alpha,
                opt(r.chi),
                opt(r.chi_stderr),
                opt(r.nu),
                opt(r.gamma_k),
                opt(r.gamma_w),
                opt(r.gamma_s),
                opt(r.rho_c),
                opt(r.phi),
                opt(r.mu)
            );
        }
        ("sweep.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.rows)?)
    }
}

// ---- clique ----

pub const LN_WEIGHT_BINS: usize = 40;

#[derive(Clone, Debug, Serialize)]
pub struct CliqueRow {
    pub alpha: Exponent,
    /// Shape of the distribution of `ln w`.
    pub ln_weight: ShapeSummary,
}

/// Link weights of fully connected networks, for each alpha in
/// `sweep_alphas` at the configured beta.
pub struct CliqueReport {
    pub points: Vec<Point>,
    pub rows: Vec<CliqueRow>,
    ln_weight_hists: Vec<Histogram>,
}

pub fn clique(cfg: &RunConfig) -> Result<CliqueReport> {
    if cfg.sweep_alphas.is_empty() {
        return Err(Error::invalid("clique needs `sweep_alphas`"));
    }
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut ln_weight_hists = Vec::new();
    for &a in &cfg.sweep_alphas {
        let mut c = cfg.point(cfg.n_traders, a, cfg.beta);
        c.stop_rule = StopRule::Clique;
        let p = point(alpha_label(a), c)?;
        let ln_w: Vec<f64> = p.output.samples.weight.iter().filter(|&&w| w > 0.0).map(|w| w.ln()).collect();
        rows.push(CliqueRow { alpha: a, ln_weight: shape_summary(&ln_w)? });
        ln_weight_hists.push(Histogram::linear(&ln_w, LN_WEIGHT_BINS)?);
        points.push(p);
    }
    Ok(CliqueReport { points, rows, ln_weight_hists })
}

impl CliqueReport {
    /// Distribution of `ln w` for the point at `index`, on linear bins.
    pub fn ln_weight_histogram(&self, index: usize) -> &Histogram {
        &self.ln_weight_hists[index]
    }
}

impl Report for CliqueReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("alpha,mode,mean,std_dev,skewness,local_maxima\n");
        for r in &self.rows {
            let w = &r.ln_weight;
            let _ = writeln!(s, "{},{},{},{},{},{}", r.alpha, w.mode, w.mean, w.std_dev, w.skewness, w.local_maxima);
        }
        ("clique.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.rows)?)
    }

    fn point_files(&self, index: usize) -> Vec<(String, String)> {
        vec![("ln_weight_hist.csv".to_string(), self.ln_weight_hists[index].to_csv())]
    }
}

// ---- corners ----

/// Growth budget per trader for corner runs without an explicit one; the
/// star completes after about `N ln N` trades and the dimer never grows.
pub const CORNER_GROWTH_PER_TRADER: u64 = 50;

#[derive(Clone, Debug, Serialize)]
pub struct CornerRow {
    pub label: String,
    pub alpha: Exponent,
    pub beta: Exponent,
    pub realizations: usize,
    pub mean_links: f64,
    pub max_degree: usize,
    /// Share of networks in which one trader is linked to all others.
    pub star_fraction: f64,
    /// Share of networks consisting of a single link.
    pub dimer_fraction: f64,
    pub nu: Option<f64>,
}

/// The limits (inf, 0), (0, inf) and (inf, inf) of the selection exponents.
pub struct CornersReport {
    pub points: Vec<Point>,
    pub rows: Vec<CornerRow>,
}

pub fn corners(cfg: &RunConfig) -> Result<CornersReport> {
    let inf = Exponent::Infinite;
    let zero = Exponent::Finite(0.0);
    let n = cfg.n_traders;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for (label, a, b) in [("inf_0", inf, zero), ("0_inf", zero, inf), ("inf_inf", inf, inf)] {
        let mut c = cfg.point(n, a, b);
        c.stop_rule = StopRule::SingleComponent;
        c.max_growth_trades = Some(c.max_growth_trades.unwrap_or(CORNER_GROWTH_PER_TRADER * n as u64));
        let p = point(label.to_string(), c)?;
        let included: Vec<_> = p.output.manifest.summaries.iter().filter(|s| s.status.included()).collect();
        let m = included.len().max(1) as f64;
        rows.push(CornerRow {
            label: label.to_string(),
            alpha: a,
            beta: b,
            realizations: included.len(),
            mean_links: included.iter().map(|s| s.links as f64).sum::<f64>() / m,
            max_degree: included.iter().map(|s| s.max_degree).max().unwrap_or(0),
            star_fraction: included.iter().filter(|s| s.max_degree + 1 == n).count() as f64 / m,
            dimer_fraction: included.iter().filter(|s| s.links == 1).count() as f64 / m,
            nu: p.output.manifest.fits.nu,
        });
        points.push(p);
    }
    Ok(CornersReport { points, rows })
}

impl Report for CornersReport {
    fn points(&self) -> &[Point] {
        &self.points
    }

    fn summary_csv(&self) -> (&'static str, String) {
        let mut s = String::from("corner,alpha,beta,realizations,mean_links,max_degree,star_fraction,dimer_fraction,nu\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.label,
                r.alpha,
                r.beta,
                r.realizations,
                r.mean_links,
                r.max_degree,
                r.star_fraction,
                r.dimer_fraction,
                opt(r.nu)
            );
        }
        ("topology.csv", s)
    }

    fn summary_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.rows)?)
    }
}
