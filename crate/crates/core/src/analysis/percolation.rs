use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use std::fmt::Write as _;

use super::csv::{cell, meta_line, Table};
use super::fit_line;
use crate::error::{Error, Result};

/// Ensemble-averaged giant-component fraction against link density for one
/// system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationCurve {
    pub n_nodes: usize,
    /// `(rho, mean s_m)` pairs in increasing `rho`.
    pub points: Vec<(f64, f64)>,
    pub realizations: usize,
}

impl PercolationCurve {
    /// Averages giant-component traces (largest component size after the
    /// k-th link) link by link, over the prefix all traces share.
    pub fn from_traces(n_nodes: usize, traces: &[&[u32]]) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::insufficient("no giant-component traces"));
        }
        let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
        let max_links = (n_nodes * (n_nodes - 1) / 2) as f64;
        let scale = 1.0 / (n_nodes as f64 * traces.len() as f64);
        let points = (0..len)
            .map(|k| {
                let sum: u64 = traces.iter().map(|t| t[k] as u64).sum();
                (k as f64 / max_links, sum as f64 * scale)
            })
            .collect();
        Ok(Self { n_nodes, points, realizations: traces.len() })
    }

    pub fn threshold(&self) -> Result<f64> {
        percolation_threshold(&self.points)
    }

    /// Keeps about `target` points, always including the first and last.
    pub fn thinned(&self, target: usize) -> Vec<(f64, f64)> {
        let stride = (self.points.len() / target.max(1)).max(1);
        let mut out: Vec<(f64, f64)> = self.points.iter().step_by(stride).copied().collect();
        if let Some(&last) = self.points.last() {
            if out.last() != Some(&last) {
                out.push(last);
            }
        }
        out
    }
}

impl PercolationCurve {
    pub const CSV_HEADER: &'static str = "rho,giant_fraction";

    pub fn to_csv(&self) -> String {
        let mut out = meta_line(&[("n_nodes", &self.n_nodes), ("realizations", &self.realizations)]);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for (r, s) in &self.points {
            let _ = writeln!(out, "{r},{s}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text, Self::CSV_HEADER)?;
        let points = table
            .rows
            .iter()
            .map(|(k, c)| Ok((cell(*k, c[0])?, cell(*k, c[1])?)))
            .collect::<Result<_>>()?;
        Ok(Self { n_nodes: table.meta("n_nodes")?, points, realizations: table.meta("realizations")? })
    }
}

/// Density at which the curve first rises through 1/2, by linear
/// interpolation between the bracketing points.
pub fn percolation_threshold(points: &[(f64, f64)]) -> Result<f64> {
    let k = points.iter().position(|p| p.1 >= 0.5).ok_or(Error::NotBracketed)?;
    let (rho, s) = points[k];
    if s == 0.5 {
        return Ok(rho);
    }
    if k == 0 {
        return Err(Error::NotBracketed);
    }
    let (r0, s0) = points[k - 1];
    Ok(r0 + (rho - r0) * (0.5 - s0) / (s - s0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaFit {
    pub theta: f64,
    pub stderr: f64,
    pub amplitude: f64,
}

/// `rho_c(N) ~ A N^-theta` by least squares on log-log axes.
pub fn fit_theta(thresholds: &BTreeMap<usize, f64>) -> Result<ThetaFit> {
    if thresholds.len() < 3 {
        return Err(Error::insufficient(format!(
            "theta fit needs at least 3 sizes, got {}",
            thresholds.len()
        )));
    }
    let xs: Vec<f64> = thresholds.keys().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = thresholds.values().map(|r| r.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(ThetaFit { theta: -line.slope, stderr: line.slope_stderr, amplitude: line.intercept.exp() })
}

// linear interpolation of s_m at density `rho`; points sorted by rho
fn interpolate(points: &[(f64, f64)], rho: f64) -> f64 {
    let k = points.partition_point(|p| p.0 < rho);
    if k == 0 {
        return points[0].1;
    }
    if k == points.len() {
        return points[k - 1].1;
    }
    let (r0, s0) = points[k - 1];
    let (r1, s1) = points[k];
    if r1 == r0 {
        s1
    } else {
        s0 + (s1 - s0) * (rho - r0) / (r1 - r0)
    }
}

const COLLAPSE_GRID: usize = 64;

/// Mean variance across sizes of `s_m` plotted against `rho N^theta`,
/// sampled on a shared grid over the range every curve covers.
pub fn percolation_collapse_spread(curves: &[PercolationCurve], theta: f64) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::insufficient("collapse needs at least two sizes"));
    }
    let mut top = f64::INFINITY;
    for c in curves {
        let last = c.points.last().ok_or_else(|| Error::insufficient("empty percolation curve"))?;
        top = top.min(last.0 * (c.n_nodes as f64).powf(theta));
    }
    if !(top > 0.0) {
        return Err(Error::NoOverlap);
    }
    let m = curves.len() as f64;
    let mut total = 0.0;
    for g in 1..=COLLAPSE_GRID {
        let u = top * g as f64 / COLLAPSE_GRID as f64;
        let vals: Vec<f64> = curves
            .iter()
            .map(|c| interpolate(&c.points, u * (c.n_nodes as f64).powf(-theta)))
            .collect();
        let mean = vals.iter().sum::<f64>() / m;
        total += vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    }
    Ok(total / COLLAPSE_GRID as f64)
}

/// The exponent in `[lo, hi]` that best collapses the curves: a coarse scan
/// followed by golden-section refinement around the best scan point.
pub fn fit_theta_by_collapse(curves: &[PercolationCurve], lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid("theta search needs lo < hi"));
    }
    let steps = 50;
    let at = |k: usize| lo + (hi - lo) * k as f64 / steps as f64;
    let mut best = (f64::INFINITY, 0);
    for k in 0..=steps {
        let v = percolation_collapse_spread(curves, at(k))?;
        if v < best.0 {
            best = (v, k);
        }
    }
    let (mut a, mut b) = (at(best.1.saturating_sub(1)), at((best.1 + 1).min(steps)));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = percolation_collapse_spread(curves, c)?;
    let mut fd = percolation_collapse_spread(curves, d)?;
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = percolation_collapse_spread(curves, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = percolation_collapse_spread(curves, d)?;
        }
    }
    Ok(0.5 * (a + b))
}
