//! Quenched-disorder ensembles.
//!
//! Each λ-set is equilibrated once; its networks are then grown one after
//! another from the same evolving wealth state, the graph being emptied
//! before every network. Sets are independent and run in parallel; their
//! results are merged in index order so the output does not depend on
//! scheduling.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    fit_power_law, tail_fit_range, ConditionalAccumulator, ConditionalMeanFit, DegreeBinning, Histogram,
    LambdaWealthAccumulator, LambdaWealthCurve, PercolationCurve, PowerLawFit,
};
use crate::error::{Error, Result};
use crate::exchange::{generate_saving_profile, initial_wealth, Market, QssConfig, QssReport, SavingProfile};
use crate::network::{GrowthTimes, LinkOutcome, TradeGraph};
use crate::params::ModelParams;
use crate::rng::{SeedTree, StreamTag, RNG_ALGORITHM};

/// When a growing network is considered finished.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Stop once the mean degree reaches the target, i.e. at
    /// `ceil(k N / 2)` links.
    MeanDegree(f64),
    SingleComponent,
    Clique,
}

/// Number of links at which the mean degree of `n` nodes first reaches `k`.
pub fn links_for_mean_degree(k: f64, n: usize) -> usize {
    let links = (k * n as f64 / 2.0 - 1e-9).ceil().max(0.0) as usize;
    links.min(n * (n - 1) / 2)
}

impl StopRule {
    pub fn reached(&self, graph: &TradeGraph) -> bool {
        match *self {
            StopRule::MeanDegree(k) => graph.n_links() >= links_for_mean_degree(k, graph.n_nodes()),
            StopRule::SingleComponent => graph.is_connected(),
            StopRule::Clique => graph.is_clique(),
        }
    }
}

/// How propensities are assigned to the traders of each set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SavingMode {
    /// Uniform draws rescaled so the largest is `1 - 1/N`.
    Quenched,
    /// The same propensity for everybody.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub savings: SavingMode,
    pub qss: QssConfig,
    pub n_lambda_sets: usize,
    pub networks_per_set: usize,
    pub stop_rule: StopRule,
    /// Mean-degree values at which growth progress is recorded.
    pub checkpoints: Vec<f64>,
    pub master_seed: u64,
    pub bins_per_decade: usize,
    /// Extra trades between the end of one network and the start of the next.
    pub inter_network_gap: u64,
    /// Trades allowed for growing one network.
    pub max_growth_trades: u64,
    pub lambda_bins: usize,
    /// How many networks (first in index order) to keep for edge-list export.
    pub export_graphs: usize,
}

impl ExperimentConfig {
    pub const DEFAULT_GROWTH_BUDGET_PER_TRADER: u64 = 1_000_000;
    pub const DEFAULT_BINS_PER_DECADE: usize = 10;
    pub const DEFAULT_LAMBDA_BINS: usize = 50;

    pub fn new(model: ModelParams) -> Self {
        let n = model.n_traders;
        Self {
            qss: QssConfig::for_traders(n),
            model,
            savings: SavingMode::Quenched,
            n_lambda_sets: 1,
            networks_per_set: 1,
            stop_rule: StopRule::MeanDegree(1.0),
            checkpoints: Vec::new(),
            master_seed: 0,
            bins_per_decade: Self::DEFAULT_BINS_PER_DECADE,
            inter_network_gap: 0,
            max_growth_trades: Self::DEFAULT_GROWTH_BUDGET_PER_TRADER.saturating_mul(n as u64),
            lambda_bins: Self::DEFAULT_LAMBDA_BINS,
            export_graphs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.qss.validate()?;
        if let SavingMode::Fixed(l) = self.savings {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::invalid(format!("fixed saving propensity must lie in [0, 1), got {l}")));
            }
        }
        if self.n_lambda_sets == 0 || self.networks_per_set == 0 {
            return Err(Error::invalid("n_lambda_sets and networks_per_set must be positive"));
        }
        if self.n_lambda_sets > 1 << 28 || self.networks_per_set > 1 << 28 {
            return Err(Error::invalid("too many sets or networks for the seeding scheme"));
        }
        if let StopRule::MeanDegree(k) = self.stop_rule {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::invalid(format!("mean-degree target must be positive, got {k}")));
            }
        }
        if self.checkpoints.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::invalid("checkpoints must be positive"));
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
        if self.bins_per_decade == 0 || self.lambda_bins == 0 {
            return Err(Error::invalid("bins_per_decade and lambda_bins must be positive"));
        }
        if self.max_growth_trades == 0 {
            return Err(Error::invalid("max_growth_trades must be positive"));
        }
        Ok(())
    }

    pub fn realizations(&self) -> usize {
        self.n_lambda_sets * self.networks_per_set
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizationStatus {
    Complete,
    /// The stop rule was not met within `max_growth_trades`; the network
    /// and wealth are still valid measurements and are kept.
    GrowthBudgetExhausted,
    /// The set never reached the quasi-stationary state; excluded from
    /// every average.
    QssNotConverged,
}

impl RealizationStatus {
    pub fn included(self) -> bool {
        self != RealizationStatus::QssNotConverged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub mean_degree: f64,
    pub links: usize,
    /// Growth trades executed when the checkpoint was passed.
    pub trades: u64,
    pub giant_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationOutput {
    pub set_index: usize,
    pub net_index: usize,
    pub status: RealizationStatus,
    /// Equilibration report of the set.
    pub qss: QssReport,
    pub growth_trades: u64,
    pub times: GrowthTimes,
    pub checkpoints: Vec<Checkpoint>,
    pub profile: Arc<SavingProfile>,
    /// Wealth when growth stopped.
    pub wealth: Vec<f64>,
    pub graph: TradeGraph,
    pub initial_total: f64,
}

impl RealizationOutput {
    pub fn included(&self) -> bool {
        self.status.included()
    }

    pub fn summary(&self) -> RealizationSummary {
        RealizationSummary {
            set_index: self.set_index,
            net_index: self.net_index,
            status: self.status,
            qss_trades: self.qss.trades,
            growth_trades: self.growth_trades,
            t_single_component: self.times.t_single_component,
            t_clique: self.times.t_clique,
            links: self.graph.n_links(),
            largest_component: self.graph.largest_component(),
            max_degree: self.graph.degree_sequence().into_iter().max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub set_index: usize,
    pub net_index: usize,
    pub status: RealizationStatus,
    pub qss_trades: u64,
    pub growth_trades: u64,
    pub t_single_component: Option<u64>,
    pub t_clique: Option<u64>,
    pub links: usize,
    pub largest_component: usize,
    pub max_degree: usize,
}

// One λ-set being worked through network by network.
struct SetRun<'a> {
    config: &'a ExperimentConfig,
    seeds: SeedTree,
    set_index: usize,
    next_net: usize,
    market: Market,
    profile: Arc<SavingProfile>,
    qss: QssReport,
    initial_total: f64,
}

impl<'a> SetRun<'a> {
    fn start(config: &'a ExperimentConfig, set_index: usize) -> Result<Self> {
        let n = config.model.n_traders;
        let seeds = SeedTree::new(config.master_seed);
        let profile = match config.savings {
            SavingMode::Quenched => {
                generate_saving_profile(n, &mut seeds.stream(StreamTag::SavingProfile, set_index, 0))?
            }
            SavingMode::Fixed(l) => SavingProfile::homogeneous(n, l)?,
        };
        let state = initial_wealth(&config.model, &mut seeds.stream(StreamTag::InitialWealth, set_index, 0))?;
        let initial_total = state.total();
        let mut market = Market::new(config.model.clone(), profile.clone(), state)?;
        let qss = market.equilibrate(&config.qss, &mut seeds.stream(StreamTag::Equilibration, set_index, 0))?;
        Ok(Self {
            config,
            seeds,
            set_index,
            next_net: 0,
            market,
            profile: Arc::new(profile),
            qss,
            initial_total,
        })
    }

    fn next(&mut self) -> Result<RealizationOutput> {
        let net_index = self.next_net;
        self.next_net += 1;
        let cfg = self.config;
        let n = cfg.model.n_traders;
        let mut graph = TradeGraph::new(n)?;
        let mut out = RealizationOutput {
            set_index: self.set_index,
            net_index,
            status: RealizationStatus::QssNotConverged,
            qss: self.qss.clone(),
            growth_trades: 0,
            times: GrowthTimes::default(),
            checkpoints: Vec::new(),
            profile: Arc::clone(&self.profile),
            wealth: Vec::new(),
            graph: graph.clone(),
            initial_total: self.initial_total,
        };
        if !self.qss.converged {
            out.wealth = self.market.state().wealth.clone();
            return Ok(out);
        }

        let mut rng = self.seeds.stream(StreamTag::Growth, self.set_index, net_index);
        let targets: Vec<(f64, usize)> = cfg.checkpoints.iter().map(|&k| (k, links_for_mean_degree(k, n))).collect();
        let mut next_checkpoint = 0;
        let record_checkpoints = |graph: &TradeGraph, next: &mut usize, out: &mut Vec<Checkpoint>| {
            while *next < targets.len() && graph.n_links() >= targets[*next].1 {
                out.push(Checkpoint {
                    mean_degree: targets[*next].0,
                    links: graph.n_links(),
                    trades: graph.trades(),
                    giant_fraction: graph.giant_component_fraction(),
                });
                *next += 1;
            }
        };
        record_checkpoints(&graph, &mut next_checkpoint, &mut out.checkpoints);
        let mut reached = cfg.stop_rule.reached(&graph);
        while !reached && graph.trades() < cfg.max_growth_trades {
            let event = self.market.step(&mut rng)?;
            if graph.record_trade(&event)? == LinkOutcome::NewLink {
                record_checkpoints(&graph, &mut next_checkpoint, &mut out.checkpoints);
                reached = cfg.stop_rule.reached(&graph);
            }
        }

        let total = self.market.state().total();
        let drift = (total - self.initial_total).abs() / self.initial_total;
        if !(drift < 1e-8) {
            return Err(Error::DegenerateState(format!(
                "wealth not conserved in set {} network {net_index}: relative drift {drift:e}",
                self.set_index
            )));
        }
        out.status = if reached { RealizationStatus::Complete } else { RealizationStatus::GrowthBudgetExhausted };
        out.growth_trades = graph.trades();
        out.times = graph.growth_times();
        out.wealth = self.market.state().wealth.clone();
        out.graph = graph;
        if cfg.inter_network_gap > 0 {
            self.market.run(cfg.inter_network_gap, &mut rng)?;
        }
        Ok(out)
    }
}

/// Every network of one λ-set, in order.
pub fn run_lambda_set(config: &ExperimentConfig, set_index: usize) -> Result<Vec<RealizationOutput>> {
    config.validate()?;
    let mut run = SetRun::start(config, set_index)?;
    (0..config.networks_per_set).map(|_| run.next()).collect()
}

/// One network, reproduced from scratch: the set is equilibrated and the
/// networks before `net_index` are regrown, since they shape the wealth
/// this one starts from.
pub fn run_realization(config: &ExperimentConfig, set_index: usize, net_index: usize) -> Result<RealizationOutput> {
    config.validate()?;
    if set_index >= config.n_lambda_sets || net_index >= config.networks_per_set {
        return Err(Error::invalid(format!("realization ({set_index}, {net_index}) outside the configured ensemble")));
    }
    let mut run = SetRun::start(config, set_index)?;
    for _ in 0..net_index {
        run.next()?;
    }
    run.next()
}

/// Raw per-node and per-link samples pooled over included realizations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PooledSamples {
    pub wealth: Vec<f64>,
    pub degree: Vec<u64>,
    pub weight: Vec<f64>,
    pub strength: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub rng_algorithm: String,
    pub master_seed: u64,
    /// FNV-1a hash of `config_text`.
    pub config_hash: String,
    pub config_text: String,
    pub realizations: usize,
    pub included: usize,
    pub excluded_not_converged: usize,
    pub growth_budget_exhausted: usize,
    pub qss_trades: u64,
    pub growth_trades: u64,
    /// Realizations contributing to each averaged curve.
    pub contributions: Vec<(String, usize)>,
    pub fits: FitSummary,
    pub summaries: Vec<RealizationSummary>,
}

/// Fits run on every ensemble. Tails are fitted from the distribution's mean
/// up to half a decade below its largest sample; `None` marks a fit the data
/// could not support.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    /// Pareto exponent: the wealth density falls as `x^-(1 + nu)`.
    pub nu: Option<f64>,
    pub wealth_tail: Option<PowerLawFit>,
    pub degree_tail: Option<PowerLawFit>,
    pub weight_tail: Option<PowerLawFit>,
    pub strength_tail: Option<PowerLawFit>,
    pub percolation_threshold: Option<f64>,
    pub chi: Option<f64>,
    pub chi_stderr: Option<f64>,
    pub phi: Option<f64>,
    pub mu: Option<f64>,
}

fn mean_positive(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.filter(|&x| x > 0.0).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn tail_fit(hist: Option<&Histogram>, typical: Option<f64>) -> Option<PowerLawFit> {
    let hist = hist?;
    fit_power_law(hist, tail_fit_range(hist, typical?)).ok()
}

impl FitSummary {
    pub fn compute(out: &EnsembleOutput) -> Self {
        let s = &out.samples;
        let wealth_tail = tail_fit(out.wealth_hist.as_ref(), Some(out.config.model.mean_wealth));
        let chi = out.lambda_wealth.as_ref().filter(|c| c.chi.is_finite());
        let cond = out.conditional.as_ref();
        Self {
            nu: wealth_tail.as_ref().map(|f| f.exponent - 1.0),
            wealth_tail,
            degree_tail: tail_fit(out.degree_hist.as_ref(), mean_positive(s.degree.iter().map(|&k| k as f64))),
            weight_tail: tail_fit(out.weight_hist.as_ref(), mean_positive(s.weight.iter().copied())),
            strength_tail: tail_fit(out.strength_hist.as_ref(), mean_positive(s.strength.iter().copied())),
            percolation_threshold: out.percolation.as_ref().and_then(|p| p.threshold().ok()),
            chi: chi.map(|c| c.chi),
            chi_stderr: chi.map(|c| c.chi_stderr),
            phi: cond.map(|c| c.phi),
            mu: cond.map(|c| c.mu),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleOutput {
    pub config: ExperimentConfig,
    pub samples: PooledSamples,
    pub wealth_hist: Option<Histogram>,
    pub degree_hist: Option<Histogram>,
    pub weight_hist: Option<Histogram>,
    pub strength_hist: Option<Histogram>,
    pub percolation: Option<PercolationCurve>,
    pub lambda_wealth: Option<LambdaWealthCurve>,
    pub conditional: Option<ConditionalMeanFit>,
    /// Networks kept for export, keyed by (set, network).
    pub graphs: Vec<((usize, usize), TradeGraph)>,
    pub manifest: Manifest,
}

pub fn fnv1a(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

// Everything one set contributes, reduced on the worker that ran it.
struct SetPartial<T> {
    summaries: Vec<RealizationSummary>,
    samples: PooledSamples,
    traces: Vec<Vec<u32>>,
    lambda: Option<LambdaWealthAccumulator>,
    conditional: ConditionalAccumulator,
    graphs: Vec<((usize, usize), TradeGraph)>,
    inspected: Vec<T>,
}

fn reduce_set<T, F>(config: &ExperimentConfig, set_index: usize, inspect: &F) -> Result<SetPartial<T>>
where
    F: Fn(&RealizationOutput) -> T,
{
    let n = config.model.n_traders;
    let lambda_top = match config.savings {
        SavingMode::Quenched => Some(1.0 - 1.0 / n as f64),
        SavingMode::Fixed(_) => None,
    };
    let mut part = SetPartial {
        summaries: Vec::new(),
        samples: PooledSamples::default(),
        traces: Vec::new(),
        lambda: lambda_top.map(|top| LambdaWealthAccumulator::new(config.lambda_bins, top)).transpose()?,
        conditional: ConditionalAccumulator::new(DegreeBinning::default(), n - 1)?,
        graphs: Vec::new(),
        inspected: Vec::new(),
    };
    let mut run = SetRun::start(config, set_index)?;
    for _ in 0..config.networks_per_set {
        let r = run.next()?;
        part.summaries.push(r.summary());
        part.inspected.push(inspect(&r));
        if !r.included() {
            continue;
        }
        let s = &mut part.samples;
        s.wealth.extend_from_slice(&r.wealth);
        let degrees = r.graph.degree_sequence();
        let strengths = r.graph.strength_sequence();
        s.degree.extend(degrees.iter().map(|&k| k as u64));
        s.weight.extend(r.graph.link_weights());
        s.strength.extend_from_slice(&strengths);
        part.traces.push(r.graph.giant_trace().to_vec());
        if let Some(acc) = part.lambda.as_mut() {
            acc.add(&r.wealth, &r.profile)?;
        }
        part.conditional.add(&degrees, &strengths, &r.wealth)?;
        let ordinal = r.set_index * config.networks_per_set + r.net_index;
        if ordinal < config.export_graphs {
            part.graphs.push(((r.set_index, r.net_index), r.graph));
        }
    }
    Ok(part)
}

/// Runs the whole ensemble. `config_text` is echoed in the manifest.
pub fn run_ensemble(config: &ExperimentConfig, config_text: &str) -> Result<EnsembleOutput> {
    run_ensemble_with(config, config_text, |_| ()).map(|(out, _)| out)
}

/// As [`run_ensemble`], additionally applying `inspect` to every
/// realization (in set, network order) before it is discarded.
pub fn run_ensemble_with<T, F>(config: &ExperimentConfig, config_text: &str, inspect: F) -> Result<(EnsembleOutput, Vec<T>)>
where
    T: Send,
    F: Fn(&RealizationOutput) -> T + Sync,
{
    config.validate()?;
    let parts: Vec<SetPartial<T>> = (0..config.n_lambda_sets)
        .into_par_iter()
        .map(|set| reduce_set(config, set, &inspect))
        .collect::<Result<_>>()?;

    let n = config.model.n_traders;
    let mut samples = PooledSamples::default();
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    let mut lambda: Option<LambdaWealthAccumulator> = None;
    let mut conditional = ConditionalAccumulator::new(DegreeBinning::default(), n - 1)?;
    let mut graphs = Vec::new();
    let mut inspected = Vec::new();
    for part in parts {
        samples.wealth.extend(part.samples.wealth);
        samples.degree.extend(part.samples.degree);
        samples.weight.extend(part.samples.weight);
        samples.strength.extend(part.samples.strength);
        summaries.extend(part.summaries);
        traces.extend(part.traces);
        if let Some(acc) = part.lambda {
            match lambda.as_mut() {
                Some(total) => total.merge(&acc),
                None => lambda = Some(acc),
            }
        }
        conditional.merge(&part.conditional);
        graphs.extend(part.graphs);
        inspected.extend(part.inspected);
    }

    let excluded = summaries.iter().filter(|s| s.status == RealizationStatus::QssNotConverged).count();
    let included = summaries.len() - excluded;
    if included == 0 {
        return Err(Error::NoConvergedRealizations { excluded });
    }
    let bpd = config.bins_per_decade;
    let wealth_hist = Histogram::log_binned(&samples.wealth, bpd).ok();
    let degree_hist = Histogram::log_binned_integers(&samples.degree, bpd).ok();
    let weight_hist = Histogram::log_binned(&samples.weight, bpd).ok();
    let strength_hist = Histogram::log_binned(&samples.strength, bpd).ok();
    let trace_refs: Vec<&[u32]> = traces.iter().map(|t| t.as_slice()).collect();
    let percolation = PercolationCurve::from_traces(n, &trace_refs).ok();
    let lambda_wealth = lambda.and_then(|acc| acc.finish().ok());
    let conditional = conditional.finish().ok();

    let mut contributions = Vec::new();
    for (name, present) in [
        ("wealth_hist", wealth_hist.is_some()),
        ("degree_hist", degree_hist.is_some()),
        ("weight_hist", weight_hist.is_some()),
        ("strength_hist", strength_hist.is_some()),
        ("percolation", percolation.is_some()),
        ("lambda_wealth", lambda_wealth.is_some()),
        ("conditional_means", conditional.is_some()),
    ] {
        contributions.push((name.to_string(), if present { included } else { 0 }));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        master_seed: config.master_seed,
        config_hash: fnv1a(config_text),
        config_text: config_text.to_string(),
        realizations: summaries.len(),
        included,
        excluded_not_converged: excluded,
        growth_budget_exhausted: summaries
            .iter()
            .filter(|s| s.status == RealizationStatus::GrowthBudgetExhausted)
            .count(),
        // equilibration happens once per set
        qss_trades: summaries.iter().filter(|s| s.net_index == 0).map(|s| s.qss_trades).sum(),
        growth_trades: summaries.iter().map(|s| s.growth_trades).sum(),
        contributions,
        fits: FitSummary::default(),
        summaries,
    };
    let mut out = EnsembleOutput {
        config: config.clone(),
        samples,
        wealth_hist,
        degree_hist,
        weight_hist,
        strength_hist,
        percolation,
        lambda_wealth,
        conditional,
        graphs,
        manifest,
    };
    out.manifest.fits = FitSummary::compute(&out);
    Ok((out, inspected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, alpha: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ModelParams::new(n, alpha, alpha));
        c.qss = QssConfig { window: 10, sample_stride: n as u64, ..QssConfig::for_traders(n) };
        c.n_lambda_sets = 3;
        c.networks_per_set = 2;
        c.master_seed = 17;
        c
    }

    #[test]
    fn mean_degree_link_targets() {
        assert_eq!(links_for_mean_degree(1.0, 256), 128);
        assert_eq!(links_for_mean_degree(5.0, 128), 320);
        assert_eq!(links_for_mean_degree(1.0, 7), 4);
        assert_eq!(links_for_mean_degree(100.0, 4), 6);
    }

    #[test]
    fn mean_degree_stop_is_exact() {
        let c = small(256, 0.0);
        let r = run_realization(&c, 0, 0).unwrap();
        assert_eq!(r.status, RealizationStatus::Complete);
        assert_eq!(r.graph.n_links(), 128);
    }

    #[test]
    fn replay_is_bit_identical() {
        let c = small(64, 1.0);
        assert_eq!(run_realization(&c, 1, 1).unwrap(), run_realization(&c, 1, 1).unwrap());
        let set = run_lambda_set(&c, 1).unwrap();
        assert_eq!(set[1], run_realization(&c, 1, 1).unwrap());
    }

    #[test]
    fn networks_of_a_set_share_propensities_only() {
        let c = small(64, 0.5);
        let a = run_realization(&c, 2, 0).unwrap();
        let b = run_realization(&c, 2, 1).unwrap();
        assert_eq!(a.profile, b.profile);
        assert_ne!(a.graph.link_weights(), b.graph.link_weights());
        let other = run_realization(&c, 1, 0).unwrap();
        assert_ne!(a.profile, other.profile);
    }

    #[test]
    fn checkpoints_recorded_in_order() {
        let mut c = small(128, 0.0);
        c.checkpoints = vec![0.25, 0.5, 1.0];
        let r = run_realization(&c, 0, 0).unwrap();
        let links: Vec<usize> = r.checkpoints.iter().map(|p| p.links).collect();
        assert_eq!(links, vec![16, 32, 64]);
        assert!(r.checkpoints.windows(2).all(|w| w[0].trades < w[1].trades));
    }

    #[test]
    fn growth_budget_is_reported() {
        let mut c = small(32, 0.0);
        c.stop_rule = StopRule::Clique;
        c.max_growth_trades = 50;
        let r = run_realization(&c, 0, 0).unwrap();
        assert_eq!(r.status, RealizationStatus::GrowthBudgetExhausted);
        assert_eq!(r.growth_trades, 50);
    }

    #[test]
    fn unconverged_sets_are_excluded() {
        let mut c = small(32, 0.0);
        c.qss.max_trades = 0;
        match run_ensemble(&c, "") {
            Err(Error::NoConvergedRealizations { excluded }) => assert_eq!(excluded, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ensemble_is_independent_of_thread_count() {
        let c = small(64, 1.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&c, "x").unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(a.degree_hist, b.degree_hist);
        assert_eq!(a.manifest.realizations, 6);
        assert_eq!(a.samples.wealth.len(), 6 * 64);
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(16, 0.0);
        c.checkpoints = vec![1.0, 0.5];
        assert!(c.validate().is_err());
        let mut c = small(16, 0.0);
        c.stop_rule = StopRule::MeanDegree(0.0);
        assert!(c.validate().is_err());
        let mut c = small(16, 0.0);
        c.savings = SavingMode::Fixed(1.0);
        assert!(c.validate().is_err());
    }
}
