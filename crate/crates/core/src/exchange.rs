//! Trading dynamics: quenched saving propensities, the bipartite exchange
//! rule and quasi-stationary-state detection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{InitialWealth, ModelParams};
use crate::selection::PairSelector;

/// Quenched saving propensities of one disorder realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavingProfile {
    lambdas: Vec<f64>,
}

impl SavingProfile {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::invalid("a saving profile needs at least 2 traders"));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && **l < 1.0)) {
            return Err(Error::invalid(format!("saving propensity {bad} outside [0, 1)")));
        }
        Ok(Self { lambdas })
    }

    /// Every trader saves the same fraction; `0.0` gives the pure random
    /// exchange model.
    pub fn homogeneous(n: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda; n])
    }

    /// Rescales raw uniform draws so the largest becomes exactly `1 - 1/N`.
    pub fn from_draws(mut draws: Vec<f64>) -> Result<Self> {
        let n = draws.len();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 traders, got {n}")));
        }
        if draws.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(Error::invalid("draws must lie in (0, 1)"));
        }
        let target = 1.0 - 1.0 / n as f64;
        let (arg_max, u_max) = draws
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, u)| if u > best.1 { (k, u) } else { best });
        let scale = target / u_max;
        draws.iter_mut().for_each(|u| *u = (*u * scale).min(target));
        draws[arg_max] = target;
        Self::new(draws)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }
}

pub fn generate_saving_profile<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SavingProfile> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 traders, got {n}")));
    }
    let draws = (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    SavingProfile::from_draws(draws)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WealthState {
    pub wealth: Vec<f64>,
    /// Trades executed since this state was created.
    pub trade_count: u64,
}

impl WealthState {
    pub fn new(wealth: Vec<f64>) -> Self {
        Self { wealth, trade_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.wealth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wealth.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.wealth.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.wealth.iter().map(|x| x * x).sum()
    }
}

pub fn initial_wealth<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<WealthState> {
    params.validate()?;
    let n = params.n_traders;
    let a = params.mean_wealth;
    let wealth = match params.initial_wealth {
        InitialWealth::Equal => vec![a; n],
        InitialWealth::UniformRandom => {
            let mut w: Vec<f64> = (0..n)
                .map(|_| loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break 2.0 * a * u;
                    }
                })
                .collect();
            let mean = w.iter().sum::<f64>() / n as f64;
            let scale = a / mean;
            w.iter_mut().for_each(|x| *x *= scale);
            w
        }
    };
    Ok(WealthState::new(wealth))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub i: usize,
    pub j: usize,
    /// Amount put into the pool by both traders.
    pub invested: f64,
    /// Share of the pool going to `i`.
    pub epsilon: f64,
}

/// Applies one exchange with a given division fraction `epsilon`.
pub fn apply_trade(
    state: &mut WealthState,
    profile: &SavingProfile,
    i: usize,
    j: usize,
    epsilon: f64,
) -> Result<TradeEvent> {
    let n = state.wealth.len();
    if i >= n || j >= n || profile.len() != n {
        return Err(Error::invalid(format!("trade ({i}, {j}) out of range for {n} traders")));
    }
    if i == j {
        return Err(Error::invalid(format!("trader {i} cannot trade with itself")));
    }
    let (xi, xj) = (state.wealth[i], state.wealth[j]);
    let (li, lj) = (profile.lambdas[i], profile.lambdas[j]);
    let invested = (1.0 - li) * xi + (1.0 - lj) * xj;
    let new_i = li * xi + epsilon * invested;
    let new_j = lj * xj + (1.0 - epsilon) * invested;
    debug_assert!(
        ((new_i + new_j) - (xi + xj)).abs() <= 8.0 * f64::EPSILON * (xi + xj),
        "pair sum not conserved: {xi} + {xj} -> {new_i} + {new_j}"
    );
    state.wealth[i] = new_i;
    state.wealth[j] = new_j;
    state.trade_count += 1;
    Ok(TradeEvent { i, j, invested, epsilon })
}

/// One exchange between `i` and `j` with a fresh division fraction on [0, 1).
pub fn trade_step<R: Rng + ?Sized>(
    state: &mut WealthState,
    profile: &SavingProfile,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<TradeEvent> {
    let epsilon: f64 = rng.random();
    apply_trade(state, profile, i, j, epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QssConfig {
    /// Sum-of-squares samples per block.
    pub window: usize,
    /// Largest accepted relative change between consecutive block means.
    pub rel_tol: f64,
    /// Trades between samples.
    pub sample_stride: u64,
    pub max_trades: u64,
}

impl QssConfig {
    pub const DEFAULT_WINDOW: usize = 100;
    pub const DEFAULT_REL_TOL: f64 = 0.01;
    pub const DEFAULT_STRIDE_PER_TRADER: u64 = 10;
    pub const DEFAULT_BUDGET_PER_TRADER: u64 = 50_000;

    pub fn for_traders(n: usize) -> Self {
        let n = n as u64;
        Self {
            window: Self::DEFAULT_WINDOW,
            rel_tol: Self::DEFAULT_REL_TOL,
            sample_stride: Self::DEFAULT_STRIDE_PER_TRADER * n,
            max_trades: Self::DEFAULT_BUDGET_PER_TRADER * n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::invalid("qss window must be at least 2"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("qss rel_tol must be positive"));
        }
        if self.sample_stride == 0 {
            return Err(Error::invalid("qss sample_stride must be positive"));
        }
        Ok(())
    }
}

/// True when the means of the last two disjoint blocks of `cfg.window`
/// samples differ relatively by less than `cfg.rel_tol`.
pub fn qss_reached(series: &[f64], cfg: &QssConfig) -> Result<bool> {
    let w = cfg.window;
    if w < 2 || series.len() < 2 * w {
        return Err(Error::insufficient(format!(
            "need {} samples for window {w}, have {}",
            2 * w,
            series.len()
        )));
    }
    let tail = &series[series.len() - 2 * w..];
    let older = tail[..w].iter().sum::<f64>() / w as f64;
    let newer = tail[w..].iter().sum::<f64>() / w as f64;
    if older == newer {
        return Ok(true);
    }
    let scale = older.abs().max(newer.abs());
    Ok((newer - older).abs() / scale < cfg.rel_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QssReport {
    pub trades: u64,
    pub final_sum_sq: f64,
    pub converged: bool,
    pub budget_exhausted: bool,
    /// Block mean of the most recent window, when one was completed.
    pub block_mean: Option<f64>,
}

/// The evolving state of one realization: wealth, propensities and the
/// selection structure kept in sync with the wealth.
#[derive(Clone, Debug)]
pub struct Market {
    params: ModelParams,
    profile: SavingProfile,
    state: WealthState,
    selector: PairSelector,
}

impl Market {
    pub fn new(params: ModelParams, profile: SavingProfile, state: WealthState) -> Result<Self> {
        params.validate()?;
        if profile.len() != params.n_traders || state.len() != params.n_traders {
            return Err(Error::invalid("profile and wealth sizes must match n_traders"));
        }
        if state.wealth.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::invalid("wealth must be nonnegative"));
        }
        let selector = PairSelector::new(&params, &state.wealth)?;
        Ok(Self { params, profile, state, selector })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn profile(&self) -> &SavingProfile {
        &self.profile
    }

    pub fn state(&self) -> &WealthState {
        &self.state
    }

    pub fn into_state(self) -> WealthState {
        self.state
    }

    fn rebuild_selector(&mut self) -> Result<()> {
        self.selector = PairSelector::new(&self.params, &self.state.wealth)?;
        Ok(())
    }

    pub fn select_pair<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(usize, usize)> {
        if self.selector.is_stale() {
            self.rebuild_selector()?;
        }
        match self.selector.select(rng) {
            Err(Error::DegenerateState(_)) => {
                // weights may have all underflowed against an outdated reference
                self.rebuild_selector()?;
                self.selector.select(rng)
            }
            other => other,
        }
    }

    /// Selects a pair and trades.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TradeEvent> {
        let (i, j) = self.select_pair(rng)?;
        let event = trade_step(&mut self.state, &self.profile, i, j, rng)?;
        self.selector.update(i, self.state.wealth[i]);
        self.selector.update(j, self.state.wealth[j]);
        Ok(event)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, trades: u64, rng: &mut R) -> Result<()> {
        for _ in 0..trades {
            self.step(rng)?;
        }
        Ok(())
    }

    /// Trades until the sum of squared wealth stops drifting or the budget
    /// runs out.
    pub fn equilibrate<R: Rng + ?Sized>(&mut self, cfg: &QssConfig, rng: &mut R) -> Result<QssReport> {
        cfg.validate()?;
        let mut series = Vec::new();
        let mut trades = 0u64;
        let mut converged = false;
        while trades < cfg.max_trades {
            let chunk = cfg.sample_stride.min(cfg.max_trades - trades);
            self.run(chunk, rng)?;
            trades += chunk;
            if chunk < cfg.sample_stride {
                break;
            }
            series.push(self.state.sum_sq());
            if series.len() >= 2 * cfg.window && qss_reached(&series, cfg)? {
                converged = true;
                break;
            }
        }
        let block_mean = (series.len() >= cfg.window)
            .then(|| series[series.len() - cfg.window..].iter().sum::<f64>() / cfg.window as f64);
        Ok(QssReport {
            trades,
            final_sum_sq: self.state.sum_sq(),
            converged,
            budget_exhausted: !converged,
            block_mean,
        })
    }
}

/// Builds the initial wealth from `params` and trades to the
/// quasi-stationary state.
pub fn run_to_qss<R: Rng + ?Sized>(
    params: &ModelParams,
    profile: &SavingProfile,
    cfg: &QssConfig,
    rng: &mut R,
) -> Result<(WealthState, QssReport)> {
    let state = initial_wealth(params, rng)?;
    let mut market = Market::new(params.clone(), profile.clone(), state)?;
    let report = market.equilibrate(cfg, rng)?;
    Ok((market.into_state(), report))
}
