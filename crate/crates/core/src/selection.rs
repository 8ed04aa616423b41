//! Preferential pair selection.
//!
//! The first trader is drawn with probability proportional to `x^alpha`, the
//! second from the remaining traders with probability proportional to
//! `x^beta`. [`PairSelector`] keeps the weights in O(log N) structures that
//! are refreshed for the two traders touched by each trade; [`naive`] holds
//! the O(N) scans used to check it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{Exponent, ModelParams};
use crate::sampler::{MaxTree, WeightTree};

/// Selection weight of wealth `x` under a finite exponent, relative to
/// `log_ref` (the log of a reference wealth, normally the current maximum).
/// Computing in log space keeps large exponents from overflowing.
#[inline]
pub fn relative_weight(x: f64, exponent: f64, log_ref: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        (exponent * (x.ln() - log_ref)).exp()
    }
}

const MAX_RELATIVE_WEIGHT: f64 = 1e250;

#[derive(Clone, Debug)]
enum Picker {
    Uniform,
    Weighted { exponent: f64, tree: WeightTree },
    Richest(MaxTree),
}

impl Picker {
    fn build(exponent: Exponent, wealth: &[f64], log_ref: f64) -> Self {
        match exponent {
            Exponent::Finite(e) if e == 0.0 => Picker::Uniform,
            Exponent::Finite(e) => Picker::Weighted {
                exponent: e,
                tree: WeightTree::new(wealth.iter().map(|&x| relative_weight(x, e, log_ref)).collect()),
            },
            Exponent::Infinite => Picker::Richest(MaxTree::new(wealth)),
        }
    }

    /// Returns false if the new weight left the safe floating-point range.
    fn update(&mut self, i: usize, x: f64, log_ref: f64) -> bool {
        match self {
            Picker::Uniform => true,
            Picker::Weighted { exponent, tree } => {
                let w = relative_weight(x, *exponent, log_ref);
                tree.set(i, w);
                w < MAX_RELATIVE_WEIGHT
            }
            Picker::Richest(m) => {
                m.set(i, x);
                true
            }
        }
    }

    fn pick<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<usize> {
        match self {
            Picker::Uniform => Ok(rng.random_range(0..n)),
            Picker::Weighted { tree, .. } => tree
                .sample(rng.random())
                .ok_or_else(|| Error::DegenerateState("total first-pick weight is zero".into())),
            Picker::Richest(m) => Ok(m.argmax()),
        }
    }

    fn pick_other<R: Rng + ?Sized>(&self, n: usize, first: usize, rng: &mut R) -> Result<usize> {
        match self {
            Picker::Uniform => {
                let j = rng.random_range(0..n - 1);
                Ok(if j >= first { j + 1 } else { j })
            }
            Picker::Weighted { tree, .. } => tree
                .sample_excluding(first, rng.random())
                .ok_or_else(|| Error::DegenerateState("total second-pick weight is zero".into())),
            Picker::Richest(m) => m
                .argmax_excluding(first)
                .ok_or_else(|| Error::DegenerateState("no second trader".into())),
        }
    }
}

/// Incrementally maintained selection structure for one realization.
#[derive(Clone, Debug)]
pub struct PairSelector {
    n: usize,
    log_ref: f64,
    first: Picker,
    // None when beta == alpha and the first picker's weights are reused.
    second: Option<Picker>,
    stale: bool,
}

impl PairSelector {
    /// Weights are taken relative to the current maximum wealth. If the
    /// reference drifts far enough that weights could overflow or all
    /// underflow, [`is_stale`](Self::is_stale) or a degenerate-state error
    /// tells the owner to rebuild.
    pub fn new(params: &ModelParams, wealth: &[f64]) -> Result<Self> {
        params.validate()?;
        if wealth.len() != params.n_traders {
            return Err(Error::invalid(format!(
                "wealth vector has {} entries for {} traders",
                wealth.len(),
                params.n_traders
            )));
        }
        let max = wealth.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(Error::DegenerateState("total wealth is zero".into()));
        }
        let log_ref = max.ln();
        let first = Picker::build(params.alpha, wealth, log_ref);
        let second = (params.beta != params.alpha).then(|| Picker::build(params.beta, wealth, log_ref));
        Ok(Self { n: wealth.len(), log_ref, first, second, stale: false })
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        let i = self.first.pick(self.n, rng)?;
        let j = self.second.as_ref().unwrap_or(&self.first).pick_other(self.n, i, rng)?;
        Ok((i, j))
    }

    /// Refreshes the weight of trader `i`, whose wealth is now `x`.
    pub fn update(&mut self, i: usize, x: f64) {
        let mut ok = self.first.update(i, x, self.log_ref);
        if let Some(second) = &mut self.second {
            ok &= second.update(i, x, self.log_ref);
        }
        self.stale |= !ok;
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }
}

/// Reference implementations by full scans. Slow; for tests and audits.
pub mod naive {
    use super::*;

    /// Exact probability of each trader being chosen under `exponent`,
    /// optionally excluding one trader.
    pub fn pick_probabilities(wealth: &[f64], exponent: Exponent, exclude: Option<usize>) -> Result<Vec<f64>> {
        let eligible = |k: usize| Some(k) != exclude;
        let mut p = vec![0.0; wealth.len()];
        match exponent {
            Exponent::Infinite => {
                let best = (0..wealth.len())
                    .filter(|&k| eligible(k))
                    .fold(None, |b: Option<usize>, k| match b {
                        Some(b) if wealth[b] >= wealth[k] => Some(b),
                        _ => Some(k),
                    })
                    .ok_or_else(|| Error::DegenerateState("no eligible trader".into()))?;
                p[best] = 1.0;
            }
            Exponent::Finite(e) => {
                let log_max = wealth
                    .iter()
                    .enumerate()
                    .filter(|&(k, &x)| eligible(k) && x > 0.0)
                    .map(|(_, &x)| x.ln())
                    .fold(f64::NEG_INFINITY, f64::max);
                for (k, &x) in wealth.iter().enumerate() {
                    if eligible(k) {
                        p[k] = if e == 0.0 { 1.0 } else { relative_weight(x, e, log_max) };
                    }
                }
                let total: f64 = p.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::DegenerateState("total selection weight is zero".into()));
                }
                p.iter_mut().for_each(|v| *v /= total);
            }
        }
        Ok(p)
    }

    /// Joint probability of every ordered pair `(i, j)`, row-major.
    pub fn pair_probabilities(wealth: &[f64], alpha: Exponent, beta: Exponent) -> Result<Vec<f64>> {
        let n = wealth.len();
        let first = pick_probabilities(wealth, alpha, None)?;
        let mut joint = vec![0.0; n * n];
        for i in 0..n {
            if first[i] == 0.0 {
                continue;
            }
            let second = pick_probabilities(wealth, beta, Some(i))?;
            for j in 0..n {
                joint[i * n + j] = first[i] * second[j];
            }
        }
        Ok(joint)
    }

    /// Inverse-CDF draw over an O(N) cumulative scan.
    pub fn draw(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                return k;
            }
        }
        last
    }

    pub fn select_pair<R: Rng + ?Sized>(
        wealth: &[f64],
        alpha: Exponent,
        beta: Exponent,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        let i = draw(&pick_probabilities(wealth, alpha, None)?, rng.random());
        let j = draw(&pick_probabilities(wealth, beta, Some(i))?, rng.random());
        Ok((i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn params(n: usize, a: Exponent, b: Exponent) -> ModelParams {
        ModelParams::new(n, a, b)
    }

    #[test]
    fn uniform_pairs_are_equiprobable() {
        let p = naive::pair_probabilities(&[5.0, 0.1, 2.0], 0.0.into(), 0.0.into()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert!((p[i * 3 + j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_preference_enumeration() {
        let p = naive::pick_probabilities(&[1.0, 2.0, 3.0], 1.0.into(), None).unwrap();
        assert!((p[2] - 0.5).abs() < 1e-15);
        assert!((p[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_alpha_picks_richest_then_uniform() {
        let wealth = [1.0, 4.0, 4.0, 0.5];
        let sel = PairSelector::new(&params(4, Exponent::Infinite, 0.0.into()), &wealth).unwrap();
        let mut rng = rng_from_seed(3);
        let mut seen = [0usize; 4];
        for _ in 0..3000 {
            let (i, j) = sel.select(&mut rng).unwrap();
            assert_eq!(i, 1, "ties go to the lowest index");
            seen[j] += 1;
        }
        assert_eq!(seen[1], 0);
        assert!(seen.iter().enumerate().all(|(k, &c)| k == 1 || c > 900));
    }

    #[test]
    fn both_infinite_picks_top_two() {
        let wealth = [1.0, 4.0, 0.2, 3.0];
        let sel = PairSelector::new(&params(4, Exponent::Infinite, Exponent::Infinite), &wealth).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(sel.select(&mut rng).unwrap(), (1, 3));
    }

    #[test]
    fn zero_wealth_with_positive_exponent_is_degenerate() {
        let wealth = [0.0, 0.0, 1.0];
        let sel = PairSelector::new(&params(3, 1.0.into(), 1.0.into()), &wealth).unwrap();
        let mut rng = rng_from_seed(1);
        assert!(matches!(sel.select(&mut rng), Err(Error::DegenerateState(_))));
        assert!(PairSelector::new(&params(2, 1.0.into(), 1.0.into()), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn large_exponent_does_not_overflow() {
        let wealth = [1e-3, 50.0, 60.0];
        let p = naive::pick_probabilities(&wealth, 200.0.into(), None).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        let sel = PairSelector::new(&params(3, 200.0.into(), 0.0.into()), &wealth).unwrap();
        let mut rng = rng_from_seed(9);
        for _ in 0..100 {
            assert_eq!(sel.select(&mut rng).unwrap().0, 2);
        }
    }
}
