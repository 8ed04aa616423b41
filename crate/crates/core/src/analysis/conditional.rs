use serde::{Deserialize, Serialize};

use std::fmt::Write as _;

use super::csv::{cell, meta_line, Table};
use super::fit_line;
use crate::error::{Error, Result};
use crate::network::TradeGraph;

/// Degree classes: one per integer up to `linear_up_to`, then log-spaced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBinning {
    pub linear_up_to: usize,
    pub bins_per_decade: usize,
    pub min_count: u64,
}

impl Default for DegreeBinning {
    fn default() -> Self {
        Self { linear_up_to: 16, bins_per_decade: 10, min_count: 10 }
    }
}

impl DegreeBinning {
    // Lower edges of every class up to `max_degree`.
    fn edges(&self, max_degree: usize) -> Vec<usize> {
        let mut edges: Vec<usize> = (1..=self.linear_up_to.min(max_degree.max(1))).collect();
        let base = self.linear_up_to.max(1) as f64;
        let mut m = 1;
        loop {
            let e = (base * 10f64.powf(m as f64 / self.bins_per_decade as f64)).ceil() as usize;
            m += 1;
            if e <= *edges.last().unwrap() {
                continue;
            }
            if e > max_degree {
                break;
            }
            edges.push(e);
        }
        edges
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeanFit {
    /// Mean degree of the nodes in each populated class.
    pub k_values: Vec<f64>,
    pub mean_strength: Vec<f64>,
    pub mean_wealth: Vec<f64>,
    pub counts: Vec<u64>,
    /// Slope of log <s(k)> against log k.
    pub phi: f64,
    pub phi_stderr: f64,
    /// Slope of log <x(k)> against log k.
    pub mu: f64,
    pub mu_stderr: f64,
}

impl ConditionalMeanFit {
    pub const CSV_HEADER: &'static str = "k,mean_strength,mean_wealth,count";

    pub fn to_csv(&self) -> String {
        let mut out = meta_line(&[
            ("phi", &self.phi),
            ("phi_stderr", &self.phi_stderr),
            ("mu", &self.mu),
            ("mu_stderr", &self.mu_stderr),
        ]);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for b in 0..self.k_values.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.k_values[b], self.mean_strength[b], self.mean_wealth[b], self.counts[b]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text, Self::CSV_HEADER)?;
        let mut fit = Self {
            k_values: Vec::new(),
            mean_strength: Vec::new(),
            mean_wealth: Vec::new(),
            counts: Vec::new(),
            phi: table.meta("phi")?,
            phi_stderr: table.meta("phi_stderr")?,
            mu: table.meta("mu")?,
            mu_stderr: table.meta("mu_stderr")?,
        };
        for (k, c) in &table.rows {
            fit.k_values.push(cell(*k, c[0])?);
            fit.mean_strength.push(cell(*k, c[1])?);
            fit.mean_wealth.push(cell(*k, c[2])?);
            fit.counts.push(cell(*k, c[3])?);
        }
        Ok(fit)
    }
}

/// Sums node strength and wealth per degree class over many networks.
#[derive(Clone, Debug)]
pub struct ConditionalAccumulator {
    binning: DegreeBinning,
    max_degree: usize,
    lower: Vec<usize>,
    sum_k: Vec<f64>,
    sum_s: Vec<f64>,
    sum_x: Vec<f64>,
    counts: Vec<u64>,
}

impl ConditionalAccumulator {
    pub fn new(binning: DegreeBinning, max_degree: usize) -> Result<Self> {
        if binning.bins_per_decade == 0 || max_degree == 0 {
            return Err(Error::invalid("degree binning needs positive bins_per_decade and max_degree"));
        }
        let lower = binning.edges(max_degree);
        let n = lower.len();
        Ok(Self {
            binning,
            max_degree,
            lower,
            sum_k: vec![0.0; n],
            sum_s: vec![0.0; n],
            sum_x: vec![0.0; n],
            counts: vec![0; n],
        })
    }

    pub fn add(&mut self, degrees: &[usize], strengths: &[f64], wealth: &[f64]) -> Result<()> {
        if degrees.len() != strengths.len() || degrees.len() != wealth.len() {
            return Err(Error::invalid("degree, strength and wealth vectors differ in length"));
        }
        for ((&k, &s), &x) in degrees.iter().zip(strengths).zip(wealth) {
            if k == 0 {
                continue;
            }
            if k > self.max_degree {
                return Err(Error::invalid(format!("degree {k} above binning limit {}", self.max_degree)));
            }
            let b = self.lower.partition_point(|&e| e <= k) - 1;
            self.sum_k[b] += k as f64;
            self.sum_s[b] += s;
            self.sum_x[b] += x;
            self.counts[b] += 1;
        }
        Ok(())
    }

    pub fn add_graph(&mut self, graph: &TradeGraph, wealth: &[f64]) -> Result<()> {
        self.add(&graph.degree_sequence(), &graph.strength_sequence(), wealth)
    }

    pub fn merge(&mut self, other: &Self) {
        for b in 0..self.counts.len() {
            self.sum_k[b] += other.sum_k[b];
            self.sum_s[b] += other.sum_s[b];
            self.sum_x[b] += other.sum_x[b];
            self.counts[b] += other.counts[b];
        }
    }

    pub fn finish(&self) -> Result<ConditionalMeanFit> {
        let mut fit = ConditionalMeanFit {
            k_values: Vec::new(),
            mean_strength: Vec::new(),
            mean_wealth: Vec::new(),
            counts: Vec::new(),
            phi: f64::NAN,
            phi_stderr: f64::NAN,
            mu: f64::NAN,
            mu_stderr: f64::NAN,
        };
        for b in 0..self.counts.len() {
            let c = self.counts[b];
            if c < self.binning.min_count {
                continue;
            }
            let cf = c as f64;
            fit.k_values.push(self.sum_k[b] / cf);
            fit.mean_strength.push(self.sum_s[b] / cf);
            fit.mean_wealth.push(self.sum_x[b] / cf);
            fit.counts.push(c);
        }
        if fit.k_values.len() < 3 {
            return Err(Error::insufficient(format!(
                "only {} degree classes reach {} nodes",
                fit.k_values.len(),
                self.binning.min_count
            )));
        }
        let lk: Vec<f64> = fit.k_values.iter().map(|k| k.ln()).collect();
        let ls: Vec<f64> = fit.mean_strength.iter().map(|s| s.ln()).collect();
        let lx: Vec<f64> = fit.mean_wealth.iter().map(|x| x.ln()).collect();
        let phi = fit_line(&lk, &ls)?;
        let mu = fit_line(&lk, &lx)?;
        fit.phi = phi.slope;
        fit.phi_stderr = phi.slope_stderr;
        fit.mu = mu.slope;
        fit.mu_stderr = mu.slope_stderr;
        Ok(fit)
    }
}

/// Degree-conditioned mean strength and wealth for one network and the
/// wealth snapshot taken when its growth stopped.
pub fn conditional_means(graph: &TradeGraph, wealth: &[f64], binning: DegreeBinning) -> Result<ConditionalMeanFit> {
    let mut acc = ConditionalAccumulator::new(binning, graph.n_nodes())?;
    acc.add_graph(graph, wealth)?;
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn class_edges() {
        let b = DegreeBinning::default();
        let e = b.edges(100);
        assert_eq!(&e[..16], &(1..=16).collect::<Vec<_>>()[..]);
        assert_eq!(e[16], 21);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert!(*e.last().unwrap() <= 100);
    }

    #[test]
    fn iid_weights_give_linear_strength() {
        let mut rng = rng_from_seed(4);
        let n = 2000;
        let mut g = TradeGraph::new(n).unwrap();
        // heterogeneous degrees: node i links to about 200 / (i + 1)^0.5 random others
        for i in 0..n {
            let links = (200.0 / ((i + 1) as f64).sqrt()) as usize;
            for _ in 0..links {
                let j = rng.random_range(0..n);
                if j != i && g.weight(i, j).is_none() {
                    g.record(i, j, rng.random::<f64>() + 1e-12).unwrap();
                }
            }
        }
        let wealth = vec![1.0; n];
        let fit = conditional_means(&g, &wealth, DegreeBinning::default()).unwrap();
        assert!((fit.phi - 1.0).abs() < 0.05, "phi = {}", fit.phi);
        assert!(fit.mu.abs() < 1e-12);
        assert_eq!(ConditionalMeanFit::from_csv(&fit.to_csv()).unwrap(), fit);
    }

    #[test]
    fn too_few_classes() {
        let mut g = TradeGraph::new(4).unwrap();
        g.record(0, 1, 1.0).unwrap();
        assert!(conditional_means(&g, &[1.0; 4], DegreeBinning::default()).is_err());
    }
}
