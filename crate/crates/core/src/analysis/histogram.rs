use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::csv::{cell, meta_line, Table};
use crate::error::{Error, Result};

/// Empirical probability density over contiguous bins.
///
/// `widths` is the measure of each bin: its length for continuous data, the
/// number of integers it covers for integer data. `density * widths` sums to
/// one over the positive samples; nonpositive samples are only counted in
/// `n_zero`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub widths: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub n_samples: u64,
    pub n_zero: u64,
    /// Smallest and largest binned sample.
    pub sample_range: (f64, f64),
    pub scale: BinScale,
}

/// How bin centers are placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinScale {
    /// Geometric mean of the edges.
    Log,
    /// Geometric mean of the first and last integer covered.
    Integer,
    /// Midpoint.
    Linear,
}

impl fmt::Display for BinScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinScale::Log => "log",
            BinScale::Integer => "integer",
            BinScale::Linear => "linear",
        })
    }
}

impl FromStr for BinScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(BinScale::Log),
            "integer" => Ok(BinScale::Integer),
            "linear" => Ok(BinScale::Linear),
            _ => Err(Error::invalid(format!("unknown bin scale `{s}`"))),
        }
    }
}

fn split_positive(samples: impl Iterator<Item = f64>) -> Result<(Vec<f64>, u64)> {
    let mut positive = Vec::new();
    let mut zero = 0;
    for x in samples {
        if x.is_nan() {
            return Err(Error::invalid("NaN sample"));
        }
        if x > 0.0 {
            positive.push(x);
        } else {
            zero += 1;
        }
    }
    if positive.is_empty() {
        return Err(Error::insufficient("no positive samples to bin"));
    }
    Ok((positive, zero))
}

impl Histogram {
    /// Geometric bins of equal log width, `bins_per_decade` per factor of
    /// ten, starting at the smallest sample.
    pub fn log_binned(samples: &[f64], bins_per_decade: usize) -> Result<Self> {
        if bins_per_decade == 0 {
            return Err(Error::invalid("bins_per_decade must be positive"));
        }
        let (positive, n_zero) = split_positive(samples.iter().copied())?;
        let (lo, hi) = min_max(&positive);
        let ratio = 10f64.powf(1.0 / bins_per_decade as f64);
        let mut edges = vec![lo];
        let mut k = 1;
        while *edges.last().unwrap() <= hi {
            edges.push(lo * ratio.powi(k));
            k += 1;
        }
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        Self::fill(edges, widths, &positive, n_zero, BinScale::Log)
    }

    /// Log-spaced bins for integer data: the geometric edges are rounded up
    /// to integers and duplicates dropped, so every bin covers at least one
    /// integer and its width is the number of integers covered.
    pub fn log_binned_integers(samples: &[u64], bins_per_decade: usize) -> Result<Self> {
        if bins_per_decade == 0 {
            return Err(Error::invalid("bins_per_decade must be positive"));
        }
        let (positive, n_zero) = split_positive(samples.iter().map(|&k| k as f64))?;
        let (lo, hi) = min_max(&positive);
        let ratio = 10f64.powf(1.0 / bins_per_decade as f64);
        let mut edges = vec![lo];
        let mut k = 1;
        while *edges.last().unwrap() <= hi {
            let e = (lo * ratio.powi(k) - 1e-9).ceil();
            if e > *edges.last().unwrap() {
                edges.push(e);
            }
            k += 1;
        }
        // the top bin stops just past the largest sample
        let last = edges.len() - 1;
        edges[last] = edges[last].min(hi + 1.0);
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        Self::fill(edges, widths, &positive, n_zero, BinScale::Integer)
    }

    /// Equal-width bins on `[min, max]` of the samples; used for lin-log
    /// plots of `ln w`. Samples are not required to be positive.
    pub fn linear(samples: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bins must be positive"));
        }
        if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::insufficient("linear histogram needs finite samples"));
        }
        let (lo, hi) = min_max(samples);
        let step = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut edges: Vec<f64> = (0..=bins).map(|k| lo + step * k as f64).collect();
        // last bin closed on the right
        let last = edges.len() - 1;
        edges[last] = edges[last].max(hi) + step * 1e-12;
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let k = (((x - lo) / step) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Self::from_counts(edges, widths, counts, 0, (lo, hi), BinScale::Linear))
    }

    fn fill(edges: Vec<f64>, widths: Vec<f64>, positive: &[f64], n_zero: u64, scale: BinScale) -> Result<Self> {
        let mut counts = vec![0u64; edges.len() - 1];
        let last = counts.len() - 1;
        for &x in positive {
            // bins are half-open [e_k, e_{k+1})
            let k = edges.partition_point(|&e| e <= x) - 1;
            counts[k.min(last)] += 1;
        }
        let range = min_max(positive);
        Ok(Self::from_counts(edges, widths, counts, n_zero, range, scale))
    }

    pub fn from_counts(
        edges: Vec<f64>,
        widths: Vec<f64>,
        counts: Vec<u64>,
        n_zero: u64,
        sample_range: (f64, f64),
        scale: BinScale,
    ) -> Self {
        let n: u64 = counts.iter().sum();
        let density = counts
            .iter()
            .zip(&widths)
            .map(|(&c, &w)| if n == 0 { 0.0 } else { c as f64 / (n as f64 * w) })
            .collect();
        Self { edges, widths, counts, density, n_samples: n, n_zero, sample_range, scale }
    }

    /// A histogram holding a tabulated density directly (no samples).
    pub fn from_density(edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if edges.len() != density.len() + 1 || edges.windows(2).any(|e| !(e[1] > e[0])) {
            return Err(Error::invalid("edges must be strictly increasing with one more entry than density"));
        }
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        let range = (edges[0], *edges.last().unwrap());
        Ok(Self {
            counts: vec![0; density.len()],
            edges,
            widths,
            density,
            n_samples: 0,
            n_zero: 0,
            sample_range: range,
            scale: BinScale::Log,
        })
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn center(&self, k: usize) -> f64 {
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        match self.scale {
            BinScale::Integer => (lo * (hi - 1.0)).sqrt(),
            BinScale::Log if lo > 0.0 => (lo * hi).sqrt(),
            _ => 0.5 * (lo + hi),
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }

    /// The bins whose centers are at least `from`, densities unchanged.
    pub fn tail(&self, from: f64) -> Histogram {
        let first = (0..self.len()).find(|&k| self.center(k) >= from).unwrap_or(self.len());
        let counts = self.counts[first..].to_vec();
        Histogram {
            edges: self.edges[first..].to_vec(),
            widths: self.widths[first..].to_vec(),
            n_samples: counts.iter().sum(),
            counts,
            density: self.density[first..].to_vec(),
            n_zero: 0,
            sample_range: (self.edges[first].max(self.sample_range.0), self.sample_range.1),
            scale: self.scale,
        }
    }

    /// `(center, density)` of every bin with positive density.
    pub fn occupied(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len())
            .filter(|&k| self.density[k] > 0.0)
            .map(|k| (self.center(k), self.density[k]))
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().zip(&self.widths).map(|(d, w)| d * w).sum()
    }

    pub const CSV_HEADER: &'static str = "bin_low,bin_high,center,width,count,density";

    /// One row per bin, numbers in shortest round-trip form, preceded by a
    /// `#` line holding what the rows cannot express.
    pub fn to_csv(&self) -> String {
        let mut out = meta_line(&[
            ("n_zero", &self.n_zero),
            ("sample_min", &self.sample_range.0),
            ("sample_max", &self.sample_range.1),
            ("scale", &self.scale),
        ]);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.edges[k],
                self.edges[k + 1],
                self.center(k),
                self.widths[k],
                self.counts[k],
                self.density[k]
            );
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text, Self::CSV_HEADER)?;
        let (mut edges, mut widths, mut counts, mut density) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (k, cols) in &table.rows {
            let lo: f64 = cell(*k, cols[0])?;
            match edges.last() {
                Some(&prev_hi) if prev_hi != lo => {
                    return Err(Error::Config { line: *k, message: "bins are not contiguous".into() })
                }
                Some(_) => {}
                None => edges.push(lo),
            }
            edges.push(cell(*k, cols[1])?);
            widths.push(cell(*k, cols[3])?);
            counts.push(cell(*k, cols[4])?);
            density.push(cell(*k, cols[5])?);
        }
        if density.is_empty() {
            return Err(Error::insufficient("histogram CSV has no rows"));
        }
        Ok(Self {
            n_samples: counts.iter().sum(),
            edges,
            widths,
            counts,
            density,
            n_zero: table.meta("n_zero")?,
            sample_range: (table.meta("sample_min")?, table.meta("sample_max")?),
            scale: table.meta("scale")?,
        })
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
