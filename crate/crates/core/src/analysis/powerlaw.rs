use serde::{Deserialize, Serialize};

use super::{fit_line, Histogram};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Negated log-log slope of the density.
    pub exponent: f64,
    pub stderr: f64,
    pub fit_range: (f64, f64),
    pub r_squared: f64,
    pub n_bins: usize,
    pub n_samples: u64,
}

/// Drops the lowest half-decade above the smallest sample and the top
/// half-decade below the largest, where the head and the cutoff hump sit.
pub fn default_fit_range(hist: &Histogram) -> (f64, f64) {
    let (lo, hi) = hist.sample_range;
    (lo * 10f64.sqrt(), hi / 10f64.sqrt())
}

/// Fit window for the decaying tail of a distribution whose typical
/// (mean) value is `typical`: the default window with its lower end raised
/// to `typical`.
pub fn tail_fit_range(hist: &Histogram, typical: f64) -> (f64, f64) {
    let (lo, hi) = default_fit_range(hist);
    (lo.max(typical), hi)
}

/// Least-squares line through `(ln center, ln density)` of the occupied bins
/// whose centers lie in `range`.
pub fn fit_power_law(hist: &Histogram, range: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("bad fit range ({lo}, {hi})")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = hist
        .occupied()
        .filter(|&(c, _)| c >= lo && c <= hi)
        .map(|(c, d)| (c.ln(), d.ln()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::insufficient(format!(
            "power-law fit needs 4 occupied bins in [{lo}, {hi}], found {}",
            xs.len()
        )));
    }
    let line = fit_line(&xs, &ys)?;
    Ok(PowerLawFit {
        exponent: -line.slope,
        stderr: line.slope_stderr,
        fit_range: range,
        r_squared: line.r_squared,
        n_bins: xs.len(),
        n_samples: hist.n_samples,
    })
}
