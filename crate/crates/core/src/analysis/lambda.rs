use serde::{Deserialize, Serialize};

use std::fmt::Write as _;

use super::csv::{cell, meta_line, Table};
use super::fit_line;
use crate::error::{Error, Result};
use crate::exchange::SavingProfile;

/// Lower end of the propensity window used for the exponent fit.
pub const CHI_FIT_LOW: f64 = 0.3;

/// Mean wealth as a function of saving propensity, with the exponent `chi`
/// of `<x(lambda)> (1 - lambda) ~ lambda^chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaWealthCurve {
    /// Mean propensity of the traders in each bin.
    pub lambda_bins: Vec<f64>,
    pub mean_wealth: Vec<f64>,
    /// Bin average of `x (1 - lambda)` taken trader by trader.
    pub mean_product: Vec<f64>,
    pub counts: Vec<u64>,
    pub chi: f64,
    pub chi_stderr: f64,
    /// Bins inside the fit window that had no traders.
    pub empty_in_window: usize,
}

impl LambdaWealthCurve {
    pub const CSV_HEADER: &'static str = "lambda,mean_wealth,mean_product,count";

    /// Empty bins are written with NaN means.
    pub fn to_csv(&self) -> String {
        let mut out = meta_line(&[
            ("chi", &self.chi),
            ("chi_stderr", &self.chi_stderr),
            ("empty_in_window", &self.empty_in_window),
        ]);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for k in 0..self.lambda_bins.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.lambda_bins[k], self.mean_wealth[k], self.mean_product[k], self.counts[k]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text, Self::CSV_HEADER)?;
        let mut curve = Self {
            lambda_bins: Vec::new(),
            mean_wealth: Vec::new(),
            mean_product: Vec::new(),
            counts: Vec::new(),
            chi: table.meta("chi")?,
            chi_stderr: table.meta("chi_stderr")?,
            empty_in_window: table.meta("empty_in_window")?,
        };
        for (k, c) in &table.rows {
            curve.lambda_bins.push(cell(*k, c[0])?);
            curve.mean_wealth.push(cell(*k, c[1])?);
            curve.mean_product.push(cell(*k, c[2])?);
            curve.counts.push(cell(*k, c[3])?);
        }
        Ok(curve)
    }
}

/// Accumulates (propensity, wealth) pairs from many snapshots into equal
/// bins on (0, lambda_top].
#[derive(Clone, Debug)]
pub struct LambdaWealthAccumulator {
    top: f64,
    sum_lambda: Vec<f64>,
    sum_x: Vec<f64>,
    sum_product: Vec<f64>,
    counts: Vec<u64>,
}

impl LambdaWealthAccumulator {
    pub fn new(bins: usize, lambda_top: f64) -> Result<Self> {
        if bins == 0 || !(lambda_top > 0.0 && lambda_top < 1.0) {
            return Err(Error::invalid("need a positive bin count and 0 < lambda_top < 1"));
        }
        Ok(Self {
            top: lambda_top,
            sum_lambda: vec![0.0; bins],
            sum_x: vec![0.0; bins],
            sum_product: vec![0.0; bins],
            counts: vec![0; bins],
        })
    }

    pub fn add(&mut self, wealth: &[f64], profile: &SavingProfile) -> Result<()> {
        if wealth.len() != profile.len() {
            return Err(Error::invalid("wealth snapshot and profile differ in length"));
        }
        let bins = self.counts.len();
        for (&x, &l) in wealth.iter().zip(profile.lambdas()) {
            let k = ((l / self.top) * bins as f64) as usize;
            let k = k.min(bins - 1);
            self.sum_lambda[k] += l;
            self.sum_x[k] += x;
            self.sum_product[k] += x * (1.0 - l);
            self.counts[k] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        for k in 0..self.counts.len() {
            self.sum_lambda[k] += other.sum_lambda[k];
            self.sum_x[k] += other.sum_x[k];
            self.sum_product[k] += other.sum_product[k];
            self.counts[k] += other.counts[k];
        }
    }

    pub fn finish(&self) -> Result<LambdaWealthCurve> {
        let bins = self.counts.len();
        let mut curve = LambdaWealthCurve {
            lambda_bins: Vec::with_capacity(bins),
            mean_wealth: Vec::with_capacity(bins),
            mean_product: Vec::with_capacity(bins),
            counts: self.counts.clone(),
            chi: f64::NAN,
            chi_stderr: f64::NAN,
            empty_in_window: 0,
        };
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..bins {
            let c = self.counts[k];
            let mid = (k as f64 + 0.5) * self.top / bins as f64;
            let (lam, mx, mp) = if c == 0 {
                (mid, f64::NAN, f64::NAN)
            } else {
                let cf = c as f64;
                (self.sum_lambda[k] / cf, self.sum_x[k] / cf, self.sum_product[k] / cf)
            };
            curve.lambda_bins.push(lam);
            curve.mean_wealth.push(mx);
            curve.mean_product.push(mp);
            if lam >= CHI_FIT_LOW {
                if c == 0 || !(mp > 0.0) {
                    curve.empty_in_window += 1;
                } else {
                    xs.push(lam.ln());
                    ys.push(mp.ln());
                }
            }
        }
        if xs.len() < 3 {
            return Err(Error::insufficient("fewer than 3 populated bins in the chi fit window"));
        }
        let line = fit_line(&xs, &ys)?;
        curve.chi = line.slope;
        curve.chi_stderr = line.slope_stderr;
        Ok(curve)
    }
}

/// Bins traders by propensity over a set of post-equilibration snapshots and
/// fits `chi` on `lambda >= 0.3`.
pub fn lambda_wealth_curve(snapshots: &[(&[f64], &SavingProfile)], bins: usize) -> Result<LambdaWealthCurve> {
    let top = snapshots
        .iter()
        .map(|(_, p)| p.max())
        .fold(0.0, f64::max);
    if snapshots.is_empty() || top <= 0.0 {
        return Err(Error::insufficient("no snapshots"));
    }
    let mut acc = LambdaWealthAccumulator::new(bins, top)?;
    for (w, p) in snapshots {
        acc.add(w, p)?;
    }
    acc.finish()
}
