//! Observables computed from simulation output: binned distributions,
//! power-law and scaling fits, percolation thresholds and the
//! wealth/propensity and strength/degree relations.

mod collapse;
mod conditional;
mod csv;
mod density;
mod histogram;
mod lambda;
mod percolation;
mod powerlaw;
mod shape;

pub use collapse::{collapse_score, nelder_mead, optimize_collapse, ScalingCollapse, SearchBox};
pub use conditional::{conditional_means, ConditionalAccumulator, ConditionalMeanFit, DegreeBinning};
pub use density::{closed_form_density, TheoreticalDensity};
pub use histogram::{BinScale, Histogram};
pub use lambda::{lambda_wealth_curve, LambdaWealthAccumulator, LambdaWealthCurve, CHI_FIT_LOW};
pub use percolation::{
    fit_theta, fit_theta_by_collapse, percolation_collapse_spread, percolation_threshold, PercolationCurve, ThetaFit,
};
pub use powerlaw::{default_fit_range, fit_power_law, tail_fit_range, PowerLawFit};
pub use shape::{shape_summary, ShapeSummary};

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::insufficient(format!("line fit needs at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::insufficient("line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_stderr = if n > 2 { (ss_res / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, slope_stderr, r_squared })
}
