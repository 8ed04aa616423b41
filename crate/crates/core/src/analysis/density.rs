//! Wealth density implied by a uniform propensity distribution together with
//! the mean-wealth law `<x(lambda)> = K lambda^chi / (1 - lambda)`.
//!
//! Changing variables from `lambda` to `x` gives
//! `P(x) = C x^-2 [lambda^-chi + (1 - lambda) chi lambda^(-chi-1)]^-1`, with
//! `lambda` the propensity whose mean wealth is `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalDensity {
    pub chi: f64,
    /// `C` in the closed form, fixed so the density integrates to one.
    pub normalization: f64,
    /// `K`, fixed so the mean wealth is one.
    pub scale: f64,
    pub lambda_max: f64,
    /// `(x, P(x))` in increasing `x`.
    pub grid: Vec<(f64, f64)>,
}

impl TheoreticalDensity {
    pub fn x_at(&self, lambda: f64) -> f64 {
        self.scale * lambda.powf(self.chi) / (1.0 - lambda)
    }

    fn bracket(&self, lambda: f64) -> f64 {
        let chi = self.chi;
        if chi == 0.0 {
            return 1.0;
        }
        lambda.powf(-chi) + (1.0 - lambda) * chi * lambda.powf(-chi - 1.0)
    }

    /// `P(x(lambda))`.
    pub fn density_at_lambda(&self, lambda: f64) -> f64 {
        let x = self.x_at(lambda);
        self.normalization / (x * x * self.bracket(lambda))
    }
}

/// Adaptive Simpson quadrature.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Tabulates the closed-form density on `grid_size` points for propensities
/// in (0, `lambda_max`]. The mean-wealth law diverges as `lambda -> 1`, so a
/// finite `lambda_max` (for N traders, `1 - 1/N`) is required.
pub fn closed_form_density(chi: f64, grid_size: usize, lambda_max: f64) -> Result<TheoreticalDensity> {
    if !(chi >= 0.0 && chi.is_finite()) {
        return Err(Error::invalid(format!("chi must be nonnegative, got {chi}")));
    }
    if !(lambda_max > 0.0 && lambda_max < 1.0) {
        return Err(Error::invalid(format!("lambda_max must lie in (0, 1), got {lambda_max}")));
    }
    if grid_size < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    // integrals over lambda in (0, lambda_max] are done in t = -ln(1 - lambda)
    let t_max = -(-lambda_max).ln_1p();
    let lambda_of = |t: f64| -(-t).exp_m1();
    let tol = 1e-14;

    // mean wealth: (1/lambda_max) * K * int lambda^chi / (1 - lambda) dlambda = 1
    let mean_integral = integrate(&|t: f64| lambda_of(t).powf(chi), 0.0, t_max, tol);
    let scale = lambda_max / mean_integral;

    // P(x(lambda)) x'(lambda) reduces to C / K, so unit mass over a uniform
    // propensity on (0, lambda_max] fixes C = K / lambda_max
    let mut td = TheoreticalDensity { chi, normalization: scale / lambda_max, scale, lambda_max, grid: Vec::new() };

    let half = grid_size / 2;
    let low_end = 0.5f64.min(lambda_max);
    let mut lambdas: Vec<f64> = (0..half)
        .map(|k| 1e-6 * (low_end / 1e-6).powf(k as f64 / half.max(1) as f64))
        .collect();
    let t_low = -(-low_end).ln_1p();
    let rest = grid_size - half;
    lambdas.extend((1..=rest).map(|k| lambda_of(t_low + (t_max - t_low) * k as f64 / rest as f64)));
    if let Some(last) = lambdas.last_mut() {
        *last = lambda_max;
    }
    td.grid = lambdas
        .into_iter()
        .map(|l| (td.x_at(l), td.density_at_lambda(l)))
        .collect();
    Ok(td)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_on_smooth_integrand() {
        let v = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn zero_chi_is_pure_inverse_square() {
        let td = closed_form_density(0.0, 200, 1.0 - 1.0 / 1024.0).unwrap();
        for &(x, p) in &td.grid {
            let pareto = td.normalization / (x * x);
            assert!(((p - pareto) / pareto).abs() < 1e-10);
        }
    }

    // lambda(x) by bisection on the monotone mean-wealth law
    fn invert(td: &TheoreticalDensity, x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, td.lambda_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if td.x_at(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normalized_with_unit_mean_in_x() {
        for chi in [0.0, 0.3, 0.8] {
            let td = closed_form_density(chi, 400, 1.0 - 1.0 / 4096.0).unwrap();
            let x_lo = if chi == 0.0 { td.scale } else { td.x_at(1e-14) };
            let (u0, u1) = (x_lo.ln(), td.x_at(td.lambda_max).ln());
            // quadrature in u = ln x, density evaluated from the closed form
            let pdf = |u: f64| {
                let x = u.exp();
                let l = invert(&td, x);
                let b = if chi == 0.0 { 1.0 } else { l.powf(-chi) + (1.0 - l) * chi * l.powf(-chi - 1.0) };
                td.normalization / (x * x * b) * x
            };
            let mass = integrate(&pdf, u0, u1, 1e-10);
            let mean = integrate(&|u: f64| pdf(u) * u.exp(), u0, u1, 1e-10);
            assert!((mass - 1.0).abs() < 1e-4, "chi {chi}: mass {mass}");
            assert!((mean - 1.0).abs() < 1e-3, "chi {chi}: mean {mean}");
        }
    }

    #[test]
    fn tail_falls_as_inverse_square() {
        let td = closed_form_density(0.6, 400, 1.0 - 1.0 / 4096.0).unwrap();
        let n = td.grid.len();
        let (a, b) = (td.grid[n - 40], td.grid[n - 1]);
        let slope = (b.1 / a.1).ln() / (b.0 / a.0).ln();
        assert!((slope + 2.0).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(closed_form_density(-0.1, 100, 0.9).is_err());
        assert!(closed_form_density(0.3, 100, 1.0).is_err());
        assert!(closed_form_density(0.3, 1, 0.9).is_err());
    }
}
