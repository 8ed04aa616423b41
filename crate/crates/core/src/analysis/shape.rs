use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Location and shape of a one-dimensional sample, read off a Gaussian
/// kernel density estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    /// Position of the highest point of the density estimate.
    pub mode: f64,
    /// Local maxima of the estimate taller than 5% of the highest one.
    pub local_maxima: usize,
    pub bandwidth: f64,
}

const GRID: usize = 400;

pub fn shape_summary(samples: &[f64]) -> Result<ShapeSummary> {
    if samples.len() < 2 || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::insufficient("shape summary needs at least two finite samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::insufficient("all samples are equal"));
    }
    let sd = var.sqrt();
    let skewness = samples.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / n;
    // Silverman's rule of thumb
    let bw = 1.06 * sd * n.powf(-0.2);
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (lo, hi) = (lo - 3.0 * bw, hi + 3.0 * bw);
    let at = |g: usize| lo + (hi - lo) * g as f64 / (GRID - 1) as f64;
    let dens: Vec<f64> = (0..GRID)
        .map(|g| {
            let x = at(g);
            samples.iter().map(|y| (-0.5 * ((x - y) / bw).powi(2)).exp()).sum()
        })
        .collect();
    let top = (0..GRID).max_by(|&a, &b| dens[a].total_cmp(&dens[b])).unwrap();
    let local_maxima = (1..GRID - 1)
        .filter(|&g| dens[g] > dens[g - 1] && dens[g] >= dens[g + 1] && dens[g] > 0.05 * dens[top])
        .count();
    Ok(ShapeSummary { mean, std_dev: sd, skewness, mode: at(top), local_maxima, bandwidth: bw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, SimRng};
    use rand::Rng;

    fn normal(rng: &mut SimRng) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    fn exponential(rng: &mut SimRng) -> f64 {
        -(1.0 - rng.random::<f64>()).ln()
    }

    #[test]
    fn gaussian_is_symmetric_with_one_peak() {
        let mut rng = rng_from_seed(1);
        let xs: Vec<f64> = (0..20_000).map(|_| 3.0 + 0.5 * normal(&mut rng)).collect();
        let s = shape_summary(&xs).unwrap();
        assert_eq!(s.local_maxima, 1);
        assert!((s.mode - 3.0).abs() < 0.05, "{s:?}");
        assert!(s.skewness.abs() < 0.05, "{s:?}");
        assert!((s.std_dev - 0.5).abs() < 0.01);
    }

    #[test]
    fn exponential_skewness_is_two() {
        let mut rng = rng_from_seed(2);
        let xs: Vec<f64> = (0..50_000).map(|_| exponential(&mut rng)).collect();
        let s = shape_summary(&xs).unwrap();
        assert!((s.skewness - 2.0).abs() < 0.15, "{s:?}");
        assert!(s.mode < 0.3);
    }

    #[test]
    fn separated_mixture_has_two_peaks() {
        let mut rng = rng_from_seed(3);
        let xs: Vec<f64> = (0..10_000)
            .map(|k| if k % 2 == 0 { normal(&mut rng) } else { 8.0 + normal(&mut rng) })
            .collect();
        assert_eq!(shape_summary(&xs).unwrap().local_maxima, 2);
        assert!(shape_summary(&[1.0, 1.0]).is_err());
        assert!(shape_summary(&[1.0]).is_err());
    }
}
