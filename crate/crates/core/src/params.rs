//! Model parameters shared by the exchange dynamics and the experiment runner.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Preference exponent for one of the two picks of a trade.
///
/// `Infinite` always selects the richest eligible trader; it is kept as its
/// own variant so no large float ever stands in for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn is_zero(self) -> bool {
        matches!(self, Exponent::Finite(v) if v == 0.0)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// The finite value, or `None` for the infinite variant.
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(v) => Some(v),
            Exponent::Infinite => None,
        }
    }

    pub fn validate(self, name: &str) -> Result<()> {
        match self {
            Exponent::Finite(v) if !(v >= 0.0 && v.is_finite()) => Err(Error::invalid(format!(
                "{name} must be a nonnegative finite number or inf, got {v}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Exponent::Infinite);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("not a number or `inf`: {s:?}")))?;
        let e = Exponent::Finite(v);
        e.validate("exponent")?;
        Ok(e)
    }
}

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Exponent::Finite(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialWealth {
    /// Every trader starts with the mean wealth.
    Equal,
    /// Uniform on (0, 2a), rescaled to sample mean a.
    UniformRandom,
}

impl fmt::Display for InitialWealth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialWealth::Equal => "equal",
            InitialWealth::UniformRandom => "uniform",
        })
    }
}

impl FromStr for InitialWealth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equal" => Ok(InitialWealth::Equal),
            "uniform" => Ok(InitialWealth::UniformRandom),
            other => Err(Error::invalid(format!(
                "initial wealth mode must be `equal` or `uniform`, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_traders: usize,
    pub alpha: Exponent,
    pub beta: Exponent,
    pub initial_wealth: InitialWealth,
    pub mean_wealth: f64,
}

impl ModelParams {
    pub fn new(n_traders: usize, alpha: impl Into<Exponent>, beta: impl Into<Exponent>) -> Self {
        Self {
            n_traders,
            alpha: alpha.into(),
            beta: beta.into(),
            initial_wealth: InitialWealth::Equal,
            mean_wealth: 1.0,
        }
    }

    pub fn with_initial_wealth(mut self, mode: InitialWealth) -> Self {
        self.initial_wealth = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traders < 2 {
            return Err(Error::invalid(format!(
                "n_traders must be at least 2, got {}",
                self.n_traders
            )));
        }
        self.alpha.validate("alpha")?;
        self.beta.validate("beta")?;
        if !(self.mean_wealth > 0.0 && self.mean_wealth.is_finite()) {
            return Err(Error::invalid(format!(
                "mean_wealth must be positive, got {}",
                self.mean_wealth
            )));
        }
        Ok(())
    }
}
