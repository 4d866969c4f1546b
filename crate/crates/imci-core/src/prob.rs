//! Probability newtype: a real number guaranteed to lie in [0, 1].

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// A probability in [0, 1].
///
/// Distribution functions and plausibility values return `Prob` so that
/// callers never have to re-check the range. Construction via [`Prob::new`]
/// validates; [`Prob::clamped`] snaps tiny floating-point excursions back
/// into the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prob(f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const ONE: Prob = Prob(1.0);
    pub const HALF: Prob = Prob(0.5);

    pub fn new(value: f64) -> Result<Prob> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(domain(format!("probability must lie in [0, 1], got {value}")))
        }
    }

    /// Clamp into [0, 1]. NaN maps to an error.
    pub fn clamped(value: f64) -> Result<Prob> {
        if value.is_nan() {
            return Err(domain("probability is NaN"));
        }
        Ok(Prob(value.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The complement 1 − p.
    #[inline]
    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Validate a significance level: 0 < alpha < 1 strictly.
pub(crate) fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha.is_finite() && 0.0 < alpha && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(domain(format!("alpha must lie strictly in (0, 1), got {alpha}")))
    }
}
