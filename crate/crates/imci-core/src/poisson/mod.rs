//! Interval estimators for the Poisson signal rate lambda >= 0 observed
//! through a contaminated count X ~ Poisson(epsilon + lambda) and a
//! background monitor W ~ Poisson(m * epsilon) with known scale m > 0.

pub mod bayes;
pub mod im;
pub mod nim;

use crate::error::{domain, Result};

/// Observed counts for the Poisson signal-plus-background model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonData {
    /// Contaminated count X = B + S.
    pub x: u64,
    /// Background-monitor count W.
    pub w: u64,
    /// Known background scale m > 0.
    pub m: f64,
}

impl PoissonData {
    pub fn new(x: u64, w: u64, m: f64) -> Result<PoissonData> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(domain(format!("m must be positive, got {m}")));
        }
        Ok(PoissonData { x, w, m })
    }
}
