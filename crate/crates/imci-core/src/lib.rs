//! Prior-free inferential-model (IM / NIM) confidence intervals and
//! Bayesian credible intervals for two constrained-parameter problems:
//! a nonnegative normal mean with unknown variance, and a Poisson signal
//! rate with unknown background. Includes a seeded Monte Carlo harness
//! that measures frequentist coverage, expected length, and uniformity
//! diagnostics.

pub mod dist;
pub mod empirical;
mod error;
pub mod interval;
pub mod normal;
pub mod poisson;
mod prob;
pub mod rng;
pub mod sim;
mod special;

pub use error::{Error, Result};
pub use interval::{Interval, Method};
pub use normal::NormalData;
pub use poisson::PoissonData;
pub use prob::Prob;
pub use rng::{Dist, RngStream};
