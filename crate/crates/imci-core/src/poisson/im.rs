//! Monte Carlo IM confidence interval and plausibility for the Poisson
//! signal rate.
//!
//! The association brackets lambda between two random endpoints,
//!   lambda1 = max{0, Ginv(x, 1-u)   - Ginv(w+1, 1-u~)/m}
//!   lambda2 = max{0, Ginv(x+1, 1-u) - Ginv(w,   1-u~)/m},
//! with (u, u~) a shared uniform pair (shape monotonicity then gives
//! lambda1 <= lambda2 draw by draw). The endpoint distributions have no
//! tractable closed form, so they are approximated by n seeded draws; the
//! interval takes empirical quantiles and the plausibility reads the
//! empirical cdfs.

use super::PoissonData;
use crate::dist::gamma_quantile;
use crate::empirical;
use crate::error::{domain, Result};
use crate::interval::{Interval, Method};
use crate::prob::{check_alpha, Prob};
use crate::rng::RngStream;
use rayon::prelude::*;

/// Draws are generated in fixed-size blocks, one substream per block, so
/// that the sample is reproducible regardless of thread scheduling.
const BLOCK: usize = 1024;

/// Paired draws from the two endpoint distributions.
#[derive(Debug, Clone)]
pub struct EndpointSample {
    /// lambda1 replicates (lower endpoint).
    pub lower_draws: Vec<f64>,
    /// lambda2 replicates (upper endpoint), paired with `lower_draws`.
    pub upper_draws: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// One endpoint pair for auxiliary uniforms (u, u_tilde).
pub fn sample_endpoint_pair(d: &PoissonData, u: f64, u_tilde: f64) -> Result<(f64, f64)> {
    check_open_unit(u, "u")?;
    check_open_unit(u_tilde, "u_tilde")?;
    let xf = d.x as f64;
    let wf = d.w as f64;
    let gx = gamma_quantile(xf, 1.0 - u)?;
    let gx1 = gamma_quantile(xf + 1.0, 1.0 - u)?;
    let gw = gamma_quantile(wf, 1.0 - u_tilde)?;
    let gw1 = gamma_quantile(wf + 1.0, 1.0 - u_tilde)?;
    let lambda1 = (gx - gw1 / d.m).max(0.0);
    let lambda2 = (gx1 - gw / d.m).max(0.0);
    Ok((lambda1, lambda2))
}

/// n i.i.d. endpoint pairs under the seeded stream.
pub fn build_endpoint_sample(d: &PoissonData, n: usize, seed: u64) -> Result<EndpointSample> {
    if n < 1 {
        return Err(domain("endpoint sample size n must be >= 1"));
    }
    let blocks = n.div_ceil(BLOCK);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let chunks: Vec<Vec<(f64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = RngStream::new(seed, b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let u = stream.uniform01();
                let ut = stream.uniform01();
                out.push(sample_endpoint_pair(d, u, ut).expect("open uniforms are valid"));
            }
            out
        })
        .collect();
    for c in chunks {
        pairs.extend_from_slice(&c);
    }
    let (lower_draws, upper_draws) = pairs.into_iter().unzip();
    Ok(EndpointSample { lower_draws, upper_draws, n, seed })
}

/// IM interval from a prebuilt endpoint sample: the empirical alpha/2
/// quantile of the lower draws and (1 - alpha/2) quantile of the upper.
pub fn im_poisson_ci_from(sample: &EndpointSample, alpha: f64) -> Result<Interval> {
    let alpha = check_alpha(alpha)?;
    let lower = empirical::quantile(&sample.lower_draws, alpha / 2.0);
    let upper = empirical::quantile(&sample.upper_draws, 1.0 - alpha / 2.0);
    Ok(Interval {
        lower,
        upper,
        level: Prob::new(1.0 - alpha)?,
        method: Method::Im,
        truncated_lower: lower <= 0.0,
        truncated_upper: upper <= 0.0,
    })
}

/// Level 1-alpha IM confidence interval using n Monte Carlo draws.
pub fn im_poisson_ci(d: &PoissonData, alpha: f64, n: usize, seed: u64) -> Result<Interval> {
    check_alpha(alpha)?;
    im_poisson_ci_from(&build_endpoint_sample(d, n, seed)?, alpha)
}

/// Plausibility of lambda = lambda0 from a prebuilt endpoint sample, with
/// K-hats the empirical cdfs of the two endpoints.
pub fn im_poisson_plausibility_from(sample: &EndpointSample, lambda0: f64) -> Result<Prob> {
    check_lambda0(lambda0)?;
    let k_low = empirical::fraction_at_or_below(&sample.lower_draws, lambda0);
    if lambda0 == 0.0 {
        return Prob::clamped(if k_low < 0.5 { 2.0 * k_low } else { 1.0 });
    }
    if k_low < 0.5 {
        return Prob::clamped(2.0 * k_low);
    }
    let k_up = empirical::fraction_at_or_below(&sample.upper_draws, lambda0);
    if k_up > 0.5 {
        return Prob::clamped(2.0 * (1.0 - k_up));
    }
    Ok(Prob::ONE)
}

/// Plausibility of lambda = lambda0 using n Monte Carlo draws.
pub fn im_poisson_plausibility(d: &PoissonData, lambda0: f64, n: usize, seed: u64) -> Result<Prob> {
    check_lambda0(lambda0)?;
    im_poisson_plausibility_from(&build_endpoint_sample(d, n, seed)?, lambda0)
}

fn check_open_unit(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_lambda0(lambda0: f64) -> Result<()> {
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return Err(domain(format!("lambda0 must be >= 0, got {lambda0}")));
    }
    Ok(())
}
