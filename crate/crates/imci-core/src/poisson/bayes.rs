//! Bayesian posterior and highest-posterior-density credible interval for
//! the Poisson signal rate under the improper prior
//! epsilon^(a-1) e^(-b epsilon) on the background rate.
//!
//! Marginalizing the background gives a posterior for lambda that is a
//! finite mixture of unit-scale gamma densities with shapes x-k+1 and
//! log-weights lgamma(a+w+k) - lgamma(k+1) - (a+w+k) ln(b+m+1) (up to a
//! k-independent factor). All weight arithmetic is done in log space: the
//! gamma factors overflow long before w reaches the background-monitor
//! counts seen at large m.

use super::PoissonData;
use crate::error::{domain, numerical, Result};
use crate::interval::{Interval, Method};
use crate::prob::{check_alpha, Prob};
use crate::special;

/// Hyperparameters of the improper background prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    /// Shape-like exponent, a > 0.
    pub a: f64,
    /// Exponential tilt, b >= 0.
    pub b: f64,
}

impl PriorSpec {
    pub fn new(a: f64, b: f64) -> Result<PriorSpec> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(domain(format!("prior a must be positive, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(domain(format!("prior b must be >= 0, got {b}")));
        }
        Ok(PriorSpec { a, b })
    }
}

impl Default for PriorSpec {
    /// a = 1, b = 0, the choice under which the x = 0 posterior is Exp(1).
    fn default() -> PriorSpec {
        PriorSpec { a: 1.0, b: 0.0 }
    }
}

/// The posterior as a normalized gamma mixture: component k in 0..=x has
/// shape x-k+1 and weight exp(log_weights[k]).
#[derive(Debug, Clone)]
pub struct PosteriorMixture {
    x: u64,
    log_weights: Vec<f64>,
}

impl PosteriorMixture {
    pub fn new(d: &PoissonData, prior: &PriorSpec) -> PosteriorMixture {
        let x = d.x;
        let awb = prior.a + d.w as f64;
        let ln_denom = (prior.b + d.m + 1.0).ln();
        let mut lw: Vec<f64> = (0..=x)
            .map(|k| {
                let kf = k as f64;
                special::ln_gamma(awb + kf) - special::ln_gamma(kf + 1.0) - (awb + kf) * ln_denom
            })
            .collect();
        let lse = log_sum_exp(&lw);
        for v in &mut lw {
            *v -= lse;
        }
        PosteriorMixture { x, log_weights: lw }
    }

    /// log g(lambda | w, x).
    pub fn log_density(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        // Component k is Gamma(shape x-k+1, 1): log pdf = j ln(lambda) - lambda
        // - lgamma(j+1) with j = x - k.
        let terms: Vec<f64> = (0..=self.x)
            .map(|k| {
                let j = (self.x - k) as f64;
                let lpdf = if j == 0.0 {
                    -lambda
                } else if lambda == 0.0 {
                    return f64::NEG_INFINITY;
                } else {
                    j * lambda.ln() - lambda - special::ln_gamma(j + 1.0)
                };
                self.log_weights[k as usize] + lpdf
            })
            .collect();
        log_sum_exp(&terms)
    }

    pub fn density(&self, lambda: f64) -> f64 {
        self.log_density(lambda).exp()
    }

    /// G(lambda | w, x), the mixture of gamma cdfs.
    pub fn cdf(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        let mut acc = 0.0;
        for k in 0..=self.x {
            let shape = (self.x - k + 1) as f64;
            acc += self.log_weights[k as usize].exp() * special::reg_gamma_lower(shape, lambda);
        }
        acc.clamp(0.0, 1.0)
    }

    /// Inverse cdf by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(0.0 < p && p < 1.0);
        let mut hi = (self.x + 1) as f64 + 10.0 * ((self.x + 1) as f64).sqrt() + 10.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..200 {
            if hi - lo <= 1e-11 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// log of the posterior density g(lambda | w, x).
pub fn posterior_log_density(d: &PoissonData, prior: &PriorSpec, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(PosteriorMixture::new(d, prior).log_density(lambda))
}

/// Posterior distribution function G(lambda | w, x).
pub fn posterior_cdf(d: &PoissonData, prior: &PriorSpec, lambda: f64) -> Result<Prob> {
    check_lambda(lambda)?;
    Prob::clamped(PosteriorMixture::new(d, prior).cdf(lambda))
}

/// Numerical unimodality check: counts sign changes of the density
/// difference over a dense grid. The gamma mixture with contiguous shapes
/// and common scale has been unimodal in every regime we exercise; this
/// diagnostic guards the level-set construction anyway.
pub fn posterior_is_unimodal(d: &PoissonData, prior: &PriorSpec) -> bool {
    let mix = PosteriorMixture::new(d, prior);
    mixture_is_unimodal(&mix, d)
}

fn mixture_is_unimodal(mix: &PosteriorMixture, d: &PoissonData) -> bool {
    let hi = (d.x + 1) as f64 + 12.0 * ((d.x + 1) as f64).sqrt() + 12.0;
    let n = 400;
    let mut prev = mix.log_density(0.0);
    let mut rises_after_fall = false;
    let mut falling = false;
    for i in 1..=n {
        let lam = hi * i as f64 / n as f64;
        let cur = mix.log_density(lam);
        if cur < prev - 1e-12 {
            falling = true;
        } else if cur > prev + 1e-12 && falling {
            rises_after_fall = true;
        }
        prev = cur;
    }
    !rises_after_fall
}

/// Highest-posterior-density credible interval of mass 1 - alpha.
///
/// Bisects on the density level c: for each c the interval is
/// [l(c), u(c)] with l(c) = 0 when g(0) >= c and the interior crossing
/// otherwise, and the mass G(u) - G(l) is matched to 1 - alpha within 1e-6.
/// If the unimodality check fails, the crossings are taken as the extreme
/// grid crossings of {g >= c} (the connected hull), which preserves the
/// mass calibration.
pub fn bayes_poisson_ci(d: &PoissonData, prior: &PriorSpec, alpha: f64) -> Result<Interval> {
    let alpha = check_alpha(alpha)?;
    let target = 1.0 - alpha;
    let mix = PosteriorMixture::new(d, prior);
    let unimodal = mixture_is_unimodal(&mix, d);

    // Locate the mode.
    let hi_scan = (d.x + 1) as f64 + 12.0 * ((d.x + 1) as f64).sqrt() + 12.0;
    let (mode, log_gmode) = maximize_log_density(&mix, 0.0, hi_scan);
    let g0 = mix.log_density(0.0);

    if mode <= 1e-12 || g0 >= log_gmode - 1e-12 {
        // Monotone decreasing density: the level set is [0, G^{-1}(1-alpha)].
        let upper = mix.quantile(target);
        return Ok(Interval {
            lower: 0.0,
            upper,
            level: Prob::new(target)?,
            method: Method::Bayes,
            truncated_lower: true,
            truncated_upper: false,
        });
    }

    // Bisect the level c in log space between 0+ and g(mode).
    let gmode = log_gmode.exp();
    let mut c_lo = 0.0; // mass(c_lo) -> 1
    let mut c_hi = gmode; // mass(c_hi) -> 0
    let mut result = None;
    for _ in 0..200 {
        let c = 0.5 * (c_lo + c_hi);
        let (l, u) = level_set_bounds(&mix, d, c, mode, hi_scan, unimodal)?;
        let mass = mix.cdf(u) - mix.cdf(l);
        if (mass - target).abs() <= 1e-7 {
            result = Some((l, u, c));
            break;
        }
        if mass > target {
            c_lo = c;
        } else {
            c_hi = c;
        }
        if c_hi - c_lo < 1e-16 * gmode {
            result = Some((l, u, c));
            break;
        }
    }
    let (l, u, c) =
        result.ok_or_else(|| numerical("HPD level search did not reach the mass tolerance"))?;
    Ok(Interval {
        lower: l,
        upper: u,
        level: Prob::new(target)?,
        method: Method::Bayes,
        truncated_lower: l == 0.0 && g0.exp() >= c,
        truncated_upper: false,
    })
}

/// Endpoints of {lambda : g(lambda) >= c} for a unimodal density; for the
/// non-unimodal fallback, the outermost grid crossings.
fn level_set_bounds(
    mix: &PosteriorMixture,
    d: &PoissonData,
    c: f64,
    mode: f64,
    hi_scan: f64,
    unimodal: bool,
) -> Result<(f64, f64)> {
    let ln_c = c.ln();
    if unimodal {
        let l = if mix.log_density(0.0) >= ln_c {
            0.0
        } else {
            bisect_log_density(mix, 0.0, mode, ln_c, true)
        };
        let mut far = hi_scan.max(mode + 1.0);
        while mix.log_density(far) >= ln_c {
            far *= 2.0;
        }
        let u = bisect_log_density(mix, mode, far, ln_c, false);
        Ok((l, u))
    } else {
        // Fine-grid hull of the level set.
        let n = 4000;
        let mut far = hi_scan.max(mode + 1.0);
        while mix.log_density(far) >= ln_c {
            far *= 2.0;
        }
        let step = far / n as f64;
        let mut first = None;
        let mut last = None;
        for i in 0..=n {
            let lam = i as f64 * step;
            if mix.log_density(lam) >= ln_c {
                if first.is_none() {
                    first = Some(lam);
                }
                last = Some(lam);
            }
        }
        match (first, last) {
            (Some(f), Some(l)) => Ok((f, l)),
            _ => Err(numerical(format!(
                "empty posterior level set at c = {c} for x = {}, w = {}, m = {}",
                d.x, d.w, d.m
            ))),
        }
    }
}

/// Root of log g(lambda) = ln_c on a bracket where the density is monotone
/// (rising towards the mode, falling past it).
fn bisect_log_density(mix: &PosteriorMixture, lo: f64, hi: f64, ln_c: f64, rising: bool) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let below = mix.log_density(mid) < ln_c;
        if below == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn maximize_log_density(mix: &PosteriorMixture, lo: f64, hi: f64) -> (f64, f64) {
    // Coarse grid, then golden-section refinement around the best cell.
    let n = 256usize;
    let step = (hi - lo) / n as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let v = mix.log_density(lo + i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * (best_i.saturating_sub(1)) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut dpt = a + phi * (b - a);
    let mut fc = mix.log_density(c);
    let mut fd = mix.log_density(dpt);
    for _ in 0..120 {
        if b - a < 1e-12 * (1.0 + b) {
            break;
        }
        if fc > fd {
            b = dpt;
            dpt = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = mix.log_density(c);
        } else {
            a = c;
            c = dpt;
            fc = fd;
            dpt = a + phi * (b - a);
            fd = mix.log_density(dpt);
        }
    }
    let m = 0.5 * (a + b);
    (m, mix.log_density(m))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}
