//! Interval estimators for the constrained normal mean theta >= 0 with
//! unknown variance, observing X ~ N(theta, sigma^2) and W ~ sigma^2 chi^2_r.
//!
//! The inferential-model route works with the pivot (X - theta)/sqrt(W),
//! whose distribution F is that of Z/sqrt(U) (Z standard normal, U
//! chi-square with r degrees of freedom) and is evaluated analytically as
//! t_cdf(r, v*sqrt(r)). The Bayesian route uses the flat 1/sigma prior.

use crate::dist;
use crate::error::{domain, Result};
use crate::interval::{Interval, Method};
use crate::prob::{check_alpha, Prob};

/// One observation pair for the constrained normal model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalData {
    /// The measurement X.
    pub x: f64,
    /// The scale observation W > 0.
    pub w: f64,
    /// Degrees of freedom r >= 1 of the scale observation.
    pub r: u32,
}

impl NormalData {
    pub fn new(x: f64, w: f64, r: u32) -> Result<NormalData> {
        if !x.is_finite() {
            return Err(domain(format!("x must be finite, got {x}")));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(domain(format!("w must be positive, got {w}")));
        }
        if r < 1 {
            return Err(domain("r must be >= 1"));
        }
        Ok(NormalData { x, w, r })
    }

    /// s = sqrt(w/r), the scale estimate.
    pub fn s(&self) -> f64 {
        (self.w / self.r as f64).sqrt()
    }
}

/// Level 1-alpha Bayesian credible interval for theta under the improper
/// prior f(theta, sigma) = 1/sigma on theta >= 0, sigma > 0.
///
/// The highest-density choice of endpoints is l = max{0, x - b s},
/// u = x + b s with t = x/s and
/// b = max{ H_r^{-1}(1 - alpha H_r(t)), H_r^{-1}(1/2 + (1-alpha) H_r(t) / 2) }.
pub fn bayes_normal_ci(d: &NormalData, alpha: f64) -> Result<Interval> {
    let alpha = check_alpha(alpha)?;
    let s = d.s();
    let t = d.x / s;
    let ht = dist::t_cdf(d.r, t)?.value();
    // For x/s far below the boundary, alpha*H_r(t) underflows and the
    // first quantile argument saturates at 1; clamp to the representable
    // range (the interval then collapses toward the boundary point).
    let p1 = (1.0 - alpha * ht).min(1.0 - 1e-15);
    let b1 = dist::t_quantile(d.r, p1)?;
    let b2 = dist::t_quantile(d.r, 0.5 + 0.5 * (1.0 - alpha) * ht)?;
    let b = b1.max(b2);
    let raw_lower = d.x - b * s;
    let raw_upper = d.x + b * s;
    // The exact upper endpoint is strictly positive for every input; the
    // clamp only shields f64 tail-quantile roundoff at extreme x/s.
    Ok(Interval {
        lower: raw_lower.max(0.0),
        upper: raw_upper.max(0.0),
        level: Prob::new(1.0 - alpha)?,
        method: Method::Bayes,
        truncated_lower: raw_lower < 0.0,
        truncated_upper: raw_upper < 0.0,
    })
}

/// Level 1-alpha IM confidence interval for theta:
/// ( max{0, x - sqrt(w) F^{-1}(1 - alpha/2)}, max{0, x + sqrt(w) F^{-1}(1 - alpha/2)} ).
pub fn im_normal_ci(d: &NormalData, alpha: f64) -> Result<Interval> {
    let alpha = check_alpha(alpha)?;
    let q = dist::scaled_t_quantile(d.r, 1.0 - alpha / 2.0)?;
    let sw = d.w.sqrt();
    let raw_lower = d.x - sw * q;
    let raw_upper = d.x + sw * q;
    Ok(Interval {
        lower: raw_lower.max(0.0),
        upper: raw_upper.max(0.0),
        level: Prob::new(1.0 - alpha)?,
        method: Method::Im,
        truncated_lower: raw_lower < 0.0,
        truncated_upper: raw_upper < 0.0,
    })
}

/// IM plausibility of the singleton assertion theta = theta0.
///
/// With F the cdf of the pivot and v = (x - theta0)/sqrt(w):
/// theta0 = 0: 2(1 - F(x/sqrt(w))) when 1/2 < F <= 1, else 1;
/// theta0 > 0: 2 F(v) when F(v) < 1/2, else 2(1 - F(v)).
pub fn im_normal_plausibility(d: &NormalData, theta0: f64) -> Result<Prob> {
    if !(theta0 >= 0.0) || !theta0.is_finite() {
        return Err(domain(format!("theta0 must be >= 0, got {theta0}")));
    }
    let sw = d.w.sqrt();
    if theta0 == 0.0 {
        let f = dist::scaled_t_cdf(d.r, d.x / sw)?.value();
        return Prob::clamped(if f > 0.5 { 2.0 * (1.0 - f) } else { 1.0 });
    }
    let f = dist::scaled_t_cdf(d.r, (d.x - theta0) / sw)?.value();
    Prob::clamped(if f < 0.5 { 2.0 * f } else { 2.0 * (1.0 - f) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(x: f64, w: f64, r: u32) -> NormalData {
        NormalData::new(x, w, r).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(NormalData::new(0.3, 0.0, 5).is_err());
        assert!(NormalData::new(0.3, -1.0, 5).is_err());
        assert!(NormalData::new(0.3, 1.0, 0).is_err());
        assert!(NormalData::new(f64::NAN, 1.0, 5).is_err());
        let d = data(0.45, 0.01, 5);
        assert!(bayes_normal_ci(&d, 0.0).is_err());
        assert!(bayes_normal_ci(&d, 1.5).is_err());
        assert!(im_normal_ci(&d, 1.0).is_err());
        assert!(im_normal_plausibility(&d, -0.1).is_err());
    }

    #[test]
    fn bayes_matches_reference_table_row() {
        // x = 0.45, W = 0.01, r = 5, level 0.90 -> [0.3599, 0.5401]
        let iv = bayes_normal_ci(&data(0.45, 0.01, 5), 0.10).unwrap();
        assert!((iv.lower - 0.3599104581).abs() < 5e-5, "lower {}", iv.lower);
        assert!((iv.upper - 0.5400895419).abs() < 5e-5, "upper {}", iv.upper);
        assert!(!iv.truncated_lower);
    }

    #[test]
    fn bayes_stays_ordered_for_extreme_negative_x() {
        for &x in &[-2.0, -5.0, -20.0, -120.0] {
            let iv = bayes_normal_ci(&data(x, 0.01, 5), 0.10).unwrap();
            assert!(iv.lower <= iv.upper, "x={x}: {iv:?}");
            assert!(iv.lower >= 0.0 && iv.upper >= 0.0);
            assert!(iv.truncated_lower);
        }
    }

    #[test]
    fn bayes_far_from_boundary_reduces_to_symmetric_t_interval() {
        // As t -> infinity, H_r(t) -> 1 and b -> t-quantile at 1 - alpha/2.
        let d = data(400.0, 0.01, 5);
        let alpha = 0.10;
        let iv = bayes_normal_ci(&d, alpha).unwrap();
        let b = dist::t_quantile(5, 1.0 - alpha / 2.0).unwrap();
        let s = d.s();
        assert!((iv.lower - (d.x - b * s)).abs() < 1e-9);
        assert!((iv.upper - (d.x + b * s)).abs() < 1e-9);
    }

    #[test]
    fn bayes_matches_posterior_quadrature_oracle() {
        // Frozen endpoints from an independent adaptive-quadrature HPD
        // search on the posterior kernel (x = 0.45, w = 1.0, r = 10).
        let iv = bayes_normal_ci(&data(0.45, 1.0, 10), 0.10).unwrap();
        assert!((iv.lower - 0.0).abs() < 0.01, "lower {}", iv.lower);
        assert!((iv.upper - 0.90416466).abs() < 0.01, "upper {}", iv.upper);
        assert!(iv.truncated_lower);
    }

    #[test]
    fn im_interval_closed_form() {
        // lower/upper = x -+ sqrt(w) * scaled_t_quantile(5, 0.95), clipped at 0.
        let iv = im_normal_ci(&data(0.45, 0.01, 5), 0.10).unwrap();
        assert!((iv.lower - 0.3599).abs() < 1e-4, "lower {}", iv.lower);
        assert!((iv.upper - 0.5401).abs() < 1e-4, "upper {}", iv.upper);
        assert_eq!(iv.method, Method::Im);
    }

    #[test]
    fn im_degenerate_interval_at_boundary() {
        let iv = im_normal_ci(&data(-1.0, 0.01, 5), 0.10).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
        assert!(iv.truncated_lower && iv.truncated_upper);
        assert!(iv.contains(0.0));
    }

    #[test]
    fn plausibility_peaks_at_observation() {
        let d = data(0.7, 0.3, 8);
        assert!((im_normal_plausibility(&d, 0.7).unwrap().value() - 1.0).abs() < 1e-12);
        // theta0 = 0 with x = 0 sits in the "otherwise" branch.
        let d0 = data(0.0, 0.3, 8);
        assert_eq!(im_normal_plausibility(&d0, 0.0).unwrap().value(), 1.0);
    }

    #[test]
    fn plausibility_tail_value() {
        // Choose theta0 so that F((x - theta0)/sqrt(w)) = 0.975: pl = 0.05.
        let d = data(2.0, 1.0, 10);
        let q = dist::scaled_t_quantile(10, 0.975).unwrap();
        let theta0 = d.x - d.w.sqrt() * q;
        let pl = im_normal_plausibility(&d, theta0).unwrap().value();
        assert!((pl - 0.05).abs() < 1e-9, "pl {pl}");
    }

    #[test]
    fn plausibility_interval_duality_on_grid() {
        let d = data(0.8, 0.5, 12);
        let alpha = 0.10;
        let iv = im_normal_ci(&d, alpha).unwrap();
        for k in 0..=400 {
            let theta0 = k as f64 * 0.01;
            let pl = im_normal_plausibility(&d, theta0).unwrap().value();
            let strictly_inside = theta0 > iv.lower && theta0 < iv.upper;
            let on_edge = (theta0 - iv.lower).abs() < 1e-9 || (theta0 - iv.upper).abs() < 1e-9;
            if on_edge {
                continue;
            }
            assert_eq!(pl > alpha, strictly_inside, "theta0 {theta0} pl {pl}");
        }
    }

    #[test]
    fn plausibility_is_valid_over_repeated_sampling() {
        // For fixed (theta, sigma2, r), the frequency of pl(theta) <= alpha
        // stays at or below alpha + 3*se; exactly alpha in the interior.
        let mut stream = crate::rng::RngStream::new(0x7E0E, 0);
        let m_reps = 20_000;
        for &(theta, sigma2, r) in &[(0.0, 1.0, 5u32), (0.7, 2.0, 10), (4.0, 0.5, 20)] {
            let sigma = (sigma2 as f64).sqrt();
            for &alpha in &[0.05, 0.10] {
                let mut hits = 0usize;
                for _ in 0..m_reps {
                    let x = theta + sigma * stream.std_normal();
                    let w = sigma2 * stream.chi_square(r).unwrap();
                    let d = NormalData::new(x, w.max(1e-300), r).unwrap();
                    if im_normal_plausibility(&d, theta).unwrap().value() <= alpha {
                        hits += 1;
                    }
                }
                let freq = hits as f64 / m_reps as f64;
                let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / m_reps as f64).sqrt();
                assert!(
                    freq <= bound,
                    "validity violated at theta={theta} r={r} alpha={alpha}: {freq} > {bound}"
                );
                if theta > 0.0 {
                    // interior exactness: the same frequency equals alpha
                    let lo = alpha - 3.0 * (alpha * (1.0 - alpha) / m_reps as f64).sqrt();
                    assert!(freq >= lo, "interior frequency {freq} below {lo} at theta={theta}");
                }
            }
        }
    }

    #[test]
    fn plausibility_unimodal_on_grid() {
        let d = data(1.3, 0.4, 6);
        let peak = d.x.max(0.0);
        let mut prev = -1.0;
        // nondecreasing up to the peak
        for k in 0..=130 {
            let v = im_normal_plausibility(&d, k as f64 * 0.01).unwrap().value();
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
        assert!((im_normal_plausibility(&d, peak).unwrap().value() - 1.0).abs() < 1e-12);
        // nonincreasing beyond it
        let mut prev = 2.0;
        for k in 130..=400 {
            let v = im_normal_plausibility(&d, k as f64 * 0.01).unwrap().value();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}
