//! Nonrandomized IM (NIM) interval via random weighting.
//!
//! The two-sided cdf bracketing at a discrete count is replaced by the
//! exact equation
//!   J_{c,w}(t) = w F_t(c-1) + (1-w) F_t(c) = u      (count c > 0)
//!   J_{0,w}(t) = w 1{t = 0} + (1-w) F_t(0) = u      (count c = 0)
//! with w, u independent Unif(0,1). J is strictly decreasing in t, so the
//! sup-form root sup{t : J(t) >= u} is unique. A NIM draw solves one such
//! equation for theta (scale 1, count x) and one for epsilon (scale m,
//! count w) and takes lambda = max{0, theta - epsilon}; the interval reads
//! empirical quantiles of n seeded draws.

use super::PoissonData;
use crate::dist::poisson_cdf_below_and_pmf;
use crate::empirical;
use crate::error::{domain, Result};
use crate::interval::{Interval, Method};
use crate::prob::{check_alpha, Prob};
use crate::rng::RngStream;
use rayon::prelude::*;

const BLOCK: usize = 1024;
/// Lock-step iteration count of the batch solver: no early exit, so a
/// batch is bit-deterministic regardless of partitioning.
const BATCH_ITERS: usize = 64;

/// One weighted-cdf equation J(param) = target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedCdfProblem {
    /// The observed count (x or w).
    pub count: u64,
    /// Random weight in [0, 1].
    pub weight: f64,
    /// Right-hand side in (0, 1).
    pub target: f64,
    /// Rate multiplier: the cdf argument is scale * param (1 for the
    /// theta equation, m for the epsilon equation).
    pub scale: f64,
}

impl WeightedCdfProblem {
    pub fn new(count: u64, weight: f64, target: f64, scale: f64) -> Result<WeightedCdfProblem> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(domain(format!("weight must lie in [0, 1], got {weight}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain(format!("scale must be positive, got {scale}")));
        }
        if !(0.0..=1.0).contains(&target) {
            return Err(domain(format!("target must lie in [0, 1], got {target}")));
        }
        Ok(WeightedCdfProblem { count, weight, target, scale })
    }

    fn check_target_interior(&self) -> Result<()> {
        if self.target > 0.0 && self.target < 1.0 {
            Ok(())
        } else {
            Err(domain(format!("target must lie in (0, 1), got {}", self.target)))
        }
    }

    /// Initial bisection bracket upper end, doubled on demand.
    fn initial_hi(&self) -> f64 {
        let c = self.count as f64;
        (c + 10.0 * (c + 1.0).sqrt() + 10.0) / self.scale.min(1.0)
    }
}

/// J(param): 1 at param = 0, strictly decreasing to 0.
pub fn weighted_cdf(p: &WeightedCdfProblem, param: f64) -> Result<Prob> {
    if !(param >= 0.0) || !param.is_finite() {
        return Err(domain(format!("param must be >= 0, got {param}")));
    }
    Prob::clamped(weighted_cdf_raw(p, param))
}

#[inline]
fn weighted_cdf_raw(p: &WeightedCdfProblem, param: f64) -> f64 {
    let theta = p.scale * param;
    if p.count == 0 {
        let indicator = if theta == 0.0 { 1.0 } else { 0.0 };
        let f0 = (-theta).exp();
        return p.weight * indicator + (1.0 - p.weight) * f0;
    }
    let (below, pmf) = poisson_cdf_below_and_pmf(theta, p.count);
    // weight * F(c-1) + (1-weight) * (F(c-1) + pmf)
    below + (1.0 - p.weight) * pmf
}

/// The sup-form root of J(param) = target, by bracketed bisection.
///
/// For count 0 with target >= 1 - weight the supremum collapses to the
/// boundary and the root is 0 exactly.
pub fn solve_weighted(p: &WeightedCdfProblem) -> Result<f64> {
    p.check_target_interior()?;
    if p.count == 0 && p.target >= 1.0 - p.weight {
        return Ok(0.0);
    }
    let mut hi = p.initial_hi();
    let mut grew = 0;
    while weighted_cdf_raw(p, hi) >= p.target {
        hi *= 2.0;
        grew += 1;
        if grew > 200 {
            return Err(domain(format!(
                "weighted-cdf bracket failed: count {}, weight {}, target {}, scale {}",
                p.count, p.weight, p.target, p.scale
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if weighted_cdf_raw(p, mid) >= p.target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Element-wise equivalent of [`solve_weighted`], run as a lock-step
/// bisection with a fixed iteration count over the whole batch. Work is
/// partitioned across worker threads; results keep the input order.
pub fn batch_solve(problems: &[WeightedCdfProblem]) -> Result<Vec<f64>> {
    for (i, p) in problems.iter().enumerate() {
        p.check_target_interior()
            .map_err(|e| domain(format!("problem {i}: {e}")))?;
    }
    let solve_block = |block: &[WeightedCdfProblem]| -> Vec<f64> {
        let n = block.len();
        let mut lo = vec![0.0f64; n];
        let mut hi = vec![0.0f64; n];
        let mut done = vec![false; n];
        for (i, p) in block.iter().enumerate() {
            if p.count == 0 && p.target >= 1.0 - p.weight {
                done[i] = true;
                continue;
            }
            let mut h = p.initial_hi();
            while weighted_cdf_raw(p, h) >= p.target {
                h *= 2.0;
            }
            hi[i] = h;
        }
        for _ in 0..BATCH_ITERS {
            for (i, p) in block.iter().enumerate() {
                if done[i] {
                    continue;
                }
                let mid = 0.5 * (lo[i] + hi[i]);
                if weighted_cdf_raw(p, mid) >= p.target {
                    lo[i] = mid;
                } else {
                    hi[i] = mid;
                }
            }
        }
        (0..n)
            .map(|i| if done[i] { 0.0 } else { 0.5 * (lo[i] + hi[i]) })
            .collect()
    };
    let out: Vec<Vec<f64>> = problems.par_chunks(BLOCK).map(|b| solve_block(b)).collect();
    Ok(out.concat())
}

/// Monte Carlo draws of lambda = max{0, theta - epsilon}.
#[derive(Debug, Clone)]
pub struct NimSample {
    pub draws: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Build n NIM draws: per replicate sample (omega, omega~, u, u~) i.i.d.
/// uniform, solve the theta and epsilon equations, and clip the
/// difference at the constraint boundary. Deterministic under `seed`.
pub fn build_nim_sample(d: &PoissonData, n: usize, seed: u64) -> Result<NimSample> {
    if n < 1 {
        return Err(domain("NIM sample size n must be >= 1"));
    }
    let blocks = n.div_ceil(BLOCK);
    let quads: Vec<[f64; 4]> = (0..blocks)
        .flat_map(|b| {
            let mut stream = RngStream::new(seed, b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len)
                .map(|_| {
                    let omega = stream.uniform01();
                    let omega_t = stream.uniform01();
                    let u = stream.uniform01();
                    let u_t = stream.uniform01();
                    [omega, omega_t, u, u_t]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let theta_problems: Vec<WeightedCdfProblem> = quads
        .iter()
        .map(|q| WeightedCdfProblem { count: d.x, weight: q[0], target: q[2], scale: 1.0 })
        .collect();
    let eps_problems: Vec<WeightedCdfProblem> = quads
        .iter()
        .map(|q| WeightedCdfProblem { count: d.w, weight: q[1], target: q[3], scale: d.m })
        .collect();
    let thetas = batch_solve(&theta_problems)?;
    let epsilons = batch_solve(&eps_problems)?;
    let draws = thetas
        .iter()
        .zip(&epsilons)
        .map(|(t, e)| (t - e).max(0.0))
        .collect();
    Ok(NimSample { draws, n, seed })
}

/// NIM interval from a prebuilt sample: empirical alpha/2 and 1 - alpha/2
/// quantiles of the lambda draws (already clipped at 0).
pub fn nim_poisson_ci_from(sample: &NimSample, alpha: f64) -> Result<Interval> {
    let alpha = check_alpha(alpha)?;
    let mut sorted = sample.draws.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
    let lower = empirical::quantile_sorted(&sorted, alpha / 2.0).max(0.0);
    let upper = empirical::quantile_sorted(&sorted, 1.0 - alpha / 2.0).max(0.0);
    Ok(Interval {
        lower,
        upper,
        level: Prob::new(1.0 - alpha)?,
        method: Method::Nim,
        truncated_lower: lower <= 0.0,
        truncated_upper: upper <= 0.0,
    })
}

/// Level 1-alpha NIM confidence interval using n Monte Carlo draws.
pub fn nim_poisson_ci(d: &PoissonData, alpha: f64, n: usize, seed: u64) -> Result<Interval> {
    check_alpha(alpha)?;
    nim_poisson_ci_from(&build_nim_sample(d, n, seed)?, alpha)
}

/// Plausibility of lambda = lambda0 from a prebuilt sample, reading the
/// empirical cdf H-hat of the draws.
pub fn nim_poisson_plausibility_from(sample: &NimSample, lambda0: f64) -> Result<Prob> {
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return Err(domain(format!("lambda0 must be >= 0, got {lambda0}")));
    }
    let h = empirical::fraction_at_or_below(&sample.draws, lambda0);
    let pl = if lambda0 == 0.0 {
        if h < 0.5 {
            2.0 * h
        } else {
            1.0
        }
    } else if h < 0.5 {
        2.0 * h
    } else {
        2.0 * (1.0 - h)
    };
    Prob::clamped(pl)
}

/// Plausibility of lambda = lambda0 using n Monte Carlo draws.
pub fn nim_poisson_plausibility(
    d: &PoissonData,
    lambda0: f64,
    n: usize,
    seed: u64,
) -> Result<Prob> {
    nim_poisson_plausibility_from(&build_nim_sample(d, n, seed)?, lambda0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::gamma_quantile;

    fn data(x: u64, w: u64, m: f64) -> PoissonData {
        PoissonData::new(x, w, m).unwrap()
    }

    #[test]
    fn weighted_cdf_shapes() {
        // count = 0: J(t) = (1-w) e^{-t} for t > 0, J(0) = 1.
        let p = WeightedCdfProblem::new(0, 0.3, 0.5, 1.0).unwrap();
        assert_eq!(weighted_cdf(&p, 0.0).unwrap().value(), 1.0);
        let v = weighted_cdf(&p, 2.0).unwrap().value();
        assert!((v - 0.7 * (-2.0f64).exp()).abs() < 1e-14);
        // param = 0 with positive count: F_0(k) = 1 for k >= 0.
        let p = WeightedCdfProblem::new(5, 0.8, 0.5, 3.0).unwrap();
        assert_eq!(weighted_cdf(&p, 0.0).unwrap().value(), 1.0);
        // weight = 0 reduces to the plain Poisson cdf.
        let p = WeightedCdfProblem::new(2, 0.0, 0.5, 1.0).unwrap();
        let v = weighted_cdf(&p, 1.7).unwrap().value();
        let want = crate::dist::poisson_cdf(1.7, 2).unwrap().value();
        assert!((v - want).abs() < 1e-14);
        assert!(weighted_cdf(&p, -1.0).is_err());
        assert!(WeightedCdfProblem::new(2, 1.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn weighted_cdf_strictly_decreasing() {
        for &(count, weight, scale) in
            &[(0u64, 0.4, 1.0), (3, 0.2, 1.0), (12, 0.9, 20.0), (60, 0.5, 20.0)]
        {
            let p = WeightedCdfProblem::new(count, weight, 0.5, scale).unwrap();
            let hi = p.initial_hi();
            let mut prev = weighted_cdf_raw(&p, 1e-9);
            for i in 1..=60 {
                let t = hi * i as f64 / 60.0;
                let cur = weighted_cdf_raw(&p, t);
                assert!(
                    cur < prev || prev < 1e-300,
                    "not decreasing at count={count} t={t}: {prev} -> {cur}"
                );
                prev = cur;
            }
        }
    }

    #[test]
    fn solve_closed_forms() {
        // count=0, weight=0.3, target=0.35: root -ln(0.35/0.7) = ln 2.
        let p = WeightedCdfProblem::new(0, 0.3, 0.35, 1.0).unwrap();
        let root = solve_weighted(&p).unwrap();
        assert!((root - std::f64::consts::LN_2).abs() < 1e-8, "root {root}");
        // target >= 1 - weight: supremum at the boundary.
        let p = WeightedCdfProblem::new(0, 0.3, 0.8, 1.0).unwrap();
        assert_eq!(solve_weighted(&p).unwrap(), 0.0);
        // weight = 0, count = 2: plain cdf, root = Ginv(3, 1/2) by duality.
        let p = WeightedCdfProblem::new(2, 0.0, 0.5, 1.0).unwrap();
        let root = solve_weighted(&p).unwrap();
        assert!((root - 2.6740603137235603).abs() < 1e-8, "root {root}");
        // invalid targets
        assert!(solve_weighted(&WeightedCdfProblem::new(2, 0.0, 0.0, 1.0).unwrap()).is_err());
        assert!(solve_weighted(&WeightedCdfProblem::new(2, 0.0, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn solve_scale_moves_the_root() {
        // With scale m the epsilon root is the unit root divided by m.
        let unit = solve_weighted(&WeightedCdfProblem::new(7, 0.42, 0.3, 1.0).unwrap()).unwrap();
        let scaled = solve_weighted(&WeightedCdfProblem::new(7, 0.42, 0.3, 25.0).unwrap()).unwrap();
        assert!((scaled - unit / 25.0).abs() < 1e-8);
        // Tiny scale pushes the root beyond the initial bracket; doubling
        // must cover it.
        let tiny = solve_weighted(&WeightedCdfProblem::new(7, 0.42, 0.3, 0.01).unwrap()).unwrap();
        assert!((tiny - unit / 0.01).abs() < 1e-5);
    }

    #[test]
    fn root_residual_small_when_positive() {
        let cases = [
            (0u64, 0.3, 0.35, 1.0),
            (3, 0.77, 0.12, 1.0),
            (12, 0.05, 0.93, 1.0),
            (60, 0.5, 0.5, 20.0),
            (900, 0.25, 0.66, 300.0),
        ];
        for &(count, weight, target, scale) in &cases {
            let p = WeightedCdfProblem::new(count, weight, target, scale).unwrap();
            let root = solve_weighted(&p).unwrap();
            if root > 0.0 {
                let resid = (weighted_cdf_raw(&p, root) - target).abs();
                assert!(resid <= 1e-8, "residual {resid} at count={count} scale={scale}");
            }
        }
    }

    #[test]
    fn theta_root_sandwiched_between_gamma_inverses() {
        // Ginv(x, 1-u) <= root <= Ginv(x+1, 1-u) for any weight.
        let mut stream = RngStream::new(8, 0);
        for _ in 0..300 {
            let x = (stream.uniform01() * 12.0) as u64;
            let u = stream.uniform01();
            let omega = stream.uniform01();
            let p = WeightedCdfProblem::new(x, omega, u, 1.0).unwrap();
            let root = solve_weighted(&p).unwrap();
            let lo = gamma_quantile(x as f64, 1.0 - u).unwrap();
            let hi = gamma_quantile(x as f64 + 1.0, 1.0 - u).unwrap();
            assert!(
                lo - 1e-8 <= root && root <= hi + 1e-8,
                "x={x} u={u} omega={omega}: {lo} <= {root} <= {hi}"
            );
        }
    }

    #[test]
    fn batch_matches_serial() {
        let mut stream = RngStream::new(123, 0);
        let mut problems = Vec::new();
        for _ in 0..5000 {
            let count = (stream.uniform01() * 80.0) as u64;
            let weight = stream.uniform01();
            let target = stream.uniform01();
            let scale = if stream.uniform01() < 0.5 { 1.0 } else { 20.0 };
            problems.push(WeightedCdfProblem { count, weight, target, scale });
        }
        let batch = batch_solve(&problems).unwrap();
        for (i, p) in problems.iter().enumerate() {
            let serial = solve_weighted(p).unwrap();
            assert!(
                (batch[i] - serial).abs() <= 1e-8,
                "deviation at {i}: batch {} serial {serial}",
                batch[i]
            );
        }
        // batch of 1 equals the serial solver
        let single = batch_solve(&problems[..1]).unwrap();
        assert!((single[0] - solve_weighted(&problems[0]).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn batch_all_zero_count_matches_closed_form() {
        let mut stream = RngStream::new(321, 0);
        let problems: Vec<WeightedCdfProblem> = (0..2000)
            .map(|_| WeightedCdfProblem {
                count: 0,
                weight: stream.uniform01(),
                target: stream.uniform01(),
                scale: 1.0,
            })
            .collect();
        let roots = batch_solve(&problems).unwrap();
        for (p, root) in problems.iter().zip(&roots) {
            let want = if p.target >= 1.0 - p.weight {
                0.0
            } else {
                -(p.target / (1.0 - p.weight)).ln()
            };
            assert!((root - want).abs() <= 1e-8, "root {root} want {want}");
        }
    }

    #[test]
    fn batch_reports_offending_index() {
        let good = WeightedCdfProblem::new(2, 0.5, 0.5, 1.0).unwrap();
        let bad = WeightedCdfProblem { count: 2, weight: 0.5, target: 1.0, scale: 1.0 };
        let err = batch_solve(&[good, bad]).unwrap_err();
        assert!(err.to_string().contains("problem 1"), "{err}");
    }

    #[test]
    fn nim_sample_deterministic_and_nonnegative() {
        let d = data(1, 40, 20.0);
        let a = build_nim_sample(&d, 3000, 5).unwrap();
        let b = build_nim_sample(&d, 3000, 5).unwrap();
        assert_eq!(a.draws, b.draws);
        assert!(a.draws.iter().all(|&v| v >= 0.0));
        assert!(build_nim_sample(&d, 0, 5).is_err());
    }

    #[test]
    fn x0_pipeline_matches_analytic_reduction() {
        // x = 0: theta(i) = max{0, -ln(u_i / (1 - omega_i))}; replaying the
        // stream gives the quads, so the full pipeline must agree to 1e-8.
        let d = data(0, 10, 20.0);
        let n = 2000;
        let sample = build_nim_sample(&d, n, 77).unwrap();
        let mut quads = Vec::with_capacity(n);
        let blocks = n.div_ceil(BLOCK);
        for b in 0..blocks {
            let mut stream = RngStream::new(77, b as u64);
            for _ in 0..BLOCK.min(n - b * BLOCK) {
                let omega = stream.uniform01();
                let omega_t = stream.uniform01();
                let u = stream.uniform01();
                let u_t = stream.uniform01();
                quads.push([omega, omega_t, u, u_t]);
            }
        }
        for (i, q) in quads.iter().enumerate() {
            let theta = if q[2] >= 1.0 - q[0] { 0.0 } else { -(q[2] / (1.0 - q[0])).ln() };
            let eps = solve_weighted(
                &WeightedCdfProblem::new(10, q[1], q[3], 20.0).unwrap(),
            )
            .unwrap();
            let want = (theta - eps).max(0.0);
            assert!(
                (sample.draws[i] - want).abs() <= 1e-8,
                "draw {i}: {} want {want}",
                sample.draws[i]
            );
        }
    }

    #[test]
    fn nim_draw_mean_stable_across_seeds() {
        let d = data(0, 10, 20.0);
        let n = 20_000;
        let m1 = build_nim_sample(&d, n, 1).unwrap();
        let m2 = build_nim_sample(&d, n, 2).unwrap();
        let mean = |s: &NimSample| s.draws.iter().sum::<f64>() / s.n as f64;
        let var = |s: &NimSample, mu: f64| {
            s.draws.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / s.n as f64
        };
        let (a, b) = (mean(&m1), mean(&m2));
        let se = (2.0 * var(&m1, a) / n as f64).sqrt();
        assert!((a - b).abs() < 3.0 * se, "{a} vs {b} (se {se})");
    }

    #[test]
    fn interval_and_plausibility_basics() {
        let d = data(0, 10, 20.0);
        let n = 50_000;
        let sample = build_nim_sample(&d, n, 99).unwrap();
        let iv = nim_poisson_ci_from(&sample, 0.10).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert!(iv.truncated_lower);
        // Exact tail identity for x = 0 gives the true 95th percentile.
        assert!((iv.upper - 1.7906).abs() < 0.06, "upper {}", iv.upper);
        // pl at the empirical median is 1, decays to 0 in the tail.
        let med = empirical::quantile(&sample.draws, 0.5);
        if med > 0.0 {
            let pl = nim_poisson_plausibility_from(&sample, med).unwrap().value();
            assert!((pl - 1.0).abs() < 0.01, "pl {pl}");
        }
        assert_eq!(nim_poisson_plausibility_from(&sample, 80.0).unwrap().value(), 0.0);
        // duality with the 90% upper endpoint
        let pl = nim_poisson_plausibility_from(&sample, iv.upper).unwrap().value();
        assert!((pl - 0.10).abs() < 0.01, "pl {pl}");
        assert!(nim_poisson_plausibility_from(&sample, -1.0).is_err());
        assert!(nim_poisson_ci_from(&sample, 0.0).is_err());
    }

    #[test]
    fn nim_draw_lies_in_im_endpoint_interval_for_shared_uniforms() {
        // With the same (u, u~), the weighted roots are sandwiched by the
        // gamma inverses on both the theta and epsilon sides, so the NIM
        // lambda draw falls inside the IM endpoint pair's interval.
        let mut stream = RngStream::new(0x5A4D, 0);
        for _ in 0..200 {
            let x = (stream.uniform01() * 10.0) as u64;
            let w = (stream.uniform01() * 80.0) as u64;
            let m = 1.0 + stream.uniform01() * 99.0;
            let d = data(x, w, m);
            let (u, ut) = (stream.uniform01(), stream.uniform01());
            let (omega, omega_t) = (stream.uniform01(), stream.uniform01());
            let theta =
                solve_weighted(&WeightedCdfProblem::new(x, omega, u, 1.0).unwrap()).unwrap();
            let eps =
                solve_weighted(&WeightedCdfProblem::new(w, omega_t, ut, m).unwrap()).unwrap();
            let lam = (theta - eps).max(0.0);
            let (l1, l2) = crate::poisson::im::sample_endpoint_pair(&d, u, ut).unwrap();
            assert!(
                l1 - 1e-7 <= lam && lam <= l2 + 1e-7,
                "x={x} w={w} m={m}: {l1} <= {lam} <= {l2}"
            );
        }
    }

    #[test]
    fn nim_upper_below_im_upper_on_x0_cells() {
        // The random-weighting draw lies inside the IM endpoint pair, so
        // the NIM upper endpoint cannot exceed the IM one (matched seeds).
        for &w in &[10u64, 20, 30, 40] {
            let d = data(0, w, 20.0);
            let im = crate::poisson::im::im_poisson_ci(&d, 0.10, 20_000, 13).unwrap();
            let nim = nim_poisson_ci(&d, 0.10, 20_000, 13).unwrap();
            assert!(
                nim.upper <= im.upper + 1e-9,
                "w={w}: nim {} vs im {}",
                nim.upper,
                im.upper
            );
        }
    }
}
