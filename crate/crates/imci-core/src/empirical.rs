//! Empirical quantiles, ecdf evaluation, and the Kolmogorov-Smirnov
//! distance to Unif(0,1).
//!
//! Both Monte Carlo interval methods use the same quantile estimator
//! (order statistics with linear interpolation between adjacent ranks) so
//! that cross-method length comparisons are not confounded by the
//! estimator choice.

/// Empirical quantile of a sorted sample: linear interpolation between the
/// order statistics at ranks floor(q(n-1))+1 and floor(q(n-1))+2 (1-based).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let i = (h.floor() as usize).min(n - 2);
    let frac = h - i as f64;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Sort a copy of the sample and take its quantile.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut copy = xs.to_vec();
    copy.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    quantile_sorted(&copy, q)
}

/// Empirical cdf value: the fraction of the sample at or below `t`.
pub fn fraction_at_or_below(xs: &[f64], t: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let count = xs.iter().filter(|&&v| v <= t).count();
    count as f64 / xs.len() as f64
}

/// Two-sided KS distance between a sorted sample in [0,1] and Unif(0,1).
pub fn ks_distance_uniform01(sorted: &[f64]) -> f64 {
    assert!(!sorted.is_empty(), "KS distance of an empty sample");
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let upper = (i + 1) as f64 / n - v;
        let lower = v - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}
