//! Small statistics helpers: Kolmogorov-Smirnov distances and batch-means
//! standard errors.

use alloc::vec::Vec;

use crate::math;

/// One-sample KS statistic `sup |F_n - F|`. Sorts `x` in place.
pub fn ks_statistic(x: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample KS statistic. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of the mean of `x` from `batches` contiguous batch means.
/// `x` is assumed to be ordered so that batches are roughly independent.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let b = batches.clamp(2, x.len().max(2));
    if x.len() < 2 {
        return 0.0;
    }
    let size = x.len() / b;
    if size == 0 {
        return sample_se(x);
    }
    let means: Vec<f64> = (0..b).map(|k| mean(&x[k * size..(k + 1) * size])).collect();
    sample_se(&means)
}

/// `s / √n` for the sample standard deviation `s`.
pub fn sample_se(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    math::sqrt(var / n as f64)
}
