//! Dense vector helpers on plain slices.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// `t * a + (1 - t) * b`
pub fn lerp(t: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

/// In place `acc = t * acc + (1 - t) * b`.
pub fn lerp_into(acc: &mut [f64], t: f64, b: &[f64]) {
    for (x, y) in acc.iter_mut().zip(b) {
        *x = t * *x + (1.0 - t) * y;
    }
}

pub fn axpy(acc: &mut [f64], s: f64, b: &[f64]) {
    for (x, y) in acc.iter_mut().zip(b) {
        *x += s * y;
    }
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Incremental running mean: after the call `mean` averages `count` samples.
pub fn running_mean_push(mean: &mut [f64], count: usize, sample: &[f64]) {
    let w = 1.0 / count as f64;
    for (m, s) in mean.iter_mut().zip(sample) {
        *m += w * (s - *m);
    }
}
