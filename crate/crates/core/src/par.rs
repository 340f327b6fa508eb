//! Ordered data-parallel map.
//!
//! Every parallel loop in the crate goes through [`map_indexed`], which
//! returns results in index order regardless of how work was scheduled. With
//! the `parallel` feature disabled, or with `jobs == 1`, it is a plain loop.

/// Worker count; `0` means "all available cores".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Jobs(pub usize);

impl Jobs {
    pub const SEQUENTIAL: Jobs = Jobs(1);
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, jobs: Jobs, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    if jobs.0 == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    if jobs.0 == 0 {
        return (0..n).into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.0).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _jobs: Jobs, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Pairwise summation; the association order depends only on `xs.len()`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and unbiased (n-1) variance. Constant input has exactly zero variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = xs[0];
    let d: Vec<f64> = xs.iter().map(|x| x - shift).collect();
    let dmean = pairwise_sum(&d) / n as f64;
    if n < 2 {
        return (shift + dmean, f64::NAN);
    }
    let dev: Vec<f64> = d.iter().map(|x| (x - dmean) * (x - dmean)).collect();
    (shift + dmean, pairwise_sum(&dev) / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let seq = map_indexed(1000, Jobs(1), |i| i * i);
        for j in [0, 2, 3, 8] {
            assert_eq!(map_indexed(1000, Jobs(j), |i| i * i), seq);
        }
    }

    #[test]
    fn moments() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert!(mean_var(&[1.0]).1.is_nan());
        assert_eq!(mean_var(&[0.1 + 0.2; 1001]), (0.1 + 0.2, 0.0));
    }
}
