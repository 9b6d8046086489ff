//! Worker-count control and reductions whose floating-point result does not
//! depend on how many threads execute them.

use rayon::prelude::*;

/// Environment variable consulted when no explicit worker count is given.
pub const WORKERS_ENV: &str = "FIELDFORGE_WORKERS";

/// Fixed chunk length for reductions. Partial sums are formed per chunk and
/// then combined in chunk order, so the result is the same for any pool size.
const REDUCE_CHUNK: usize = 2048;

/// Runs `f` inside a dedicated rayon pool with exactly `workers` threads.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}

/// Worker count from an explicit value, falling back to `FIELDFORGE_WORKERS`
/// and finally to 1.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1)
        .max(1)
}

/// Number of threads in the pool the caller is running on.
pub fn current_workers() -> usize {
    rayon::current_num_threads()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// `y = x + beta * y`
pub fn xpby(x: &[f64], beta: f64, y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi = xi + beta * *yi);
}
