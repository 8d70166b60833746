//! Thread-pool setup and parallel evaluation.

use mlpnet_core::mlp::TermMap;
use mlpnet_core::{Activation, NetError, Network};
use rayon::prelude::*;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "MLPNET_THREADS";

/// Configures the global pool. `None` falls back to [`THREADS_ENV`], then to
/// the number of available cores. Calling it twice keeps the first pool.
pub fn init_threads(threads: Option<usize>) -> usize {
    let n = threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    rayon::current_num_threads()
}

/// Rayon-backed term evaluation; results come back in index order, so sums
/// are identical to the sequential ones for any worker count.
#[derive(Clone, Copy, Debug, Default)]
pub struct Parallel;

impl TermMap for Parallel {
    fn map(&self, count: usize, term: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..count).into_par_iter().map(term).collect()
    }
}

/// Realizes a scalar-output network at many points.
pub fn realize_points(net: &Network, act: Activation, points: &[Vec<f64>]) -> Result<Vec<f64>, NetError> {
    points
        .par_iter()
        .map_init(mlpnet_core::net::Scratch::default, |s, p| net.realize_with(act, p, s).map(|y| y[0]))
        .collect()
}
