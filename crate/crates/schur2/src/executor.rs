//! A rayon-backed [`Executor`].

use rayon::prelude::*;
use schur2_core::Executor;

/// Runs work items on a dedicated rayon pool. Output order always matches
/// input order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl RayonExecutor {
    /// A pool with `workers` threads; 0 means one per available core.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        let workers = pool.current_num_threads();
        Ok(Self { pool, workers })
    }
}

impl Executor for RayonExecutor {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }

    fn workers(&self) -> usize {
        self.workers
    }
}
