//! Thread-pool executor for episode batches.

use rayon::prelude::*;
use relaynet_core::experiments::Executor;

/// Runs jobs on a dedicated rayon pool. Results come back in index order, so
/// estimates do not depend on the number of workers.
pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    /// `workers = 0` uses one worker per available core.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn run<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(job).collect())
    }
}
