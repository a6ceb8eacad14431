use rayon::prelude::*;
use rayon::ThreadPool;

use itnn_core::exec::Executor;

use crate::error::{Error, Result};

/// Runs jobs on a dedicated rayon pool of `jobs` threads.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Rayon { pool })
    }
}

impl Executor for Rayon {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
