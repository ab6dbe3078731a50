//! Thread-pool executor.

use manibench_core::exec::Executor;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable that overrides the requested worker count.
pub const WORKERS_VAR: &str = "MANIBENCH_WORKERS";

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> Result<RayonExecutor> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Failed(format!("thread pool: {e}")))?;
        Ok(RayonExecutor { pool })
    }
}

impl Executor for RayonExecutor {
    fn for_each<T: Send>(&self, items: &mut [T], f: &(dyn Fn(usize, &mut T) + Sync)) {
        self.pool
            .install(|| items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x)));
    }

    fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

/// Worker count from `MANIBENCH_WORKERS`, else `requested`, else 1.
pub fn resolve_workers(requested: Option<usize>) -> Result<usize> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{WORKERS_VAR}={v:?} is not a positive integer"))),
        Err(_) => Ok(requested.unwrap_or(1).max(1)),
    }
}
