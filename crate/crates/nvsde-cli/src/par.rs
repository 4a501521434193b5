//! Rayon-backed path executor. Results are collected in ascending path
//! order, so aggregates are identical for any thread count.

use nvsde_core::errorlab::PathMap;
use nvsde_core::{Error, Result};
use rayon::prelude::*;

pub struct RayonMap {
    pool: rayon::ThreadPool,
}

impl RayonMap {
    /// `threads = 0` uses the rayon default.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(RayonMap { pool })
    }
}

impl PathMap for RayonMap {
    fn run(
        &self,
        count: usize,
        task: &(dyn Fn(usize) -> Result<Vec<f64>> + Sync),
    ) -> Result<Vec<Vec<f64>>> {
        self.pool
            .install(|| (0..count).into_par_iter().map(task).collect())
    }
}
