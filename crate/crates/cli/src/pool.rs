use rayon::prelude::*;

use crate::error::{AppError, AppResult};

/// Maps `f` over `items` on `jobs` worker threads (0 = one per core) and
/// returns the results in input order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> AppResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> AppResult<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::config(format!("worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
