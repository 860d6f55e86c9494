//! Trial fan-out. With the `parallel` feature trials run on the rayon pool,
//! otherwise (or with [`Execution::Sequential`]) on the calling thread.
//! Results always come back in trial order, so reductions are bit-stable.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// `f(0), f(1), ..., f(count - 1)` in order.
pub fn map_trials<T, F>(execution: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..count as u64).into_par_iter().map(f).collect(),
        _ => (0..count as u64).map(f).collect(),
    }
}

/// Fallible variant of [`map_trials`]; the first error in trial order wins.
pub fn try_map_trials<T, F>(execution: Execution, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    map_trials(execution, count, f).into_iter().collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: global pool).
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("workers must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == Some(0) {
        return Err(Error::InvalidParameter("workers must be >= 1".into()));
    }
    Ok(f())
}
