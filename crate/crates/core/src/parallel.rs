//! Worker-pool sizing.

use crate::error::{Error, Result};

/// Environment variable capping the number of workers.
pub const THREADS_VAR: &str = "QPWALK_THREADS";

/// Worker cap from `QPWALK_THREADS`, if set.
pub fn env_workers() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(s) if !s.trim().is_empty() => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{THREADS_VAR} must be a positive integer")))?;
            if n == 0 {
                return Err(Error::invalid(format!("{THREADS_VAR} must be >= 1")));
            }
            Ok(Some(n))
        }
        _ => Ok(None),
    }
}

/// Runs `f` on a dedicated pool with `workers` threads (all cores when `None`).
pub fn install<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
