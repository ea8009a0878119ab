//! Rayon-backed [`Exec`].

use brolin_core::exec::Exec;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{LabError, LabResult};

pub const THREADS_ENV: &str = "BROLIN_LAB_THREADS";

pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    /// `threads = None` or `Some(0)` uses all cores.
    pub fn new(threads: Option<usize>) -> LabResult<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads.filter(|&n| n > 0) {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| LabError::Input(format!("thread pool: {e}")))?;
        Ok(Rayon { pool })
    }

    /// Worker count from the flag, else from `BROLIN_LAB_THREADS`.
    pub fn from_flag_or_env(flag: Option<usize>) -> LabResult<Self> {
        let threads = match flag {
            Some(n) => Some(n),
            None => match std::env::var(THREADS_ENV) {
                Ok(s) => Some(
                    s.trim()
                        .parse()
                        .map_err(|_| LabError::Input(format!("{THREADS_ENV}={s:?} is not a thread count")))?,
                ),
                Err(_) => None,
            },
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Exec for Rayon {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
