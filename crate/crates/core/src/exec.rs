//! Execution strategy for embarrassingly parallel loops.
//!
//! Algorithms take an `&impl Exec` and only ever ask for an indexed map whose
//! results come back in index order. Reductions over those results are then
//! done sequentially, so output does not depend on how work was scheduled.

use alloc::vec::Vec;

pub trait Exec: Sync {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Exec for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
