//! Fan-out over independent work items.
//!
//! Rollout collection and evaluation step many environments per tick. The
//! work for item `i` only touches item `i`, so any schedule produces the
//! same result; an executor only decides where the work runs.

pub trait Executor: Sync {
    fn for_each<T: Send>(&self, items: &mut [T], f: &(dyn Fn(usize, &mut T) + Sync));

    fn workers(&self) -> usize {
        1
    }
}

/// Runs items in order on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn for_each<T: Send>(&self, items: &mut [T], f: &(dyn Fn(usize, &mut T) + Sync)) {
        for (i, item) in items.iter_mut().enumerate() {
            f(i, item);
        }
    }
}
