use std::cell::Cell;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::scalar::{AtomicVec, Scalar};

thread_local! {
    static WORKER_ID: Cell<Option<usize>> = const { Cell::new(None) };
}

/// Marks the current OS thread as worker `t` for the single-writer checks.
/// The mark is cleared when the guard drops.
pub fn enter_worker(t: usize) -> WorkerGuard {
    WORKER_ID.with(|w| w.set(Some(t)));
    WorkerGuard(())
}

pub struct WorkerGuard(());

impl Drop for WorkerGuard {
    fn drop(&mut self) {
        WORKER_ID.with(|w| w.set(None));
    }
}

#[inline]
fn debug_assert_owner(slot: usize) {
    if cfg!(debug_assertions) {
        if let Some(me) = WORKER_ID.with(Cell::get) {
            assert_eq!(
                me, slot,
                "worker {me} wrote slot {slot} of the thread error table"
            );
        }
    }
}

/// Per-thread published error and iteration count, plus per-vertex freeze
/// flags for loop perforation.
///
/// Each thread slot has exactly one writer (its owning thread) and any
/// number of readers. Debug builds enforce the single-writer rule.
pub struct ThreadErrorTable<T: Scalar> {
    errors: AtomicVec<T>,
    iterations: Vec<AtomicU64>,
    frozen: Vec<AtomicBool>,
}

impl<T: Scalar> ThreadErrorTable<T> {
    /// `initial_error` is what peers observe before a thread's first
    /// publication.
    pub fn new(threads: usize, n: usize, initial_error: T) -> Self {
        ThreadErrorTable {
            errors: AtomicVec::filled(threads, initial_error),
            iterations: (0..threads).map(|_| AtomicU64::new(0)).collect(),
            frozen: (0..n).map(|_| AtomicBool::new(false)).collect(),
        }
    }

    pub fn threads(&self) -> usize {
        self.errors.len()
    }

    /// Publishes thread `t`'s error for the sweep it just finished and bumps
    /// its iteration counter.
    pub fn publish(&self, t: usize, error: T) -> u64 {
        debug_assert_owner(t);
        debug_assert!(error >= T::zero());
        self.errors.set(t, error);
        self.iterations[t].fetch_add(1, Ordering::Relaxed) + 1
    }

    /// Overwrites `t`'s error without counting an iteration.
    pub fn set_error(&self, t: usize, error: T) {
        debug_assert_owner(t);
        self.errors.set(t, error);
    }

    pub fn count_iteration(&self, t: usize) -> u64 {
        debug_assert_owner(t);
        self.iterations[t].fetch_add(1, Ordering::Relaxed) + 1
    }

    #[inline]
    pub fn error(&self, t: usize) -> T {
        self.errors.get(t)
    }

    /// Maximum over every thread's published error.
    pub fn max_error(&self) -> T {
        (0..self.threads())
            .map(|t| self.errors.get(t))
            .fold(T::zero(), T::max)
    }

    pub fn iterations(&self, t: usize) -> u64 {
        self.iterations[t].load(Ordering::Relaxed)
    }

    /// Sweeps completed by every thread except `t`.
    pub fn others_iterations(&self, t: usize) -> u64 {
        self.iterations
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != t)
            .map(|(_, c)| c.load(Ordering::Relaxed))
            .sum()
    }

    pub fn all_iterations(&self) -> Vec<u64> {
        self.iterations
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .collect()
    }

    #[inline]
    pub fn is_frozen(&self, u: usize) -> bool {
        self.frozen[u].load(Ordering::Relaxed)
    }

    #[inline]
    pub fn freeze(&self, u: usize) {
        self.frozen[u].store(true, Ordering::Relaxed)
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen
            .iter()
            .filter(|f| f.load(Ordering::Relaxed))
            .count()
    }
}
