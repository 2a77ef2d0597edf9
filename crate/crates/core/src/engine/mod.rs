//! Scaffolding shared by all engines: configuration, partitioning, rank
//! storage, per-thread bookkeeping and reporting.
//!
//! Three convergence modes are used across the engines:
//!
//! * algorithm-level: the barrier engines stop when the maximum change over
//!   all vertices in one iteration is at most the threshold;
//! * thread-level: each lock-free worker stops once the maximum of every
//!   worker's last published error is at most the threshold, re-checked
//!   after each of its own sweeps;
//! * node-level: loop perforation freezes individual vertices.

mod config;
mod control;
pub mod kernel;
mod metrics;
mod partition;
mod report;
mod table;

use thiserror::Error;

use crate::scalar::{AtomicVec, Scalar};

pub use config::{RunConfig, Variant};
pub use control::{Halt, PhaseBarrier, RunControl};
pub use metrics::{l1_norm, max_abs_diff, max_residual};
pub use partition::{partition_static, Partition};
pub use report::{Outcome, RunReport, CSV_HEADER};
pub use table::{enter_worker, ThreadErrorTable, WorkerGuard};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("graph too large for the dense oracle: n = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },
}

/// Rank storage.
///
/// Barrier engines keep the previous iteration in `prev` and write `curr`;
/// the lock-free engines have a single buffer, `curr`, and no `prev`.
pub struct RankState<T: Scalar> {
    pub prev: Option<AtomicVec<T>>,
    pub curr: AtomicVec<T>,
}

impl<T: Scalar> RankState<T> {
    /// `prev = 1/n`, `curr = 0`.
    pub fn double_buffered(n: usize) -> Self {
        RankState {
            prev: Some(AtomicVec::filled(n, uniform(n))),
            curr: AtomicVec::filled(n, T::zero()),
        }
    }

    /// `curr = 1/n`.
    pub fn single_buffered(n: usize) -> Self {
        RankState {
            prev: None,
            curr: AtomicVec::filled(n, uniform(n)),
        }
    }

    pub fn prev(&self) -> &AtomicVec<T> {
        self.prev
            .as_ref()
            .expect("single-buffered rank state has no previous ranks")
    }
}

/// Initial rank `1/n`.
pub fn uniform<T: Scalar>(n: usize) -> T {
    T::one() / T::from_usize(n.max(1)).unwrap()
}
