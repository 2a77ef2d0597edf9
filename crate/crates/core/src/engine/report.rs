use std::fmt::Write as _;
use std::time::Duration;

use crate::scalar::Scalar;

use super::Variant;

/// Column order of the per-run CSV row.
pub const CSV_HEADER: &str =
    "variant,threads,graph,wall_ns,iters_min,iters_max,final_err,l1,converged";

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    /// Hit the iteration cap with the error still above threshold.
    MaxIters,
    /// Abandoned by the watchdog.
    Timeout,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Converged => 0,
            Outcome::MaxIters | Outcome::Timeout => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::MaxIters => "max-iters",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub variant: Variant,
    pub threads: usize,
    pub identical: bool,
    pub wall_time: Duration,
    pub per_thread_iterations: Vec<u64>,
    /// Largest error the run last observed; below threshold iff converged.
    pub final_error: T,
    pub ranks: Vec<T>,
    pub l1_vs_oracle: Option<T>,
    pub outcome: Outcome,
    /// Total number of per-vertex rank computations performed.
    pub vertex_updates: u64,
    /// Wall time of each iteration as seen by one worker; populated by the
    /// fault harness.
    pub iteration_times: Vec<Duration>,
    /// Wait-free engine only: successful rank installs per iteration.
    pub installs_per_iteration: Option<Vec<u64>>,
    pub frozen_vertices: usize,
}

impl<T: Scalar> RunReport<T> {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    pub fn iters_min(&self) -> u64 {
        self.per_thread_iterations
            .iter()
            .copied()
            .min()
            .unwrap_or(0)
    }

    pub fn iters_max(&self) -> u64 {
        self.per_thread_iterations
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn wall_ns(&self) -> u128 {
        self.wall_time.as_nanos()
    }

    /// Label used in reports; identical-node runs get an `-identical` suffix.
    pub fn label(&self) -> String {
        if self.identical {
            format!("{}-identical", self.variant)
        } else {
            self.variant.to_string()
        }
    }

    /// One row in [`CSV_HEADER`] order. A missing L1 value is left empty.
    pub fn csv_row(&self, graph: &str) -> String {
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{:e},",
            self.label(),
            self.threads,
            graph,
            self.wall_ns(),
            self.iters_min(),
            self.iters_max(),
            self.final_error
        )
        .unwrap();
        if let Some(l1) = self.l1_vs_oracle {
            write!(row, "{l1:e}").unwrap();
        }
        write!(row, ",{}", self.converged()).unwrap();
        row
    }
}
