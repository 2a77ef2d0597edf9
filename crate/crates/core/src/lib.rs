//! Shared-memory PageRank with blocking, lock-free and wait-free engines.
//!
//! Every engine computes the same fixed point
//!
//! > pr(u) = (1 − d)/n + d · Σ_{(v,u) ∈ E} pr(v) / outdeg(v)
//!
//! over an immutable [`CsrGraph`], differing only in how threads coordinate:
//!
//! | variant          | coordination                        | convergence     |
//! |------------------|-------------------------------------|-----------------|
//! | `seq`            | single thread                       | algorithm-level |
//! | `barrier`        | two barrier-separated phases        | algorithm-level |
//! | `barrier-edge`   | scatter / gather / reduce phases    | algorithm-level |
//! | `barrier-opt`    | `barrier` + loop perforation        | + node-level    |
//! | `nosync`         | none; shared single rank buffer     | thread-level    |
//! | `nosync-edge`    | none; edge-centric contributions    | thread-level    |
//! | `nosync-opt`     | `nosync` + loop perforation         | + node-level    |
//! | `waitfree`       | versioned cells and helping         | algorithm-level |
//!
//! Dangling vertices contribute nothing, so ranks sum to less than one on
//! graphs that have them.
//!
//! All engines are generic over the [`Scalar`] type (`f32` or `f64`); the
//! aliases below fix the usual double-precision choice.

pub mod engine;
pub mod fault;
pub mod graph;
pub mod nosync;
pub mod run;
pub mod scalar;
pub mod seq;
pub mod sync;
pub mod waitfree;

pub use engine::{
    l1_norm, max_residual, partition_static, EngineError, Outcome, Partition, RunControl, Variant,
    CSV_HEADER,
};
pub use fault::{run_with_faults, FaultPlan};
pub use graph::{
    detect_identical, load_edge_list, load_graph, rmat_generate, CsrGraph, EdgeList, GraphError,
    RmatParams,
};
pub use nosync::{pagerank_nosync, pagerank_nosync_edge, pagerank_nosync_opt};
pub use run::{bench, bench_header, run_identical_variant, run_variant, verify, Verification};
pub use scalar::Scalar;
pub use seq::{oracle_dense, pagerank_sequential};
pub use sync::{pagerank_barrier, pagerank_barrier_edge, pagerank_barrier_opt};
pub use waitfree::pagerank_waitfree;

/// Default rank type.
pub type Rank = f64;
/// Run configuration over [`Rank`].
pub type RunConfig = engine::RunConfig<Rank>;
/// Run report over [`Rank`].
pub type RunReport = engine::RunReport<Rank>;
/// Run configuration in single precision.
pub type RunConfigF32 = engine::RunConfig<f32>;
/// Run report in single precision.
pub type RunReportF32 = engine::RunReport<f32>;
