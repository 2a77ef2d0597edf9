//! Variant dispatch, oracle verification and benchmarking.

use crate::engine::{
    l1_norm, max_residual, EngineError, RunConfig, RunControl, RunReport, Variant, CSV_HEADER,
};
use crate::fault::FaultPlan;
use crate::graph::CsrGraph;
use crate::nosync::{nosync_edge, nosync_vertex};
use crate::scalar::Scalar;
use crate::seq::{oracle_dense, pagerank_sequential, DENSE_ORACLE_LIMIT};
use crate::sync::{barrier_edge, barrier_vertex};
use crate::waitfree::waitfree_with_control;

/// Runs the variant selected by `cfg` (with perforation folded in).
pub fn run_variant<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    let ctl = RunControl::new(FaultPlan::default(), cfg.watchdog, cfg.threads);
    run_with_control(g, cfg, &ctl)
}

/// Runs a vertex-centric variant computing one representative per class of
/// vertices with identical in-neighbor sets.
pub fn run_identical_variant<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    run_variant(g, &cfg.clone().with_identical(true))
}

pub(crate) fn run_with_control<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    ctl: &RunControl,
) -> Result<RunReport<T>, EngineError> {
    match cfg.effective_variant() {
        Variant::Sequential => pagerank_sequential(g, cfg),
        Variant::Barrier => barrier_vertex(g, cfg, false, ctl),
        Variant::BarrierOpt => barrier_vertex(g, cfg, true, ctl),
        Variant::BarrierEdge => barrier_edge(g, cfg, ctl),
        Variant::NoSync => nosync_vertex(g, cfg, false, ctl),
        Variant::NoSyncOpt => nosync_vertex(g, cfg, true, ctl),
        Variant::NoSyncEdge => nosync_edge(g, cfg, ctl),
        Variant::WaitFree => waitfree_with_control(g, cfg, ctl),
    }
}

/// Where the reference ranks were cross-checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Sequential ranks confirmed against the dense-matrix oracle.
    Dense,
    /// Graph too large for the dense oracle; sequential ranks used as is.
    Sequential,
}

#[derive(Debug, Clone)]
pub struct Verification<T> {
    /// The verified run, with `l1_vs_oracle` filled in.
    pub report: RunReport<T>,
    pub reference: Vec<T>,
    /// L1 distance between the run and the sequential reference.
    pub l1: T,
    /// Largest fixed-point residual of the run's ranks.
    pub max_residual: T,
    pub oracle: OracleKind,
    /// L1 distance between the sequential reference and the dense oracle.
    pub oracle_l1: Option<T>,
}

/// Sequential settings matching `cfg`, run to convergence even when `cfg`
/// caps the iteration count lower.
pub fn reference_config<T: Scalar>(cfg: &RunConfig<T>) -> RunConfig<T> {
    let max_iters = cfg.max_iters.max(RunConfig::<T>::default().max_iters);
    RunConfig {
        variant: Variant::Sequential,
        threads: 1,
        perforation: false,
        identical: false,
        max_iters,
        watchdog: None,
        ..cfg.clone()
    }
}

/// Runs `cfg` and compares it with the sequential engine (itself checked
/// against the dense oracle when the graph is small enough).
pub fn verify<T: Scalar>(g: &CsrGraph, cfg: &RunConfig<T>) -> Result<Verification<T>, EngineError> {
    let mut report = run_variant(g, cfg)?;
    let seq_cfg = reference_config(cfg);
    let reference = pagerank_sequential(g, &seq_cfg)?.ranks;
    let (oracle, oracle_l1) = if g.n() <= DENSE_ORACLE_LIMIT {
        let dense = oracle_dense(g, &seq_cfg)?;
        (OracleKind::Dense, Some(l1_norm(&dense, &reference)?))
    } else {
        (OracleKind::Sequential, None)
    };
    let l1 = l1_norm(&report.ranks, &reference)?;
    report.l1_vs_oracle = Some(l1);
    let max_residual = max_residual(g, &report.ranks, cfg.damping);
    Ok(Verification {
        report,
        reference,
        l1,
        max_residual,
        oracle,
        oracle_l1,
    })
}

/// Column order of benchmark tables.
pub fn bench_header() -> String {
    format!("{CSV_HEADER},speedup")
}

#[derive(Debug, Clone)]
pub struct BenchRow<T> {
    pub report: RunReport<T>,
    /// Sequential wall time divided by this row's wall time.
    pub speedup: f64,
}

impl<T: Scalar> BenchRow<T> {
    pub fn csv_row(&self, graph: &str) -> String {
        format!("{},{:.4}", self.report.csv_row(graph), self.speedup)
    }
}

/// Runs a sequential baseline, then every variant at every thread count.
/// Each configuration is repeated `repeats` times and the run with the
/// median wall time is kept. L1 is measured against the baseline.
pub fn bench<T: Scalar>(
    g: &CsrGraph,
    base: &RunConfig<T>,
    variants: &[Variant],
    threads: &[usize],
    repeats: usize,
) -> Result<Vec<BenchRow<T>>, EngineError> {
    let seq_cfg = RunConfig {
        variant: Variant::Sequential,
        threads: 1,
        perforation: false,
        identical: false,
        ..base.clone()
    };
    let mut seq = median_run(g, &seq_cfg, repeats)?;
    let reference = seq.ranks.clone();
    seq.l1_vs_oracle = Some(T::zero());
    let seq_wall = seq.wall_time.as_secs_f64();
    let mut rows = vec![BenchRow {
        report: seq,
        speedup: 1.0,
    }];
    for &variant in variants.iter().filter(|&&v| v != Variant::Sequential) {
        for &p in threads {
            let cfg = RunConfig {
                variant,
                threads: p,
                ..base.clone()
            };
            let mut report = median_run(g, &cfg, repeats)?;
            report.l1_vs_oracle = Some(l1_norm(&report.ranks, &reference)?);
            let speedup = seq_wall / report.wall_time.as_secs_f64().max(1e-12);
            rows.push(BenchRow { report, speedup });
        }
    }
    Ok(rows)
}

fn median_run<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    repeats: usize,
) -> Result<RunReport<T>, EngineError> {
    let mut runs = (0..repeats.max(1))
        .map(|_| run_variant(g, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    runs.sort_by_key(|r| r.wall_time);
    let mid = runs.len() / 2;
    Ok(runs.swap_remove(mid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_honors_perforation_flag() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let r = run_variant(
            &g,
            &RunConfig::<f64>::new(Variant::NoSync, 2).with_perforation(true),
        )
        .unwrap();
        assert_eq!(r.variant, Variant::NoSyncOpt);
        let r = run_identical_variant(&g, &RunConfig::<f64>::new(Variant::Barrier, 2)).unwrap();
        assert!(r.identical);
        assert_eq!(r.label(), "barrier-identical");
    }

    #[test]
    fn verify_barrier_is_exact() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 2), (2, 0), (2, 3), (3, 1)]);
        let v = verify(&g, &RunConfig::<f64>::new(Variant::Barrier, 3)).unwrap();
        assert_eq!(v.l1, 0.0);
        assert_eq!(v.oracle, OracleKind::Dense);
        assert!(v.oracle_l1.unwrap() <= 1e-12);
        assert_eq!(v.report.l1_vs_oracle, Some(0.0));
    }

    #[test]
    fn verify_reference_ignores_run_cap() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 2), (2, 0), (0, 2)]);
        let v = verify(
            &g,
            &RunConfig::<f64>::new(Variant::Barrier, 1).with_max_iters(1),
        )
        .unwrap();
        assert!(v.l1 > 1e-3);
    }

    #[test]
    fn bench_layout() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 2), (2, 0)]);
        let rows = bench(
            &g,
            &RunConfig::<f64>::default(),
            &[Variant::NoSync, Variant::Barrier],
            &[1, 2],
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].report.variant, Variant::Sequential);
        assert_eq!(rows[0].speedup, 1.0);
        assert_eq!(
            bench_header().split(',').count(),
            rows[1].csv_row("g").split(',').count()
        );
        assert!(bench_header().starts_with(CSV_HEADER));
    }
}
