//! Lock-free engines without barriers.
//!
//! A single rank buffer is shared by all threads. Each thread sweeps its own
//! partition reading whatever in-neighbor values are currently published, so
//! a vertex may be computed from a mix of iterations. After every sweep the
//! thread publishes its largest change and leaves for good once the maximum
//! over all published changes is at most the threshold.
//!
//! Threads never wait for one another. Rank cells have a single writer (the
//! owner of the vertex) and are word-atomic, so a read always returns a value
//! some thread wrote.

use std::time::Instant;

use crate::engine::{
    enter_worker, kernel, partition_static, EngineError, RankState, RunConfig, RunControl,
    RunReport, ThreadErrorTable, Variant,
};
use crate::graph::{detect_identical, CsrGraph};
use crate::scalar::{AtomicVec, Scalar};
use crate::sync::{assemble, WorkerExit};

/// Vertex-centric lock-free engine. Honors `cfg.perforation` and
/// `cfg.identical`.
pub fn pagerank_nosync<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    nosync_vertex(
        g,
        cfg,
        cfg.perforation,
        &RunControl::unrestricted(cfg.threads),
    )
}

/// [`pagerank_nosync`] with loop perforation forced on.
pub fn pagerank_nosync_opt<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    nosync_vertex(g, cfg, true, &RunControl::unrestricted(cfg.threads))
}

/// Edge-centric lock-free engine. May fail to converge; the iteration cap
/// then ends the run with [`Outcome::MaxIters`](crate::engine::Outcome).
pub fn pagerank_nosync_edge<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    nosync_edge(g, cfg, &RunControl::unrestricted(cfg.threads))
}

/// Upper bound on the yields a worker spends between two of its sweeps.
/// Bounded, so a dead or stalled peer costs a few yields per sweep and never
/// blocks anybody.
const MAX_COURTESY_YIELDS: usize = 64;

/// Fair share for oversubscribed runs: hands the core to the other workers
/// until they have completed, between them, one sweep each since this
/// worker's previous sweep, or the yield budget runs out. With a core per
/// worker the peers sweep concurrently and this returns almost at once; when
/// workers outnumber cores it keeps one worker from re-sweeping its partition
/// against neighbor values nobody has touched in the meantime.
fn between_sweeps<T: Scalar>(table: &ThreadErrorTable<T>, t: usize, seen: &mut u64) {
    if table.threads() == 1 {
        return;
    }
    for _ in 0..MAX_COURTESY_YIELDS {
        std::thread::yield_now();
        let now = table.others_iterations(t);
        if now >= *seen + (table.threads() as u64 - 1) {
            *seen = now;
            return;
        }
    }
}

pub(crate) fn nosync_vertex<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    perforate: bool,
    ctl: &RunControl,
) -> Result<RunReport<T>, EngineError> {
    cfg.validate()?;
    let n = g.n();
    let p = cfg.threads;
    let part = partition_static(n, p)?;
    let classes = cfg.identical.then(|| detect_identical(g));
    let state = RankState::<T>::single_buffered(n);
    let table = ThreadErrorTable::new(p, n, T::infinity());
    let base = cfg.base(n);
    let freeze_below = cfg.freeze_below();

    let start = Instant::now();
    let exits: Vec<WorkerExit<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let (part, classes, state, table) = (&part, &classes, &state, &table);
                s.spawn(move || {
                    let _me = enter_worker(t);
                    let mut seen = 0;
                    let range = part.range(t);
                    let ranks = &state.curr;
                    let mut exit = WorkerExit::<T>::default();
                    loop {
                        if let Err(h) = ctl.begin_iteration(t, exit.iterations + 1) {
                            exit.halt = Some(h);
                            break;
                        }
                        let mut local = T::zero();
                        for u in range.clone() {
                            if classes.as_ref().is_some_and(|c| !c.is_representative(u))
                                || (perforate && table.is_frozen(u))
                            {
                                continue;
                            }
                            let previous = ranks.get(u);
                            let pr = kernel::pull(g, u, base, cfg.damping, |v| ranks.get(v));
                            ranks.set(u, pr);
                            let delta = (pr - previous).abs();
                            local = local.max(delta);
                            exit.updates += 1;
                            if perforate && kernel::should_freeze(delta, freeze_below) {
                                table.freeze(u);
                            }
                        }
                        if let Some(c) = classes {
                            for u in range.clone().filter(|&u| !c.is_representative(u)) {
                                let (old, new) = (ranks.get(u), ranks.get(c.representative(u)));
                                ranks.set(u, new);
                                local = local.max((new - old).abs());
                            }
                        }
                        exit.iterations = table.publish(t, local);
                        ctl.end_iteration(t);
                        exit.error = table.max_error();
                        if exit.error <= cfg.threshold {
                            exit.converged = true;
                            break;
                        }
                        if exit.iterations >= cfg.max_iters {
                            break;
                        }
                        between_sweeps(table, t, &mut seen);
                    }
                    exit
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("nosync worker panicked"))
            .collect()
    });
    let wall_time = start.elapsed();

    let variant = if perforate {
        Variant::NoSyncOpt
    } else {
        Variant::NoSync
    };
    Ok(assemble(
        variant,
        cfg,
        &exits,
        state.curr.snapshot(),
        wall_time,
        ctl,
        table.frozen_count(),
    ))
}

pub(crate) fn nosync_edge<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    ctl: &RunControl,
) -> Result<RunReport<T>, EngineError> {
    cfg.validate()?;
    let n = g.n();
    let p = cfg.threads;
    let part = partition_static(n, p)?;
    let state = RankState::<T>::single_buffered(n);
    let table = ThreadErrorTable::new(p, n, T::infinity());
    let base = cfg.base(n);
    let offsets = g.offset_list();

    // Seed every in-slot with the initial contribution so the first gather
    // does not read zeros.
    let contributions = AtomicVec::<T>::filled(g.m(), T::zero());
    for u in 0..n {
        let deg = g.out_degree(u);
        if deg > 0 {
            let c = kernel::contribution(state.curr.get(u), deg);
            for k in g.out_slots(u) {
                contributions.set(offsets[k], c);
            }
        }
    }

    let start = Instant::now();
    let exits: Vec<WorkerExit<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let (part, state, table, contributions) = (&part, &state, &table, &contributions);
                s.spawn(move || {
                    let _me = enter_worker(t);
                    let mut seen = 0;
                    let range = part.range(t);
                    let ranks = &state.curr;
                    let mut exit = WorkerExit::<T>::default();
                    loop {
                        if let Err(h) = ctl.begin_iteration(t, exit.iterations + 1) {
                            exit.halt = Some(h);
                            break;
                        }
                        let mut local = T::zero();
                        for u in range.clone() {
                            let previous = ranks.get(u);
                            let pr =
                                kernel::gather(g, u, base, cfg.damping, |s| contributions.get(s));
                            ranks.set(u, pr);
                            local = local.max((previous - pr).abs());
                            exit.updates += 1;
                        }
                        exit.iterations = table.publish(t, local);
                        exit.error = table.max_error();

                        for u in range.clone() {
                            let deg = g.out_degree(u);
                            if deg == 0 {
                                continue;
                            }
                            let c = kernel::contribution(ranks.get(u), deg);
                            for k in g.out_slots(u) {
                                contributions.set(offsets[k], c);
                            }
                        }
                        ctl.end_iteration(t);
                        if exit.error <= cfg.threshold {
                            exit.converged = true;
                            break;
                        }
                        if exit.iterations >= cfg.max_iters {
                            break;
                        }
                        between_sweeps(table, t, &mut seen);
                    }
                    exit
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("nosync-edge worker panicked"))
            .collect()
    });
    let wall_time = start.elapsed();
    Ok(assemble(
        Variant::NoSyncEdge,
        cfg,
        &exits,
        state.curr.snapshot(),
        wall_time,
        ctl,
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{l1_norm, max_residual};
    use crate::seq::pagerank_sequential;

    fn cfg(p: usize) -> RunConfig<f64> {
        RunConfig::new(Variant::NoSync, p)
    }

    fn ring_with_chords(n: u32) -> CsrGraph {
        let mut edges: Vec<(u32, u32)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        edges.extend((0..n).step_by(3).map(|u| (u, (u * 7 + 2) % n)));
        CsrGraph::from_edges(&edges)
    }

    #[test]
    fn two_cycle_two_threads() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let r = pagerank_nosync(&g, &cfg(2)).unwrap();
        assert!(l1_norm(&r.ranks, &[0.5, 0.5]).unwrap() <= 1e-15);
        let e = pagerank_nosync_edge(&g, &cfg(1)).unwrap();
        assert_eq!(e.ranks, vec![0.5, 0.5]);
    }

    #[test]
    fn single_thread_is_gauss_seidel() {
        let g = ring_with_chords(200);
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        let a = pagerank_nosync(&g, &cfg(1)).unwrap();
        let b = pagerank_nosync(&g, &cfg(1)).unwrap();
        assert_eq!(a.ranks, b.ranks);
        assert_eq!(a.per_thread_iterations, b.per_thread_iterations);
        assert!(l1_norm(&a.ranks, &seq.ranks).unwrap() <= 1e-10);
        // In-place updates converge in no more sweeps than Jacobi.
        assert!(a.iters_max() <= seq.iters_max());
    }

    #[test]
    fn multi_thread_fixed_point() {
        let g = ring_with_chords(500);
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        for p in [2, 4, 8] {
            let r = pagerank_nosync(&g, &cfg(p)).unwrap();
            assert!(r.converged());
            assert!(max_residual(&g, &r.ranks, 0.85) <= 1e-15);
            assert!(l1_norm(&r.ranks, &seq.ranks).unwrap() <= 1e-10);
            let lo = 0.15 / 500.0;
            assert!(r.ranks.iter().all(|&x| x >= lo * (1.0 - 1e-12) && x <= 1.0));
        }
    }

    #[test]
    fn edge_variant_seeds_contributions() {
        // Without seeding, the first gather would see zeros and the first
        // sweep error would be |1/n - base|, not the true first-step change.
        let g = ring_with_chords(30);
        let r = pagerank_nosync_edge(&g, &cfg(1).with_max_iters(1)).unwrap();
        let seq = pagerank_sequential(&g, &cfg(1).with_max_iters(1)).unwrap();
        assert_eq!(r.ranks, seq.ranks);
    }

    #[test]
    fn perforated_and_identical() {
        let g = ring_with_chords(300);
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        let opt = pagerank_nosync_opt(&g, &cfg(3)).unwrap();
        assert!(l1_norm(&opt.ranks, &seq.ranks).unwrap() <= 1e-8);
        let ident = pagerank_nosync(&g, &cfg(3).with_identical(true)).unwrap();
        assert!(l1_norm(&ident.ranks, &seq.ranks).unwrap() <= 1e-10);
    }
}
