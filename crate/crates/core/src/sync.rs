//! Barrier-synchronized engines.
//!
//! Every iteration is split into phases separated by a team-wide barrier, so
//! all threads always work on the same iteration and the ranks of iteration
//! `i` are a pure function of those of iteration `i − 1`. With the shared
//! update kernel this makes every engine here bit-identical to
//! [`pagerank_sequential`](crate::seq::pagerank_sequential).

use std::time::Instant;

use crate::engine::{
    enter_worker, kernel, partition_static, EngineError, Halt, Outcome, PhaseBarrier, RankState,
    RunConfig, RunControl, RunReport, ThreadErrorTable, Variant,
};
use crate::graph::{detect_identical, CsrGraph, IdenticalClasses};
use crate::scalar::{AtomicVec, Scalar};

/// Two-phase vertex-centric engine. Honors `cfg.perforation` and
/// `cfg.identical`.
pub fn pagerank_barrier<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    barrier_vertex(
        g,
        cfg,
        cfg.perforation,
        &RunControl::unrestricted(cfg.threads),
    )
}

/// [`pagerank_barrier`] with loop perforation forced on.
pub fn pagerank_barrier_opt<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    barrier_vertex(g, cfg, true, &RunControl::unrestricted(cfg.threads))
}

/// Three-phase edge-centric engine: scatter contributions, gather, reduce.
pub fn pagerank_barrier_edge<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    barrier_edge(g, cfg, &RunControl::unrestricted(cfg.threads))
}

/// Per-worker result collected at join time.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WorkerExit<T> {
    pub iterations: u64,
    pub updates: u64,
    pub halt: Option<Halt>,
    pub converged: bool,
    pub error: T,
}

/// Folds worker exits into a run outcome.
pub(crate) fn outcome_of<T>(exits: &[WorkerExit<T>], ctl: &RunControl) -> Outcome {
    if ctl.timed_out() || exits.iter().any(|e| e.halt == Some(Halt::Aborted)) {
        return Outcome::Timeout;
    }
    let survivors: Vec<_> = exits.iter().filter(|e| e.halt.is_none()).collect();
    if survivors.is_empty() {
        Outcome::Timeout
    } else if survivors.iter().all(|e| e.converged) {
        Outcome::Converged
    } else {
        Outcome::MaxIters
    }
}

pub(crate) fn barrier_vertex<T: Scalar>(
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
    let state = RankState::<T>::double_buffered(n);
    let table = ThreadErrorTable::new(p, n, T::infinity());
    let barrier = PhaseBarrier::new(p);
    let base = cfg.base(n);
    let freeze_below = cfg.freeze_below();

    let start = Instant::now();
    let exits: Vec<WorkerExit<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let (part, classes, state, table, barrier) =
                    (&part, &classes, &state, &table, &barrier);
                s.spawn(move || {
                    let _me = enter_worker(t);
                    let range = part.range(t);
                    let (prev, curr) = (state.prev(), &state.curr);
                    let mut exit = WorkerExit::<T>::default();
                    loop {
                        if let Err(h) = ctl.begin_iteration(t, exit.iterations + 1) {
                            exit.halt = Some(h);
                            break;
                        }
                        // Phase I: compute this partition from the previous ranks.
                        let mut local = T::zero();
                        for u in range.clone() {
                            if skip_vertex(classes, u) || (perforate && table.is_frozen(u)) {
                                continue;
                            }
                            let pr = kernel::pull(g, u, base, cfg.damping, |v| prev.get(v));
                            curr.set(u, pr);
                            let delta = (prev.get(u) - pr).abs();
                            local = local.max(delta);
                            exit.updates += 1;
                            if perforate && kernel::should_freeze(delta, freeze_below) {
                                table.freeze(u);
                            }
                        }
                        table.set_error(t, local);
                        if let Err(h) = barrier.wait(ctl) {
                            exit.halt = Some(h);
                            break;
                        }

                        // Phase II: global error, then prev <- curr over this partition.
                        let err = table.max_error();
                        for u in range.clone() {
                            if let Some(c) = classes {
                                if !c.is_representative(u) {
                                    curr.set(u, curr.get(c.representative(u)));
                                }
                            }
                            prev.set(u, curr.get(u));
                        }
                        exit.iterations = table.count_iteration(t);
                        ctl.end_iteration(t);
                        exit.error = err;
                        if let Err(h) = barrier.wait(ctl) {
                            exit.halt = Some(h);
                            break;
                        }
                        if err <= cfg.threshold {
                            exit.converged = true;
                            break;
                        }
                        if exit.iterations >= cfg.max_iters {
                            break;
                        }
                    }
                    exit
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("barrier worker panicked"))
            .collect()
    });
    let wall_time = start.elapsed();

    let variant = if perforate {
        Variant::BarrierOpt
    } else {
        Variant::Barrier
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

#[inline]
fn skip_vertex(classes: &Option<IdenticalClasses>, u: usize) -> bool {
    classes.as_ref().is_some_and(|c| !c.is_representative(u))
}

pub(crate) fn barrier_edge<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    ctl: &RunControl,
) -> Result<RunReport<T>, EngineError> {
    cfg.validate()?;
    let n = g.n();
    let p = cfg.threads;
    let part = partition_static(n, p)?;
    let state = RankState::<T>::double_buffered(n);
    let table = ThreadErrorTable::new(p, n, T::infinity());
    let contributions = AtomicVec::<T>::filled(g.m(), T::zero());
    let global_err = AtomicVec::<T>::filled(1, T::infinity());
    let barrier = PhaseBarrier::new(p);
    let base = cfg.base(n);
    let offsets = g.offset_list();

    let start = Instant::now();
    let exits: Vec<WorkerExit<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let (part, state, table, barrier, contributions, global_err) =
                    (&part, &state, &table, &barrier, &contributions, &global_err);
                s.spawn(move || {
                    let _me = enter_worker(t);
                    let range = part.range(t);
                    let (prev, curr) = (state.prev(), &state.curr);
                    let mut exit = WorkerExit::<T>::default();
                    let phase = |exit: &mut WorkerExit<T>| match barrier.wait(ctl) {
                        Ok(()) => true,
                        Err(h) => {
                            exit.halt = Some(h);
                            false
                        }
                    };
                    loop {
                        if let Err(h) = ctl.begin_iteration(t, exit.iterations + 1) {
                            exit.halt = Some(h);
                            break;
                        }
                        // Phase I: scatter; dangling vertices write nothing.
                        for u in range.clone() {
                            let deg = g.out_degree(u);
                            if deg == 0 {
                                continue;
                            }
                            let c = kernel::contribution(prev.get(u), deg);
                            for k in g.out_slots(u) {
                                contributions.set(offsets[k], c);
                            }
                        }
                        if !phase(&mut exit) {
                            break;
                        }

                        // Phase II: gather.
                        let mut local = T::zero();
                        for u in range.clone() {
                            let pr =
                                kernel::gather(g, u, base, cfg.damping, |s| contributions.get(s));
                            curr.set(u, pr);
                            local = local.max((prev.get(u) - pr).abs());
                            exit.updates += 1;
                        }
                        table.set_error(t, local);
                        if !phase(&mut exit) {
                            break;
                        }

                        // Phase III: thread 0 reduces the error and rolls the buffers.
                        if t == 0 {
                            global_err.set(0, table.max_error());
                            for u in 0..n {
                                prev.set(u, curr.get(u));
                            }
                        }
                        exit.iterations = table.count_iteration(t);
                        ctl.end_iteration(t);
                        if !phase(&mut exit) {
                            break;
                        }
                        exit.error = global_err.get(0);
                        if exit.error <= cfg.threshold {
                            exit.converged = true;
                            break;
                        }
                        if exit.iterations >= cfg.max_iters {
                            break;
                        }
                    }
                    exit
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("barrier-edge worker panicked"))
            .collect()
    });
    let wall_time = start.elapsed();
    Ok(assemble(
        Variant::BarrierEdge,
        cfg,
        &exits,
        state.curr.snapshot(),
        wall_time,
        ctl,
        0,
    ))
}

pub(crate) fn assemble<T: Scalar>(
    variant: Variant,
    cfg: &RunConfig<T>,
    exits: &[WorkerExit<T>],
    ranks: Vec<T>,
    wall_time: std::time::Duration,
    ctl: &RunControl,
    frozen_vertices: usize,
) -> RunReport<T> {
    RunReport {
        variant,
        threads: cfg.threads,
        identical: cfg.identical,
        wall_time,
        per_thread_iterations: exits.iter().map(|e| e.iterations).collect(),
        final_error: exits.iter().map(|e| e.error).fold(T::zero(), T::max),
        ranks,
        l1_vs_oracle: None,
        outcome: outcome_of(exits, ctl),
        vertex_updates: exits.iter().map(|e| e.updates).sum(),
        iteration_times: ctl.iteration_times(),
        installs_per_iteration: None,
        frozen_vertices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::l1_norm;
    use crate::seq::pagerank_sequential;

    fn cfg(p: usize) -> RunConfig<f64> {
        RunConfig::new(Variant::Barrier, p)
    }

    #[test]
    fn two_cycle() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        for run in [
            pagerank_barrier::<f64>,
            pagerank_barrier_edge,
            pagerank_barrier_opt,
        ] {
            let r = run(&g, &cfg(2)).unwrap();
            assert_eq!(r.ranks, vec![0.5, 0.5]);
            assert_eq!(r.iters_min(), r.iters_max());
            assert!(r.converged());
        }
    }

    #[test]
    fn single_thread_equals_sequential() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 2), (2, 0), (2, 3), (3, 0), (1, 3)]);
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        let bar = pagerank_barrier(&g, &cfg(1)).unwrap();
        assert_eq!(seq.ranks, bar.ranks);
        assert_eq!(seq.per_thread_iterations, bar.per_thread_iterations);
    }

    #[test]
    fn dangling_vertex_never_scatters() {
        // 2 is dangling; 0 and 1 form a cycle that also feeds 2.
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0), (0, 2)]);
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        let edge = pagerank_barrier_edge(&g, &cfg(3)).unwrap();
        assert_eq!(seq.ranks, edge.ranks);
        // Rank mass leaks through the dangling vertex.
        assert!(edge.ranks.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn identical_classes_copy_representative() {
        let g = CsrGraph::from_edges(&[(0, 2), (0, 3), (2, 0), (3, 1), (1, 0)]);
        for k in 1..=6 {
            let r = pagerank_barrier(&g, &cfg(2).with_identical(true).with_max_iters(k)).unwrap();
            assert_eq!(r.ranks[2].to_bits(), r.ranks[3].to_bits(), "iteration {k}");
            let base = pagerank_barrier(&g, &cfg(2).with_max_iters(k)).unwrap();
            assert_eq!(r.ranks, base.ranks);
        }
    }

    #[test]
    fn perforation_freezes_monotonically() {
        let g = CsrGraph::from_edges(&[
            (0, 1),
            (1, 2),
            (2, 0),
            (2, 3),
            (3, 0),
            (1, 3),
            (3, 4),
            (4, 2),
        ]);
        let mut frozen_prev = 0;
        let mut ranks_prev: Option<Vec<f64>> = None;
        let full = pagerank_barrier_opt(&g, &cfg(2)).unwrap();
        for k in 1..=full.iters_max() {
            let r = pagerank_barrier_opt(&g, &cfg(2).with_max_iters(k)).unwrap();
            assert!(r.frozen_vertices >= frozen_prev);
            frozen_prev = r.frozen_vertices;
            ranks_prev = Some(r.ranks);
        }
        let seq = pagerank_sequential(&g, &cfg(1)).unwrap();
        assert!(l1_norm(&ranks_prev.unwrap(), &seq.ranks).unwrap() <= 1e-12);
    }
}
