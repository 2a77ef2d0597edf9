//! Wait-free engine built on helping.
//!
//! Iterations are still globally ordered, as with the barrier engine, but no
//! thread ever waits for another. A thread that finishes its own partition
//! goes on to finish every other partition that is still incomplete and to
//! merge every missing error, so an iteration completes as long as any
//! single thread keeps running.
//!
//! All shared state lives in [`VersionedCell`]s tagged with the iteration
//! they belong to:
//!
//! * rank cells, two arrays used alternately: iteration `k` reads the array
//!   `(k − 1) % 2` and installs into `k % 2`, replacing a record whose tag
//!   is below `k`;
//! * one [`ThreadProgress`] per partition (cursor and running error);
//! * a single [`GlobalProgress`] with the per-partition merge flags.
//!
//! Several helpers may compute the same vertex; they produce the same value
//! and exactly one install succeeds.

mod cell;

use std::time::Instant;

use crate::engine::{
    kernel, partition_static, uniform, EngineError, Halt, Partition, RunConfig, RunControl,
    RunReport, Variant,
};
use crate::graph::CsrGraph;
use crate::scalar::Scalar;
use crate::sync::{outcome_of, WorkerExit};

pub use cell::{Snapshot, VersionedCell};

/// A rank tagged with the iteration that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VersionedRank<T> {
    pub itr: u64,
    pub rank: T,
}

/// Progress of one partition within an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreadProgress<T> {
    pub itr: u64,
    /// Next vertex of the partition to compute.
    pub cursor: usize,
    /// Largest change seen in the partition so far this iteration.
    pub err: T,
}

/// Iteration-wide state.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalProgress<T> {
    /// Iteration currently being computed (1-based).
    pub itr: u64,
    /// Maximum error merged so far for `itr`.
    pub err: T,
    /// `check[t]`: partition `t`'s error has been merged for `itr`.
    pub check: Vec<bool>,
    /// Set by the merge that completes `check`; the iteration may advance.
    pub intermediate: bool,
    /// Final error of iteration `itr − 1`.
    pub last_err: T,
}

/// Shared state of one wait-free run.
pub struct WaitFreeState<'a, T: Scalar> {
    g: &'a CsrGraph,
    part: Partition,
    base: T,
    damping: T,
    ranks: [Vec<VersionedCell<VersionedRank<T>>>; 2],
    progress: Vec<VersionedCell<ThreadProgress<T>>>,
    global: VersionedCell<GlobalProgress<T>>,
    ctl: &'a RunControl,
}

/// Per-worker tallies.
#[derive(Debug, Default, Clone)]
pub struct HelperStats {
    /// Successful rank installs, indexed by iteration.
    pub installs: Vec<u64>,
    /// Vertex computations, successful or not.
    pub computed: u64,
}

impl HelperStats {
    fn record_install(&mut self, itr: u64) {
        let i = itr as usize;
        if self.installs.len() <= i {
            self.installs.resize(i + 1, 0);
        }
        self.installs[i] += 1;
    }
}

impl<'a, T: Scalar> WaitFreeState<'a, T> {
    pub fn new(
        g: &'a CsrGraph,
        cfg: &RunConfig<T>,
        ctl: &'a RunControl,
    ) -> Result<Self, EngineError> {
        let n = g.n();
        let p = cfg.threads;
        let part = partition_static(n, p)?;
        let init = uniform::<T>(n);
        let ranks = [
            (0..n)
                .map(|_| VersionedCell::new(VersionedRank { itr: 0, rank: init }))
                .collect(),
            (0..n)
                .map(|_| {
                    VersionedCell::new(VersionedRank {
                        itr: 0,
                        rank: T::zero(),
                    })
                })
                .collect(),
        ];
        let progress = (0..p)
            .map(|t| {
                VersionedCell::new(ThreadProgress {
                    itr: 1,
                    cursor: part.range(t).start,
                    err: T::zero(),
                })
            })
            .collect();
        let global = VersionedCell::new(GlobalProgress {
            itr: 1,
            err: T::zero(),
            check: vec![false; p],
            intermediate: false,
            last_err: T::infinity(),
        });
        Ok(WaitFreeState {
            g,
            part,
            base: cfg.base(n),
            damping: cfg.damping,
            ranks,
            progress,
            global,
            ctl,
        })
    }

    pub fn global(&self) -> Snapshot<'_, GlobalProgress<T>> {
        self.global.load()
    }

    pub fn progress(&self, t: usize) -> ThreadProgress<T> {
        *self.progress[t].load()
    }

    pub fn partition(&self) -> &Partition {
        &self.part
    }

    /// Rank cell of `u` in the array written by iteration `itr`.
    pub fn rank_cell(&self, itr: u64, u: usize) -> VersionedRank<T> {
        *self.ranks[(itr % 2) as usize][u].load()
    }

    /// Installs `value` as `u`'s rank for iteration `itr` unless a value for
    /// `itr` (or later) is already there. Returns whether this call's install
    /// was the one that took effect.
    pub fn update_page_rank(&self, u: usize, value: T, itr: u64) -> bool {
        let cell = &self.ranks[(itr % 2) as usize][u];
        let snap = cell.load();
        if snap.itr >= itr {
            return false;
        }
        debug_assert!(itr >= 1 && snap.itr < itr, "rank tags must increase");
        // A failed swap means another helper just installed the same
        // iteration; nothing is left to do.
        cell.replace_if_unchanged(snap, VersionedRank { itr, rank: value })
            .is_ok()
    }

    /// Computes `owner`'s partition for iteration `itr` from its published
    /// cursor until the partition is exhausted or the iteration moves on.
    pub fn compute_pr(&self, owner: usize, itr: u64, stats: &mut HelperStats) {
        let end = self.part.range(owner).end;
        let prev = &self.ranks[((itr - 1) % 2) as usize];
        loop {
            if self.ctl.aborted() || self.global.load().itr != itr {
                return;
            }
            let tp = self.progress[owner].load();
            if tp.itr != itr || tp.cursor >= end {
                return;
            }
            let u = tp.cursor;
            let pr = kernel::pull(self.g, u, self.base, self.damping, |v| prev[v].load().rank);
            let delta = (pr - prev[u].load().rank).abs();
            stats.computed += 1;
            if self.update_page_rank(u, pr, itr) {
                stats.record_install(itr);
            }
            let next = ThreadProgress {
                itr,
                cursor: u + 1,
                err: tp.err.max(delta),
            };
            // Losing this race means a helper already moved the cursor.
            let _ = self.progress[owner].replace_if_unchanged(tp, next);
        }
    }

    pub fn partition_complete(&self, owner: usize, itr: u64) -> bool {
        let tp = self.progress[owner].load();
        tp.itr != itr || tp.cursor >= self.part.range(owner).end
    }

    /// Merges `owner`'s partition error into the global record for `itr`,
    /// sets its check flag, then moves `owner`'s progress to `itr + 1`.
    /// Returns false, doing nothing, if the partition is not complete yet.
    pub fn update_global_variable(&self, owner: usize, itr: u64) -> bool {
        let range = self.part.range(owner);
        loop {
            let g = self.global.load();
            if g.itr != itr || g.check[owner] {
                break;
            }
            let tp = self.progress[owner].load();
            if tp.itr != itr {
                // Merged and advanced by a helper since `g` was read.
                continue;
            }
            if tp.cursor < range.end {
                return false;
            }
            let mut merged = (*g).clone();
            merged.check[owner] = true;
            merged.err = merged.err.max(tp.err);
            merged.intermediate = merged.check.iter().all(|&c| c);
            if self.global.replace_if_unchanged(g, merged).is_ok() {
                break;
            }
        }
        loop {
            let tp = self.progress[owner].load();
            if tp.itr != itr {
                break;
            }
            let next = ThreadProgress {
                itr: itr + 1,
                cursor: range.start,
                err: T::zero(),
            };
            if self.progress[owner].replace_if_unchanged(tp, next).is_ok() {
                break;
            }
        }
        true
    }

    /// Moves the global record to `itr + 1` once every partition is merged.
    /// The new record carries the finished iteration's error and fresh flags.
    pub fn try_advance(&self, itr: u64) -> bool {
        loop {
            let g = self.global.load();
            if g.itr != itr || !g.intermediate {
                return false;
            }
            let next = GlobalProgress {
                itr: itr + 1,
                err: T::zero(),
                check: vec![false; g.check.len()],
                intermediate: false,
                last_err: g.err,
            };
            if self.global.replace_if_unchanged(g, next).is_ok() {
                return true;
            }
        }
    }

    /// One full iteration from worker `t`'s point of view: own partition,
    /// then everybody else's leftovers, then all merges and the advance.
    pub fn run_iteration(&self, t: usize, itr: u64, stats: &mut HelperStats) {
        let p = self.part.parts();
        self.compute_pr(t, itr, stats);
        for other in (0..p).filter(|&o| o != t) {
            if !self.partition_complete(other, itr) {
                self.compute_pr(other, itr, stats);
            }
        }
        self.update_global_variable(t, itr);
        for other in (0..p).filter(|&o| o != t) {
            if !self.global.load().check[other] {
                self.update_global_variable(other, itr);
            }
        }
        self.try_advance(itr);
    }

    /// Ranks of the last completed iteration.
    pub fn final_ranks(&self) -> Vec<T> {
        let done = self.global.load().itr - 1;
        let cells = &self.ranks[(done % 2) as usize];
        cells
            .iter()
            .map(|c| {
                let r = c.load();
                debug_assert!(r.itr == done, "incomplete iteration {done}");
                r.rank
            })
            .collect()
    }
}

pub fn pagerank_waitfree<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    waitfree_with_control(g, cfg, &RunControl::unrestricted(cfg.threads))
}

pub(crate) fn waitfree_with_control<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    ctl: &RunControl,
) -> Result<RunReport<T>, EngineError> {
    cfg.validate()?;
    let state = WaitFreeState::new(g, cfg, ctl)?;
    let p = cfg.threads;

    let start = Instant::now();
    let results: Vec<(WorkerExit<T>, HelperStats)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let state = &state;
                s.spawn(move || {
                    let mut exit = WorkerExit::<T>::default();
                    let mut stats = HelperStats::default();
                    loop {
                        let (itr, last_err) = {
                            let g = state.global();
                            (g.itr, g.last_err)
                        };
                        if itr > 1 && last_err <= cfg.threshold {
                            exit.converged = true;
                            break;
                        }
                        if itr > cfg.max_iters {
                            break;
                        }
                        if let Err(h) = ctl.begin_iteration(t, itr) {
                            exit.halt = Some(h);
                            break;
                        }
                        state.run_iteration(t, itr, &mut stats);
                        exit.iterations += 1;
                        ctl.end_iteration(t);
                        if ctl.aborted() {
                            exit.halt = Some(Halt::Aborted);
                            break;
                        }
                    }
                    exit.updates = stats.computed;
                    (exit, stats)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("wait-free worker panicked"))
            .collect()
    });
    let wall_time = start.elapsed();

    let global = state.global();
    let completed = global.itr - 1;
    let final_error = if completed == 0 {
        T::infinity()
    } else {
        global.last_err
    };
    let mut installs = vec![0u64; completed as usize];
    for (_, stats) in &results {
        for (itr, &count) in stats.installs.iter().enumerate().skip(1) {
            if itr <= installs.len() {
                installs[itr - 1] += count;
            }
        }
    }
    let exits: Vec<WorkerExit<T>> = results.iter().map(|(e, _)| *e).collect();
    let ranks = if ctl.aborted() && completed == 0 {
        vec![T::zero(); g.n()]
    } else {
        state.final_ranks()
    };
    Ok(RunReport {
        variant: Variant::WaitFree,
        threads: p,
        identical: false,
        wall_time,
        per_thread_iterations: exits.iter().map(|e| e.iterations).collect(),
        final_error,
        ranks,
        l1_vs_oracle: None,
        outcome: outcome_of(&exits, ctl),
        vertex_updates: exits.iter().map(|e| e.updates).sum(),
        iteration_times: ctl.iteration_times(),
        installs_per_iteration: Some(installs),
        frozen_vertices: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::l1_norm;
    use crate::sync::pagerank_barrier;

    fn cfg(p: usize) -> RunConfig<f64> {
        RunConfig::new(Variant::WaitFree, p)
    }

    fn sample_graph() -> CsrGraph {
        let mut edges: Vec<(u32, u32)> = (0..40).map(|u| (u, (u + 1) % 40)).collect();
        edges.extend((0..40).step_by(4).map(|u| (u, (u * 5 + 3) % 40)));
        edges.push((7, 39));
        CsrGraph::from_edges(&edges)
    }

    #[test]
    fn install_with_current_and_stale_tags() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let c = cfg(1);
        let ctl = RunControl::unrestricted(1);
        let st = WaitFreeState::new(&g, &c, &ctl).unwrap();
        assert_eq!(st.rank_cell(1, 0), VersionedRank { itr: 0, rank: 0.0 });
        assert!(st.update_page_rank(0, 0.25, 1));
        assert_eq!(st.rank_cell(1, 0), VersionedRank { itr: 1, rank: 0.25 });
        // Second install for the same iteration is a no-op.
        assert!(!st.update_page_rank(0, 0.75, 1));
        assert_eq!(st.rank_cell(1, 0).rank, 0.25);
        // Iteration 3 writes the same array and replaces tag 1.
        assert!(st.update_page_rank(0, 0.5, 3));
        // A stale iteration-1 helper cannot overwrite it.
        assert!(!st.update_page_rank(0, 0.9, 1));
        assert_eq!(st.rank_cell(3, 0), VersionedRank { itr: 3, rank: 0.5 });
    }

    #[test]
    fn self_help_completes_own_range() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let c = cfg(2);
        let ctl = RunControl::unrestricted(2);
        let st = WaitFreeState::new(&g, &c, &ctl).unwrap();
        let mut stats = HelperStats::default();
        st.compute_pr(0, 1, &mut stats);
        assert_eq!(st.progress(0).cursor, 1);
        assert!(st.partition_complete(0, 1));
        assert!(!st.partition_complete(1, 1));
        assert_eq!(stats.installs, vec![0, 1]);
    }

    #[test]
    fn global_merge_and_advance() {
        let g = sample_graph();
        let c = cfg(3);
        let ctl = RunControl::unrestricted(3);
        let st = WaitFreeState::new(&g, &c, &ctl).unwrap();
        let mut stats = HelperStats::default();
        assert!(
            !st.update_global_variable(0, 1),
            "incomplete partition must not merge"
        );
        let mut errs = Vec::new();
        for t in 0..3 {
            st.compute_pr(t, 1, &mut stats);
            errs.push(st.progress(t).err);
        }
        assert!(!st.try_advance(1));
        for t in 0..3 {
            assert!(st.update_global_variable(t, 1));
            // Merging twice does not change anything.
            assert!(st.update_global_variable(t, 1));
        }
        let g1 = (*st.global()).clone();
        assert!(g1.intermediate && g1.check.iter().all(|&c| c));
        assert_eq!(g1.err, errs.iter().cloned().fold(0.0, f64::max));
        assert!(st.try_advance(1));
        assert!(!st.try_advance(1), "stale advance is a no-op");
        let g2 = st.global();
        assert_eq!((g2.itr, g2.last_err, g2.intermediate), (2, g1.err, false));
        assert!(g2.check.iter().all(|&c| !c));
        assert_eq!(stats.installs[1], g.n() as u64);
    }

    #[test]
    fn stalled_owner_finished_by_helper() {
        let g = sample_graph();
        let c = cfg(2);
        let ctl = RunControl::unrestricted(2);
        let st = WaitFreeState::new(&g, &c, &ctl).unwrap();
        let range = st.partition().range(0);
        // Owner computes three vertices by hand, then stalls.
        let mut owner = HelperStats::default();
        let prev: Vec<f64> = (0..g.n()).map(|u| st.rank_cell(0, u).rank).collect();
        for u in range.start..range.start + 3 {
            let pr = kernel::pull(&g, u, c.base(g.n()), 0.85, |v| prev[v]);
            assert!(st.update_page_rank(u, pr, 1));
            owner.record_install(1);
            let tp = st.progress[0].load();
            st.progress[0]
                .replace_if_unchanged(
                    tp,
                    ThreadProgress {
                        itr: 1,
                        cursor: u + 1,
                        err: 0.0,
                    },
                )
                .unwrap();
        }
        let mut helper = HelperStats::default();
        st.compute_pr(0, 1, &mut helper);
        assert_eq!(owner.installs[1] + helper.installs[1], range.len() as u64);
        assert!(range.clone().all(|u| st.rank_cell(1, u).itr == 1));
    }

    #[test]
    fn iteration_stops_when_global_moves() {
        let g = sample_graph();
        let c = cfg(1);
        let ctl = RunControl::unrestricted(1);
        let st = WaitFreeState::new(&g, &c, &ctl).unwrap();
        let mut stats = HelperStats::default();
        st.run_iteration(0, 1, &mut stats);
        assert_eq!(st.global().itr, 2);
        let before = stats.computed;
        st.compute_pr(0, 1, &mut stats);
        assert_eq!(stats.computed, before);
    }

    #[test]
    fn lockstep_with_barrier() {
        let g = sample_graph();
        for k in 1..=8 {
            let wf = pagerank_waitfree(&g, &cfg(2).with_max_iters(k)).unwrap();
            let bar = pagerank_barrier(&g, &cfg(2).with_max_iters(k)).unwrap();
            assert_eq!(wf.ranks, bar.ranks, "iteration {k}");
            assert_eq!(
                wf.installs_per_iteration.as_ref().unwrap(),
                &vec![g.n() as u64; k as usize]
            );
        }
        let wf = pagerank_waitfree(&g, &cfg(3)).unwrap();
        let bar = pagerank_barrier(&g, &cfg(3)).unwrap();
        assert!(wf.converged());
        assert_eq!(l1_norm(&wf.ranks, &bar.ranks).unwrap(), 0.0);
        assert_eq!(wf.final_error, bar.final_error);
    }
}
