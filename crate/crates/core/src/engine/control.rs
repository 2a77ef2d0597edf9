use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::fault::FaultPlan;

/// Why a worker left its loop early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// The fault plan stopped this worker.
    Killed,
    /// The run was abandoned (watchdog expiry).
    Aborted,
}

/// Per-run coordination shared by the harness and every worker: fault
/// injection points, the watchdog, and per-iteration timing.
pub struct RunControl {
    plan: FaultPlan,
    start: Instant,
    deadline: Option<Instant>,
    abort: AtomicBool,
    timed_out: AtomicBool,
    recorder: Option<usize>,
    marks: Mutex<Vec<Duration>>,
}

impl RunControl {
    pub fn new(plan: FaultPlan, watchdog: Option<Duration>, threads: usize) -> Self {
        let start = Instant::now();
        let recorder = (0..threads).find(|&t| plan.kill_after(t).is_none());
        RunControl {
            plan,
            start,
            deadline: watchdog.map(|w| start + w),
            abort: AtomicBool::new(false),
            timed_out: AtomicBool::new(false),
            recorder,
            marks: Mutex::new(Vec::new()),
        }
    }

    /// No faults, no watchdog.
    pub fn unrestricted(threads: usize) -> Self {
        Self::new(FaultPlan::default(), None, threads)
    }

    pub fn plan(&self) -> &FaultPlan {
        &self.plan
    }

    #[inline]
    pub fn aborted(&self) -> bool {
        self.abort.load(Ordering::Relaxed)
    }

    pub fn timed_out(&self) -> bool {
        self.timed_out.load(Ordering::Relaxed)
    }

    pub fn abort(&self) {
        self.abort.store(true, Ordering::Relaxed);
    }

    /// Checks the watchdog; returns true once the run must stop.
    pub fn expired(&self) -> bool {
        if self.aborted() {
            return true;
        }
        match self.deadline {
            Some(d) if Instant::now() >= d => {
                self.timed_out.store(true, Ordering::Relaxed);
                self.abort();
                true
            }
            _ => false,
        }
    }

    /// Called by worker `t` before it starts iteration `iteration` (1-based).
    /// Applies scheduled sleeps and kills.
    pub fn begin_iteration(&self, t: usize, iteration: u64) -> Result<(), Halt> {
        if self.expired() {
            return Err(Halt::Aborted);
        }
        if self.plan.kill_after(t).is_some_and(|last| iteration > last) {
            return Err(Halt::Killed);
        }
        let nap = self.plan.sleep_for(t, iteration);
        if !nap.is_zero() {
            self.sleep_watchfully(nap)?;
        }
        Ok(())
    }

    fn sleep_watchfully(&self, nap: Duration) -> Result<(), Halt> {
        let until = Instant::now() + nap;
        loop {
            let now = Instant::now();
            if now >= until {
                return Ok(());
            }
            std::thread::sleep((until - now).min(Duration::from_millis(10)));
            if self.expired() {
                return Err(Halt::Aborted);
            }
        }
    }

    /// Called by worker `t` after finishing an iteration.
    pub fn end_iteration(&self, t: usize) {
        if self.recorder == Some(t) {
            self.marks.lock().unwrap().push(self.start.elapsed());
        }
    }

    /// Wall time of each iteration seen by the recording worker (the
    /// lowest-numbered worker that the plan does not kill).
    pub fn iteration_times(&self) -> Vec<Duration> {
        let marks = self.marks.lock().unwrap();
        let mut prev = Duration::ZERO;
        marks
            .iter()
            .map(|&m| {
                let d = m.saturating_sub(prev);
                prev = m;
                d
            })
            .collect()
    }
}

/// Reusable rendezvous for a fixed team that gives up when the run is
/// aborted instead of blocking forever.
pub struct PhaseBarrier {
    parties: usize,
    state: Mutex<(usize, u64)>,
    cv: Condvar,
}

impl PhaseBarrier {
    pub fn new(parties: usize) -> Self {
        PhaseBarrier {
            parties,
            state: Mutex::new((0, 0)),
            cv: Condvar::new(),
        }
    }

    /// Blocks until all parties arrive. No party returns `Ok` before every
    /// party has called `wait` for this generation.
    pub fn wait(&self, ctl: &RunControl) -> Result<(), Halt> {
        let mut st = self.state.lock().unwrap();
        let gen = st.1;
        st.0 += 1;
        if st.0 == self.parties {
            st.0 = 0;
            st.1 += 1;
            self.cv.notify_all();
            return Ok(());
        }
        loop {
            let (guard, _) = self.cv.wait_timeout(st, Duration::from_millis(5)).unwrap();
            st = guard;
            if st.1 != gen {
                return Ok(());
            }
            if ctl.expired() {
                self.cv.notify_all();
                return Err(Halt::Aborted);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::FaultPlan;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn barrier_separates_phases() {
        let p = 4;
        let ctl = RunControl::unrestricted(p);
        let barrier = PhaseBarrier::new(p);
        let arrived = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..p {
                s.spawn(|| {
                    for round in 1..=20 {
                        arrived.fetch_add(1, Ordering::SeqCst);
                        barrier.wait(&ctl).unwrap();
                        assert!(arrived.load(Ordering::SeqCst) >= round * p);
                        barrier.wait(&ctl).unwrap();
                    }
                });
            }
        });
        assert_eq!(arrived.load(Ordering::SeqCst), 20 * p);
    }

    #[test]
    fn barrier_gives_up_on_watchdog() {
        let ctl = RunControl::new(FaultPlan::default(), Some(Duration::from_millis(50)), 2);
        let barrier = PhaseBarrier::new(2);
        let t0 = Instant::now();
        assert_eq!(barrier.wait(&ctl), Err(Halt::Aborted));
        assert!(ctl.timed_out());
        assert!(t0.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn kill_and_sleep_points() {
        let plan = FaultPlan::default().kill(1, 2).sleep(0, 3, 20);
        let ctl = RunControl::new(plan, None, 2);
        assert!(ctl.begin_iteration(1, 2).is_ok());
        assert_eq!(ctl.begin_iteration(1, 3), Err(Halt::Killed));
        let t0 = Instant::now();
        ctl.begin_iteration(0, 3).unwrap();
        assert!(t0.elapsed() >= Duration::from_millis(20));
        ctl.end_iteration(0);
        ctl.end_iteration(1);
        assert_eq!(ctl.iteration_times().len(), 1);
    }
}
