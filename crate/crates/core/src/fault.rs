//! Deterministic fault injection: sleeping and failing workers.
//!
//! Faults fire at iteration boundaries. A sleep delays a worker before it
//! starts the given iteration; a kill makes the worker stop for good once it
//! has finished the given iteration, leaving everything it published in
//! place. Runs that can no longer finish are ended by the watchdog.

use std::str::FromStr;
use std::time::Duration;

use crate::engine::{EngineError, RunConfig, RunControl, RunReport, Variant};
use crate::graph::CsrGraph;
use crate::run::run_with_control;
use crate::scalar::Scalar;

/// Watchdog applied to fault runs that did not configure one.
pub const DEFAULT_FAULT_WATCHDOG: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SleepFault {
    pub thread: usize,
    pub iteration: u64,
    pub millis: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KillFault {
    pub thread: usize,
    /// Last iteration the thread completes.
    pub after_iteration: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPlan {
    pub sleeps: Vec<SleepFault>,
    pub kills: Vec<KillFault>,
}

impl FaultPlan {
    pub fn sleep(mut self, thread: usize, iteration: u64, millis: u64) -> Self {
        self.sleeps.push(SleepFault {
            thread,
            iteration,
            millis,
        });
        self
    }

    /// Sleeps `millis` before each of iterations `1..=iterations`.
    pub fn sleep_each(mut self, thread: usize, iterations: u64, millis: u64) -> Self {
        self.sleeps
            .extend((1..=iterations).map(|iteration| SleepFault {
                thread,
                iteration,
                millis,
            }));
        self
    }

    pub fn kill(mut self, thread: usize, after_iteration: u64) -> Self {
        self.kills.push(KillFault {
            thread,
            after_iteration,
        });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.sleeps.is_empty() && self.kills.is_empty()
    }

    /// Total sleep scheduled for `thread` before `iteration`.
    pub fn sleep_for(&self, thread: usize, iteration: u64) -> Duration {
        let ms = self
            .sleeps
            .iter()
            .filter(|s| s.thread == thread && s.iteration == iteration)
            .map(|s| s.millis)
            .sum();
        Duration::from_millis(ms)
    }

    /// Earliest kill point of `thread`, if any.
    pub fn kill_after(&self, thread: usize) -> Option<u64> {
        self.kills
            .iter()
            .filter(|k| k.thread == thread)
            .map(|k| k.after_iteration)
            .min()
    }

    pub fn validate(&self, threads: usize) -> Result<(), EngineError> {
        let bad = self
            .sleeps
            .iter()
            .map(|s| s.thread)
            .chain(self.kills.iter().map(|k| k.thread))
            .find(|&t| t >= threads);
        match bad {
            Some(t) => Err(EngineError::InvalidConfig(format!(
                "fault targets thread {t} but only {threads} threads run"
            ))),
            None => Ok(()),
        }
    }

    /// Parses a `tid:iter:ms` sleep flag.
    pub fn parse_sleep(spec: &str) -> Result<SleepFault, EngineError> {
        let parts = split_fields(spec, 3)?;
        Ok(SleepFault {
            thread: parts[0] as usize,
            iteration: parts[1],
            millis: parts[2],
        })
    }

    /// Parses a `tid:iter` kill flag.
    pub fn parse_kill(spec: &str) -> Result<KillFault, EngineError> {
        let parts = split_fields(spec, 2)?;
        Ok(KillFault {
            thread: parts[0] as usize,
            after_iteration: parts[1],
        })
    }
}

fn split_fields(spec: &str, count: usize) -> Result<Vec<u64>, EngineError> {
    let fields: Vec<&str> = spec.split(':').collect();
    if fields.len() != count {
        return Err(EngineError::InvalidConfig(format!(
            "expected {count} ':'-separated fields in {spec:?}"
        )));
    }
    fields
        .iter()
        .map(|f| {
            u64::from_str(f.trim()).map_err(|e| {
                EngineError::InvalidConfig(format!("bad field {f:?} in {spec:?}: {e}"))
            })
        })
        .collect()
}

/// Runs `variant` under `plan`. The report's `iteration_times` holds the
/// per-iteration wall times. Without a configured watchdog,
/// [`DEFAULT_FAULT_WATCHDOG`] applies.
pub fn run_with_faults<T: Scalar>(
    variant: Variant,
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    plan: &FaultPlan,
) -> Result<RunReport<T>, EngineError> {
    plan.validate(cfg.threads)?;
    let cfg = RunConfig {
        variant,
        ..cfg.clone()
    };
    let ctl = RunControl::new(
        plan.clone(),
        Some(cfg.watchdog.unwrap_or(DEFAULT_FAULT_WATCHDOG)),
        cfg.threads,
    );
    run_with_control(g, &cfg, &ctl)
}

/// Median of a sample of durations.
pub fn median(mut samples: Vec<Duration>) -> Duration {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2
    }
}

/// Runs the same faulted configuration `repeats` times and returns every
/// report together with the median wall time.
pub fn timed_repeats<T: Scalar>(
    variant: Variant,
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    plan: &FaultPlan,
    repeats: usize,
) -> Result<(Vec<RunReport<T>>, Duration), EngineError> {
    let reports = (0..repeats.max(1))
        .map(|_| run_with_faults(variant, g, cfg, plan))
        .collect::<Result<Vec<_>, _>>()?;
    let med = median(reports.iter().map(|r| r.wall_time).collect());
    Ok((reports, med))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Outcome;

    #[test]
    fn parse_flags() {
        assert_eq!(
            FaultPlan::parse_sleep("2:5:100").unwrap(),
            SleepFault {
                thread: 2,
                iteration: 5,
                millis: 100
            }
        );
        assert_eq!(
            FaultPlan::parse_kill("1:1").unwrap(),
            KillFault {
                thread: 1,
                after_iteration: 1
            }
        );
        assert!(FaultPlan::parse_sleep("2:5").is_err());
        assert!(FaultPlan::parse_kill("a:1").is_err());
    }

    #[test]
    fn plan_queries() {
        let plan = FaultPlan::default()
            .sleep_each(1, 3, 10)
            .sleep(1, 2, 5)
            .kill(0, 4)
            .kill(0, 2);
        assert_eq!(plan.sleep_for(1, 2), Duration::from_millis(15));
        assert_eq!(plan.sleep_for(1, 4), Duration::ZERO);
        assert_eq!(plan.kill_after(0), Some(2));
        assert_eq!(plan.kill_after(1), None);
        assert!(plan.validate(2).is_ok());
        assert!(plan.validate(1).is_err());
    }

    #[test]
    fn median_odd_even() {
        let ms = Duration::from_millis;
        assert_eq!(median(vec![ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(
            median(vec![ms(4), ms(1), ms(2), ms(3)]),
            Duration::from_micros(2500)
        );
    }

    #[test]
    fn barrier_sleep_lower_bound() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 2), (2, 0), (0, 2), (2, 3), (3, 1)]);
        let cfg = RunConfig::<f64>::new(Variant::Barrier, 2).with_threshold(1e-12);
        let plan = FaultPlan::default().sleep_each(1, 3, 20);
        let r = run_with_faults(Variant::Barrier, &g, &cfg, &plan).unwrap();
        assert!(
            r.converged(),
            "{:?} {:?} {}",
            r.outcome,
            r.final_error,
            r.iters_max()
        );
        assert!(r.wall_time >= Duration::from_millis(60));
        assert_eq!(r.iteration_times.len() as u64, r.iters_max());
        assert!(r.iteration_times[..3]
            .iter()
            .all(|&d| d >= Duration::from_millis(19)));
    }

    #[test]
    fn killing_every_barrier_thread_times_out() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let cfg =
            RunConfig::<f64>::new(Variant::Barrier, 2).with_watchdog(Duration::from_millis(200));
        let plan = FaultPlan::default().kill(0, 0).kill(1, 0);
        let r = run_with_faults(Variant::Barrier, &g, &cfg, &plan).unwrap();
        assert_eq!(r.outcome, Outcome::Timeout);
    }

    #[test]
    fn rejects_out_of_range_thread() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let cfg = RunConfig::<f64>::new(Variant::Barrier, 2);
        assert!(
            run_with_faults(Variant::Barrier, &g, &cfg, &FaultPlan::default().kill(2, 1)).is_err()
        );
    }
}
