use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::scalar::Scalar;

use super::EngineError;

/// Which engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sequential,
    Barrier,
    BarrierEdge,
    BarrierOpt,
    NoSync,
    NoSyncEdge,
    NoSyncOpt,
    WaitFree,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Sequential,
        Variant::Barrier,
        Variant::BarrierEdge,
        Variant::BarrierOpt,
        Variant::NoSync,
        Variant::NoSyncEdge,
        Variant::NoSyncOpt,
        Variant::WaitFree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sequential => "seq",
            Variant::Barrier => "barrier",
            Variant::BarrierEdge => "barrier-edge",
            Variant::BarrierOpt => "barrier-opt",
            Variant::NoSync => "nosync",
            Variant::NoSyncEdge => "nosync-edge",
            Variant::NoSyncOpt => "nosync-opt",
            Variant::WaitFree => "waitfree",
        }
    }

    /// Variants whose threads rendezvous at barriers.
    pub fn is_barrier(self) -> bool {
        matches!(
            self,
            Variant::Barrier | Variant::BarrierEdge | Variant::BarrierOpt
        )
    }

    pub fn is_nosync(self) -> bool {
        matches!(
            self,
            Variant::NoSync | Variant::NoSyncEdge | Variant::NoSyncOpt
        )
    }

    /// Vertex-centric variants that accept loop perforation and the
    /// identical-node shortcut.
    pub fn supports_shortcuts(self) -> bool {
        matches!(
            self,
            Variant::Barrier | Variant::BarrierOpt | Variant::NoSync | Variant::NoSyncOpt
        )
    }

    /// The variant actually executed once a perforation request is folded in.
    pub fn with_perforation(self, perforate: bool) -> Variant {
        match (self, perforate) {
            (Variant::Barrier, true) => Variant::BarrierOpt,
            (Variant::NoSync, true) => Variant::NoSyncOpt,
            (v, _) => v,
        }
    }

    pub fn is_perforated(self) -> bool {
        matches!(self, Variant::BarrierOpt | Variant::NoSyncOpt)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| EngineError::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

/// Parameters of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub threads: usize,
    pub damping: T,
    /// Convergence threshold on the maximum per-vertex change.
    pub threshold: T,
    /// Safety cap on iterations (per thread for the lock-free engines).
    pub max_iters: u64,
    pub variant: Variant,
    /// Freeze vertices whose change drops below `threshold * 1e-5`.
    pub perforation: bool,
    /// Compute only one representative per identical-in-neighbor class.
    pub identical: bool,
    pub seed: u64,
    /// Wall-clock budget after which a run is abandoned as timed out.
    pub watchdog: Option<Duration>,
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        RunConfig {
            threads: 1,
            damping: T::lit(0.85),
            threshold: T::lit(1e-16),
            max_iters: 10_000,
            variant: Variant::Sequential,
            perforation: false,
            identical: false,
            seed: 0,
            watchdog: None,
        }
    }
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(variant: Variant, threads: usize) -> Self {
        RunConfig {
            variant,
            threads,
            ..Default::default()
        }
    }

    pub fn with_threshold(mut self, threshold: T) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_identical(mut self, identical: bool) -> Self {
        self.identical = identical;
        self
    }

    pub fn with_perforation(mut self, perforation: bool) -> Self {
        self.perforation = perforation;
        self
    }

    pub fn with_watchdog(mut self, budget: Duration) -> Self {
        self.watchdog = Some(budget);
        self
    }

    /// Variant after folding in `perforation`.
    pub fn effective_variant(&self) -> Variant {
        self.variant.with_perforation(self.perforation)
    }

    /// Teleport term `(1 - d) / n`.
    pub fn base(&self, n: usize) -> T {
        (T::one() - self.damping) / T::from_usize(n).expect("vertex count representable")
    }

    /// Freeze threshold of loop perforation.
    pub fn freeze_below(&self) -> T {
        self.threshold * T::lit(1e-5)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidConfig(msg));
        if self.threads == 0 {
            return bad("thread count must be at least 1".into());
        }
        if !(self.damping > T::zero() && self.damping < T::one()) {
            return bad(format!("damping must lie in (0, 1), got {}", self.damping));
        }
        if self.threshold.is_nan() || self.threshold < T::zero() || !self.threshold.is_finite() {
            return bad(format!(
                "threshold must be finite and non-negative, got {}",
                self.threshold
            ));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.perforation
            && !matches!(
                self.variant,
                Variant::Barrier | Variant::NoSync | Variant::BarrierOpt | Variant::NoSyncOpt
            )
        {
            return bad(format!("perforation is not available for {}", self.variant));
        }
        if self.identical && !self.effective_variant().supports_shortcuts() {
            return bad(format!(
                "identical-node preprocessing is not available for {}",
                self.variant
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::<f64>::default();
        assert_eq!(c.damping, 0.85);
        assert_eq!(c.threshold, 1e-16);
        assert_eq!(c.max_iters, 10_000);
        c.validate().unwrap();
        assert_eq!(c.freeze_below(), 1e-16 * 1e-5);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("nosync-fast".parse::<Variant>().is_err());
    }

    #[test]
    fn validation() {
        let base = RunConfig::<f64>::new(Variant::Barrier, 2);
        assert!(RunConfig {
            threads: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            damping: 1.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            damping: 0.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            threshold: -1.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            threshold: f64::NAN,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            max_iters: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig::<f64>::new(Variant::WaitFree, 2)
            .with_identical(true)
            .validate()
            .is_err());
        assert!(RunConfig::<f64>::new(Variant::BarrierEdge, 2)
            .with_perforation(true)
            .validate()
            .is_err());
        let opt = base.with_perforation(true).with_identical(true);
        opt.validate().unwrap();
        assert_eq!(opt.effective_variant(), Variant::BarrierOpt);
    }
}
