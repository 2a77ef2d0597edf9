use crate::graph::CsrGraph;
use crate::scalar::Scalar;

use super::{kernel, EngineError};

/// Σ |a[u] − b[u]|.
pub fn l1_norm<T: Scalar>(a: &[T], b: &[T]) -> Result<T, EngineError> {
    if a.len() != b.len() {
        return Err(EngineError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs()))
}

/// max |a[u] − b[u]|.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> Result<T, EngineError> {
    if a.len() != b.len() {
        return Err(EngineError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs())))
}

/// Largest fixed-point residual `|pr(u) − [(1−d)/n + d·Σ pr(v)/outdeg(v)]|`
/// of a rank vector, computed single-threaded.
pub fn max_residual<T: Scalar>(g: &CsrGraph, ranks: &[T], damping: T) -> T {
    assert_eq!(
        ranks.len(),
        g.n(),
        "rank vector length must match the graph"
    );
    if g.n() == 0 {
        return T::zero();
    }
    let base = (T::one() - damping) / T::from_usize(g.n()).unwrap();
    (0..g.n())
        .map(|u| (ranks[u] - kernel::pull(g, u, base, damping, |v| ranks[v])).abs())
        .fold(T::zero(), T::max)
}
