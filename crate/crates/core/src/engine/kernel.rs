//! The per-vertex update shared by every engine.
//!
//! All engines evaluate the same expression in the same order: contributions
//! `rank(v) / outdeg(v)` summed over the in-segment in ascending slot order,
//! then `base + d * sum`. Keeping one arithmetic form is what makes the
//! vertex-centric and edge-centric engines bit-identical.

use crate::graph::CsrGraph;
use crate::scalar::Scalar;

#[inline]
pub fn contribution<T: Scalar>(rank: T, out_degree: usize) -> T {
    rank / T::from_usize(out_degree).unwrap()
}

/// New rank of `u` pulled from its in-neighbors' current ranks.
#[inline]
pub fn pull<T: Scalar>(
    g: &CsrGraph,
    u: usize,
    base: T,
    damping: T,
    rank: impl Fn(usize) -> T,
) -> T {
    let mut sum = T::zero();
    for &v in g.in_neighbors(u) {
        let v = v as usize;
        sum = sum + contribution(rank(v), g.out_degree(v));
    }
    base + damping * sum
}

/// New rank of `u` gathered from precomputed per-in-slot contributions.
#[inline]
pub fn gather<T: Scalar>(
    g: &CsrGraph,
    u: usize,
    base: T,
    damping: T,
    slot: impl Fn(usize) -> T,
) -> T {
    let mut sum = T::zero();
    for s in g.in_slots(u) {
        sum = sum + slot(s);
    }
    base + damping * sum
}

/// Loop-perforation freeze rule: the change must be non-zero and below the
/// freeze bound.
#[inline]
pub fn should_freeze<T: Scalar>(delta: T, freeze_below: T) -> bool {
    delta != T::zero() && delta < freeze_below
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pull_and_gather_agree_bitwise() {
        let g = CsrGraph::from_edges(&[(0, 2), (1, 2), (3, 2), (0, 1), (3, 0), (3, 1)]);
        let ranks = [0.1f64, 0.37, 0.2, 0.33];
        let mut slots = vec![0.0; g.m()];
        for (v, &rank) in ranks.iter().enumerate() {
            for k in g.out_slots(v) {
                slots[g.offset_list()[k]] = contribution(rank, g.out_degree(v));
            }
        }
        for u in 0..g.n() {
            let a = pull(&g, u, 0.0375, 0.85, |v| ranks[v]);
            let b = gather(&g, u, 0.0375, 0.85, |s| slots[s]);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn freeze_requires_nonzero_change() {
        assert!(!should_freeze(0.0, 1e-21));
        assert!(should_freeze(1e-22, 1e-21));
        assert!(!should_freeze(1e-21, 1e-21));
    }
}
