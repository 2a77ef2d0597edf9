//! Recursive-matrix (R-MAT) synthetic graph generator.
//!
//! Every edge is placed by descending `scale` levels of the adjacency matrix,
//! picking one of the four quadrants at each level with probabilities
//! `(a, b, c, d)` for (top-left, top-right, bottom-left, bottom-right).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EdgeList, GraphError, VertexId};

/// Average out-degree of the synthetic datasets (D10..D70 carry roughly two
/// edges per vertex).
const SYNTHETIC_EDGES_PER_VERTEX: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RmatParams {
    pub target_edges: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
    /// log2 of the vertex count; derived from `target_edges` when unset.
    pub scale: Option<u32>,
    /// Relabel vertices with a seeded random permutation so that contiguous
    /// vertex ranges carry comparable edge counts.
    pub permute: bool,
}

impl Default for RmatParams {
    fn default() -> Self {
        RmatParams {
            target_edges: 1_000_000,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
            seed: 1,
            scale: None,
            permute: true,
        }
    }
}

impl RmatParams {
    pub fn with_edges(target_edges: u64, seed: u64) -> Self {
        RmatParams {
            target_edges,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let probs = [self.a, self.b, self.c, self.d];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(GraphError::InvalidParams(format!(
                "quadrant probabilities must lie in [0,1]: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GraphError::InvalidParams(format!(
                "quadrant probabilities sum to {sum}, expected 1"
            )));
        }
        if self.target_edges == 0 {
            return Err(GraphError::InvalidParams(
                "target edge count must be at least 1".into(),
            ));
        }
        if let Some(s) = self.scale {
            if s == 0 || s > 31 {
                return Err(GraphError::InvalidParams(format!(
                    "scale {s} outside 1..=31"
                )));
            }
        }
        Ok(())
    }

    /// Smallest power-of-two exponent whose vertex count reaches
    /// `target_edges / 2`, unless overridden.
    pub fn effective_scale(&self) -> u32 {
        self.scale.unwrap_or_else(|| {
            let want = self
                .target_edges
                .div_ceil(SYNTHETIC_EDGES_PER_VERTEX)
                .max(2);
            want.next_power_of_two().trailing_zeros()
        })
    }
}

/// Quadrant index at one recursion level: bit 1 = lower half (row), bit 0 =
/// right half (column).
#[inline]
fn choose_quadrant<R: Rng>(rng: &mut R, cum: &[f64; 3]) -> u8 {
    let x: f64 = rng.gen();
    if x < cum[0] {
        0
    } else if x < cum[1] {
        1
    } else if x < cum[2] {
        2
    } else {
        3
    }
}

/// Generates exactly `target_edges` edges (duplicates and self-loops
/// included). Output is a pure function of `params`.
pub fn rmat_generate(params: &RmatParams) -> Result<EdgeList, GraphError> {
    params.validate()?;
    let scale = params.effective_scale();
    let n = 1usize << scale;
    let cum = [
        params.a,
        params.a + params.b,
        params.a + params.b + params.c,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut edges = Vec::with_capacity(params.target_edges as usize);
    for _ in 0..params.target_edges {
        let (mut src, mut dst) = (0u32, 0u32);
        for _ in 0..scale {
            let q = choose_quadrant(&mut rng, &cum);
            src = (src << 1) | (q >> 1) as u32;
            dst = (dst << 1) | (q & 1) as u32;
        }
        edges.push((src as VertexId, dst as VertexId));
    }

    if params.permute {
        let mut perm: Vec<VertexId> = (0..n as VertexId).collect();
        // Fisher-Yates from a stream independent of the edge draws.
        let mut prng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
        for i in (1..n).rev() {
            let j = prng.gen_range(0..=i);
            perm.swap(i, j);
        }
        for e in &mut edges {
            *e = (perm[e.0 as usize], perm[e.1 as usize]);
        }
    }
    EdgeList::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let p = RmatParams::with_edges(5000, 42);
        assert_eq!(rmat_generate(&p).unwrap(), rmat_generate(&p).unwrap());
        let q = RmatParams {
            seed: 43,
            ..p.clone()
        };
        assert_ne!(rmat_generate(&p).unwrap(), rmat_generate(&q).unwrap());
    }

    #[test]
    fn exact_edge_count() {
        let el = rmat_generate(&RmatParams::with_edges(1_000_000, 7)).unwrap();
        assert_eq!(el.len(), 1_000_000);
        assert_eq!(el.n(), 1 << 19);
    }

    #[test]
    fn scale_tracks_synthetic_density() {
        for (m, n) in [
            (1_000_000u64, 1usize << 19),
            (7_000_000, 1 << 22),
            (4, 2),
            (1, 2),
        ] {
            assert_eq!(
                1usize << RmatParams::with_edges(m, 0).effective_scale(),
                n,
                "m={m}"
            );
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let p = RmatParams {
            a: 0.5,
            b: 0.5,
            c: 0.5,
            d: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            rmat_generate(&p),
            Err(GraphError::InvalidParams(_))
        ));
        let p = RmatParams {
            a: 1.2,
            b: -0.2,
            c: 0.0,
            d: 0.0,
            ..Default::default()
        };
        assert!(rmat_generate(&p).is_err());
        let p = RmatParams {
            target_edges: 0,
            ..Default::default()
        };
        assert!(rmat_generate(&p).is_err());
    }

    #[test]
    fn uniform_quadrants_pass_chi_square() {
        let cum = [0.25, 0.5, 0.75];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 400_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[choose_quadrant(&mut rng, &cum) as usize] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, 99.9% quantile.
        assert!(chi2 < 16.27, "chi2={chi2} counts={counts:?}");
        for c in counts {
            assert!(((c as f64 - expected) / expected).abs() < 0.01);
        }
    }

    #[test]
    fn uniform_generator_fills_quadrants_evenly() {
        let p = RmatParams {
            target_edges: 200_000,
            a: 0.25,
            b: 0.25,
            c: 0.25,
            d: 0.25,
            seed: 5,
            scale: Some(10),
            permute: false,
        };
        let el = rmat_generate(&p).unwrap();
        let half = (el.n() / 2) as u32;
        let mut counts = [0usize; 4];
        for &(s, d) in el.edges() {
            counts[(((s >= half) as usize) << 1) | (d >= half) as usize] += 1;
        }
        let expected = el.len() as f64 / 4.0;
        for c in counts {
            assert!(
                ((c as f64 - expected) / expected).abs() < 0.01,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn skewed_default_concentrates_top_left() {
        let p = RmatParams {
            target_edges: 50_000,
            permute: false,
            ..Default::default()
        };
        let el = rmat_generate(&p).unwrap();
        let half = (el.n() / 2) as u32;
        let top_left = el
            .edges()
            .iter()
            .filter(|&&(s, d)| s < half && d < half)
            .count();
        let frac = top_left as f64 / el.len() as f64;
        assert!((frac - 0.57).abs() < 0.01, "{frac}");
    }
}
