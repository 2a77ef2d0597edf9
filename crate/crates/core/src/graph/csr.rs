use std::io::{Read, Write};
use std::ops::Range;

use super::{EdgeList, GraphError, VertexId};

const CACHE_MAGIC: &[u8; 4] = b"CSR1";

/// Immutable directed graph stored in both CSR orientations.
///
/// Out-links and in-links are each kept sorted within a vertex's segment.
/// `offset_list[k]` maps the out-link at position `k` to the in-link slot
/// holding the same edge, which is what the edge-centric engines scatter
/// through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<VertexId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<VertexId>,
    out_degree: Vec<usize>,
    offset_list: Vec<usize>,
}

impl CsrGraph {
    /// Builds both orientations. With `dedup`, repeated pairs collapse to one
    /// edge and self-loops are dropped.
    pub fn build(el: &EdgeList, dedup: bool) -> Self {
        let n = el.n();
        let mut edges = el.edges().to_vec();
        edges.sort_unstable();
        if dedup {
            edges.dedup();
            edges.retain(|&(s, d)| s != d);
        }
        let m = edges.len();

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(s, d) in &edges {
            out_offsets[s as usize + 1] += 1;
            in_offsets[d as usize + 1] += 1;
        }
        for v in 0..n {
            out_offsets[v + 1] += out_offsets[v];
            in_offsets[v + 1] += in_offsets[v];
        }

        // Edges are sorted by (src, dst), so they already are the out-CSR in
        // order; filling the in-CSR in the same pass keeps every in-segment
        // sorted by source.
        let out_targets: Vec<VertexId> = edges.iter().map(|&(_, d)| d).collect();
        let mut in_sources = vec![0 as VertexId; m];
        let mut offset_list = vec![0usize; m];
        let mut cursor = in_offsets[..n].to_vec();
        for (k, &(s, d)) in edges.iter().enumerate() {
            let slot = cursor[d as usize];
            cursor[d as usize] += 1;
            in_sources[slot] = s;
            offset_list[k] = slot;
        }

        let out_degree = (0..n)
            .map(|v| out_offsets[v + 1] - out_offsets[v])
            .collect();
        CsrGraph {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            out_degree,
            offset_list,
        }
    }

    pub fn from_edges(edges: &[(VertexId, VertexId)]) -> Self {
        Self::build(&EdgeList::from_edges(edges.to_vec()), true)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.out_targets.len()
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub fn out_targets(&self) -> &[VertexId] {
        &self.out_targets
    }

    pub fn in_offsets(&self) -> &[usize] {
        &self.in_offsets
    }

    pub fn in_sources(&self) -> &[VertexId] {
        &self.in_sources
    }

    pub fn out_degrees(&self) -> &[usize] {
        &self.out_degree
    }

    pub fn offset_list(&self) -> &[usize] {
        &self.offset_list
    }

    #[inline]
    pub fn out_degree(&self, u: usize) -> usize {
        self.out_degree[u]
    }

    #[inline]
    pub fn out_slots(&self, u: usize) -> Range<usize> {
        self.out_offsets[u]..self.out_offsets[u + 1]
    }

    #[inline]
    pub fn in_slots(&self, u: usize) -> Range<usize> {
        self.in_offsets[u]..self.in_offsets[u + 1]
    }

    #[inline]
    pub fn out_neighbors(&self, u: usize) -> &[VertexId] {
        &self.out_targets[self.out_slots(u)]
    }

    #[inline]
    pub fn in_neighbors(&self, u: usize) -> &[VertexId] {
        &self.in_sources[self.in_slots(u)]
    }

    pub fn dangling_count(&self) -> usize {
        self.out_degree.iter().filter(|&&d| d == 0).count()
    }

    /// Re-emits the edges in out-CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.out_neighbors(u)
                .iter()
                .map(move |&v| (u as VertexId, v))
        })
    }

    /// Full scan of the structural invariants. Returns a description of the
    /// first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let (n, m) = (self.n, self.m());
        if self.out_offsets.len() != n + 1 || self.in_offsets.len() != n + 1 {
            return Err("offset arrays must have n+1 entries".into());
        }
        if self.out_offsets[0] != 0 || self.in_offsets[0] != 0 {
            return Err("offsets must start at 0".into());
        }
        if self.out_offsets[n] != m || self.in_offsets[n] != m || self.in_sources.len() != m {
            return Err("last offset must equal m".into());
        }
        for v in 0..n {
            if self.out_offsets[v] > self.out_offsets[v + 1]
                || self.in_offsets[v] > self.in_offsets[v + 1]
            {
                return Err(format!("offsets decrease at vertex {v}"));
            }
            if self.out_degree[v] != self.out_offsets[v + 1] - self.out_offsets[v] {
                return Err(format!("out-degree mismatch at vertex {v}"));
            }
        }
        if self.offset_list.len() != m {
            return Err("offset list must have m entries".into());
        }
        let mut seen = vec![false; m];
        for u in 0..n {
            for k in self.out_slots(u) {
                let v = self.out_targets[k] as usize;
                if v >= n {
                    return Err(format!("target {v} out of range"));
                }
                let slot = self.offset_list[k];
                if !self.in_slots(v).contains(&slot) || self.in_sources[slot] as usize != u {
                    return Err(format!(
                        "offset list entry {k} does not point at edge {u}->{v}"
                    ));
                }
                if std::mem::replace(&mut seen[slot], true) {
                    return Err(format!("in-slot {slot} targeted twice"));
                }
            }
        }
        Ok(())
    }

    /// Writes the binary cache: magic `CSR1`, `n` and `m` as little-endian
    /// u64, then out-offsets, out-targets, in-offsets, in-sources and
    /// out-degrees, each element a little-endian u64.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.m() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (3 * self.n + 2 * self.m() + 2));
        let words = self
            .out_offsets
            .iter()
            .map(|&x| x as u64)
            .chain(self.out_targets.iter().map(|&x| x as u64))
            .chain(self.in_offsets.iter().map(|&x| x as u64))
            .chain(self.in_sources.iter().map(|&x| x as u64))
            .chain(self.out_degree.iter().map(|&x| x as u64));
        for word in words {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a cache written by [`write_cache`](Self::write_cache). The
    /// offset list is rebuilt and every invariant is re-checked.
    pub fn read_cache<R: Read>(mut r: R) -> Result<Self, GraphError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(GraphError::Cache("bad magic".into()));
        }
        let n = read_u64(&mut r)? as usize;
        let m = read_u64(&mut r)? as usize;
        let mut read_vec = |len: usize| -> Result<Vec<u64>, GraphError> {
            let mut bytes = vec![0u8; len * 8];
            r.read_exact(&mut bytes)?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let out_offsets: Vec<usize> = read_vec(n + 1)?.into_iter().map(|x| x as usize).collect();
        let out_targets = to_ids(read_vec(m)?)?;
        let in_offsets: Vec<usize> = read_vec(n + 1)?.into_iter().map(|x| x as usize).collect();
        let in_sources = to_ids(read_vec(m)?)?;
        let out_degree: Vec<usize> = read_vec(n)?.into_iter().map(|x| x as usize).collect();

        let mut g = CsrGraph {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            out_degree,
            offset_list: Vec::new(),
        };
        g.offset_list = g.rebuild_offset_list()?;
        g.check_invariants().map_err(GraphError::Cache)?;
        Ok(g)
    }

    fn rebuild_offset_list(&self) -> Result<Vec<usize>, GraphError> {
        let structural = |msg: &str| GraphError::Cache(msg.to_string());
        if self.out_offsets.last() != Some(&self.m()) || self.in_offsets.last() != Some(&self.m()) {
            return Err(structural("offset arrays inconsistent with m"));
        }
        let mut cursor = self.in_offsets[..self.n].to_vec();
        let mut offsets = vec![0usize; self.m()];
        for u in 0..self.n {
            let range = self.out_offsets[u]..self.out_offsets[u + 1];
            if range.start > range.end || range.end > self.m() {
                return Err(structural("out offsets not monotone"));
            }
            for k in range {
                let v = self.out_targets[k] as usize;
                if v >= self.n {
                    return Err(structural("target out of range"));
                }
                let slot = cursor[v];
                if slot >= self.in_offsets[v + 1] {
                    return Err(structural("in-links do not match out-links"));
                }
                cursor[v] += 1;
                offsets[k] = slot;
            }
        }
        Ok(offsets)
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, GraphError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn to_ids(words: Vec<u64>) -> Result<Vec<VertexId>, GraphError> {
    words
        .into_iter()
        .map(|w| {
            VertexId::try_from(w).map_err(|_| GraphError::Cache(format!("vertex id {w} too large")))
        })
        .collect()
}
