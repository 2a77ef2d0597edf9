use std::collections::HashMap;

use super::{CsrGraph, VertexId};

/// Partition of the vertices by equality of their in-neighbor sets.
///
/// Two vertices with the same in-neighbors receive exactly the same rank
/// under the update rule, so only one representative per class needs
/// computing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdenticalClasses {
    representative: Vec<VertexId>,
    classes: Vec<Vec<VertexId>>,
}

impl IdenticalClasses {
    /// Representative (smallest member) of `u`'s class.
    #[inline]
    pub fn representative(&self, u: usize) -> usize {
        self.representative[u] as usize
    }

    #[inline]
    pub fn is_representative(&self, u: usize) -> bool {
        self.representative[u] as usize == u
    }

    pub fn representatives(&self) -> &[VertexId] {
        &self.representative
    }

    /// Classes ordered by representative; members ascending.
    pub fn classes(&self) -> &[Vec<VertexId>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Number of vertices that can skip their own computation.
    pub fn redundant(&self) -> usize {
        self.representative.len() - self.classes.len()
    }
}

pub fn detect_identical(g: &CsrGraph) -> IdenticalClasses {
    // In-segments are sorted, so slice equality is set equality.
    let mut class_of: HashMap<&[VertexId], usize> = HashMap::new();
    let mut classes: Vec<Vec<VertexId>> = Vec::new();
    let mut representative = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let idx = *class_of.entry(g.in_neighbors(u)).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[idx].push(u as VertexId);
        representative.push(classes[idx][0]);
    }
    IdenticalClasses {
        representative,
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_source_grouped() {
        let g = CsrGraph::from_edges(&[(0, 2), (0, 3)]);
        let c = detect_identical(&g);
        assert_eq!(c.representative(3), 2);
        assert!(c.is_representative(2));
        // 0 and 1 have no in-links at all.
        assert_eq!(c.representative(1), 0);
        assert_eq!(c.classes(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(c.redundant(), 2);
    }

    #[test]
    fn two_cycle_all_singletons() {
        let g = CsrGraph::from_edges(&[(0, 1), (1, 0)]);
        let c = detect_identical(&g);
        assert_eq!(c.class_count(), 2);
        assert_eq!(c.redundant(), 0);
    }
}
