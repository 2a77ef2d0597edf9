use std::io::BufRead;

use super::{GraphError, VertexId};

/// Unvalidated directed edge list as read from disk or produced by a generator.
///
/// Duplicates and self-loops are allowed here; [`CsrGraph::build`] decides
/// what to do with them.
///
/// [`CsrGraph::build`]: super::CsrGraph::build
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
}

impl EdgeList {
    pub fn new(n: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self, GraphError> {
        if let Some(&(s, d)) = edges
            .iter()
            .find(|&&(s, d)| s as usize >= n || d as usize >= n)
        {
            return Err(GraphError::VertexOutOfRange {
                vertex: s.max(d) as u64,
                n,
            });
        }
        Ok(EdgeList { n, edges })
    }

    /// Builds an edge list whose vertex count is one more than the largest id
    /// mentioned.
    pub fn from_edges(edges: Vec<(VertexId, VertexId)>) -> Self {
        let n = edges
            .iter()
            .map(|&(s, d)| s.max(d) as usize + 1)
            .max()
            .unwrap_or(0);
        EdgeList { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Raises the vertex count, keeping the extra vertices isolated.
    pub fn with_vertex_count(mut self, n: usize) -> Result<Self, GraphError> {
        if n < self.n {
            return Err(GraphError::VertexOutOfRange {
                vertex: self.n as u64 - 1,
                n,
            });
        }
        self.n = n;
        Ok(self)
    }
}

/// Reads a SNAP-style edge list: one `src dst` pair per line, `#` comments.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<EdgeList, GraphError> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut fields = text.split_whitespace();
        let (Some(src), Some(dst), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected two vertex ids, got {text:?}"),
            });
        };
        edges.push((parse_id(src, line_no)?, parse_id(dst, line_no)?));
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    Ok(EdgeList::from_edges(edges))
}

fn parse_id(field: &str, line: usize) -> Result<VertexId, GraphError> {
    field.parse::<VertexId>().map_err(|e| GraphError::Parse {
        line,
        msg: format!("bad vertex id {field:?}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<EdgeList, GraphError> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn comments_and_pairs() {
        let el = load("# c\n0 1\n1 0\n").unwrap();
        assert_eq!(el.n(), 2);
        assert_eq!(el.edges(), &[(0, 1), (1, 0)]);
    }

    #[test]
    fn self_loop_kept() {
        let el = load("0 0\n").unwrap();
        assert_eq!(el.n(), 1);
        assert_eq!(el.edges(), &[(0, 0)]);
    }

    #[test]
    fn gap_vertices_are_isolated() {
        let el = load("0 2\n").unwrap();
        assert_eq!(el.n(), 3);
        assert_eq!(el.edges(), &[(0, 2)]);
    }

    #[test]
    fn tabs_and_blank_lines() {
        let el = load("\n# FromNodeId\tToNodeId\n3\t4\n\n").unwrap();
        assert_eq!(el.n(), 5);
        assert_eq!(el.edges(), &[(3, 4)]);
    }

    #[test]
    fn malformed_line_reports_number() {
        match load("0 1\n1 x\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match load("# a\n0 1 2\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load("-1 2\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(load(""), Err(GraphError::Empty)));
        assert!(matches!(load("# only comments\n"), Err(GraphError::Empty)));
    }

    #[test]
    fn vertex_count_override() {
        let el = load("0 1\n").unwrap().with_vertex_count(5).unwrap();
        assert_eq!(el.n(), 5);
        assert!(load("0 4\n").unwrap().with_vertex_count(2).is_err());
        assert!(EdgeList::new(2, vec![(0, 2)]).is_err());
    }
}
