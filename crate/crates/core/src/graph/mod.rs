//! Graph ingestion, CSR construction and synthetic generation.

mod csr;
mod edge_list;
mod identical;
mod rmat;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use thiserror::Error;

pub use csr::CsrGraph;
pub use edge_list::{load_edge_list, EdgeList};
pub use identical::{detect_identical, IdenticalClasses};
pub use rmat::{rmat_generate, RmatParams};

/// Dense 0-based vertex identifier.
pub type VertexId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge list contains no edges")]
    Empty,
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u64, n: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("corrupt CSR cache: {0}")]
    Cache(String),
    #[error("unsupported graph file extension: {0}")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads a graph by extension: `.bin` is the CSR cache, anything else is
/// parsed as an edge list and built with deduplication.
pub fn load_graph(path: &Path) -> Result<CsrGraph, GraphError> {
    let file = File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => CsrGraph::read_cache(BufReader::new(file)),
        Some("txt") | Some("el") | Some("edges") | None => {
            let el = load_edge_list(BufReader::new(file))?;
            Ok(CsrGraph::build(&el, true))
        }
        Some(other) => Err(GraphError::UnknownFormat(other.to_string())),
    }
}

pub fn save_cache(g: &CsrGraph, path: &Path) -> Result<(), GraphError> {
    g.write_cache(BufWriter::new(File::create(path)?))
}
