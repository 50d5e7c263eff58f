//! Graph ingestion: a JSON object `{"n": count, "edges": [[u,v], ...]}` or a
//! plain-text edge list with an `n <count>` header. Node ids are 0-based;
//! self-loops are rejected and duplicate edges collapse.

use std::path::Path;

use serde::Deserialize;
use sfe_core::graphs::Graph;

#[derive(Debug, thiserror::Error)]
pub enum GraphParseError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid JSON graph: {0}")]
    Json(String),
    #[error("missing or malformed header, expected \"n <count>\"")]
    BadHeader,
    #[error("malformed edge line {line:?}")]
    BadEdge { line: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn build(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphParseError> {
    if n == 0 {
        return Err(GraphParseError::Invalid("empty ground set".into()));
    }
    Graph::new(n, edges).map_err(|e| GraphParseError::Invalid(e.to_string()))
}

pub fn parse_graph_json(text: &str) -> Result<Graph, GraphParseError> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| GraphParseError::Json(e.to_string()))?;
    build(file.n, &file.edges)
}

pub fn parse_graph_text(text: &str) -> Result<Graph, GraphParseError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or(GraphParseError::BadHeader)?;
    let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => count
            .parse::<usize>()
            .map_err(|_| GraphParseError::BadHeader)?,
        _ => return Err(GraphParseError::BadHeader),
    };
    let mut edges = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, v] = fields[..] else {
            return Err(GraphParseError::BadEdge { line: line.into() });
        };
        let (Ok(u), Ok(v)) = (u.parse::<usize>(), v.parse::<usize>()) else {
            return Err(GraphParseError::BadEdge { line: line.into() });
        };
        edges.push((u, v));
    }
    build(n, &edges)
}

/// Detects the format from the first non-whitespace byte.
pub fn parse_graph(text: &str) -> Result<Graph, GraphParseError> {
    if text.trim_start().starts_with('{') {
        parse_graph_json(text)
    } else {
        parse_graph_text(text)
    }
}

pub fn load_graph(path: &Path) -> Result<Graph, GraphParseError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}
