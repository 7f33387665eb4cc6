//! Edge-list files: one `u v` pair per line, `#` starts a comment, optional
//! leading header `n <count>`. External labels are arbitrary integers and
//! map to dense vertex ids in first-seen order, which keeps seeded runs
//! reproducible no matter how the file names its vertices.

use std::collections::HashMap;
use std::fmt::Write as _;

use fdcolor_core::graph::{Graph, GraphError};

#[derive(Debug)]
pub enum EdgeListError {
    Io(std::io::Error),
    Parse { line: usize, message: String },
    Graph(GraphError),
}

impl std::fmt::Display for EdgeListError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeListError::Io(e) => write!(f, "{e}"),
            EdgeListError::Parse { line, message } => write!(f, "line {line}: {message}"),
            EdgeListError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EdgeListError {}

impl From<std::io::Error> for EdgeListError {
    fn from(e: std::io::Error) -> Self {
        EdgeListError::Io(e)
    }
}

impl From<GraphError> for EdgeListError {
    fn from(e: GraphError) -> Self {
        EdgeListError::Graph(e)
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph, EdgeListError> {
    let mut header: Option<usize> = None;
    let mut labels: HashMap<u64, usize> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut saw_edge = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] == "n" {
            if saw_edge || header.is_some() {
                return Err(EdgeListError::Parse {
                    line: lineno + 1,
                    message: "header `n <count>` must appear once, before any edge".into(),
                });
            }
            if tokens.len() != 2 {
                return Err(EdgeListError::Parse {
                    line: lineno + 1,
                    message: "header must be `n <count>`".into(),
                });
            }
            let count = tokens[1].parse::<usize>().map_err(|e| EdgeListError::Parse {
                line: lineno + 1,
                message: format!("bad vertex count: {e}"),
            })?;
            header = Some(count);
            continue;
        }
        if tokens.len() != 2 {
            return Err(EdgeListError::Parse {
                line: lineno + 1,
                message: format!("expected `u v`, found {} tokens", tokens.len()),
            });
        }
        let mut pair = [0usize; 2];
        for (i, tok) in tokens.iter().enumerate() {
            let label = tok.parse::<u64>().map_err(|e| EdgeListError::Parse {
                line: lineno + 1,
                message: format!("bad vertex label '{tok}': {e}"),
            })?;
            let next_id = labels.len();
            let id = *labels.entry(label).or_insert_with(|| {
                order.push(label);
                next_id
            });
            pair[i] = id;
        }
        saw_edge = true;
        edges.push((pair[0], pair[1]));
    }

    let vertex_count = match header {
        Some(count) => {
            if labels.len() > count {
                return Err(EdgeListError::Parse {
                    line: 0,
                    message: format!(
                        "header says {count} vertices but {} distinct labels appear",
                        labels.len()
                    ),
                });
            }
            count
        }
        None => labels.len(),
    };
    Ok(Graph::from_edges(vertex_count, &edges)?)
}

pub fn read_edge_list(path: &std::path::Path) -> Result<Graph, EdgeListError> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n {}", g.vertex_count());
    for (a, b) in g.edges() {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}
