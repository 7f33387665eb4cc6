//! Generator specs for the CLI: `path:10`, `cycle:9`, `torus:5x5`,
//! `random_regular:50,3`, `tree:3,4`.

use fdcolor_core::graph::{Graph, GraphError};
use fdcolor_core::randomness::mix64;

pub fn generate(spec: &str, seed: u64) -> Result<Graph, GraphError> {
    let (kind, params) = spec
        .split_once(':')
        .ok_or_else(|| GraphError::BadParameter(format!("generator spec '{spec}' needs kind:params")))?;
    let parse = |s: &str| -> Result<usize, GraphError> {
        s.parse::<usize>()
            .map_err(|e| GraphError::BadParameter(format!("bad number '{s}' in '{spec}': {e}")))
    };
    match kind {
        "path" => Graph::path(parse(params)?),
        "cycle" => Graph::cycle(parse(params)?),
        "torus" => {
            let (w, h) = params
                .split_once('x')
                .ok_or_else(|| GraphError::BadParameter(format!("torus spec '{params}' needs WxH")))?;
            Graph::torus(parse(w)?, parse(h)?)
        }
        "random_regular" => {
            let (n, d) = params
                .split_once(',')
                .ok_or_else(|| GraphError::BadParameter(format!("random_regular spec '{params}' needs N,D")))?;
            Graph::random_regular(parse(n)?, parse(d)?, mix64(seed ^ 0x6765_6e5f_7272))
        }
        "tree" => {
            let (d, depth) = params
                .split_once(',')
                .ok_or_else(|| GraphError::BadParameter(format!("tree spec '{params}' needs D,DEPTH")))?;
            Graph::truncated_tree(parse(d)?, parse(depth)?)
        }
        other => Err(GraphError::BadParameter(format!("unknown generator kind '{other}'"))),
    }
}
