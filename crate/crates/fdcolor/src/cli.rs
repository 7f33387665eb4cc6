//! Command line front end.
//!
//! Exit codes: 0 success / verdict PASS, 1 verdict FAIL, 2 input error,
//! 3 internal invariant breach, 4 cap exceeded.

use std::io::Write as _;

use fdcolor_core::graph::Graph;
use fdcolor_core::line::{exact_line_distribution_with_cap, LineError, Topology, DEFAULT_ORACLE_CAP};
use fdcolor_core::pipeline::{color, flatten, PipelineError, Variant};
use fdcolor_core::randomness::VertexRandomness;
use fdcolor_core::verify::{
    check_k_dependence_exact, check_properness, exact_pipeline_distribution, ExactCaps, VerifyError,
};

use crate::document;
use crate::edgelist;
use crate::genspec;
use crate::mc::{check_k_dependence_mc, McConfig, McError, PipelineSampler};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_CAP: i32 = 4;

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, message: String) -> Self {
        Outcome { code, stdout: String::new(), stderr: message }
    }
}

struct Args {
    positional: Vec<String>,
    flags: Vec<(String, Option<String>)>,
}

impl Args {
    fn parse(argv: &[String]) -> Result<Args, String> {
        let mut positional = Vec::new();
        let mut flags = Vec::new();
        let mut it = argv.iter().peekable();
        while let Some(arg) = it.next() {
            if let Some(name) = arg.strip_prefix("--") {
                let boolean = matches!(name, "exact" | "mc");
                if boolean {
                    flags.push((name.to_string(), None));
                } else {
                    let value = it
                        .next()
                        .ok_or_else(|| format!("flag --{name} needs a value"))?
                        .clone();
                    flags.push((name.to_string(), Some(value)));
                }
            } else {
                positional.push(arg.clone());
            }
        }
        Ok(Args { positional, flags })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(n, _)| n == name)
    }

    fn get_u64(&self, name: &str) -> Result<Option<u64>, String> {
        self.get(name)
            .map(|v| v.parse::<u64>().map_err(|e| format!("flag --{name}: {e}")))
            .transpose()
    }

    fn get_usize(&self, name: &str) -> Result<Option<usize>, String> {
        self.get(name)
            .map(|v| v.parse::<usize>().map_err(|e| format!("flag --{name}: {e}")))
            .transpose()
    }
}

fn resolve_seed(args: &Args) -> Result<u64, String> {
    if let Some(seed) = args.get_u64("seed")? {
        return Ok(seed);
    }
    match std::env::var("FDCOLOR_SEED") {
        Ok(v) => v.parse::<u64>().map_err(|e| format!("FDCOLOR_SEED: {e}")),
        Err(_) => Ok(0),
    }
}

/// The graph plus a printable description of where it came from.
fn resolve_graph(args: &Args, seed: u64) -> Result<(Graph, String), Outcome> {
    match (args.get("gen"), args.get("edges")) {
        (Some(spec), None) => {
            let g = genspec::generate(spec, seed)
                .map_err(|e| Outcome::fail(EXIT_INPUT, format!("generator: {e}")))?;
            Ok((g, spec.to_string()))
        }
        (None, Some(path)) => {
            let g = edgelist::read_edge_list(std::path::Path::new(path))
                .map_err(|e| Outcome::fail(EXIT_INPUT, format!("edge list {path}: {e}")))?;
            Ok((g, format!("edges:{path}")))
        }
        _ => Err(Outcome::fail(
            EXIT_INPUT,
            "exactly one graph source is required: --gen SPEC or --edges FILE".into(),
        )),
    }
}

fn resolve_variant(args: &Args) -> Result<Variant, Outcome> {
    let name = args
        .get("variant")
        .ok_or_else(|| Outcome::fail(EXIT_INPUT, "--variant invariant|fiid is required".into()))?;
    name.parse::<Variant>().map_err(|e| Outcome::fail(EXIT_INPUT, e.to_string()))
}

pub fn run(argv: &[String]) -> Outcome {
    let args = match Args::parse(argv) {
        Ok(a) => a,
        Err(e) => return Outcome::fail(EXIT_INPUT, e),
    };
    let Some(command) = args.positional.first().map(String::as_str) else {
        return Outcome::fail(
            EXIT_INPUT,
            "usage: fdcolor <sample|verify|oracle> [flags]".into(),
        );
    };
    match command {
        "sample" => cmd_sample(&args),
        "verify" => cmd_verify(&args),
        "oracle" => cmd_oracle(&args),
        other => Outcome::fail(EXIT_INPUT, format!("unknown command '{other}'")),
    }
}

fn cmd_sample(args: &Args) -> Outcome {
    let seed = match resolve_seed(args) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_INPUT, e),
    };
    let (graph, source) = match resolve_graph(args, seed) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let variant = match resolve_variant(args) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let rng = VertexRandomness::new(seed);
    let assignment = match color(&graph, variant, &rng) {
        Ok(a) => a,
        Err(PipelineError::Line(LineError::RetryCapReached { restarts })) => {
            return Outcome::fail(
                EXIT_INTERNAL,
                format!("component sampler hit the retry cap ({restarts} restarts)"),
            )
        }
        Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("pipeline: {e}")),
    };
    let flat = match flatten(&assignment) {
        Ok(f) => f,
        Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("flatten: {e}")),
    };
    let proper = match check_properness(&graph, &assignment.tuples) {
        Ok(p) => p,
        Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("properness: {e}")),
    };
    let doc = document::coloring_document(&source, seed, &graph, &assignment, &flat, proper);
    if !proper {
        return Outcome {
            code: EXIT_INTERNAL,
            stdout: doc,
            stderr: "sampled assignment is not proper; this indicates a bug".into(),
        };
    }
    Outcome::ok(doc)
}

fn cmd_verify(args: &Args) -> Outcome {
    let seed = match resolve_seed(args) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_INPUT, e),
    };
    let (graph, source) = match resolve_graph(args, seed) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let variant = match resolve_variant(args) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let Some(k) = args.get_usize("k").unwrap_or(None) else {
        return Outcome::fail(EXIT_INPUT, "--k DISTANCE is required for verify".into());
    };
    let caps = ExactCaps::default();
    let within_cap = graph.vertex_count() <= caps.max_vertices
        && graph.edge_count() <= caps.max_edges
        && graph.max_degree_bound() <= caps.max_degree;
    let force_exact = args.has("exact");
    let force_mc = args.has("mc");
    if force_exact && force_mc {
        return Outcome::fail(EXIT_INPUT, "--exact and --mc are mutually exclusive".into());
    }
    let use_exact = if force_exact {
        if !within_cap {
            return Outcome::fail(
                EXIT_CAP,
                format!(
                    "instance exceeds the exact cap ({} vertices, {} edges, degree {}); try --mc",
                    graph.vertex_count(),
                    graph.edge_count(),
                    graph.max_degree_bound()
                ),
            );
        }
        true
    } else if force_mc {
        false
    } else {
        within_cap
    };

    if use_exact {
        let mut joint = match exact_pipeline_distribution(&graph, variant, caps) {
            Ok(j) => j,
            Err(VerifyError::OverCap { detail }) => {
                return Outcome::fail(EXIT_CAP, format!("{detail}; try --mc"))
            }
            Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("exact verifier: {e}")),
        };
        let report = match check_k_dependence_exact(&mut joint, k, 2) {
            Ok(r) => r,
            Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("exact verifier: {e}")),
        };
        let doc = document::exact_report_document(&source, variant.name(), seed, &graph, &report);
        Outcome {
            code: if report.verdict { EXIT_OK } else { EXIT_VERDICT_FAIL },
            stdout: doc,
            stderr: String::new(),
        }
    } else {
        let mut cfg = McConfig::default();
        if let Ok(Some(t)) = args.get_u64("trials") {
            cfg.trials = t;
        }
        if let Ok(Some(j)) = args.get_usize("jobs") {
            cfg.jobs = j.max(1);
        }
        if let Ok(Some(p)) = args.get_usize("pairs") {
            cfg.max_pairs = p;
        }
        let sampler = PipelineSampler { graph: &graph, variant, master: VertexRandomness::new(seed) };
        let report = match check_k_dependence_mc(&graph, &sampler, k, seed, &cfg) {
            Ok(r) => r,
            Err(McError::TooFewTrials { trials }) => {
                return Outcome::fail(EXIT_INPUT, format!("--trials {trials} is below the 1000 minimum"))
            }
            Err(e) => return Outcome::fail(EXIT_INTERNAL, format!("monte carlo: {e}")),
        };
        let doc = document::mc_report_document(&source, &graph, &report);
        Outcome {
            code: if report.verdict { EXIT_OK } else { EXIT_VERDICT_FAIL },
            stdout: doc,
            stderr: String::new(),
        }
    }
}

fn cmd_oracle(args: &Args) -> Outcome {
    let topology = match args.get("topology") {
        Some("path") => Topology::Path,
        Some("cycle") => Topology::Cycle,
        Some(other) => return Outcome::fail(EXIT_INPUT, format!("unknown topology '{other}'")),
        None => return Outcome::fail(EXIT_INPUT, "--topology path|cycle is required".into()),
    };
    let Some(n) = args.get_usize("n").unwrap_or(None) else {
        return Outcome::fail(EXIT_INPUT, "--n LENGTH is required".into());
    };
    let q = match args.get_usize("q") {
        Ok(Some(q)) if (3..=4).contains(&q) => q as u8,
        Ok(Some(q)) => return Outcome::fail(EXIT_INPUT, format!("--q must be 3 or 4, got {q}")),
        Ok(None) => 4,
        Err(e) => return Outcome::fail(EXIT_INPUT, e),
    };
    let cap = args.get_usize("cap").unwrap_or(None).unwrap_or(DEFAULT_ORACLE_CAP);
    match exact_line_distribution_with_cap(topology, n, q, cap) {
        Ok(dist) => Outcome::ok(dist.dump()),
        Err(e @ (LineError::OverCap { .. } | LineError::OutsideOracleDomain(_))) => {
            Outcome::fail(EXIT_CAP, e.to_string())
        }
        Err(e) => Outcome::fail(EXIT_INPUT, e.to_string()),
    }
}

/// Writes stdout to `--out` when given, otherwise to the process stdout.
pub fn deliver(args_out: Option<&str>, outcome: &Outcome) -> std::io::Result<()> {
    if !outcome.stdout.is_empty() {
        match args_out {
            Some(path) => std::fs::write(path, &outcome.stdout)?,
            None => std::io::stdout().write_all(outcome.stdout.as_bytes())?,
        }
    }
    if !outcome.stderr.is_empty() {
        eprintln!("{}", outcome.stderr);
    }
    Ok(())
}

pub fn out_flag(argv: &[String]) -> Option<String> {
    Args::parse(argv).ok().and_then(|a| a.get("out").map(str::to_string))
}
