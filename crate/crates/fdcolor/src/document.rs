//! Output documents: JSON with a fixed field order and fixed float
//! formatting, so identical configurations replay byte-identically.

use std::fmt::Write as _;

use fdcolor_core::graph::Graph;
use fdcolor_core::pipeline::ColorAssignment;
use fdcolor_core::verify::{Discrepancy, ExactDependenceReport};
use num_rational::BigRational;

use crate::mc::{McPairRecord, McReport};

fn push_graph(out: &mut String, indent: &str, source: &str, g: &Graph) {
    let _ = writeln!(out, "{indent}\"graph\": {{");
    let _ = writeln!(out, "{indent}  \"source\": \"{source}\",");
    let _ = writeln!(out, "{indent}  \"vertex_count\": {},", g.vertex_count());
    let _ = writeln!(out, "{indent}  \"edge_count\": {},", g.edge_count());
    let _ = writeln!(out, "{indent}  \"max_degree_bound\": {}", g.max_degree_bound());
    let _ = write!(out, "{indent}}}");
}

fn ids(list: &[usize]) -> String {
    let inner: Vec<String> = list.iter().map(|v| v.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

fn rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn coloring_document(
    source: &str,
    seed: u64,
    g: &Graph,
    assignment: &ColorAssignment,
    flat: &[u64],
    proper: bool,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"command\": \"sample\",");
    let _ = writeln!(out, "  \"variant\": \"{}\",", assignment.variant.name());
    let _ = writeln!(out, "  \"seed\": {seed},");
    push_graph(&mut out, "  ", source, g);
    let _ = writeln!(out, ",");
    let _ = writeln!(out, "  \"palette\": {},", assignment.q);
    let _ = writeln!(out, "  \"arity\": {},", assignment.arity());
    let _ = writeln!(out, "  \"proper\": {proper},");
    let _ = writeln!(out, "  \"vertices\": [");
    for v in 0..g.vertex_count() {
        let tuple: Vec<String> = assignment.tuples[v].iter().map(|c| c.to_string()).collect();
        let comma = if v + 1 < g.vertex_count() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"id\": {v}, \"tuple\": [{}], \"color\": {}}}{comma}",
            tuple.join(", "),
            flat[v]
        );
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"levels\": [");
    for (i, level) in assignment.levels.iter().enumerate() {
        let edges: Vec<String> = level
            .kept_edges
            .iter()
            .map(|&(x, y, label)| format!("[{x}, {y}, {label}]"))
            .collect();
        let comma = if i + 1 < assignment.levels.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"bound\": {}, \"isolated\": {}, \"edges\": [{}]}}{comma}",
            level.bound,
            ids(&level.isolated),
            edges.join(", ")
        );
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

pub fn exact_report_document(
    source: &str,
    variant: &str,
    seed: u64,
    g: &Graph,
    report: &ExactDependenceReport,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"command\": \"verify\",");
    let _ = writeln!(out, "  \"mode\": \"exact\",");
    let _ = writeln!(out, "  \"variant\": \"{variant}\",");
    let _ = writeln!(out, "  \"seed\": {seed},");
    let _ = writeln!(out, "  \"k\": {},", report.k);
    let _ = writeln!(out, "  \"window_cap\": {},", report.window_cap);
    push_graph(&mut out, "  ", source, g);
    let _ = writeln!(out, ",");
    let _ = writeln!(out, "  \"pairs\": [");
    for (i, p) in report.pairs.iter().enumerate() {
        let dist = p.distance.map_or("null".to_string(), |d| d.to_string());
        let (metric, value) = match &p.discrepancy {
            Discrepancy::MaxAbs(r) => ("max_abs", rational(r)),
            Discrepancy::L2Squared(r) => ("l2_sq", rational(r)),
        };
        let comma = if i + 1 < report.pairs.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"a\": {}, \"b\": {}, \"distance\": {dist}, \"metric\": \"{metric}\", \"discrepancy\": \"{value}\"}}{comma}",
            ids(&p.a),
            ids(&p.b)
        );
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"max_discrepancy\": \"{}\",", rational(&report.max_discrepancy));
    let _ = writeln!(out, "  \"verdict\": \"{}\"", if report.verdict { "PASS" } else { "FAIL" });
    let _ = writeln!(out, "}}");
    out
}

fn push_mc_record(out: &mut String, r: &McPairRecord, comma: &str) {
    let dist = r.distance.map_or("null".to_string(), |d| d.to_string());
    let _ = writeln!(
        out,
        "    {{\"a\": {}, \"b\": {}, \"distance\": {dist}, \"slot_a\": {}, \"slot_b\": {}, \
         \"tv\": {:.8}, \"radius\": {:.8}, \"pass\": {}}}{comma}",
        ids(&r.a),
        ids(&r.b),
        r.worst_slot.0,
        r.worst_slot.1,
        r.tv,
        r.radius,
        r.pass
    );
}

pub fn mc_report_document(source: &str, g: &Graph, report: &McReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"command\": \"verify\",");
    let _ = writeln!(out, "  \"mode\": \"mc\",");
    let _ = writeln!(out, "  \"variant\": \"{}\",", report.sampler);
    let _ = writeln!(out, "  \"seed\": {},", report.seed);
    let _ = writeln!(out, "  \"k\": {},", report.k);
    let _ = writeln!(out, "  \"trials\": {},", report.trials);
    let _ = writeln!(out, "  \"tables_tested\": {},", report.tables_tested);
    push_graph(&mut out, "  ", source, g);
    let _ = writeln!(out, ",");
    let _ = writeln!(out, "  \"pairs\": [");
    for (i, r) in report.pairs.iter().enumerate() {
        let comma = if i + 1 < report.pairs.len() { "," } else { "" };
        push_mc_record(&mut out, r, comma);
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"controls\": [");
    for (i, r) in report.controls.iter().enumerate() {
        let comma = if i + 1 < report.controls.len() { "," } else { "" };
        push_mc_record(&mut out, r, comma);
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(
        out,
        "  \"control_dependence_detected\": {},",
        report.control_dependence_detected
    );
    let _ = writeln!(out, "  \"warnings\": [");
    for (i, w) in report.warnings.iter().enumerate() {
        let comma = if i + 1 < report.warnings.len() { "," } else { "" };
        let _ = writeln!(out, "    \"{w}\"{comma}");
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"verdict\": \"{}\"", if report.verdict { "PASS" } else { "FAIL" });
    let _ = writeln!(out, "}}");
    out
}
