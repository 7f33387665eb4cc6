//! Construction machinery shared by both colorings: the random neighbor
//! choice `h(x)` with injective label maps at each head, the resulting
//! labeled functional digraph, its per-label path/cycle components, and the
//! local-maximum marking that removes all directed cycles.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{Graph, VertexId};
use crate::randomness::{mix64, VertexStreams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompError {
    IsolatedVertex(VertexId),
    MissingOutEdge(VertexId),
    BadParameter(String),
}

impl core::fmt::Display for DecompError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DecompError::IsolatedVertex(v) => write!(f, "vertex {v} is isolated"),
            DecompError::MissingOutEdge(v) => write!(f, "vertex {v} has no outgoing edge"),
            DecompError::BadParameter(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutEdge {
    pub head: VertexId,
    pub label: u8,
}

/// Digraph with at most one labeled out-edge per vertex. Right after
/// construction every non-skipped vertex has outdegree exactly 1; cycle
/// breaking clears some out-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDigraph {
    pub out: Vec<Option<OutEdge>>,
}

impl LabeledDigraph {
    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut indeg = vec![0usize; self.out.len()];
        for e in self.out.iter().flatten() {
            indeg[e.head] += 1;
        }
        indeg
    }

    /// Undirected edge set touched by the digraph, deduplicated.
    pub fn undirected_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut edges: Vec<(VertexId, VertexId)> = self
            .out
            .iter()
            .enumerate()
            .filter_map(|(x, e)| e.map(|e| (x.min(e.head), x.max(e.head))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Directed edges `(tail, head, label)` in tail order.
    pub fn directed_edges(&self) -> Vec<(VertexId, VertexId, u8)> {
        self.out
            .iter()
            .enumerate()
            .filter_map(|(x, e)| e.map(|e| (x, e.head, e.label)))
            .collect()
    }

    pub fn has_directed_cycle(&self) -> bool {
        // Functional digraphs: follow pointers with a two-colored visit mark.
        let n = self.out.len();
        let mut state = vec![0u8; n]; // 0 unseen, 1 on stack, 2 done
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut v = start;
            loop {
                if state[v] == 1 {
                    return true;
                }
                if state[v] == 2 {
                    break;
                }
                state[v] = 1;
                path.push(v);
                match self.out[v] {
                    Some(e) => v = e.head,
                    None => break,
                }
            }
            for p in path {
                state[p] = 2;
            }
        }
        false
    }

    /// Vertices with no incident digraph edge at all.
    pub fn isolated_vertices(&self, considered: &[bool]) -> Vec<VertexId> {
        let indeg = self.in_degrees();
        (0..self.out.len())
            .filter(|&v| considered[v] && self.out[v].is_none() && indeg[v] == 0)
            .collect()
    }

    /// Debug dump: one `x -> h(x) [label i] [marked]` line per vertex.
    pub fn dump(&self, marked: Option<&[bool]>) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for (x, e) in self.out.iter().enumerate() {
            if let Some(e) = e {
                let _ = write!(s, "{} -> {} [label {}]", x, e.head, e.label);
                if let Some(m) = marked {
                    if m[x] {
                        let _ = write!(s, " [marked]");
                    }
                }
                let _ = writeln!(s);
            }
        }
        s
    }
}

/// Builds the labeled digraph: every vertex of degree >= 1 picks a uniform
/// random neighbor `h(x)`, and the edge `(x, h(x))` carries the label that
/// the injection drawn at `h(x)` assigns to `x`. Degree-0 vertices must have
/// been stripped first.
pub fn build_labeled_digraph<R: VertexStreams>(
    g: &Graph,
    d: usize,
    rng: &R,
    level: usize,
) -> Result<LabeledDigraph, DecompError> {
    for v in 0..g.vertex_count() {
        if g.degree(v) == 0 {
            return Err(DecompError::IsolatedVertex(v));
        }
    }
    build_labeled_digraph_active(g, d, rng, level)
}

/// Same construction, silently skipping degree-0 vertices; used inside the
/// pipeline where stripped vertices remain in the vertex set.
pub(crate) fn build_labeled_digraph_active<R: VertexStreams>(
    g: &Graph,
    d: usize,
    rng: &R,
    level: usize,
) -> Result<LabeledDigraph, DecompError> {
    let n = g.vertex_count();
    let h_tag = crate::randomness::level_tag("h", level, 0);
    let inj_tag = crate::randomness::level_tag("inj", level, 0);
    // Injections are drawn per vertex over its full neighbor list, so the
    // label of (x, h(x)) is a pure function of streams within distance 1.
    let mut injections: Vec<Vec<u8>> = Vec::with_capacity(n);
    for v in 0..n {
        let inj = rng
            .random_injection(v, &inj_tag, g.neighbors(v), d)
            .map_err(|_| DecompError::BadParameter("degree exceeds label range".into()))?;
        injections.push(inj);
    }
    let mut out: Vec<Option<OutEdge>> = vec![None; n];
    for x in 0..n {
        let deg = g.degree(x);
        if deg == 0 {
            continue;
        }
        let pick = rng
            .uniform_choice(x, &h_tag, 0, deg as u64)
            .expect("deg >= 1") as usize;
        let head = g.neighbors(x)[pick];
        let pos = g
            .neighbors(head)
            .binary_search(&x)
            .expect("adjacency is symmetric");
        let label = injections[head][pos];
        out[x] = Some(OutEdge { head, label });
    }
    Ok(LabeledDigraph { out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Path,
    Cycle,
}

/// One component of a label subgraph: a directed path (vertices in
/// tail-to-head order) or a directed cycle (rotated to start at its smallest
/// vertex, following edge direction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub kind: ComponentKind,
    pub vertices: Vec<VertexId>,
}

/// Splits the label-`i` edges into maximal directed paths and cycles. Within
/// one label every vertex has indegree <= 1 (injectivity at the head) and
/// outdegree <= 1, so the partition is forced.
pub fn extract_components(d: &LabeledDigraph, label: u8) -> Vec<Component> {
    let n = d.out.len();
    let mut next: Vec<Option<VertexId>> = vec![None; n];
    let mut prev: Vec<Option<VertexId>> = vec![None; n];
    for (x, e) in d.out.iter().enumerate() {
        if let Some(e) = e {
            if e.label == label {
                next[x] = Some(e.head);
                debug_assert!(prev[e.head].is_none(), "duplicate in-label at {}", e.head);
                prev[e.head] = Some(x);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    // Paths start at vertices with an out-edge but no in-edge.
    for start in 0..n {
        if seen[start] || next[start].is_none() || prev[start].is_some() {
            continue;
        }
        let mut verts = vec![start];
        seen[start] = true;
        let mut v = start;
        while let Some(u) = next[v] {
            verts.push(u);
            seen[u] = true;
            v = u;
        }
        components.push(Component { kind: ComponentKind::Path, vertices: verts });
    }
    // Remaining label edges form cycles.
    for start in 0..n {
        if seen[start] || next[start].is_none() {
            continue;
        }
        let mut verts = vec![start];
        seen[start] = true;
        let mut v = next[start].unwrap();
        while v != start {
            verts.push(v);
            seen[v] = true;
            v = next[v].unwrap();
        }
        // Canonical rotation: smallest vertex first, direction preserved.
        let min_pos = verts
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| v)
            .map(|(i, _)| i)
            .unwrap();
        verts.rotate_left(min_pos);
        components.push(Component { kind: ComponentKind::Cycle, vertices: verts });
    }
    components.sort_by_key(|c| c.vertices[0]);
    components
}

/// Cycle breaking by local-maximum marking: for each vertex `x` with
/// indegree at least 1, the edge `(x, h(x))` is marked when `xi(h(x))`
/// exceeds both `xi(x)` and `xi(h(h(x)))`. Removing marked edges leaves no
/// directed cycle and no isolated vertex, and the decision at `x` reads
/// `xi` only at `x`, `h(x)` and `h(h(x))`.
pub fn break_cycles<R: VertexStreams>(
    d: &LabeledDigraph,
    rng: &R,
    level: usize,
) -> Result<LabeledDigraph, DecompError> {
    let tag = crate::randomness::level_tag("xi", level, 0);
    let n = d.out.len();
    let keys: Vec<u64> = (0..n).map(|v| rng.word(v, &tag, 0)).collect();
    break_cycles_with_keys(d, |v| keys[v])
}

/// Cycle breaking with explicit xi values; ties resolved by vertex id.
pub fn break_cycles_with_keys<K, F>(d: &LabeledDigraph, xi: F) -> Result<LabeledDigraph, DecompError>
where
    K: PartialOrd,
    F: Fn(VertexId) -> K,
{
    let marked = marked_edges(d, &xi)?;
    let mut out = d.out.clone();
    for (x, m) in marked.iter().enumerate() {
        if *m {
            out[x] = None;
        }
    }
    Ok(LabeledDigraph { out })
}

/// The marking predicate itself, exposed for the acceptance checks.
pub fn marked_edges<K, F>(d: &LabeledDigraph, xi: &F) -> Result<Vec<bool>, DecompError>
where
    K: PartialOrd,
    F: Fn(VertexId) -> K,
{
    let n = d.out.len();
    let indeg = d.in_degrees();
    let greater = |a: VertexId, b: VertexId| -> bool {
        // Strict order on (xi, id); ties in xi have probability zero but the
        // id tie-break keeps the oracle and replays deterministic.
        match xi(a).partial_cmp(&xi(b)) {
            Some(core::cmp::Ordering::Greater) => true,
            Some(core::cmp::Ordering::Less) => false,
            _ => a > b,
        }
    };
    let mut marked = vec![false; n];
    for x in 0..n {
        let Some(e) = d.out[x] else { continue };
        if indeg[x] == 0 {
            continue;
        }
        let y = e.head;
        let z = d.out[y].ok_or(DecompError::MissingOutEdge(y))?.head;
        if greater(y, x) && greater(y, z) {
            marked[x] = true;
        }
    }
    Ok(marked)
}

/// Degree-0 vertices among `remaining`; the pipeline colors them uniformly
/// and drops them from the level.
pub fn isolated_in(g: &Graph, remaining: &[bool]) -> Vec<VertexId> {
    (0..g.vertex_count())
        .filter(|&v| remaining[v] && g.degree(v) == 0)
        .collect()
}

/// Uniform random functional digraph on `n >= 2` vertices (each out-edge
/// points to a uniform other vertex), deterministic in the seed. Labels are
/// irrelevant for the cycle lemma, so they are fixed to 1.
pub fn random_functional_digraph(n: usize, seed: u64) -> LabeledDigraph {
    assert!(n >= 2);
    let mut state = mix64(seed ^ 0x6675_6e63_6469_6721);
    let mut next = || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix64(state)
    };
    let out = (0..n)
        .map(|v| {
            let mut head = (next() % (n as u64 - 1)) as usize;
            if head >= v {
                head += 1;
            }
            Some(OutEdge { head, label: 1 })
        })
        .collect();
    LabeledDigraph { out }
}
