//! The two top-level colorings.
//!
//! Both run the same recursion on the degree bound: strip isolated vertices,
//! let everyone point at a random neighbor to form the labeled digraph,
//! color each label subgraph component by an insertion measure, hand every
//! other vertex an independent uniform coordinate, then delete the digraph's
//! undirected edges and recurse on the smaller-degree remainder.
//!
//! The invariant variant colors components (paths and cycles; 2-cycles lose
//! a random edge first) with 3 symbols. The finitary-factor variant first
//! removes directed cycles with the local-maximum marking, so its label
//! subgraphs are disjoint paths, colored with 4 symbols.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::decomp::{
    build_labeled_digraph_active, break_cycles, extract_components, ComponentKind, DecompError,
    LabeledDigraph,
};
use crate::graph::{Graph, VertexId};
use crate::line::{sample_line, sample_line_rejection, LineError, Topology, DEFAULT_RETRY_CAP};
use crate::randomness::{level_tag, ComponentStream, PerturbedRandomness, VertexRandomness, VertexStreams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Invariant,
    Fiid,
}

impl Variant {
    pub fn palette(self) -> u8 {
        match self {
            Variant::Invariant => 3,
            Variant::Fiid => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Invariant => "invariant",
            Variant::Fiid => "fiid",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "invariant" => Ok(Variant::Invariant),
            "fiid" => Ok(Variant::Fiid),
            other => Err(alloc::format!("unknown variant '{other}' (expected invariant|fiid)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineError {
    Decomp(DecompError),
    Line(LineError),
    FlattenOverflow { arity: usize, q: u8 },
    RaggedTuples,
}

impl From<DecompError> for PipelineError {
    fn from(e: DecompError) -> Self {
        PipelineError::Decomp(e)
    }
}

impl From<LineError> for PipelineError {
    fn from(e: LineError) -> Self {
        PipelineError::Line(e)
    }
}

impl core::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PipelineError::Decomp(e) => write!(f, "{e}"),
            PipelineError::Line(e) => write!(f, "{e}"),
            PipelineError::FlattenOverflow { arity, q } => {
                write!(f, "flattened palette {q}^{arity} exceeds u64")
            }
            PipelineError::RaggedTuples => write!(f, "tuples have unequal arity"),
        }
    }
}

/// What one level of the recursion did; kept for verification and reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    /// Degree bound of this level (also its coordinate count).
    pub bound: usize,
    /// Directed edges of the digraph whose undirected version was removed,
    /// i.e. D for the invariant variant and D' for the finitary one.
    pub kept_edges: Vec<(VertexId, VertexId, u8)>,
    /// Vertices stripped as isolated at this level.
    pub isolated: Vec<VertexId>,
}

/// Per-vertex color tuples. Coordinates are listed level-major starting at
/// the top level (bound d), `bound` symbols per level, values `1..=q`; total
/// arity `d(d+1)/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorAssignment {
    pub d: usize,
    pub q: u8,
    pub variant: Variant,
    pub tuples: Vec<Vec<u8>>,
    pub levels: Vec<LevelTrace>,
}

impl ColorAssignment {
    pub fn arity(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    /// Adjacent vertices must differ somewhere in their tuples.
    pub fn is_proper(&self, g: &Graph) -> bool {
        g.edges().iter().all(|&(a, b)| self.tuples[a] != self.tuples[b])
    }

    /// Coordinate slot of `(level bound, label)` within a tuple.
    pub fn slot(&self, bound: usize, label: u8) -> usize {
        debug_assert!((1..=self.d).contains(&bound));
        debug_assert!((1..=bound as u8).contains(&label));
        let before: usize = (bound + 1..=self.d).sum();
        before + (label as usize - 1)
    }
}

/// Injective flattening of tuples to integers below `q^arity`.
pub fn flatten(assignment: &ColorAssignment) -> Result<Vec<u64>, PipelineError> {
    let arity = assignment.arity();
    let q = assignment.q;
    if arity as u32 * (64 - (q as u64 - 1).leading_zeros()) > 63 {
        return Err(PipelineError::FlattenOverflow { arity, q });
    }
    let mut out = Vec::with_capacity(assignment.tuples.len());
    for tuple in &assignment.tuples {
        if tuple.len() != arity {
            return Err(PipelineError::RaggedTuples);
        }
        let mut code = 0u64;
        for &c in tuple.iter().rev() {
            code = code * q as u64 + (c as u64 - 1);
        }
        out.push(code);
    }
    Ok(out)
}

pub fn color_invariant<R: VertexStreams>(g: &Graph, rng: &R) -> Result<ColorAssignment, PipelineError> {
    color(g, Variant::Invariant, rng)
}

pub fn color_fiid<R: VertexStreams>(g: &Graph, rng: &R) -> Result<ColorAssignment, PipelineError> {
    color(g, Variant::Fiid, rng)
}

/// Strips every still-remaining degree-0 vertex at level `bound`: each one
/// takes uniform coordinates for this level and all deeper ones at once (the
/// total arity stays flat across vertices) and leaves the recursion.
pub fn strip_isolated<R: VertexStreams>(
    g: &Graph,
    bound: usize,
    q: u8,
    rng: &R,
    remaining: &mut [bool],
    tuples: &mut [Vec<u8>],
) -> Vec<VertexId> {
    let isolated: Vec<VertexId> = (0..g.vertex_count())
        .filter(|&v| remaining[v] && g.degree(v) == 0)
        .collect();
    let iso_tag = level_tag("iso", bound, 0);
    for &v in &isolated {
        let slots = bound * (bound + 1) / 2;
        for idx in 0..slots {
            let c = rng.uniform_choice(v, &iso_tag, idx as u64, q as u64).expect("q >= 1");
            tuples[v].push(c as u8 + 1);
        }
        remaining[v] = false;
    }
    isolated
}

pub fn color<R: VertexStreams>(g: &Graph, variant: Variant, rng: &R) -> Result<ColorAssignment, PipelineError> {
    let n = g.vertex_count();
    let d = g.max_degree_bound();
    let q = variant.palette();
    let mut tuples: Vec<Vec<u8>> = vec![Vec::with_capacity(d * (d + 1) / 2); n];
    let mut levels = Vec::with_capacity(d);
    let mut current = g.clone();
    let mut remaining = vec![true; n];

    for bound in (1..=d).rev() {
        let isolated = strip_isolated(&current, bound, q, rng, &mut remaining, &mut tuples);

        let active: Vec<VertexId> = (0..n).filter(|&v| remaining[v]).collect();
        if active.is_empty() {
            levels.push(LevelTrace { bound, kept_edges: Vec::new(), isolated });
            continue;
        }

        let digraph = build_labeled_digraph_active(&current, bound, rng, bound)?;
        let used: LabeledDigraph = match variant {
            Variant::Invariant => digraph,
            Variant::Fiid => break_cycles(&digraph, rng, bound)?,
        };

        let mut level_coords: Vec<Option<u8>> = vec![None; n];
        for label in 1..=bound as u8 {
            level_coords.iter_mut().for_each(|c| *c = None);
            let ins_tag = level_tag("ins", bound, label);
            let free_tag = level_tag("free", bound, label);
            let cyc2_tag = level_tag("cyc2", bound, label);
            for comp in extract_components(&used, label) {
                let len = comp.vertices.len();
                match comp.kind {
                    ComponentKind::Path => {
                        let mut stream = ComponentStream::new(rng, &comp.vertices, &ins_tag);
                        let sample = sample_line(Topology::Path, len, q, &mut stream)?;
                        for (pos, &v) in comp.vertices.iter().enumerate() {
                            level_coords[v] = Some(sample.colors[pos] + 1);
                        }
                    }
                    ComponentKind::Cycle if len == 2 => {
                        debug_assert_eq!(variant, Variant::Invariant, "cycles survive only in the invariant variant");
                        // Delete one of the two directed edges at random and
                        // color the remaining 2-path.
                        let (a, b) = (comp.vertices[0], comp.vertices[1]);
                        let delete_first = rng.uniform_choice(a, &cyc2_tag, 0, 2).expect("two-sided") == 0;
                        let path = if delete_first { [b, a] } else { [a, b] };
                        let mut stream = ComponentStream::new(rng, &path, &ins_tag);
                        let sample = sample_line(Topology::Path, 2, q, &mut stream)?;
                        level_coords[path[0]] = Some(sample.colors[0] + 1);
                        level_coords[path[1]] = Some(sample.colors[1] + 1);
                    }
                    ComponentKind::Cycle => {
                        debug_assert_eq!(variant, Variant::Invariant, "cycles survive only in the invariant variant");
                        let mut stream = ComponentStream::new(rng, &comp.vertices, &ins_tag);
                        let sample =
                            sample_line_rejection(Topology::Cycle, len, q, &mut stream, DEFAULT_RETRY_CAP)?;
                        for (pos, &v) in comp.vertices.iter().enumerate() {
                            level_coords[v] = Some(sample.colors[pos] + 1);
                        }
                    }
                }
            }
            for &v in &active {
                let c = match level_coords[v] {
                    Some(c) => c,
                    None => {
                        rng.uniform_choice(v, &free_tag, 0, q as u64).expect("q >= 1") as u8 + 1
                    }
                };
                tuples[v].push(c);
            }
        }

        let kept = used.directed_edges();
        debug_assert!(kept.iter().all(|&(x, y, label)| {
            let slot_offset = tuples[x].len() - bound;
            tuples[x][slot_offset + label as usize - 1] != tuples[y][slot_offset + label as usize - 1]
        }));
        current = current.without_edges(
            &kept.iter().map(|&(x, y, _)| (x, y)).collect::<Vec<_>>(),
        );
        levels.push(LevelTrace { bound, kept_edges: kept, isolated });
    }

    debug_assert!(tuples.iter().all(|t| t.len() == d * (d + 1) / 2));
    Ok(ColorAssignment { d, q, variant, tuples, levels })
}

/// Smallest radius R such that reseeding every vertex farther than R from
/// `v` (for each of `salts` fresh reseedings) leaves v's tuple unchanged.
/// Always terminates: at the eccentricity of `v` nothing is reseeded.
pub fn minimal_stable_radius(
    g: &Graph,
    variant: Variant,
    seed: u64,
    v: VertexId,
    salts: &[u64],
) -> Result<usize, PipelineError> {
    let base_rng = VertexRandomness::new(seed);
    let baseline = color(g, variant, &base_rng)?;
    let dist = g.bfs(&[v]);
    let ecc = dist.iter().filter_map(|d| *d).max().unwrap_or(0);
    for radius in 0..=ecc {
        let mask: Vec<bool> = (0..g.vertex_count())
            .map(|u| dist[u].is_none_or(|du| du > radius))
            .collect();
        let mut stable = true;
        for &salt in salts {
            let perturbed = PerturbedRandomness::new(base_rng, salt, mask.clone());
            let recolored = color(g, variant, &perturbed)?;
            if recolored.tuples[v] != baseline.tuples[v] {
                stable = false;
                break;
            }
        }
        if stable {
            return Ok(radius);
        }
    }
    Ok(ecc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::randomness::VertexRandomness;

    #[test]
    fn single_edge_invariant_is_proper_with_three_symbols() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        for seed in 0..200 {
            let rng = VertexRandomness::new(seed);
            let a = color_invariant(&g, &rng).unwrap();
            assert_eq!(a.arity(), 1);
            assert!(a.tuples.iter().all(|t| (1..=3).contains(&t[0])));
            assert!(a.is_proper(&g), "seed {seed}");
        }
    }

    #[test]
    fn triangle_samples_are_proper_tuples() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let master = VertexRandomness::new(31337);
        for variant in [Variant::Invariant, Variant::Fiid] {
            for t in 0..10_000u64 {
                let rng = master.derive_trial(t);
                let a = color(&g, variant, &rng).unwrap();
                assert_eq!(a.arity(), 3);
                let q = variant.palette();
                assert!(a.tuples.iter().flatten().all(|&c| (1..=q).contains(&c)));
                assert!(a.is_proper(&g), "variant {variant:?} trial {t}");
            }
        }
    }

    #[test]
    fn star_fiid_arity_and_palette_bound() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let rng = VertexRandomness::new(5);
        let a = color_fiid(&g, &rng).unwrap();
        assert_eq!(a.arity(), 6);
        let flat = flatten(&a).unwrap();
        assert!(flat.iter().all(|&c| c < 4u64.pow(6)));
    }

    #[test]
    fn flatten_is_injective_on_tuples() {
        let g = Graph::path(6).unwrap();
        let rng = VertexRandomness::new(77);
        let a = color_fiid(&g, &rng).unwrap();
        let flat = flatten(&a).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.tuples[i] == a.tuples[j], flat[i] == flat[j]);
            }
        }
    }

    #[test]
    fn per_level_coordinates_differ_across_kept_edges() {
        let g = Graph::random_regular(20, 3, 3).unwrap();
        for seed in 0..50 {
            let rng = VertexRandomness::new(seed);
            for variant in [Variant::Invariant, Variant::Fiid] {
                let a = color(&g, variant, &rng).unwrap();
                for trace in &a.levels {
                    for &(x, y, label) in &trace.kept_edges {
                        let slot = a.slot(trace.bound, label);
                        assert_ne!(a.tuples[x][slot], a.tuples[y][slot]);
                    }
                }
            }
        }
    }

    #[test]
    fn replays_are_identical() {
        let g = Graph::torus(4, 4).unwrap();
        let rng = VertexRandomness::new(99);
        let a = color_fiid(&g, &rng).unwrap();
        let b = color_fiid(&g, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isolated_vertex_gets_uniform_color_and_is_traced() {
        // One edge plus an isolated vertex: the isolated vertex is stripped
        // at the top level and its single coordinate is uniform on the
        // 3-symbol palette.
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let master = VertexRandomness::new(404);
        let mut counts = [0u64; 3];
        let n_trials = 30_000u64;
        for t in 0..n_trials {
            let a = color_invariant(&g, &master.derive_trial(t)).unwrap();
            assert_eq!(a.levels[0].isolated, alloc::vec![2]);
            counts[(a.tuples[2][0] - 1) as usize] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n_trials as f64).sqrt();
        for &c in &counts {
            assert!((c as f64 / n_trials as f64 - p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn empty_graph_gets_empty_tuples() {
        let g = Graph::from_edges(3, &[]).unwrap();
        let rng = VertexRandomness::new(1);
        let a = color_invariant(&g, &rng).unwrap();
        assert_eq!(a.arity(), 0);
        assert!(a.tuples.iter().all(Vec::is_empty));
        assert_eq!(flatten(&a).unwrap(), alloc::vec![0, 0, 0]);
    }
}
