//! Exact verification of pipeline outputs on small instances.
//!
//! `ExactJoint` computes the joint law of the full color tuples by summing
//! over every source of discreteness: neighbor choices (weight 1/deg),
//! injective label maps at each head, rank orders of the cycle-breaking
//! values, per-component insertion measures, and uniform off-component
//! coordinates. All arithmetic is integer numerators over explicit
//! denominators; no floating point touches the oracle path.
//!
//! Joint laws are held level-factored: one level of the recursion is a
//! mixture, over the residual graph it leaves behind, of product measures on
//! the level's coordinates tensored with the recursive law of the residual.
//! Window marginals materialize that product when it fits a budget;
//! otherwise independence of a window pair is decided exactly through the
//! squared L2 norm of `joint - marginal (x) marginal`, which expands into
//! per-level inner products of the mixture components and never materializes
//! the joint (`norm == 0` iff exact independence).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::decomp::{extract_components, marked_edges, Component, ComponentKind, LabeledDigraph, OutEdge};
use crate::graph::{Graph, VertexId, VertexSet};
use crate::line::{exact_line_distribution_with_cap, Topology};
use crate::pipeline::Variant;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyError {
    OverCap { detail: String },
    OverBudget { estimate: u128, budget: u128 },
    MissingVertex { vertex: VertexId },
    BadWindow(String),
    Internal(String),
}

impl core::fmt::Display for VerifyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VerifyError::OverCap { detail } => write!(f, "instance over exact-oracle cap: {detail}"),
            VerifyError::OverBudget { estimate, budget } => {
                write!(f, "estimated support {estimate} exceeds budget {budget}")
            }
            VerifyError::MissingVertex { vertex } => write!(f, "assignment misses vertex {vertex}"),
            VerifyError::BadWindow(m) => write!(f, "{m}"),
            VerifyError::Internal(m) => write!(f, "{m}"),
        }
    }
}

/// True iff every edge is bichromatic under the per-vertex tuples.
pub fn check_properness(g: &Graph, tuples: &[Vec<u8>]) -> Result<bool, VerifyError> {
    if tuples.len() != g.vertex_count() {
        let vertex = tuples.len().min(g.vertex_count());
        return Err(VerifyError::MissingVertex { vertex });
    }
    Ok(g.edges().iter().all(|&(a, b)| tuples[a] != tuples[b]))
}

/// Caps for the exact path; instances beyond them go to Monte Carlo.
#[derive(Debug, Clone, Copy)]
pub struct ExactCaps {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_degree: usize,
    /// Largest sparse support a marginal may materialize.
    pub product_budget: u128,
    /// Largest dense per-level vector (q^bound)^|S|.
    pub dense_budget: u128,
}

impl Default for ExactCaps {
    fn default() -> Self {
        ExactCaps {
            max_vertices: 6,
            max_edges: 8,
            max_degree: 3,
            product_budget: 3_000_000,
            dense_budget: 2_000_000,
        }
    }
}

/// Sparse measure over window tuple assignments: integer numerators over one
/// common denominator. Keys are level-major: for each level bound b = d..1,
/// for each window vertex in order, that level's `b` symbols (0-based).
#[derive(Debug, Clone)]
pub struct SparseMeasure {
    pub map: BTreeMap<Vec<u8>, BigInt>,
    pub den: BigInt,
}

impl SparseMeasure {
    pub fn point_mass() -> Self {
        let mut map = BTreeMap::new();
        map.insert(Vec::new(), BigInt::one());
        SparseMeasure { map, den: BigInt::one() }
    }

    pub fn total(&self) -> BigRational {
        let sum: BigInt = self.map.values().sum();
        BigRational::new(sum, self.den.clone())
    }

    pub fn prob(&self, key: &[u8]) -> BigRational {
        let num = self.map.get(key).cloned().unwrap_or_else(BigInt::zero);
        BigRational::new(num, self.den.clone())
    }

    /// Marginal onto a subset of window slots described by a key projection.
    fn project(&self, proj: &KeyProjection) -> SparseMeasure {
        let mut map: BTreeMap<Vec<u8>, BigInt> = BTreeMap::new();
        for (key, num) in &self.map {
            let sub = proj.apply(key);
            map.entry(sub).and_modify(|n| *n += num).or_insert_with(|| num.clone());
        }
        SparseMeasure { map, den: self.den.clone() }
    }
}

/// Extracts the byte positions of a sub-window from a full-window key.
struct KeyProjection {
    positions: Vec<usize>,
}

impl KeyProjection {
    /// Window `s` (sorted) with per-vertex level blocks for bounds `d..=1`;
    /// keep the vertices at `keep_idx` (indices into `s`).
    fn new(s_len: usize, d: usize, keep_idx: &[usize]) -> Self {
        let mut positions = Vec::new();
        let mut offset = 0usize;
        for bound in (1..=d).rev() {
            for s_idx in 0..s_len {
                if keep_idx.contains(&s_idx) {
                    for j in 0..bound {
                        positions.push(offset + s_idx * bound + j);
                    }
                }
            }
            offset += s_len * bound;
        }
        // positions must come out in the sub-window's own layout order
        let mut ordered = Vec::with_capacity(positions.len());
        let mut offset = 0usize;
        for bound in (1..=d).rev() {
            for &s_idx in keep_idx {
                for j in 0..bound {
                    ordered.push(offset + s_idx * bound + j);
                }
            }
            offset += s_len * bound;
        }
        KeyProjection { positions: ordered }
    }

    fn apply(&self, key: &[u8]) -> Vec<u8> {
        self.positions.iter().map(|&p| key[p]).collect()
    }
}

/// Turns sampled 1-based tuples into the key layout used by marginals.
pub fn key_from_tuples(s: &[VertexId], d: usize, tuples: &[Vec<u8>]) -> Vec<u8> {
    let mut key = Vec::new();
    let mut slot_base = 0usize;
    for bound in (1..=d).rev() {
        for &v in s {
            for j in 0..bound {
                key.push(tuples[v][slot_base + j] - 1);
            }
        }
        slot_base += bound;
    }
    key
}

// ---------------------------------------------------------------------------
// Level enumeration
// ---------------------------------------------------------------------------

/// One level transition: the residual graph left behind and a dense measure
/// (numerators over the split's shared denominator) on the window's level
/// coordinates.
struct Transition {
    residual: EdgeSet,
    dense: Vec<BigInt>,
}

struct LevelSplit {
    transitions: Vec<Transition>,
    den: BigInt,
    q: usize,
    bound: usize,
    s_len: usize,
}

impl LevelSplit {
    /// Dense index of a full-window level assignment.
    fn slot_stride(&self, s_idx: usize, label_idx: usize) -> usize {
        self.q.pow((s_idx * self.bound + label_idx) as u32)
    }

    /// Marginalize a dense vector onto the sub-window `keep_idx`.
    fn project_dense(&self, dense: &[BigInt], keep_idx: &[usize]) -> Vec<BigInt> {
        let sub_dim = self.q.pow((keep_idx.len() * self.bound) as u32);
        let mut out = vec![BigInt::zero(); sub_dim];
        for (idx, num) in dense.iter().enumerate() {
            if num.is_zero() {
                continue;
            }
            let mut sub = 0usize;
            for (new_s, &s_idx) in keep_idx.iter().enumerate() {
                for j in 0..self.bound {
                    let digit = idx / self.slot_stride(s_idx, j) % self.q;
                    sub += digit * self.q.pow((new_s * self.bound + j) as u32);
                }
            }
            out[sub] += num;
        }
        out
    }
}

/// Undirected edge set of a residual graph, sorted.
type EdgeSet = Vec<(VertexId, VertexId)>;
/// Integer-weight marginal of a line law plus its total.
type LineMarginal = (Vec<(Vec<u8>, u64)>, u64);
/// Sparse dense-vector entries of one expanded structure: (residual,
/// entries, structure denominator, aggregated weight).
type ExpandedStructure = (EdgeSet, Vec<(usize, BigInt)>, BigInt, BigInt);

/// Exact joint law of the pipeline on a capped instance.
#[derive(Debug)]
pub struct ExactJoint {
    graph: Graph,
    variant: Variant,
    d: usize,
    q: u8,
    caps: ExactCaps,
    /// (topology, len, positions) -> marginal
    marg_cache: BTreeMap<(u8, usize, Vec<usize>), LineMarginal>,
    /// (residual edges, bound, window) -> measure
    measure_cache: BTreeMap<(EdgeSet, usize, Vec<VertexId>), SparseMeasure>,
}

pub fn exact_pipeline_distribution(
    g: &Graph,
    variant: Variant,
    caps: ExactCaps,
) -> Result<ExactJoint, VerifyError> {
    let cost = est_cost(g);
    if g.vertex_count() > caps.max_vertices
        || g.edge_count() > caps.max_edges
        || g.max_degree_bound() > caps.max_degree
    {
        return Err(VerifyError::OverCap {
            detail: format!(
                "{} vertices, {} edges, degree bound {} (caps {}/{}/{}); \
                 rough enumeration cost {cost} structure terms per level",
                g.vertex_count(),
                g.edge_count(),
                g.max_degree_bound(),
                caps.max_vertices,
                caps.max_edges,
                caps.max_degree
            ),
        });
    }
    Ok(ExactJoint {
        graph: g.clone(),
        variant,
        d: g.max_degree_bound(),
        q: variant.palette(),
        caps,
        marg_cache: BTreeMap::new(),
        measure_cache: BTreeMap::new(),
    })
}

/// Rough per-level enumeration cost: h-choices x labelings x rank orders.
fn est_cost(g: &Graph) -> u128 {
    let mut cost: u128 = 1;
    for v in 0..g.vertex_count() {
        cost = cost.saturating_mul(g.degree(v).max(1) as u128);
        cost = cost.saturating_mul(g.max_degree_bound().max(1) as u128);
    }
    let mut fact: u128 = 1;
    for i in 1..=g.vertex_count() as u128 {
        fact = fact.saturating_mul(i);
    }
    cost.saturating_mul(fact)
}

impl ExactJoint {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn clear_cache(&mut self) {
        self.measure_cache.clear();
    }

    /// Full joint over all vertices; only feasible on tiny alphabets.
    pub fn full_joint(&mut self) -> Result<SparseMeasure, VerifyError> {
        let all: Vec<VertexId> = (0..self.graph.vertex_count()).collect();
        self.marginal(&all)
    }

    /// Joint law of the full tuples on the window `s` (sorted, deduplicated).
    pub fn marginal(&mut self, s: &[VertexId]) -> Result<SparseMeasure, VerifyError> {
        let mut s = s.to_vec();
        s.sort_unstable();
        s.dedup();
        for &v in &s {
            if v >= self.graph.vertex_count() {
                return Err(VerifyError::BadWindow(format!("vertex {v} not in graph")));
            }
        }
        let edges = self.graph.edges();
        self.measure(&edges, self.d, &s)
    }

    fn measure(
        &mut self,
        state: &[(VertexId, VertexId)],
        bound: usize,
        s: &[VertexId],
    ) -> Result<SparseMeasure, VerifyError> {
        if bound == 0 {
            return Ok(SparseMeasure::point_mass());
        }
        let cache_key = (state.to_vec(), bound, s.to_vec());
        if let Some(m) = self.measure_cache.get(&cache_key) {
            return Ok(m.clone());
        }
        let split = self.level_split(state, bound, s)?;
        // Estimate before materializing the product.
        let mut estimate: u128 = 0;
        let mut deepers: Vec<SparseMeasure> = Vec::with_capacity(split.transitions.len());
        for t in &split.transitions {
            let deep = self.measure(&t.residual, bound - 1, s)?;
            let level_support = t.dense.iter().filter(|n| !n.is_zero()).count() as u128;
            estimate = estimate.saturating_add(level_support.saturating_mul(deep.map.len().max(1) as u128));
            deepers.push(deep);
        }
        if estimate > self.caps.product_budget {
            return Err(VerifyError::OverBudget { estimate, budget: self.caps.product_budget });
        }
        // Common denominator across transitions' deeper measures.
        let mut deep_den_lcm = BigInt::one();
        for deep in &deepers {
            deep_den_lcm = deep_den_lcm.lcm(&deep.den);
        }
        let den = &split.den * &deep_den_lcm;
        let mut map: BTreeMap<Vec<u8>, BigInt> = BTreeMap::new();
        for (t, deep) in split.transitions.iter().zip(&deepers) {
            let scale = &deep_den_lcm / &deep.den;
            for (idx, lnum) in t.dense.iter().enumerate() {
                if lnum.is_zero() {
                    continue;
                }
                let level_key = dense_index_to_bytes(idx, split.q, split.bound, split.s_len);
                for (dkey, dnum) in &deep.map {
                    let mut key = level_key.clone();
                    key.extend_from_slice(dkey);
                    let add = lnum * dnum * &scale;
                    map.entry(key).and_modify(|n| *n += &add).or_insert(add);
                }
            }
        }
        let out = SparseMeasure { map, den };
        self.measure_cache.insert(cache_key, out.clone());
        Ok(out)
    }

    /// Enumerates one level of the construction on the residual `state`:
    /// every neighbor choice, every injective in-label assignment and (for
    /// the finitary variant) every rank order of the cycle-breaking values,
    /// aggregated by (residual graph, window-local structure) and expanded
    /// into dense measures on the window's level coordinates.
    fn level_split(
        &mut self,
        state: &[(VertexId, VertexId)],
        bound: usize,
        s: &[VertexId],
    ) -> Result<LevelSplit, VerifyError> {
        let n = self.graph.vertex_count();
        let q = self.q as usize;
        let s_len = s.len();
        let dim_u128 = (q as u128).pow((s_len * bound) as u32);
        if dim_u128 > self.caps.dense_budget {
            return Err(VerifyError::OverBudget { estimate: dim_u128, budget: self.caps.dense_budget });
        }
        let dim = dim_u128 as usize;
        let graph = Graph::from_edges(n, state).expect("residual state is a valid graph");
        let active: Vec<VertexId> = (0..n).filter(|&v| graph.degree(v) > 0).collect();

        // Weight bookkeeping: every sigma has weight
        //   prod 1/deg(v) * prod (bound - |I_v|)!/bound! * [fiid] 1/|active|!
        // = m_sigma / den0 with integer m_sigma.
        let mut den0 = BigInt::one();
        for &v in &active {
            den0 *= BigInt::from(graph.degree(v));
            den0 *= factorial(bound);
        }
        if self.variant == Variant::Fiid {
            den0 *= factorial(active.len());
        }

        // sigma aggregation: (residual, structure) -> integer weight.
        let mut agg: BTreeMap<(EdgeSet, StructureKey), BigInt> = BTreeMap::new();

        if active.is_empty() {
            let key = StructureKey::default();
            agg.insert((state.to_vec(), key), BigInt::one());
        } else {
            self.enumerate_level(&graph, &active, bound, s, &mut agg)?;
        }

        // Common denominator over observed structures (component totals and
        // free-slot uniforms vary per structure).
        let mut struct_den_lcm = BigInt::one();
        let mut expanded: Vec<ExpandedStructure> = Vec::new();
        for ((residual, skey), weight) in agg {
            let (entries, sden) = self.expand_structure(&skey, bound, s_len, dim)?;
            struct_den_lcm = struct_den_lcm.lcm(&sden);
            expanded.push((residual, entries, sden, weight));
        }

        let mut by_residual: BTreeMap<EdgeSet, Vec<BigInt>> = BTreeMap::new();
        for (residual, entries, sden, weight) in expanded {
            let scale = &struct_den_lcm / &sden * &weight;
            let dense = by_residual.entry(residual).or_insert_with(|| vec![BigInt::zero(); dim]);
            for (idx, num) in entries {
                dense[idx] += num * &scale;
            }
        }

        let den = &den0 * &struct_den_lcm;
        let transitions: Vec<Transition> = by_residual
            .into_iter()
            .map(|(residual, dense)| Transition { residual, dense })
            .collect();
        if cfg!(debug_assertions) {
            let mass: BigInt = transitions.iter().flat_map(|t| t.dense.iter()).sum();
            debug_assert_eq!(mass, den, "level split mass must be 1");
        }
        Ok(LevelSplit { transitions, den, q, bound, s_len })
    }

    fn enumerate_level(
        &mut self,
        graph: &Graph,
        active: &[VertexId],
        bound: usize,
        s: &[VertexId],
        agg: &mut BTreeMap<(EdgeSet, StructureKey), BigInt>,
    ) -> Result<(), VerifyError> {
        let n = self.graph.vertex_count();
        // Odometer over h-choices.
        let mut h_idx = vec![0usize; active.len()];
        loop {
            let mut heads = vec![usize::MAX; n];
            for (i, &v) in active.iter().enumerate() {
                heads[v] = graph.neighbors(v)[h_idx[i]];
            }
            // In-neighbors per head, sorted for deterministic enumeration.
            let mut in_nbrs: Vec<Vec<VertexId>> = vec![Vec::new(); n];
            for &v in active {
                in_nbrs[heads[v]].push(v);
            }
            // Injective in-label assignments: per head an ordered injection of
            // its in-neighbors into 1..=bound; weight (bound - k)!/bound!.
            let heads_with_in: Vec<VertexId> =
                (0..n).filter(|&v| !in_nbrs[v].is_empty()).collect();
            let label_options: Vec<Vec<Vec<u8>>> = heads_with_in
                .iter()
                .map(|&v| injections(bound as u8, in_nbrs[v].len()))
                .collect();
            let mut m_sigma = BigInt::one();
            for &v in active {
                m_sigma *= factorial(bound - in_nbrs[v].len());
            }
            let mut label_idx = vec![0usize; heads_with_in.len()];
            loop {
                let mut out: Vec<Option<OutEdge>> = vec![None; n];
                for (hi, &head) in heads_with_in.iter().enumerate() {
                    let labels = &label_options[hi][label_idx[hi]];
                    for (j, &tail) in in_nbrs[head].iter().enumerate() {
                        out[tail] = Some(OutEdge { head, label: labels[j] });
                    }
                }
                let digraph = LabeledDigraph { out };
                match self.variant {
                    Variant::Invariant => {
                        self.record_sigma(graph, &digraph, bound, s, &m_sigma, agg)?;
                    }
                    Variant::Fiid => {
                        // All rank orders of the active vertices, weight 1/|active|!.
                        let mut perm: Vec<usize> = (0..active.len()).collect();
                        permute_all(&mut perm, &mut |p| {
                            let mut rank = vec![0usize; n];
                            for (pos, &ai) in p.iter().enumerate() {
                                rank[active[ai]] = pos + 1;
                            }
                            let marked = marked_edges(&digraph, &|v: VertexId| rank[v])
                                .expect("outdegree 1 on active vertices");
                            let mut out2 = digraph.out.clone();
                            for (x, m) in marked.iter().enumerate() {
                                if *m {
                                    out2[x] = None;
                                }
                            }
                            let pruned = LabeledDigraph { out: out2 };
                            self.record_sigma(graph, &pruned, bound, s, &m_sigma, agg)
                        })?;
                    }
                }
                if !advance(&mut label_idx, &label_options.iter().map(Vec::len).collect::<Vec<_>>()) {
                    break;
                }
            }
            let sizes: Vec<usize> = active.iter().map(|&v| graph.degree(v)).collect();
            if !advance(&mut h_idx, &sizes) {
                break;
            }
        }
        Ok(())
    }

    /// Registers one fully resolved level structure.
    fn record_sigma(
        &mut self,
        graph: &Graph,
        used: &LabeledDigraph,
        bound: usize,
        s: &[VertexId],
        m_sigma: &BigInt,
        agg: &mut BTreeMap<(EdgeSet, StructureKey), BigInt>,
    ) -> Result<(), VerifyError> {
        let residual_graph = graph.without_edges(
            &used
                .undirected_edges()
                .iter()
                .map(|&(a, b)| (a, b))
                .collect::<Vec<_>>(),
        );
        let residual = residual_graph.edges();
        let skey = structure_key(used, bound, s);
        agg.entry((residual, skey))
            .and_modify(|w| *w += m_sigma)
            .or_insert_with(|| m_sigma.clone());
        Ok(())
    }

    /// Expands a window-local structure into sparse dense-vector entries with
    /// one shared denominator (component totals times q per free slot).
    fn expand_structure(
        &mut self,
        skey: &StructureKey,
        bound: usize,
        s_len: usize,
        dim: usize,
    ) -> Result<(Vec<(usize, BigInt)>, BigInt), VerifyError> {
        let q = self.q;
        let mut covered = vec![false; s_len * bound];
        let mut entries: Vec<(usize, BigInt)> = vec![(0, BigInt::one())];
        let mut den = BigInt::one();
        for comp in &skey.components {
            let label_idx = (comp.label - 1) as usize;
            let positions: Vec<usize> = comp.members.iter().map(|&(pos, _)| pos as usize).collect();
            let (marg, total) = self.line_marginal(comp.topo, comp.len as usize, &positions)?;
            den *= BigInt::from(total);
            let slots: Vec<usize> = comp
                .members
                .iter()
                .map(|&(_, s_idx)| s_idx as usize * bound + label_idx)
                .collect();
            for &slot in &slots {
                covered[slot] = true;
            }
            let mut next = Vec::with_capacity(entries.len() * marg.len());
            for (idx, num) in &entries {
                for (vals, w) in &marg {
                    let mut idx2 = *idx;
                    for (j, &slot) in slots.iter().enumerate() {
                        idx2 += vals[j] as usize * (q as usize).pow(slot as u32);
                    }
                    next.push((idx2, num * BigInt::from(*w)));
                }
            }
            entries = next;
        }
        // Free slots: uniform over q symbols each.
        for slot in 0..s_len * bound {
            if covered[slot] {
                continue;
            }
            den *= BigInt::from(q);
            let mut next = Vec::with_capacity(entries.len() * q as usize);
            for (idx, num) in &entries {
                for c in 0..q as usize {
                    next.push((idx + c * (q as usize).pow(slot as u32), num.clone()));
                }
            }
            entries = next;
        }
        debug_assert!(entries.iter().all(|&(idx, _)| idx < dim));
        Ok((entries, den))
    }

    /// Marginal of the exact line law on given positions (ascending), as
    /// integer weights plus their total.
    fn line_marginal(
        &mut self,
        topo: Topology,
        len: usize,
        positions: &[usize],
    ) -> Result<LineMarginal, VerifyError> {
        let key = (if topo == Topology::Path { 0u8 } else { 1 }, len, positions.to_vec());
        if let Some(hit) = self.marg_cache.get(&key) {
            return Ok(hit.clone());
        }
        let dist = exact_line_distribution_with_cap(topo, len, self.q, self.caps.max_vertices.max(9))
            .map_err(|e| VerifyError::Internal(format!("line oracle: {e}")))?;
        let map = dist.marginal(positions);
        let out: (Vec<(Vec<u8>, u64)>, u64) = (map.into_iter().collect(), dist.total());
        self.marg_cache.insert(key, out.clone());
        Ok(out)
    }

    /// Level split of the top level, for the norm-based independence check.
    fn top_split(&mut self, s: &[VertexId]) -> Result<LevelSplit, VerifyError> {
        let edges = self.graph.edges();
        self.level_split(&edges, self.d, s)
    }
}

fn factorial(k: usize) -> BigInt {
    let mut f = BigInt::one();
    for i in 2..=k {
        f *= BigInt::from(i);
    }
    f
}

/// All injective sequences of `k` labels from `1..=bound`.
fn injections(bound: u8, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; bound as usize + 1];
    fn rec(bound: u8, k: usize, current: &mut Vec<u8>, used: &mut Vec<bool>, out: &mut Vec<Vec<u8>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for label in 1..=bound {
            if !used[label as usize] {
                used[label as usize] = true;
                current.push(label);
                rec(bound, k, current, used, out);
                current.pop();
                used[label as usize] = false;
            }
        }
    }
    rec(bound, k, &mut current, &mut used, &mut out);
    out
}

/// Mixed-radix odometer; returns false on wraparound.
fn advance(idx: &mut [usize], sizes: &[usize]) -> bool {
    for i in 0..idx.len() {
        idx[i] += 1;
        if idx[i] < sizes[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Heap's algorithm, calling `f` on every permutation.
fn permute_all<F>(perm: &mut Vec<usize>, f: &mut F) -> Result<(), VerifyError>
where
    F: FnMut(&[usize]) -> Result<(), VerifyError>,
{
    fn rec<F>(k: usize, perm: &mut Vec<usize>, f: &mut F) -> Result<(), VerifyError>
    where
        F: FnMut(&[usize]) -> Result<(), VerifyError>,
    {
        if k <= 1 {
            return f(perm);
        }
        for i in 0..k {
            rec(k - 1, perm, f)?;
            if k % 2 == 0 {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
        Ok(())
    }
    let k = perm.len();
    rec(k, perm, f)
}

fn dense_index_to_bytes(mut idx: usize, q: usize, bound: usize, s_len: usize) -> Vec<u8> {
    let mut bytes = vec![0u8; s_len * bound];
    for b in bytes.iter_mut() {
        *b = (idx % q) as u8;
        idx /= q;
    }
    bytes
}

/// Window-local picture of one level structure: which insertion law touches
/// which window slots. 2-cycles appear as 2-paths; random edge deletion
/// gives the same pair law for either orientation.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
struct StructureKey {
    components: Vec<StructComponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct StructComponent {
    label: u8,
    topo: Topology,
    len: u16,
    /// (position in component, index of the vertex within the window)
    members: Vec<(u16, u8)>,
}

fn structure_key(used: &LabeledDigraph, bound: usize, s: &[VertexId]) -> StructureKey {
    let mut components = Vec::new();
    for label in 1..=bound as u8 {
        for comp in extract_components(used, label) {
            let members = window_members(&comp, s);
            if members.is_empty() {
                continue;
            }
            let (topo, len) = match comp.kind {
                ComponentKind::Path => (Topology::Path, comp.vertices.len()),
                ComponentKind::Cycle if comp.vertices.len() == 2 => (Topology::Path, 2),
                ComponentKind::Cycle => (Topology::Cycle, comp.vertices.len()),
            };
            components.push(StructComponent { label, topo, len: len as u16, members });
        }
    }
    StructureKey { components }
}

fn window_members(comp: &Component, s: &[VertexId]) -> Vec<(u16, u8)> {
    let mut members = Vec::new();
    for (pos, &v) in comp.vertices.iter().enumerate() {
        if let Ok(s_idx) = s.binary_search(&v) {
            members.push((pos as u16, s_idx as u8));
        }
    }
    members
}

// ---------------------------------------------------------------------------
// k-dependence checking
// ---------------------------------------------------------------------------

/// How a pair's discrepancy was measured: both are exactly zero iff the
/// windows are independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discrepancy {
    /// max over outcomes of |P(a,b) - P(a)P(b)|
    MaxAbs(BigRational),
    /// squared L2 norm of P_AB - P_A x P_B (used when the joint support is
    /// too large to materialize)
    L2Squared(BigRational),
}

impl Discrepancy {
    pub fn is_zero(&self) -> bool {
        match self {
            Discrepancy::MaxAbs(r) | Discrepancy::L2Squared(r) => r.is_zero(),
        }
    }

    pub fn value(&self) -> &BigRational {
        match self {
            Discrepancy::MaxAbs(r) | Discrepancy::L2Squared(r) => r,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactPairRecord {
    pub a: Vec<VertexId>,
    pub b: Vec<VertexId>,
    /// None means the windows lie in different components.
    pub distance: Option<usize>,
    pub discrepancy: Discrepancy,
}

#[derive(Debug, Clone)]
pub struct ExactDependenceReport {
    pub k: usize,
    pub window_cap: usize,
    pub pairs: Vec<ExactPairRecord>,
    pub verdict: bool,
    pub max_discrepancy: BigRational,
}

/// Discrepancy of a single window pair: the joint marginal against the
/// product of marginals, materialized when affordable, otherwise decided by
/// the exact norm certificate.
pub fn check_window_pair(
    joint: &mut ExactJoint,
    a: &[VertexId],
    b: &[VertexId],
) -> Result<Discrepancy, VerifyError> {
    joint.clear_cache();
    pair_discrepancy(joint, a, b)
}

/// Enumerates all disjoint window pairs with |A|,|B| <= window_cap at
/// distance > k and verifies exact factorization of the joint marginal.
pub fn check_k_dependence_exact(
    joint: &mut ExactJoint,
    k: usize,
    window_cap: usize,
) -> Result<ExactDependenceReport, VerifyError> {
    let pairs = qualifying_pairs(joint.graph(), k, window_cap);
    let mut records = Vec::new();
    let mut max_discrepancy = BigRational::zero();
    for (a, b, distance) in pairs {
        joint.clear_cache();
        let discrepancy = pair_discrepancy(joint, &a, &b)?;
        if discrepancy.value() > &max_discrepancy {
            max_discrepancy = discrepancy.value().clone();
        }
        records.push(ExactPairRecord { a, b, distance, discrepancy });
    }
    let verdict = records.iter().all(|r| r.discrepancy.is_zero());
    Ok(ExactDependenceReport { k, window_cap, pairs: records, verdict, max_discrepancy })
}

/// A qualifying window pair with its set distance (None = disconnected).
pub type WindowPair = (Vec<VertexId>, Vec<VertexId>, Option<usize>);

/// All qualifying pairs, each unordered pair once (min(A) < min(B)).
pub fn qualifying_pairs(g: &Graph, k: usize, window_cap: usize) -> Vec<WindowPair> {
    let n = g.vertex_count();
    let subsets = small_subsets(n, window_cap);
    let mut out = Vec::new();
    for a in &subsets {
        for b in &subsets {
            if a[0] >= b[0] || a.iter().any(|v| b.contains(v)) {
                continue;
            }
            let dist = g
                .set_distance(&VertexSet::new(a.clone()), &VertexSet::new(b.clone()))
                .expect("nonempty sets");
            let qualifies = dist.is_none_or(|d| d > k);
            if qualifies {
                out.push((a.clone(), b.clone(), dist));
            }
        }
    }
    out
}

fn small_subsets(n: usize, cap: usize) -> Vec<Vec<VertexId>> {
    let mut out: Vec<Vec<VertexId>> = (0..n).map(|v| vec![v]).collect();
    if cap >= 2 {
        for u in 0..n {
            for v in u + 1..n {
                out.push(vec![u, v]);
            }
        }
    }
    out
}

fn pair_discrepancy(
    joint: &mut ExactJoint,
    a: &[VertexId],
    b: &[VertexId],
) -> Result<Discrepancy, VerifyError> {
    let mut s: Vec<VertexId> = a.iter().chain(b).copied().collect();
    s.sort_unstable();
    let a_idx: Vec<usize> = a.iter().map(|v| s.binary_search(v).unwrap()).collect();
    let b_idx: Vec<usize> = b.iter().map(|v| s.binary_search(v).unwrap()).collect();
    match joint.marginal(&s) {
        Ok(m) => {
            let proj_a = KeyProjection::new(s.len(), joint.d(), &a_idx);
            let proj_b = KeyProjection::new(s.len(), joint.d(), &b_idx);
            let ma = m.project(&proj_a);
            let mb = m.project(&proj_b);
            let prod_support = ma.map.len() as u128 * mb.map.len() as u128;
            if prod_support > joint.caps.product_budget {
                joint.clear_cache();
                return norm_discrepancy(joint, &s, &a_idx, &b_idx);
            }
            // max |J - A*B| over the product support; den shared.
            let den = &m.den;
            let den_sq = BigRational::new(BigInt::one(), den * den);
            let mut max_num = BigInt::zero();
            for (ka, na) in &ma.map {
                for (kb, nb) in &mb.map {
                    let key = merge_keys(s.len(), joint.d(), &a_idx, ka, &b_idx, kb);
                    let nj = m.map.get(&key).cloned().unwrap_or_else(BigInt::zero);
                    let diff = (nj * den - na * nb).abs();
                    if diff > max_num {
                        max_num = diff;
                    }
                }
            }
            Ok(Discrepancy::MaxAbs(BigRational::from(max_num) * den_sq))
        }
        Err(VerifyError::OverBudget { .. }) => {
            joint.clear_cache();
            norm_discrepancy(joint, &s, &a_idx, &b_idx)
        }
        Err(e) => Err(e),
    }
}

/// Interleaves sub-window keys back into a full-window key.
fn merge_keys(
    s_len: usize,
    d: usize,
    a_idx: &[usize],
    ka: &[u8],
    b_idx: &[usize],
    kb: &[u8],
) -> Vec<u8> {
    let arity: usize = (1..=d).sum();
    let mut key = vec![0u8; s_len * arity];
    let mut write = |idx_list: &[usize], sub: &[u8]| {
        let mut offset = 0usize;
        let mut sub_pos = 0usize;
        for bound in (1..=d).rev() {
            for &s_idx in idx_list {
                for j in 0..bound {
                    key[offset + s_idx * bound + j] = sub[sub_pos];
                    sub_pos += 1;
                }
            }
            offset += s_len * bound;
        }
    };
    write(a_idx, ka);
    write(b_idx, kb);
    key
}

/// Exact squared L2 norm of `J - J_A (x) J_B`, computed level-factored:
/// the top level stays a mixture of dense vectors over residual graphs and
/// only inner products are ever taken; deeper levels are materialized (their
/// alphabets are geometrically smaller).
fn norm_discrepancy(
    joint: &mut ExactJoint,
    s: &[VertexId],
    a_idx: &[usize],
    b_idx: &[usize],
) -> Result<Discrepancy, VerifyError> {
    let d = joint.d();
    let split = joint.top_split(s)?;
    let nr = split.transitions.len();

    // Deeper measures and their projections, per transition.
    let mut deep = Vec::with_capacity(nr);
    for t in &split.transitions {
        deep.push(joint.measure(&t.residual, d - 1, s)?);
    }
    let deep_proj_a = KeyProjection::new(s.len(), d - 1, a_idx);
    let deep_proj_b = KeyProjection::new(s.len(), d - 1, b_idx);
    let deep_a: Vec<SparseMeasure> = deep.iter().map(|m| m.project(&deep_proj_a)).collect();
    let deep_b: Vec<SparseMeasure> = deep.iter().map(|m| m.project(&deep_proj_b)).collect();
    let level_a: Vec<Vec<BigInt>> = split
        .transitions
        .iter()
        .map(|t| split.project_dense(&t.dense, a_idx))
        .collect();
    let level_b: Vec<Vec<BigInt>> = split
        .transitions
        .iter()
        .map(|t| split.project_dense(&t.dense, b_idx))
        .collect();

    let level_den = BigRational::from(split.den.clone());
    let dot_level = |x: &[BigInt], y: &[BigInt]| -> BigRational {
        let s: BigInt = x.iter().zip(y).map(|(a, b)| a * b).sum();
        BigRational::from(s) / (&level_den * &level_den)
    };
    let dot_deep = |x: &SparseMeasure, y: &SparseMeasure| -> BigRational {
        let mut acc = BigInt::zero();
        for (k, nx) in &x.map {
            if let Some(ny) = y.map.get(k) {
                acc += nx * ny;
            }
        }
        BigRational::new(acc, &x.den * &y.den)
    };

    // <J, J>
    let mut jj = BigRational::zero();
    for r in 0..nr {
        for r2 in 0..nr {
            jj += dot_level(&split.transitions[r].dense, &split.transitions[r2].dense)
                * dot_deep(&deep[r], &deep[r2]);
        }
    }

    // <J_A (x) J_B, J_A (x) J_B> = <J_A, J_A> * <J_B, J_B>
    let mut aa = BigRational::zero();
    let mut bb = BigRational::zero();
    for r in 0..nr {
        for r2 in 0..nr {
            aa += dot_level(&level_a[r], &level_a[r2]) * dot_deep(&deep_a[r], &deep_a[r2]);
            bb += dot_level(&level_b[r], &level_b[r2]) * dot_deep(&deep_b[r], &deep_b[r2]);
        }
    }

    // <J, J_A (x) J_B>: three-way contraction, factored per level.
    let dim_a = split.q.pow((a_idx.len() * split.bound) as u32);
    let dim_b = split.q.pow((b_idx.len() * split.bound) as u32);
    let mut jab = BigRational::zero();
    for r in 0..nr {
        // level part: C3[r1][r2] = sum over full index of
        //   L_r[i] * L_A_{r1}[i_A] * L_B_{r2}[i_B]
        let mut level_c3 = vec![vec![BigInt::zero(); nr]; nr];
        {
            // reorganize L_r into a (dim_a x dim_b) matrix
            let mut matrix = vec![BigInt::zero(); dim_a * dim_b];
            for (idx, num) in split.transitions[r].dense.iter().enumerate() {
                if num.is_zero() {
                    continue;
                }
                let ia = sub_index(idx, split.q, split.bound, a_idx);
                let ib = sub_index(idx, split.q, split.bound, b_idx);
                matrix[ia * dim_b + ib] += num;
            }
            for r1 in 0..nr {
                let mut row = vec![BigInt::zero(); dim_b];
                for ia in 0..dim_a {
                    let la = &level_a[r1][ia];
                    if la.is_zero() {
                        continue;
                    }
                    for ib in 0..dim_b {
                        let m = &matrix[ia * dim_b + ib];
                        if !m.is_zero() {
                            row[ib] += la * m;
                        }
                    }
                }
                for r2 in 0..nr {
                    let mut acc = BigInt::zero();
                    for ib in 0..dim_b {
                        if !row[ib].is_zero() && !level_b[r2][ib].is_zero() {
                            acc += &row[ib] * &level_b[r2][ib];
                        }
                    }
                    level_c3[r1][r2] = acc;
                }
            }
        }
        // deep part: D3[r1][r2] = sum over deep keys of
        //   Dp_r[m] * DpA_{r1}[m_A] * DpB_{r2}[m_B]
        let mut deep_c3 = vec![vec![BigInt::zero(); nr]; nr];
        {
            for (key, num) in &deep[r].map {
                let ka = deep_proj_a.apply(key);
                let kb = deep_proj_b.apply(key);
                for r1 in 0..nr {
                    let Some(na) = deep_a[r1].map.get(&ka) else { continue };
                    let prod = num * na;
                    for r2 in 0..nr {
                        if let Some(nb) = deep_b[r2].map.get(&kb) {
                            deep_c3[r1][r2] += &prod * nb;
                        }
                    }
                }
            }
        }
        for r1 in 0..nr {
            for r2 in 0..nr {
                if level_c3[r1][r2].is_zero() || deep_c3[r1][r2].is_zero() {
                    continue;
                }
                let level_term = BigRational::new(
                    level_c3[r1][r2].clone(),
                    &split.den * &split.den * &split.den,
                );
                let deep_term = BigRational::new(
                    deep_c3[r1][r2].clone(),
                    &deep[r].den * (&deep_a[r1].den * &deep_b[r2].den),
                );
                jab += level_term * deep_term;
            }
        }
    }

    let norm_sq = jj - BigRational::from(BigInt::from(2)) * jab + aa * bb;
    debug_assert!(norm_sq >= BigRational::zero(), "squared norm must be nonnegative");
    Ok(Discrepancy::L2Squared(norm_sq))
}

/// Sub-index of a dense level index restricted to some window vertices.
fn sub_index(idx: usize, q: usize, bound: usize, keep_idx: &[usize]) -> usize {
    let mut out = 0usize;
    for (new_s, &s_idx) in keep_idx.iter().enumerate() {
        for j in 0..bound {
            let digit = idx / q.pow((s_idx * bound + j) as u32) % q;
            out += digit * q.pow((new_s * bound + j) as u32);
        }
    }
    out
}

/// Largest distance at which some singleton pair still shows exact
/// dependence; 0 when every disjoint singleton pair already factorizes.
pub fn singleton_dependence_horizon(joint: &mut ExactJoint) -> Result<usize, VerifyError> {
    let n = joint.graph().vertex_count();
    let mut horizon = 0usize;
    for u in 0..n {
        for v in u + 1..n {
            joint.clear_cache();
            let disc = pair_discrepancy(joint, &[u], &[v])?;
            if !disc.is_zero() {
                if let Some(dist) = joint.graph().distance(u, v) {
                    horizon = horizon.max(dist);
                }
            }
        }
    }
    Ok(horizon)
}
