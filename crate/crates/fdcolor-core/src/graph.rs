//! Finite simple undirected graphs with a certified maximum degree.
//!
//! Vertices are dense integer ids `0..n`. Adjacency lists are kept sorted so
//! that seeded runs are reproducible regardless of input edge order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::randomness::mix64;

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    VertexOutOfRange { vertex: VertexId, count: usize },
    SelfLoop { vertex: VertexId },
    DuplicateEdge { a: VertexId, b: VertexId },
    EmptySet,
    BadParameter(String),
}

impl core::fmt::Display for GraphError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GraphError::VertexOutOfRange { vertex, count } => {
                write!(f, "vertex id {vertex} out of range for {count} vertices")
            }
            GraphError::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex}"),
            GraphError::DuplicateEdge { a, b } => write!(f, "duplicate edge ({a}, {b})"),
            GraphError::EmptySet => write!(f, "vertex set must be non-empty"),
            GraphError::BadParameter(msg) => write!(f, "{msg}"),
        }
    }
}

/// Finite simple undirected graph. Immutable after construction, so shared
/// references can be handed to any number of workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<VertexId>>,
    max_degree_bound: usize,
}

impl Graph {
    /// Builds a graph from an explicit edge list. Rejects self-loops and
    /// duplicate edges with a diagnostic; the degree bound is the observed
    /// maximum degree.
    pub fn from_edges(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); vertex_count];
        for &(a, b) in edges {
            if a >= vertex_count {
                return Err(GraphError::VertexOutOfRange { vertex: a, count: vertex_count });
            }
            if b >= vertex_count {
                return Err(GraphError::VertexOutOfRange { vertex: b, count: vertex_count });
            }
            if a == b {
                return Err(GraphError::SelfLoop { vertex: a });
            }
            if adj[a].contains(&b) {
                return Err(GraphError::DuplicateEdge { a, b });
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let max_degree_bound = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph { n: vertex_count, adj, max_degree_bound })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn max_degree_bound(&self) -> usize {
        self.max_degree_bound
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as ordered pairs `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for a in 0..self.n {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Graph on the same vertex set with the given undirected edges removed.
    pub fn without_edges(&self, remove: &[(VertexId, VertexId)]) -> Graph {
        let mut keep = self.edges();
        keep.retain(|&(a, b)| {
            !remove
                .iter()
                .any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
        });
        Graph::from_edges(self.n, &keep).expect("subgraph of a valid graph is valid")
    }

    /// Shortest-path distance between two vertices; `None` when disconnected.
    pub fn distance(&self, from: VertexId, to: VertexId) -> Option<usize> {
        let dist = self.bfs(&[from]);
        dist[to]
    }

    /// BFS layer distances from a set of sources.
    pub fn bfs(&self, sources: &[VertexId]) -> Vec<Option<usize>> {
        let mut dist: Vec<Option<usize>> = vec![None; self.n];
        let mut queue = Vec::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push(s);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            let dv = dist[v].unwrap();
            for &u in &self.adj[v] {
                if dist[u].is_none() {
                    dist[u] = Some(dv + 1);
                    queue.push(u);
                }
            }
        }
        dist
    }

    /// Minimum over pairs of shortest-path distance between two vertex sets;
    /// `None` means the sets lie in different components.
    pub fn set_distance(&self, a: &VertexSet, b: &VertexSet) -> Result<Option<usize>, GraphError> {
        if a.is_empty() || b.is_empty() {
            return Err(GraphError::EmptySet);
        }
        for &v in a.members().iter().chain(b.members()) {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: v, count: self.n });
            }
        }
        let dist = self.bfs(a.members());
        Ok(b.members().iter().filter_map(|&v| dist[v]).min())
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        self.bfs(&[0]).iter().all(Option::is_some)
    }

    /// Simple path on `n` vertices.
    pub fn path(n: usize) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::BadParameter("path needs at least 1 vertex".into()));
        }
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n, &edges)
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Graph, GraphError> {
        if n < 3 {
            return Err(GraphError::BadParameter(format!(
                "cycle needs at least 3 vertices, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges)
    }

    /// `w x h` torus grid; both dimensions must be at least 3 so every vertex
    /// has degree exactly 4.
    pub fn torus(w: usize, h: usize) -> Result<Graph, GraphError> {
        if w < 3 || h < 3 {
            return Err(GraphError::BadParameter(format!(
                "torus dimensions must be at least 3, got {w}x{h}"
            )));
        }
        let idx = |x: usize, y: usize| x * h + y;
        let mut edges = Vec::new();
        for x in 0..w {
            for y in 0..h {
                edges.push((idx(x, y), idx((x + 1) % w, y)));
                edges.push((idx(x, y), idx(x, (y + 1) % h)));
            }
        }
        Graph::from_edges(w * h, &edges)
    }

    /// Truncated `d`-regular tree: the root has `d` children, every other
    /// internal vertex has `d - 1` children, and leaves sit at distance
    /// `depth` from the root.
    pub fn truncated_tree(d: usize, depth: usize) -> Result<Graph, GraphError> {
        if d == 0 {
            return Err(GraphError::BadParameter("tree branching degree must be positive".into()));
        }
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut next_id = 1usize;
        for level in 0..depth {
            let mut next_frontier = Vec::new();
            for &v in &frontier {
                let children = if level == 0 { d } else { d - 1 };
                for _ in 0..children {
                    edges.push((v, next_id));
                    next_frontier.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next_frontier;
        }
        Graph::from_edges(next_id, &edges)
    }

    /// Random `d`-regular simple graph via the pairing model, deterministic in
    /// the seed. Fails when `n * d` is odd or no simple pairing shows up
    /// within the retry budget.
    pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
        if n * d % 2 != 0 {
            return Err(GraphError::BadParameter(format!(
                "no {d}-regular graph on {n} vertices: n*d is odd"
            )));
        }
        if d >= n && d > 0 {
            return Err(GraphError::BadParameter(format!(
                "no simple {d}-regular graph on {n} vertices"
            )));
        }
        let mut state = mix64(seed ^ 0x7265_6775_6c61_7221);
        let mut next = || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            mix64(state)
        };
        let mut stubs: Vec<VertexId> = (0..n).flat_map(|v| core::iter::repeat_n(v, d)).collect();
        'retry: for _ in 0..10_000 {
            // Fisher-Yates on the stub multiset.
            for i in (1..stubs.len()).rev() {
                let j = (next() % (i as u64 + 1)) as usize;
                stubs.swap(i, j);
            }
            let mut edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(stubs.len() / 2);
            for pair in stubs.chunks(2) {
                let (a, b) = (pair[0], pair[1]);
                if a == b || edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
                    continue 'retry;
                }
                edges.push((a, b));
            }
            return Graph::from_edges(n, &edges);
        }
        Err(GraphError::BadParameter(format!(
            "pairing model failed to produce a simple {d}-regular graph on {n} vertices"
        )))
    }
}

/// Sorted, deduplicated set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<VertexId>,
}

impl VertexSet {
    pub fn new(mut members: Vec<VertexId>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet { members }
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

impl From<&[VertexId]> for VertexSet {
    fn from(slice: &[VertexId]) -> Self {
        VertexSet::new(slice.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_p3_shape() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.max_degree_bound(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn empty_graph_has_degree_zero() {
        let g = Graph::from_edges(4, &[]).unwrap();
        assert_eq!(g.max_degree_bound(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn triangle_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(g.max_degree_bound(), 2);
        assert!(g.has_edge(2, 0));
    }

    #[test]
    fn rejects_duplicate_and_self_loop() {
        assert_eq!(
            Graph::from_edges(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge { a: 1, b: 0 })
        );
        assert_eq!(Graph::from_edges(3, &[(2, 2)]), Err(GraphError::SelfLoop { vertex: 2 }));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn set_distance_on_p5() {
        let g = Graph::path(5).unwrap();
        let d = |a: &[usize], b: &[usize]| {
            g.set_distance(&VertexSet::new(a.to_vec()), &VertexSet::new(b.to_vec()))
                .unwrap()
        };
        assert_eq!(d(&[0], &[3]), Some(3));
        assert_eq!(d(&[0], &[0]), Some(0));
        assert_eq!(d(&[0, 1], &[4]), Some(3));
    }

    #[test]
    fn set_distance_disconnected_and_empty() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let a = VertexSet::new(vec![0]);
        let b = VertexSet::new(vec![3]);
        assert_eq!(g.set_distance(&a, &b).unwrap(), None);
        assert_eq!(g.set_distance(&a, &VertexSet::new(vec![])), Err(GraphError::EmptySet));
    }

    #[test]
    fn generators_have_stated_shapes() {
        let p = Graph::path(5).unwrap();
        assert_eq!(p.edge_count(), 4);
        let degs: Vec<_> = (0..5).map(|v| p.degree(v)).collect();
        assert_eq!(degs, vec![1, 2, 2, 2, 1]);

        let t = Graph::torus(4, 4).unwrap();
        assert_eq!(t.edge_count(), 32);
        assert!((0..16).all(|v| t.degree(v) == 4));

        let tree = Graph::truncated_tree(3, 2).unwrap();
        assert_eq!(tree.vertex_count(), 10);
        assert_eq!(tree.degree(0), 3);

        assert!(Graph::cycle(2).is_err());
        assert!(Graph::torus(2, 5).is_err());
    }

    #[test]
    fn random_regular_is_regular_and_deterministic() {
        let g1 = Graph::random_regular(50, 3, 7).unwrap();
        let g2 = Graph::random_regular(50, 3, 7).unwrap();
        assert_eq!(g1, g2);
        assert!((0..50).all(|v| g1.degree(v) == 3));
        assert!(Graph::random_regular(5, 3, 0).is_err());
    }

    #[test]
    fn without_edges_removes_both_orientations() {
        let g = Graph::cycle(4).unwrap();
        let h = g.without_edges(&[(1, 0), (2, 3)]);
        assert_eq!(h.edge_count(), 2);
        assert!(!h.has_edge(0, 1));
        assert!(h.has_edge(1, 2));
    }
}
