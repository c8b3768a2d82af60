//! Unit-cost undirected graphs and their bidirected form.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

/// Distance reported by [`bfs_distances`] for unreachable vertices.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
}

/// An undirected simple graph on vertices `0..n` where every edge costs one.
///
/// Edges keep their input order and orientation so that serialization
/// round-trips exactly. Adjacency lists are sorted by neighbour index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (idx, &(u, v)) in edges.iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            adjacency[u].push((v, idx));
            adjacency[v].push((u, idx));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (usize, usize) {
        self.edges[idx]
    }

    /// `(neighbour, edge index)` pairs sorted by neighbour.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_between(u, v).is_some()
    }
}

/// Hop distances from `source`; unreachable vertices get [`UNREACHABLE`].
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; g.num_vertices()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &(w, _) in g.neighbors(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn is_connected(g: &Graph) -> bool {
    if g.num_vertices() == 0 {
        return true;
    }
    bfs_distances(g, 0).iter().all(|&d| d != UNREACHABLE)
}

/// Component label per vertex, labels assigned in order of smallest member.
pub fn components(g: &Graph) -> Vec<usize> {
    let mut label = vec![usize::MAX; g.num_vertices()];
    let mut next = 0;
    for start in 0..g.num_vertices() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(w, _) in g.neighbors(u) {
                if label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// All-pairs hop distances, one BFS per vertex.
pub fn distance_matrix(g: &Graph) -> Vec<Vec<usize>> {
    (0..g.num_vertices()).map(|s| bfs_distances(g, s)).collect()
}

/// A shortest `from`→`to` vertex sequence.
///
/// Walking back from `to`, each step picks the lowest-indexed neighbour one
/// hop closer to `from`. Returns `None` when `to` is unreachable.
pub fn shortest_path(g: &Graph, from: usize, to: usize) -> Option<Vec<usize>> {
    let dist = bfs_distances(g, from);
    if dist[to] == UNREACHABLE {
        return None;
    }
    Some(path_from_distances(g, &dist, to))
}

/// Reconstructs a shortest path ending at `to` from a BFS distance vector.
pub(crate) fn path_from_distances(g: &Graph, dist: &[usize], to: usize) -> Vec<usize> {
    let mut rev = vec![to];
    let mut cur = to;
    while dist[cur] > 0 {
        let (prev, _) = g
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&(w, _)| dist[w] != UNREACHABLE && dist[w] + 1 == dist[cur])
            .expect("BFS predecessor exists");
        rev.push(prev);
        cur = prev;
    }
    rev.reverse();
    rev
}

/// The graph with every edge `{u, v}` replaced by arcs `(u, v)` and `(v, u)`.
///
/// Edge `e = (u, v)` (input orientation) yields arc `2e = (u, v)` and arc
/// `2e + 1 = (v, u)`, so `arc ^ 1` is always the reverse arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidirectedGraph {
    base: Graph,
    arcs: Vec<(usize, usize)>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

impl BidirectedGraph {
    pub fn new(base: Graph) -> Self {
        let n = base.num_vertices();
        let mut arcs = Vec::with_capacity(2 * base.num_edges());
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        for &(u, v) in base.edges() {
            for (tail, head) in [(u, v), (v, u)] {
                let a = arcs.len();
                arcs.push((tail, head));
                out_arcs[tail].push(a);
                in_arcs[head].push(a);
            }
        }
        Self {
            base,
            arcs,
            out_arcs,
            in_arcs,
        }
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn num_vertices(&self) -> usize {
        self.base.num_vertices()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn arc(&self, a: usize) -> (usize, usize) {
        self.arcs[a]
    }

    pub fn tail(&self, a: usize) -> usize {
        self.arcs[a].0
    }

    pub fn head(&self, a: usize) -> usize {
        self.arcs[a].1
    }

    /// Arcs leaving `v`, in increasing arc index.
    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out_arcs[v]
    }

    /// Arcs entering `v`, in increasing arc index.
    pub fn in_arcs(&self, v: usize) -> &[usize] {
        &self.in_arcs[v]
    }

    pub fn reverse(a: usize) -> usize {
        a ^ 1
    }

    pub fn edge_of(a: usize) -> usize {
        a / 2
    }

    /// Arc index of `(u, v)`, if `{u, v}` is an edge.
    pub fn arc_between(&self, u: usize, v: usize) -> Option<usize> {
        let e = self.base.edge_between(u, v)?;
        Some(if self.base.edge(e).0 == u { 2 * e } else { 2 * e + 1 })
    }

    /// Forgets directions: the undirected edge list, one entry per arc pair.
    pub fn collapse(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().step_by(2).copied().collect()
    }
}
