//! Odd-degree sets and minimum T-joins in unit-cost graphs.
//!
//! A minimum T-join is obtained by pairing the targets with a minimum-weight
//! perfect matching under BFS distances and taking the symmetric difference
//! of the matched shortest paths.

pub mod matching;

use thiserror::Error;

use crate::graph::{bfs_distances, shortest_path, Graph, UNREACHABLE};
use crate::lp::FractionalSolution;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParityError {
    #[error("odd cardinality: {0} target vertices")]
    OddCardinality(usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("targets {0} and {1} are not connected")]
    Disconnected(usize, usize),
}

/// Multiplicity of every base edge.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeMultiset {
    counts: Vec<usize>,
}

impl EdgeMultiset {
    pub fn new(num_edges: usize) -> Self {
        EdgeMultiset {
            counts: vec![0; num_edges],
        }
    }

    /// Edges traversed by `walks`, with multiplicity.
    ///
    /// Panics if two consecutive walk vertices are not adjacent.
    pub fn from_walks(g: &Graph, walks: &[Vec<usize>]) -> Self {
        let mut m = Self::new(g.num_edges());
        for walk in walks {
            m.add_walk(g, walk);
        }
        m
    }

    pub fn add_walk(&mut self, g: &Graph, walk: &[usize]) {
        for pair in walk.windows(2) {
            let e = g
                .edge_between(pair[0], pair[1])
                .unwrap_or_else(|| panic!("{{{}, {}}} is not an edge", pair[0], pair[1]));
            self.counts[e] += 1;
        }
    }

    pub fn add(&mut self, edge: usize, times: usize) {
        self.counts[edge] += times;
    }

    pub fn extend(&mut self, other: &EdgeMultiset) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
    }

    pub fn count(&self, edge: usize) -> usize {
        self.counts[edge]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of edge copies.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn degree(&self, g: &Graph, v: usize) -> usize {
        g.neighbors(v).iter().map(|&(_, e)| self.counts[e]).sum()
    }
}

/// Vertices of odd degree in `m`, ascending.
pub fn odd_vertices(g: &Graph, m: &EdgeMultiset) -> Vec<usize> {
    let mut odd = vec![false; g.num_vertices()];
    for (e, &c) in m.counts().iter().enumerate() {
        if c % 2 == 1 {
            let (u, v) = g.edge(e);
            odd[u] = !odd[u];
            odd[v] = !odd[v];
        }
    }
    (0..g.num_vertices()).filter(|&v| odd[v]).collect()
}

/// An edge set whose odd-degree vertices are exactly `targets`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TJoin {
    /// Sorted edge indices.
    pub edges: Vec<usize>,
    /// Sorted target vertices.
    pub targets: Vec<usize>,
}

impl TJoin {
    pub fn cost(&self) -> usize {
        self.edges.len()
    }

    pub fn to_multiset(&self, g: &Graph) -> EdgeMultiset {
        let mut m = EdgeMultiset::new(g.num_edges());
        for &e in &self.edges {
            m.add(e, 1);
        }
        m
    }
}

fn normalize_targets(g: &Graph, targets: &[usize]) -> Result<Vec<usize>, ParityError> {
    let n = g.num_vertices();
    if let Some(&vertex) = targets.iter().find(|&&v| v >= n) {
        return Err(ParityError::VertexOutOfRange { vertex, n });
    }
    let mut t = targets.to_vec();
    t.sort_unstable();
    t.dedup();
    if t.len() % 2 == 1 {
        return Err(ParityError::OddCardinality(t.len()));
    }
    Ok(t)
}

/// Minimum-cardinality T-join.
pub fn min_tjoin(g: &Graph, targets: &[usize]) -> Result<TJoin, ParityError> {
    let targets = normalize_targets(g, targets)?;
    let dist: Vec<Vec<usize>> = targets.iter().map(|&t| bfs_distances(g, t)).collect();
    let mut cost = vec![vec![0u64; targets.len()]; targets.len()];
    for (a, row) in dist.iter().enumerate() {
        for (b, &tb) in targets.iter().enumerate() {
            if row[tb] == UNREACHABLE {
                return Err(ParityError::Disconnected(targets[a], tb));
            }
            cost[a][b] = row[tb] as u64;
        }
    }
    let mut toggled = vec![false; g.num_edges()];
    for (a, b) in matching::min_weight_perfect_matching(&cost) {
        let path = shortest_path(g, targets[a], targets[b]).expect("reachable");
        for pair in path.windows(2) {
            let e = g.edge_between(pair[0], pair[1]).expect("path edge");
            toggled[e] = !toggled[e];
        }
    }
    Ok(TJoin {
        edges: (0..g.num_edges()).filter(|&e| toggled[e]).collect(),
        targets,
    })
}

/// Exhaustive minimum T-join over all `2^|E|` edge subsets; `None` when no
/// subset has the requested parity. Ties go to the smallest bitmask.
///
/// Panics if the graph has more than 24 edges.
pub fn brute_force_tjoin(g: &Graph, targets: &[usize]) -> Result<Option<TJoin>, ParityError> {
    let targets = normalize_targets(g, targets)?;
    let m = g.num_edges();
    assert!(m <= 24, "exhaustive T-join limited to 24 edges");
    let mut want = 0u64;
    for &t in &targets {
        want |= 1 << t;
    }
    let edge_mask: Vec<u64> = g.edges().iter().map(|&(u, v)| (1 << u) | (1 << v)).collect();
    let mut best: Option<u32> = None;
    for subset in 0u32..(1u32 << m) {
        if best.is_some_and(|b| subset.count_ones() >= b.count_ones()) {
            continue;
        }
        let parity = (0..m)
            .filter(|&e| subset & (1 << e) != 0)
            .fold(0u64, |acc, e| acc ^ edge_mask[e]);
        if parity == want {
            best = Some(subset);
        }
    }
    Ok(best.map(|subset| TJoin {
        edges: (0..m).filter(|&e| subset & (1 << e) != 0).collect(),
        targets,
    }))
}

/// Half the LP objective: half of any feasible fractional solution dominates
/// a fractional T-join for every even target set the solvers produce, so this
/// bounds the minimum T-join cost from above.
pub fn tjoin_fractional_bound<T: Scalar>(x: &FractionalSolution<T>) -> T {
    x.objective().clone() / T::from_count(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use proptest::prelude::*;

    #[test]
    fn odd_vertices_basics() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut m = EdgeMultiset::new(3);
        m.add(0, 1);
        assert_eq!(odd_vertices(&g, &m), vec![0, 1]);
        m.add(1, 1);
        m.add(2, 1);
        assert!(odd_vertices(&g, &m).is_empty());
        m.add(0, 2);
        assert!(odd_vertices(&g, &m).is_empty());
        assert_eq!(m.total(), 5);
        assert_eq!(m.degree(&g, 0), 4);
    }

    #[test]
    fn odd_vertices_on_the_reconnection_example() {
        // Sampled paths s1-v1-v3-t1 and s2-v6-v4-v1-t2, then single arcs
        // v2-v4 and v5-v2 attaching the two uncovered vertices.
        let g = fig1_graph();
        let mut m = EdgeMultiset::from_walks(
            &g,
            &[vec![S1, V1, V3, T1], vec![S2, V6, V4, V1, T2]],
        );
        m.add_walk(&g, &[V2, V4]);
        m.add_walk(&g, &[V5, V2]);
        // Degrees: s1 1, s2 1, t1 1, t2 1, v1 4, v2 2, v3 2, v4 3, v5 1, v6 2.
        assert_eq!(odd_vertices(&g, &m), vec![S1, S2, T1, T2, V4, V5]);
    }

    #[test]
    fn empty_and_path_targets() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let j = min_tjoin(&g, &[]).unwrap();
        assert_eq!(j.cost(), 0);
        let j = min_tjoin(&g, &[2, 0]).unwrap();
        assert_eq!(j.edges, vec![0, 1]);
        assert_eq!(j.targets, vec![0, 2]);
        assert_eq!(min_tjoin(&g, &[0]), Err(ParityError::OddCardinality(1)));
        assert!(matches!(
            min_tjoin(&g, &[0, 7]),
            Err(ParityError::VertexOutOfRange { vertex: 7, .. })
        ));
    }

    #[test]
    fn overlapping_paths_cancel() {
        // Star with center 0: targets {1,2,3,4} pair through the center;
        // every leaf edge is used once, the matching cost is 4.
        let g = Graph::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let j = min_tjoin(&g, &[1, 2, 3, 4]).unwrap();
        assert_eq!(j.cost(), 4);
        let mut m = j.to_multiset(&g);
        assert_eq!(odd_vertices(&g, &m), vec![1, 2, 3, 4]);
        // Fixing the odd set of a multiset makes every degree even.
        m.extend(&j.to_multiset(&g));
        assert!(odd_vertices(&g, &m).is_empty());
    }

    #[test]
    fn fractional_bound_on_the_fixture() {
        let inst = fig1();
        let graph = crate::graph::BidirectedGraph::new(inst.graph().clone());
        let x = FractionalSolution::from_arc_flows(&graph, 2, &fig1_lp_flows());
        assert_eq!(tjoin_fractional_bound(&x), 4.0);
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, Vec<usize>)> {
        (2usize..=8).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            (
                proptest::sample::subsequence(pairs, 1..=m.min(14)),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(edges, pick)| {
                    let g = Graph::new(n, edges).unwrap();
                    // Keep only targets inside the component of vertex 0 and
                    // fix up parity by dropping the last one.
                    let dist = bfs_distances(&g, 0);
                    let mut t: Vec<usize> = (0..n)
                        .filter(|&v| pick[v] && dist[v] != UNREACHABLE)
                        .collect();
                    if t.len() % 2 == 1 {
                        t.pop();
                    }
                    (g, t)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matching_tjoin_is_optimal((g, targets) in arb_graph()) {
            let j = min_tjoin(&g, &targets).unwrap();
            let brute = brute_force_tjoin(&g, &targets).unwrap().expect("targets share a component");
            prop_assert_eq!(j.cost(), brute.cost());
            prop_assert_eq!(odd_vertices(&g, &j.to_multiset(&g)), j.targets.clone());
        }
    }
}
