//! Max-flow / min-cut on a capacitated bidirected graph.
//!
//! Blocking-flow augmentation over BFS level graphs (Dinic). Residuals at or
//! below [`Scalar::flow_tolerance`] count as saturated.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::BidirectedGraph;
use crate::scalar::{exceeds, min_of, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("expected {expected} capacities, got {got}")]
    CapacityCount { expected: usize, got: usize },
    #[error("capacity of arc {0} is negative or not finite")]
    BadCapacity(usize),
}

/// Arcs of a bidirected graph with a nonnegative capacity each.
#[derive(Debug, Clone)]
pub struct CapacitatedNetwork<'g, T> {
    graph: &'g BidirectedGraph,
    capacities: Vec<T>,
}

impl<'g, T: Scalar> CapacitatedNetwork<'g, T> {
    pub fn new(graph: &'g BidirectedGraph, capacities: Vec<T>) -> Result<Self, NetworkError> {
        if capacities.len() != graph.num_arcs() {
            return Err(NetworkError::CapacityCount {
                expected: graph.num_arcs(),
                got: capacities.len(),
            });
        }
        if let Some(a) = capacities
            .iter()
            .position(|c| c.is_negative() || !c.is_finite_value())
        {
            return Err(NetworkError::BadCapacity(a));
        }
        Ok(Self { graph, capacities })
    }

    pub fn graph(&self) -> &BidirectedGraph {
        self.graph
    }

    pub fn capacities(&self) -> &[T] {
        &self.capacities
    }

    /// Total capacity of arcs leaving the vertex set marked in `inside`.
    pub fn cut_capacity(&self, inside: &[bool]) -> T {
        self.graph
            .arcs()
            .iter()
            .zip(&self.capacities)
            .filter(|(&(u, v), _)| inside[u] && !inside[v])
            .fold(T::zero(), |acc, (_, c)| acc + c.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut<T> {
    /// Capacity of the arcs leaving `source_side`.
    pub value: T,
    /// Vertices reachable from `s` in the final residual network.
    pub source_side: Vec<bool>,
}

impl<T> MinCut<T> {
    pub fn members(&self) -> Vec<usize> {
        self.source_side
            .iter()
            .enumerate()
            .filter_map(|(v, &inside)| inside.then_some(v))
            .collect()
    }
}

/// Reusable working storage for [`min_cut_with`]; one per concurrent caller.
#[derive(Debug, Clone, Default)]
pub struct MaxFlowScratch<T> {
    residual: Vec<T>,
    level: Vec<usize>,
    next_arc: Vec<usize>,
    queue: VecDeque<usize>,
}

impl<T: Scalar> MaxFlowScratch<T> {
    pub fn new() -> Self {
        Self {
            residual: Vec::new(),
            level: Vec::new(),
            next_arc: Vec::new(),
            queue: VecDeque::new(),
        }
    }
}

const NO_LEVEL: usize = usize::MAX;

/// Minimum `s`-`t` cut, allocating fresh scratch space.
pub fn min_cut<T: Scalar>(net: &CapacitatedNetwork<'_, T>, s: usize, t: usize) -> MinCut<T> {
    min_cut_with(net, s, t, &mut MaxFlowScratch::new())
}

/// Minimum `s`-`t` cut using caller-provided scratch space.
///
/// Residual network: arc `a` carries `cap(a) - f(a) + f(reverse(a))`, so the
/// two arcs of an edge share one residual pair and no extra reverse arcs are
/// needed. Panics if `s == t`.
pub fn min_cut_with<T: Scalar>(
    net: &CapacitatedNetwork<'_, T>,
    s: usize,
    t: usize,
    scratch: &mut MaxFlowScratch<T>,
) -> MinCut<T> {
    assert_ne!(s, t, "min cut needs distinct terminals");
    let g = net.graph();
    let n = g.num_vertices();
    let eps = T::flow_tolerance();

    scratch.residual.clear();
    scratch.residual.extend(net.capacities().iter().cloned());
    scratch.level.clear();
    scratch.level.resize(n, NO_LEVEL);
    scratch.next_arc.clear();
    scratch.next_arc.resize(n, 0);

    while build_levels(g, s, t, &eps, scratch) {
        scratch.next_arc.iter_mut().for_each(|p| *p = 0);
        while let Some(pushed) = augment(g, s, t, &eps, scratch) {
            if !exceeds(&pushed, &T::zero(), &eps) {
                break;
            }
        }
    }

    // After the final BFS the level array marks exactly the residual-reachable set.
    let source_side: Vec<bool> = scratch.level.iter().map(|&l| l != NO_LEVEL).collect();
    let value = net.cut_capacity(&source_side);
    MinCut { value, source_side }
}

fn build_levels<T: Scalar>(
    g: &BidirectedGraph,
    s: usize,
    t: usize,
    eps: &T,
    scratch: &mut MaxFlowScratch<T>,
) -> bool {
    scratch.level.iter_mut().for_each(|l| *l = NO_LEVEL);
    scratch.level[s] = 0;
    scratch.queue.clear();
    scratch.queue.push_back(s);
    while let Some(u) = scratch.queue.pop_front() {
        for &a in g.out_arcs(u) {
            let w = g.head(a);
            if scratch.level[w] == NO_LEVEL && exceeds(&scratch.residual[a], &T::zero(), eps) {
                scratch.level[w] = scratch.level[u] + 1;
                scratch.queue.push_back(w);
            }
        }
    }
    scratch.level[t] != NO_LEVEL
}

/// One augmenting path in the level graph (iterative DFS with arc pointers).
fn augment<T: Scalar>(
    g: &BidirectedGraph,
    s: usize,
    t: usize,
    eps: &T,
    scratch: &mut MaxFlowScratch<T>,
) -> Option<T> {
    let mut path: Vec<usize> = Vec::new();
    let mut cur = s;
    loop {
        if cur == t {
            let bottleneck = path
                .iter()
                .map(|&a| scratch.residual[a].clone())
                .reduce(min_of)
                .expect("s != t so the path is nonempty");
            for &a in &path {
                scratch.residual[a] = scratch.residual[a].clone() - bottleneck.clone();
                let r = BidirectedGraph::reverse(a);
                scratch.residual[r] = scratch.residual[r].clone() + bottleneck.clone();
            }
            return Some(bottleneck);
        }
        let outs = g.out_arcs(cur);
        let mut advanced = false;
        while scratch.next_arc[cur] < outs.len() {
            let a = outs[scratch.next_arc[cur]];
            let w = g.head(a);
            if scratch.level[w] == scratch.level[cur] + 1
                && exceeds(&scratch.residual[a], &T::zero(), eps)
            {
                path.push(a);
                cur = w;
                advanced = true;
                break;
            }
            scratch.next_arc[cur] += 1;
        }
        if !advanced {
            // Dead end: retreat and skip the arc that led here.
            let a = path.pop()?;
            cur = g.tail(a);
            scratch.next_arc[cur] += 1;
        }
    }
}
