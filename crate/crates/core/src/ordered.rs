//! Ordered TSP: sample one path per consecutive terminal pair, attach every
//! uncovered vertex with a single edge, repair parity with a minimum T-join,
//! and fold the extra edges back into the walks as closed excursions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::instance::{validate_solution, Instance, OrderedInstance, Solution};
use crate::lp::FractionalSolution;
use crate::multipath::{reconnect_with, CostReport, Prepared, SamplerState, SolveError};
use crate::parity::{min_tjoin, odd_vertices, EdgeMultiset, ParityError, TJoin};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderedError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("parity: {0}")]
    Parity(#[from] ParityError),
    #[error("parity violation: odd degree at {0:?}")]
    ParityViolation(Vec<usize>),
    #[error("disconnected union: extra edges around vertex {0} touch no walk")]
    DisconnectedUnion(usize),
}

/// Walk `i` runs from `o_i` to `o_{i+1}` (indices modulo `k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedSolution {
    pub walks: Vec<Vec<usize>>,
    pub cost: usize,
}

impl OrderedSolution {
    pub fn from_walks(walks: Vec<Vec<usize>>) -> Self {
        let cost = walks.iter().map(|w| w.len().saturating_sub(1)).sum();
        OrderedSolution { walks, cost }
    }

    pub fn to_solution(&self) -> Solution {
        Solution::from_walks(self.walks.clone())
    }

    /// True when walk `i` starts at `order[i]` and ends at `order[i + 1]`,
    /// so that chaining the walks visits the terminals in cyclic order.
    pub fn preserves_order(&self, order: &[usize]) -> bool {
        let k = order.len();
        self.walks.len() == k
            && self.walks.iter().enumerate().all(|(i, w)| {
                w.first() == Some(&order[i]) && w.last() == Some(&order[(i + 1) % k])
            })
    }

    pub fn edge_multiset(&self, g: &Graph) -> EdgeMultiset {
        EdgeMultiset::from_walks(g, &self.walks)
    }
}

/// Everything produced by one run, for auditing.
#[derive(Debug, Clone)]
pub struct OrderedRun {
    pub solution: OrderedSolution,
    pub report: CostReport,
    /// Sampled walks with the reconnection record (walks are not spliced).
    pub state: SamplerState,
    pub odd: Vec<usize>,
    pub join: TJoin,
}

/// Single-edge reconnection: every pending vertex `v` is joined to its anchor
/// `w` by one edge and counts as part of the lowest-indexed walk containing
/// `w` for later anchors. The walks themselves are left untouched.
pub fn reconnect_single(inst: &Instance, mut state: SamplerState) -> SamplerState {
    let n = inst.num_vertices();
    let mut members: Vec<Vec<bool>> = state
        .walks
        .iter()
        .map(|w| {
            let mut m = vec![false; n];
            for &v in w {
                m[v] = true;
            }
            m
        })
        .collect();
    reconnect_with(inst, &mut state, |_, v, w| {
        let i = members
            .iter()
            .position(|m| m[w])
            .expect("covered vertex belongs to some walk");
        members[i][v] = true;
        i
    });
    state
}

/// Splices the extra edges (each connected component an Eulerian multigraph)
/// into `walks`. Components are taken in order of their smallest vertex; each
/// is traversed as a closed Euler circuit, always leaving by the
/// lowest-indexed neighbour, starting from the first vertex it shares with
/// the lowest-indexed walk.
pub fn extract_ordered_walks(
    g: &Graph,
    walks: &[Vec<usize>],
    extra: &EdgeMultiset,
) -> Result<OrderedSolution, OrderedError> {
    let odd = odd_vertices(g, extra);
    if !odd.is_empty() {
        return Err(OrderedError::ParityViolation(odd));
    }
    let n = g.num_vertices();
    let mut remaining = extra.counts().to_vec();

    // Components of the extra edges, labelled by discovery from the smallest vertex.
    let mut comp = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX || extra.degree(g, start) == 0 {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &(w, e) in g.neighbors(u) {
                if remaining[e] > 0 && comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    let mut walks = walks.to_vec();
    let mut pending: Vec<usize> = (0..components.len()).collect();
    while !pending.is_empty() {
        let found = pending.iter().enumerate().find_map(|(slot, &c)| {
            walks.iter().enumerate().find_map(|(i, walk)| {
                walk.iter()
                    .position(|&v| comp[v] == c)
                    .map(|p| (slot, i, p))
            })
        });
        let Some((slot, i, p)) = found else {
            return Err(OrderedError::DisconnectedUnion(components[pending[0]][0]));
        };
        pending.remove(slot);
        let circuit = euler_circuit(g, &mut remaining, walks[i][p]);
        walks[i].splice(p..=p, circuit);
    }
    Ok(OrderedSolution::from_walks(walks))
}

/// Closed Euler circuit from `start` over the edges with positive
/// `remaining` count in `start`'s component (Hierholzer, lowest neighbour first).
fn euler_circuit(g: &Graph, remaining: &mut [usize], start: usize) -> Vec<usize> {
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(&u) = stack.last() {
        match g.neighbors(u).iter().find(|&&(_, e)| remaining[e] > 0) {
            Some(&(w, e)) => {
                remaining[e] -= 1;
                stack.push(w);
            }
            None => circuit.push(stack.pop().expect("nonempty")),
        }
    }
    circuit.reverse();
    circuit
}

/// LP solution and decomposition for an ordered instance, reusable across seeds.
#[derive(Debug, Clone)]
pub struct OrderedPlan<T> {
    order: Vec<usize>,
    prepared: Prepared<T>,
}

impl<T: Scalar> OrderedPlan<T> {
    pub fn new(inst: &OrderedInstance) -> Result<Self, OrderedError> {
        Ok(OrderedPlan {
            order: inst.order().to_vec(),
            prepared: Prepared::new(&inst.to_instance())?,
        })
    }

    pub fn from_lp(inst: &OrderedInstance, lp: FractionalSolution<T>) -> Result<Self, OrderedError> {
        Ok(OrderedPlan {
            order: inst.order().to_vec(),
            prepared: Prepared::from_lp(&inst.to_instance(), lp)?,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn prepared(&self) -> &Prepared<T> {
        &self.prepared
    }

    pub fn lp_objective(&self) -> f64 {
        self.prepared.lp_objective()
    }

    /// Completes a sampled state: reconnection, parity repair, walk extraction.
    pub fn finish(&self, sampled: SamplerState) -> Result<OrderedRun, OrderedError> {
        let inst = self.prepared.instance();
        let g = inst.graph();
        let state = reconnect_single(inst, sampled);

        let mut reconnection = EdgeMultiset::new(g.num_edges());
        for r in &state.reconnections {
            reconnection.add_walk(g, &[r.vertex, r.anchor]);
        }
        let mut union = EdgeMultiset::from_walks(g, &state.walks);
        union.extend(&reconnection);
        let odd = odd_vertices(g, &union);
        let join = min_tjoin(g, &odd)?;

        let mut extra = reconnection;
        extra.extend(&join.to_multiset(g));
        let solution = extract_ordered_walks(g, &state.walks, &extra)?;
        let report = CostReport::new(
            state.sampling_cost,
            state.reconnections.len(),
            join.cost(),
            self.lp_objective(),
        );
        debug_assert_eq!(report.total, solution.cost);
        debug_assert!(solution.preserves_order(&self.order));
        debug_assert!(validate_solution(inst, &solution.to_solution()).is_ok());
        Ok(OrderedRun {
            solution,
            report,
            state,
            odd,
            join,
        })
    }

    pub fn run_randomized<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OrderedRun, OrderedError> {
        self.finish(self.prepared.sample(rng))
    }

    pub fn run_seed(&self, seed: u64) -> Result<OrderedRun, OrderedError> {
        self.run_randomized(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

pub fn solve_ordered<T: Scalar>(
    inst: &OrderedInstance,
    seed: u64,
) -> Result<(OrderedSolution, CostReport), OrderedError> {
    let run = OrderedPlan::<T>::new(inst)?.run_seed(seed)?;
    Ok((run.solution, run.report))
}
