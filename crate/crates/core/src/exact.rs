//! Exact optima for small instances, and an exhaustive check of the
//! connectivity constraints.
//!
//! In the shortest-path metric a walk that covers a superset of vertices is
//! never cheaper, so some optimal solution assigns every non-terminal vertex
//! to exactly one commodity. For a fixed assignment the best walk of
//! commodity `i` is a shortest Hamiltonian `s_i`–`t_i` path (closed tour when
//! `s_i = t_i`) through its vertices in the metric, found by Held–Karp DP.
//! Assignments are combined by subset convolution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{distance_matrix, shortest_path, BidirectedGraph};
use crate::instance::{Instance, Solution};
use crate::lp::{CutConstraint, FractionalSolution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("instance too large: {what} is {actual}, limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactLimits {
    /// Maximum number of non-terminal vertices.
    pub max_free: usize,
    /// Maximum number of vertices assigned to one commodity.
    pub max_dp: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_free: 10,
            max_dp: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactResult {
    pub cost: usize,
    /// Non-terminal vertices assigned to each commodity, ascending.
    pub assignment: Vec<Vec<usize>>,
    /// Visiting order of the assigned vertices per commodity.
    pub orders: Vec<Vec<usize>>,
    /// Walks realizing `cost` (shortest paths between consecutive stops).
    pub solution: Solution,
}

/// Held–Karp table for one commodity over subsets of the free vertices.
struct Tour {
    /// `best[mask]`: cheapest walk covering `mask`; `usize::MAX` when the
    /// subset exceeds the DP limit.
    best: Vec<usize>,
    /// `dp[mask * f + last]`.
    dp: Vec<usize>,
    sink: usize,
}

const INF: usize = usize::MAX / 4;

impl Tour {
    fn new(free: &[usize], dist: &[Vec<usize>], source: usize, sink: usize, max_dp: usize) -> Self {
        let f = free.len();
        let full = 1usize << f;
        let mut dp = vec![INF; full * f];
        for (j, &v) in free.iter().enumerate() {
            dp[(1 << j) * f + j] = dist[source][v];
        }
        for mask in 1..full {
            if (mask as u32).count_ones() as usize > max_dp {
                continue;
            }
            for last in 0..f {
                let cur = dp[mask * f + last];
                if mask & (1 << last) == 0 || cur >= INF {
                    continue;
                }
                for next in 0..f {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let slot = &mut dp[(mask | 1 << next) * f + next];
                    *slot = (*slot).min(cur + dist[free[last]][free[next]]);
                }
            }
        }
        let best = (0..full)
            .map(|mask| {
                if mask == 0 {
                    return dist[source][sink];
                }
                if (mask as u32).count_ones() as usize > max_dp {
                    return usize::MAX;
                }
                (0..f)
                    .filter(|&l| mask & (1 << l) != 0)
                    .map(|l| dp[mask * f + l] + dist[free[l]][sink])
                    .min()
                    .expect("nonempty mask")
            })
            .collect();
        Tour { best, dp, sink }
    }

    /// Visiting order achieving `best[mask]`.
    fn order(&self, free: &[usize], dist: &[Vec<usize>], mask: usize) -> Vec<usize> {
        let f = free.len();
        let mut order = Vec::new();
        if mask == 0 {
            return order;
        }
        let mut last = (0..f)
            .filter(|&l| mask & (1 << l) != 0)
            .find(|&l| self.dp[mask * f + l] + dist[free[l]][self.sink] == self.best[mask])
            .expect("optimal last vertex");
        let mut rest = mask;
        loop {
            order.push(free[last]);
            let prev_mask = rest & !(1 << last);
            if prev_mask == 0 {
                break;
            }
            let here = self.dp[rest * f + last];
            last = (0..f)
                .filter(|&p| prev_mask & (1 << p) != 0)
                .find(|&p| self.dp[prev_mask * f + p] + dist[free[p]][free[last]] == here)
                .expect("optimal predecessor");
            rest = prev_mask;
        }
        order.reverse();
        order
    }
}

/// Non-terminal vertices, ascending.
pub fn free_vertices(inst: &Instance) -> Vec<usize> {
    let terminal = inst.terminal_mask();
    (0..inst.num_vertices()).filter(|&v| !terminal[v]).collect()
}

/// Per-commodity cost tables `W(i, mask)` over subsets of the free vertices.
fn tours(inst: &Instance, free: &[usize], dist: &[Vec<usize>], max_dp: usize) -> Vec<Tour> {
    inst.commodities()
        .iter()
        .map(|c| Tour::new(free, dist, c.source, c.sink, max_dp))
        .collect()
}

/// Minimum of `Σ_i cost[i][A_i]` over partitions `(A_i)` of `full`, by
/// subset convolution; returns the optimum and one optimal partition.
fn min_partition(costs: &[&[usize]], full: usize) -> (usize, Vec<usize>) {
    let k = costs.len();
    let size = full + 1;
    // acc[j][mask]: best cover of mask by the first j + 1 commodities.
    let mut acc = vec![vec![usize::MAX; size]; k];
    let mut choice = vec![vec![0usize; size]; k];
    acc[0][..size].copy_from_slice(&costs[0][..size]);
    for mask in 0..size {
        choice[0][mask] = mask;
    }
    for j in 1..k {
        for mask in 0..size {
            if mask & !full != 0 {
                continue;
            }
            let mut sub = mask;
            loop {
                let a = acc[j - 1][mask & !sub];
                let b = costs[j][sub];
                if a != usize::MAX && b != usize::MAX && a + b < acc[j][mask] {
                    acc[j][mask] = a + b;
                    choice[j][mask] = sub;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
    }
    let mut parts = vec![0; k];
    let mut rest = full;
    for j in (0..k).rev() {
        parts[j] = choice[j][rest];
        rest &= !parts[j];
    }
    (acc[k - 1][full], parts)
}

/// Exact optimum with the default limits.
pub fn exact_opt(inst: &Instance) -> Result<ExactResult, ExactError> {
    exact_opt_with(inst, ExactLimits::default())
}

pub fn exact_opt_with(inst: &Instance, limits: ExactLimits) -> Result<ExactResult, ExactError> {
    let free = free_vertices(inst);
    if free.len() > limits.max_free {
        return Err(ExactError::TooLarge {
            what: "non-terminal vertex count",
            actual: free.len(),
            limit: limits.max_free,
        });
    }
    let dist = distance_matrix(inst.graph());
    let tours = tours(inst, &free, &dist, limits.max_dp);
    let costs: Vec<&[usize]> = tours.iter().map(|t| t.best.as_slice()).collect();
    let full = (1usize << free.len()) - 1;
    let (cost, parts) = min_partition(&costs, full);
    if cost == usize::MAX {
        return Err(ExactError::TooLarge {
            what: "largest per-commodity assignment",
            actual: free.len().div_ceil(inst.num_commodities()),
            limit: limits.max_dp,
        });
    }

    let g = inst.graph();
    let mut assignment = Vec::new();
    let mut orders = Vec::new();
    let mut walks = Vec::new();
    for (c, (tour, &mask)) in inst.commodities().iter().zip(tours.iter().zip(&parts)) {
        let order = tour.order(&free, &dist, mask);
        let mut walk = vec![c.source];
        for &stop in order.iter().chain(std::iter::once(&c.sink)) {
            let from = *walk.last().expect("nonempty");
            let leg = shortest_path(g, from, stop).expect("connected");
            walk.extend_from_slice(&leg[1..]);
        }
        let mut assigned: Vec<usize> = order.clone();
        assigned.sort_unstable();
        assignment.push(assigned);
        orders.push(order);
        walks.push(walk);
    }
    let solution = Solution::from_walks(walks);
    debug_assert_eq!(solution.cost, cost);
    Ok(ExactResult {
        cost,
        assignment,
        orders,
        solution,
    })
}

/// Like [`exact_opt`] but one free vertex may additionally be covered by a
/// second commodity. Used to check that exclusive assignment loses nothing.
pub fn relaxed_opt_one_shared(inst: &Instance) -> Result<usize, ExactError> {
    let limits = ExactLimits::default();
    let free = free_vertices(inst);
    if free.len() > limits.max_free {
        return Err(ExactError::TooLarge {
            what: "non-terminal vertex count",
            actual: free.len(),
            limit: limits.max_free,
        });
    }
    let dist = distance_matrix(inst.graph());
    let tours = tours(inst, &free, &dist, limits.max_dp);
    let full = (1usize << free.len()) - 1;
    let k = inst.num_commodities();
    let mut best = min_partition(&tours.iter().map(|t| t.best.as_slice()).collect::<Vec<_>>(), full).0;
    for shared in 0..free.len() {
        let bit = 1usize << shared;
        for a in 0..k {
            for b in a + 1..k {
                // Force `shared` into both a and b; the others partition the rest.
                let forced: Vec<Vec<usize>> = [a, b]
                    .iter()
                    .map(|&i| (0..=full).map(|m| tours[i].best[m | bit]).collect())
                    .collect();
                let costs: Vec<&[usize]> = (0..k)
                    .map(|i| {
                        if i == a {
                            forced[0].as_slice()
                        } else if i == b {
                            forced[1].as_slice()
                        } else {
                            tours[i].best.as_slice()
                        }
                    })
                    .collect();
                best = best.min(min_partition(&costs, full & !bit).0);
            }
        }
    }
    Ok(best)
}

/// Largest vertex count accepted by [`brute_force_cut_check`].
pub const CUT_CHECK_MAX_VERTICES: usize = 12;

/// Checks every connectivity constraint `x_i(out(U)) >= y[i][v]` with
/// `v ∈ U ⊆ V - t_i` (and `v` not a sink) by enumeration. Returns the most
/// violated constraint found beyond the LP tolerance, if any.
pub fn brute_force_cut_check<T: Scalar>(
    inst: &Instance,
    x: &FractionalSolution<T>,
) -> Result<Option<CutConstraint>, ExactError> {
    let n = inst.num_vertices();
    if n > CUT_CHECK_MAX_VERTICES {
        return Err(ExactError::TooLarge {
            what: "vertex count",
            actual: n,
            limit: CUT_CHECK_MAX_VERTICES,
        });
    }
    let graph = BidirectedGraph::new(inst.graph().clone());
    let sinks = inst.sink_mask();
    let eps = T::lp_tolerance();
    let mut worst: Option<(T, CutConstraint)> = None;
    for (i, c) in inst.commodities().iter().enumerate() {
        for mask in 1u32..(1 << n) {
            if mask & (1 << c.sink) != 0 {
                continue;
            }
            let inside = |v: usize| mask & (1 << v) != 0;
            let leaving = graph
                .arcs()
                .iter()
                .enumerate()
                .filter(|(_, &(u, w))| inside(u) && !inside(w))
                .fold(T::zero(), |acc, (a, _)| acc + x.flow(i, a).clone());
            for v in (0..n).filter(|&v| inside(v) && !sinks[v]) {
                let gap = x.visit(i, v).clone() - leaving.clone();
                if gap > eps
                    && worst.as_ref().is_none_or(|(w, _)| gap > *w)
                {
                    let set = (0..n).filter(|&u| inside(u)).collect();
                    worst = Some((
                        gap,
                        CutConstraint {
                            commodity: i,
                            vertex: v,
                            set,
                        },
                    ));
                }
            }
        }
    }
    Ok(worst.map(|(_, c)| c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::graph::Graph;
    use crate::instance::{validate_solution, Commodity};

    #[test]
    fn fixture_optimum_matches_lp() {
        let inst = fig1();
        let res = exact_opt(&inst).unwrap();
        assert_eq!(res.cost, FIG1_OPT);
        assert_eq!(res.cost as f64, FIG1_LP_VALUE);
        validate_solution(&inst, &res.solution).unwrap();
        assert_eq!(res.solution, fig1_optimal_solution());
        let covered: usize = res.assignment.iter().map(Vec::len).sum();
        assert_eq!(covered, 6);
    }

    #[test]
    fn trivial_optima() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(g, vec![Commodity::new(0, 2)]).unwrap();
        assert_eq!(exact_opt(&inst).unwrap().cost, 2);

        let n = 6;
        let star = Graph::new(n, (1..n).map(|v| (0, v)).collect()).unwrap();
        let inst = Instance::new(star, vec![Commodity::new(0, 0)]).unwrap();
        let res = exact_opt(&inst).unwrap();
        assert_eq!(res.cost, 2 * (n - 1));
        validate_solution(&inst, &res.solution).unwrap();
    }

    #[test]
    fn fixture_vrp_optimum_within_forest_bound() {
        let inst = fig1_vrp();
        let res = exact_opt(&inst).unwrap();
        validate_solution(&inst, &res.solution).unwrap();
        // The forest doubling costs 16 and is within twice the optimum.
        assert!(res.cost <= 16 && 16 <= 2 * res.cost);
    }

    #[test]
    fn limits_are_enforced() {
        let n = 13;
        let path = Graph::new(n, (1..n).map(|v| (v - 1, v)).collect()).unwrap();
        let inst = Instance::new(path, vec![Commodity::new(0, 1)]).unwrap();
        assert!(matches!(exact_opt(&inst), Err(ExactError::TooLarge { .. })));
        let tight = ExactLimits { max_free: 11, max_dp: 14 };
        assert_eq!(exact_opt_with(&inst, tight).unwrap().cost, 2 * 11 + 1);
        let narrow = ExactLimits { max_free: 11, max_dp: 5 };
        assert!(matches!(exact_opt_with(&inst, narrow), Err(ExactError::TooLarge { .. })));
    }

    #[test]
    fn sharing_a_vertex_never_helps_on_the_fixture() {
        assert_eq!(relaxed_opt_one_shared(&fig1()).unwrap(), FIG1_OPT);
    }

    #[test]
    fn cut_check_on_known_solutions() {
        let inst = fig1();
        let graph = BidirectedGraph::new(inst.graph().clone());
        let x = FractionalSolution::from_arc_flows(&graph, 2, &fig1_lp_flows());
        assert_eq!(brute_force_cut_check(&inst, &x).unwrap(), None);

        let zero = FractionalSolution::new(&graph, 2, vec![0.0; 2 * graph.num_arcs()]);
        assert_eq!(brute_force_cut_check(&inst, &zero).unwrap(), None);

        // A path 0-1-2 for commodity (0, 2) plus a cycle 3-4-3 that never
        // reaches the sink.
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(0, 2)]).unwrap();
        let b = BidirectedGraph::new(g);
        let x = FractionalSolution::from_arc_flows(
            &b,
            1,
            &[(0, 0, 1, 1.0), (0, 1, 2, 1.0), (0, 3, 4, 0.5), (0, 4, 3, 0.5)],
        );
        let witness = brute_force_cut_check(&inst, &x).unwrap().expect("violated");
        assert_eq!(witness.commodity, 0);
        assert!(witness.set.contains(&witness.vertex));
        assert!(!witness.set.contains(&2));
        assert_eq!(witness.violation(&b, &x), 0.5);
    }
}
