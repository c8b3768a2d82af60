//! The worked ten-vertex instance used throughout the tests.
//!
//! Vertex layout: `s1 = 0, s2 = 1, t1 = 2, t2 = 3`, inner vertices
//! `v1..v6 = 4..9` (v1..v4 form the upper square, v5 and v6 the bottom row).

use crate::graph::Graph;
use crate::instance::{load_instance, AnyInstance, Commodity, Instance, OrderedInstance, Solution};

pub const S1: usize = 0;
pub const S2: usize = 1;
pub const T1: usize = 2;
pub const T2: usize = 3;
pub const V1: usize = 4;
pub const V2: usize = 5;
pub const V3: usize = 6;
pub const V4: usize = 7;
pub const V5: usize = 8;
pub const V6: usize = 9;

pub const FIG1_JSON: &str = include_str!("../fixtures/fig1.json");

/// LP optimum of the fixture.
pub const FIG1_LP_VALUE: f64 = 8.0;
/// Integral optimum of the fixture. It equals the LP value: the walks in
/// [`fig1_optimal_solution`] cover every inner vertex exactly once.
pub const FIG1_OPT: usize = 8;
/// Cost of the hand-drawn integral solution [`fig1_integral_solution`].
pub const FIG1_DRAWN_COST: usize = 9;

pub fn fig1() -> Instance {
    match load_instance(FIG1_JSON).expect("fixture parses") {
        AnyInstance::MultiPath(inst) => inst,
        AnyInstance::Ordered(_) => unreachable!("fixture lists commodities"),
    }
}

pub fn fig1_graph() -> Graph {
    fig1().graph().clone()
}

/// The fixture graph with cyclic order `(s1, t1, s2, t2)`.
pub fn fig1_ordered() -> OrderedInstance {
    OrderedInstance::new(fig1_graph(), vec![S1, T1, S2, T2]).expect("valid order")
}

/// The fixture graph as a two-depot VRP instance on `{s1, s2}`.
pub fn fig1_vrp() -> Instance {
    Instance::new(fig1_graph(), vec![Commodity::new(S1, S1), Commodity::new(S2, S2)])
        .expect("valid depots")
}

/// A hand-drawn integral solution of cost 9 (`v4` is visited twice).
pub fn fig1_integral_solution() -> Solution {
    Solution::from_walks(vec![
        vec![S1, V2, V4, T1],
        vec![S2, V5, V6, V4, V1, V3, T2],
    ])
}

/// An optimal integral solution: two vertex-disjoint Hamiltonian paths of
/// total length 8.
pub fn fig1_optimal_solution() -> Solution {
    Solution::from_walks(vec![vec![S1, V2, V3, T1], vec![S2, V5, V6, V4, V1, T2]])
}

/// Weighted paths and cycles of the optimal fractional solution, per commodity:
/// `(vertex sequence, weight, is_cycle)`.
pub fn fig1_lp_decomposition() -> [Vec<(Vec<usize>, f64, bool)>; 2] {
    [
        vec![
            (vec![S1, V1, V3, T1], 0.25, false),
            (vec![S1, V2, V4, T1], 0.25, false),
            (vec![S1, V5, V6, T1], 0.5, false),
            (vec![V1, V3, V2, V4, V1], 0.25, true),
        ],
        vec![
            (vec![S2, V5, V2, V3, T2], 0.5, false),
            (vec![S2, V6, V4, V1, T2], 0.5, false),
        ],
    ]
}

/// Arc flows `(commodity, tail, head, value)` of the optimal fractional solution.
pub fn fig1_lp_flows() -> Vec<(usize, usize, usize, f64)> {
    let mut flows: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (i, elements) in fig1_lp_decomposition().iter().enumerate() {
        for (walk, weight, _) in elements {
            for w in walk.windows(2) {
                match flows.iter_mut().find(|f| f.0 == i && f.1 == w[0] && f.2 == w[1]) {
                    Some(f) => f.3 += weight,
                    None => flows.push((i, w[0], w[1], *weight)),
                }
            }
        }
    }
    flows
}
