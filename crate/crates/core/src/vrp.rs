//! Multi-depot VRP baseline (doubled depot-rooted BFS forest) and the
//! best-of-two combiner for multi-path instances.
//!
//! The combiner runs the derandomized multi-path solver and, independently,
//! a VRP solver on the instance obtained by closing every commodity at its
//! source; each closed depot walk is then extended by a shortest path to the
//! commodity's sink. Whichever of the two is cheaper is returned. Its
//! guarantee is a reduction: any VRP solver with ratio `2 - δ` yields a
//! multi-path ratio strictly below 2, by splitting on whether terminal
//! outflow or the source-sink distance sum `D(I)` is large relative to OPT.
//! The shipped VRP solver is the forest doubling (`δ = 0`).

use serde::{Deserialize, Serialize};

use crate::graph::{bfs_distances, shortest_path, Graph};
use crate::instance::{Commodity, Instance, InstanceError, Solution};
use crate::multipath::{CostReport, Prepared, SolveError};
use crate::scalar::Scalar;

/// A graph with distinct depots; every depot needs a closed walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VrpInstance {
    instance: Instance,
}

impl VrpInstance {
    pub fn new(graph: Graph, depots: Vec<usize>) -> Result<Self, InstanceError> {
        let commodities = depots.into_iter().map(|d| Commodity::new(d, d)).collect();
        Ok(VrpInstance {
            instance: Instance::new(graph, commodities)?,
        })
    }

    /// `Some` when every commodity of `inst` is closed.
    pub fn from_instance(inst: &Instance) -> Option<Self> {
        inst.is_vrp().then(|| VrpInstance {
            instance: inst.clone(),
        })
    }

    pub fn graph(&self) -> &Graph {
        self.instance.graph()
    }

    pub fn depots(&self) -> Vec<usize> {
        self.instance.commodities().iter().map(|c| c.source).collect()
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }
}

/// Pluggable VRP algorithm for the combiner. Must return one closed walk per
/// depot, in depot order, jointly covering every vertex.
pub trait VrpSolver {
    fn name(&self) -> &str;
    fn solve(&self, inst: &VrpInstance) -> Result<Solution, SolveError>;
}

/// Doubles a depot-rooted BFS forest: cost `2 (n - #depots)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForestDoubling;

impl VrpSolver for ForestDoubling {
    fn name(&self) -> &str {
        "forest-doubling"
    }

    fn solve(&self, inst: &VrpInstance) -> Result<Solution, SolveError> {
        Ok(solve_vrp_forest(inst))
    }
}

/// Parent of every vertex in the multi-source BFS forest (`None` for depots).
/// Each vertex joins the tree of its nearest depot, ties going to the depot
/// listed first; its parent is the lowest-indexed neighbour one level closer
/// in the same tree.
pub fn bfs_forest(g: &Graph, depots: &[usize]) -> Vec<Option<usize>> {
    let n = g.num_vertices();
    let dist: Vec<Vec<usize>> = depots.iter().map(|&d| bfs_distances(g, d)).collect();
    let mut level = vec![usize::MAX; n];
    let mut root = vec![usize::MAX; n];
    for v in 0..n {
        for (r, row) in dist.iter().enumerate() {
            if row[v] < level[v] {
                level[v] = row[v];
                root[v] = r;
            }
        }
    }
    (0..n)
        .map(|v| {
            if level[v] == 0 {
                return None;
            }
            let parent = g
                .neighbors(v)
                .iter()
                .map(|&(u, _)| u)
                .find(|&u| level[u] + 1 == level[v] && root[u] == root[v])
                .expect("a BFS predecessor in the same tree");
            Some(parent)
        })
        .collect()
}

/// Closed walks around the doubled BFS forest, children visited in
/// increasing order.
pub fn solve_vrp_forest(inst: &VrpInstance) -> Solution {
    let g = inst.graph();
    let depots = inst.depots();
    let parent = bfs_forest(g, &depots);
    let mut children = vec![Vec::new(); g.num_vertices()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(v);
        }
    }
    let walks = depots
        .iter()
        .map(|&d| {
            let mut walk = vec![d];
            // Iterative DFS: (vertex, next child slot).
            let mut stack = vec![(d, 0usize)];
            while let Some((u, slot)) = stack.pop() {
                if let Some(&c) = children[u].get(slot) {
                    stack.push((u, slot + 1));
                    walk.push(c);
                    stack.push((c, 0));
                } else if let Some(&(p, _)) = stack.last() {
                    walk.push(p);
                }
            }
            walk
        })
        .collect();
    Solution::from_walks(walks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    MultiPath,
    Vrp,
}

#[derive(Debug, Clone)]
pub struct CombinerResult {
    pub solution: Solution,
    pub winner: Branch,
    /// Derandomized multi-path output.
    pub multipath: Solution,
    pub multipath_report: CostReport,
    /// VRP walks extended to each sink.
    pub vrp: Solution,
    /// Cost of the VRP solver's own output before extension.
    pub vrp_cost: usize,
    /// `D(I)`: sum of source-sink distances.
    pub distance_sum: usize,
}

/// Sum of BFS distances between each commodity's endpoints.
pub fn distance_sum(inst: &Instance) -> usize {
    inst.commodities()
        .iter()
        .map(|c| bfs_distances(inst.graph(), c.source)[c.sink])
        .sum()
}

/// The VRP branch alone. Commodities sharing a source share one depot; the
/// first of them receives the depot's closed walk, the others start from the
/// bare depot. Each walk is then extended by a shortest path to the sink.
/// Returns the extended walks and the VRP solver's own cost.
pub fn vrp_branch(inst: &Instance, vrp: &dyn VrpSolver) -> Result<(Solution, usize), SolveError> {
    let g = inst.graph();
    let mut depots: Vec<usize> = Vec::new();
    for c in inst.commodities() {
        if !depots.contains(&c.source) {
            depots.push(c.source);
        }
    }
    let vrp_inst = VrpInstance::new(g.clone(), depots.clone())
        .expect("distinct sources of a valid instance form a valid depot set");
    let closed = vrp.solve(&vrp_inst)?;
    let mut handed_out = vec![false; depots.len()];
    let walks = inst
        .commodities()
        .iter()
        .map(|c| {
            let d = depots.iter().position(|&s| s == c.source).expect("depot");
            let mut walk = if handed_out[d] {
                vec![c.source]
            } else {
                handed_out[d] = true;
                closed.walks[d].clone()
            };
            let path = shortest_path(g, c.source, c.sink).expect("connected");
            walk.extend_from_slice(&path[1..]);
            walk
        })
        .collect();
    Ok((Solution::from_walks(walks), closed.cost))
}

/// Cheaper of the derandomized multi-path solution and the VRP branch; ties
/// keep the multi-path solution.
pub fn solve_combiner<T: Scalar>(
    inst: &Instance,
    vrp: &dyn VrpSolver,
) -> Result<CombinerResult, SolveError> {
    let run = Prepared::<T>::new(inst)?.run_derandomized();
    let (vrp_solution, vrp_cost) = vrp_branch(inst, vrp)?;
    let (solution, winner) = if vrp_solution.cost < run.solution.cost {
        (vrp_solution.clone(), Branch::Vrp)
    } else {
        (run.solution.clone(), Branch::MultiPath)
    };
    Ok(CombinerResult {
        solution,
        winner,
        multipath: run.solution,
        multipath_report: run.report,
        vrp: vrp_solution,
        vrp_cost,
        distance_sum: distance_sum(inst),
    })
}
