//! Randomized path sampling with doubled-edge reconnection, and its
//! deterministic counterpart via conditional expectations.
//!
//! Every solver here goes through a [`Prepared`] plan: the LP optimum and its
//! path/cycle decomposition are computed once, after which any number of
//! seeds (or the derandomized run) can be evaluated cheaply.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{decompose_in, path_mass, Decomposition, DecompositionError, PathMass};
use crate::graph::BidirectedGraph;
use crate::instance::{Instance, Solution};
use crate::lp::{solve_lp, FractionalSolution, LpError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("lp: {0}")]
    Lp(#[from] LpError),
    #[error("decomposition: {0}")]
    Decomposition(#[from] DecompositionError),
}

/// How a vertex left the pending set during reconnection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconnection {
    pub vertex: usize,
    pub anchor: usize,
    pub commodity: usize,
}

/// Walks under construction plus the covered set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    /// Chosen decomposition path per commodity; `None` for closed commodities.
    pub chosen: Vec<Option<usize>>,
    /// Current walk of each commodity as a vertex sequence.
    pub walks: Vec<Vec<usize>>,
    pub covered: Vec<bool>,
    /// Reconnection steps in the order they were applied.
    pub reconnections: Vec<Reconnection>,
    /// Edges contributed by the sampled paths.
    pub sampling_cost: usize,
}

impl SamplerState {
    /// Builds the post-sampling state for a fixed choice of paths.
    pub fn from_choice<T: Scalar>(
        inst: &Instance,
        dec: &Decomposition<T>,
        chosen: Vec<Option<usize>>,
    ) -> Self {
        let mut covered = vec![false; inst.num_vertices()];
        let mut walks = Vec::with_capacity(chosen.len());
        let mut sampling_cost = 0;
        for (i, c) in inst.commodities().iter().enumerate() {
            let walk = match chosen[i] {
                Some(j) => {
                    let p = &dec.commodities[i].paths[j];
                    sampling_cost += p.len();
                    p.vertices.clone()
                }
                None => vec![c.source],
            };
            for &v in &walk {
                covered[v] = true;
            }
            covered[c.sink] = true;
            walks.push(walk);
        }
        SamplerState {
            chosen,
            walks,
            covered,
            reconnections: Vec::new(),
            sampling_cost,
        }
    }

    /// Vertices not yet on any walk, ascending.
    pub fn pending(&self) -> Vec<usize> {
        (0..self.covered.len()).filter(|&v| !self.covered[v]).collect()
    }

    pub fn total_edges(&self) -> usize {
        self.walks.iter().map(|w| w.len().saturating_sub(1)).sum()
    }
}

/// Picks one path per open commodity with probability equal to its weight.
pub fn sample_paths<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance,
    dec: &Decomposition<T>,
    rng: &mut R,
) -> SamplerState {
    let chosen = inst
        .commodities()
        .iter()
        .zip(&dec.commodities)
        .map(|(c, d)| {
            if c.is_closed() || d.paths.is_empty() {
                return None;
            }
            let y: f64 = rng.random();
            let mut acc = 0.0;
            for (j, p) in d.paths.iter().enumerate() {
                acc += p.weight.approx_f64();
                if y < acc {
                    return Some(j);
                }
            }
            Some(d.paths.len() - 1)
        })
        .collect();
    SamplerState::from_choice(inst, dec, chosen)
}

/// Attaches pending vertices one at a time. Each step takes the smallest
/// pending vertex with a covered neighbour, its smallest covered neighbour
/// `w`, and the lowest commodity whose walk visits `w`. `attach` performs the
/// splice and returns the commodity it used.
pub(crate) fn reconnect_with(
    inst: &Instance,
    state: &mut SamplerState,
    mut attach: impl FnMut(&mut SamplerState, usize, usize) -> usize,
) {
    let g = inst.graph();
    loop {
        let step = (0..g.num_vertices())
            .filter(|&v| !state.covered[v])
            .find_map(|v| {
                g.neighbors(v)
                    .iter()
                    .map(|&(w, _)| w)
                    .find(|&w| state.covered[w])
                    .map(|w| (v, w))
            });
        let Some((v, w)) = step else { break };
        let commodity = attach(state, v, w);
        state.covered[v] = true;
        state.reconnections.push(Reconnection {
            vertex: v,
            anchor: w,
            commodity,
        });
    }
}

pub(crate) fn first_walk_containing(state: &SamplerState, w: usize) -> (usize, usize) {
    state
        .walks
        .iter()
        .enumerate()
        .find_map(|(i, walk)| walk.iter().position(|&u| u == w).map(|p| (i, p)))
        .expect("covered vertex lies on some walk")
}

/// Doubled-arc reconnection: each pending vertex `v` becomes a detour
/// `w, v, w` at the first occurrence of its anchor `w`.
pub fn reconnect(inst: &Instance, mut state: SamplerState) -> SamplerState {
    reconnect_with(inst, &mut state, |state, v, w| {
        let (i, p) = first_walk_containing(state, w);
        state.walks[i].splice(p + 1..p + 1, [v, w]);
        i
    });
    state
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub sampling: usize,
    pub reconnection: usize,
    /// Parity-correction edges; always zero for the multi-path solver.
    pub parity: usize,
    pub total: usize,
    pub lp_objective: f64,
    /// `total / lp_objective`, or 1 when both are zero.
    pub ratio: f64,
}

impl CostReport {
    pub fn new(sampling: usize, reconnection: usize, parity: usize, lp_objective: f64) -> Self {
        let total = sampling + reconnection + parity;
        let ratio = if lp_objective > 0.0 {
            total as f64 / lp_objective
        } else if total == 0 {
            1.0
        } else {
            f64::INFINITY
        };
        CostReport {
            sampling,
            reconnection,
            parity,
            total,
            lp_objective,
            ratio,
        }
    }
}

/// Outcome of the derandomized run, including the potential after each
/// commodity is fixed (`potentials[0]` is the unconditioned value).
#[derive(Debug, Clone)]
pub struct Derandomized<T> {
    pub solution: Solution,
    pub report: CostReport,
    pub state: SamplerState,
    pub potentials: Vec<T>,
}

/// LP solution and decomposition of an instance, reusable across runs.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    instance: Instance,
    graph: BidirectedGraph,
    lp: FractionalSolution<T>,
    decomposition: Decomposition<T>,
    mass: PathMass<T>,
}

impl<T: Scalar> Prepared<T> {
    pub fn new(inst: &Instance) -> Result<Self, SolveError> {
        let lp = solve_lp::<T>(inst)?;
        Self::from_lp(inst, lp)
    }

    /// Uses an externally computed fractional optimum.
    pub fn from_lp(inst: &Instance, lp: FractionalSolution<T>) -> Result<Self, SolveError> {
        let graph = BidirectedGraph::new(inst.graph().clone());
        let decomposition = decompose_in(&graph, inst, &lp)?;
        let mass = path_mass(inst, &decomposition);
        Ok(Prepared {
            instance: inst.clone(),
            graph,
            lp,
            decomposition,
            mass,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn graph(&self) -> &BidirectedGraph {
        &self.graph
    }

    pub fn lp(&self) -> &FractionalSolution<T> {
        &self.lp
    }

    pub fn decomposition(&self) -> &Decomposition<T> {
        &self.decomposition
    }

    pub fn path_mass(&self) -> &PathMass<T> {
        &self.mass
    }

    pub fn lp_objective(&self) -> f64 {
        self.lp.objective().approx_f64()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplerState {
        sample_paths(&self.instance, &self.decomposition, rng)
    }

    fn finish(&self, state: &SamplerState) -> (Solution, CostReport) {
        let solution = Solution::from_walks(state.walks.clone());
        let report = CostReport::new(
            state.sampling_cost,
            2 * state.reconnections.len(),
            0,
            self.lp_objective(),
        );
        debug_assert_eq!(report.total, solution.cost);
        (solution, report)
    }

    pub fn run_randomized<R: Rng + ?Sized>(&self, rng: &mut R) -> (Solution, CostReport) {
        let state = reconnect(&self.instance, self.sample(rng));
        self.finish(&state)
    }

    pub fn run_seed(&self, seed: u64) -> (Solution, CostReport) {
        self.run_randomized(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Fixes commodities in order, each time choosing the path that minimizes
    /// the conditional expectation bound; ties go to the lowest path index.
    pub fn run_derandomized(&self) -> Derandomized<T> {
        let inst = &self.instance;
        let n = inst.num_vertices();
        let k = inst.num_commodities();
        let one = T::one();
        let two = T::from_count(2);

        // suffix[h][v] = prod_{i >= h} (1 - zP[i][v])
        let mut suffix = vec![vec![one.clone(); n]; k + 1];
        for h in (0..k).rev() {
            for v in 0..n {
                suffix[h][v] =
                    suffix[h + 1][v].clone() * (one.clone() - self.mass.get(h, v).clone());
            }
        }
        // tail[h] = sum_{i >= h} E|P^i|
        let mut tail = vec![T::zero(); k + 1];
        for h in (0..k).rev() {
            tail[h] = tail[h + 1].clone() + self.decomposition.commodities[h].expected_path_length();
        }

        let mut in_m = inst.terminal_mask();
        let uncovered_weight = |row: &[T], in_m: &[bool]| {
            (0..n)
                .filter(|&v| !in_m[v])
                .fold(T::zero(), |acc, v| acc + row[v].clone())
        };
        let mut fixed = T::zero();
        let mut potentials =
            vec![fixed.clone() + two.clone() * uncovered_weight(&suffix[0], &in_m) + tail[0].clone()];
        let mut chosen = Vec::with_capacity(k);
        let tie = T::pivot_tolerance();

        for h in 0..k {
            let c = inst.commodities()[h];
            let paths = &self.decomposition.commodities[h].paths;
            let rest = uncovered_weight(&suffix[h + 1], &in_m);
            let base = fixed.clone() + tail[h + 1].clone();
            if c.is_closed() || paths.is_empty() {
                chosen.push(None);
                potentials.push(base + two.clone() * rest);
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for (j, p) in paths.iter().enumerate() {
                let mut reconnect_term = rest.clone();
                let mut seen = vec![false; n];
                for &v in &p.vertices {
                    if !in_m[v] && !seen[v] {
                        seen[v] = true;
                        reconnect_term = reconnect_term - suffix[h + 1][v].clone();
                    }
                }
                let phi = base.clone() + T::from_count(p.len()) + two.clone() * reconnect_term;
                let better = match &best {
                    None => true,
                    Some((_, b)) => phi.clone() + tie.clone() < *b,
                };
                if better {
                    best = Some((j, phi));
                }
            }
            let (j, phi) = best.expect("open commodity has a path");
            for &v in &paths[j].vertices {
                in_m[v] = true;
            }
            fixed = fixed + T::from_count(paths[j].len());
            chosen.push(Some(j));
            potentials.push(phi);
        }

        let state = reconnect(inst, SamplerState::from_choice(inst, &self.decomposition, chosen));
        let (solution, report) = self.finish(&state);
        Derandomized {
            solution,
            report,
            state,
            potentials,
        }
    }
}

pub fn solve_randomized<T: Scalar>(
    inst: &Instance,
    seed: u64,
) -> Result<(Solution, CostReport), SolveError> {
    Ok(Prepared::<T>::new(inst)?.run_seed(seed))
}

pub fn solve_derandomized<T: Scalar>(inst: &Instance) -> Result<(Solution, CostReport), SolveError> {
    let run = Prepared::<T>::new(inst)?.run_derandomized();
    Ok((run.solution, run.report))
}
