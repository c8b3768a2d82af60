//! The multi-commodity flow relaxation, solved by cut generation.
//!
//! Columns are arc flows `x[i][a]` for every commodity `i` and arc `a` of the
//! bidirected graph, followed by zero-cost visit columns `y[i][v]` for every
//! non-sink `v`. Static rows: flow conservation away from the commodity
//! endpoints, unit outflow at `s_i` and inflow at `t_i` when `s_i != t_i`,
//! `y[i][v] <= x_i(out(v))`, and coverage `sum_i y[i][v] >= 1` for every
//! non-sink. Connectivity rows `x_i(out(U)) >= y[i][v]` for `v ∈ U ⊆ V - t_i`
//! are added lazily by [`separate`]. Outflows `z[i][v] = x_i(out(v))` are
//! derived, not columns.
//!
//! The visit columns matter on graphs where every walk must pass some vertex
//! twice (a pendant vertex hanging off an inner vertex, say). With the
//! connectivity row stated against the full outflow `x_i(out(v))`, the set
//! `U = {v, pendant}` would forbid entering the pendant at all and the
//! relaxation would be empty. Bounding by `y <= z` instead keeps every
//! integral solution feasible (take `y = 1` on visited vertices) while
//! leaving the coverage and connectivity structure intact.

pub mod simplex;

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::BidirectedGraph;
use crate::instance::Instance;
use crate::maxflow::{min_cut_with, CapacitatedNetwork, MaxFlowScratch};
use crate::scalar::{exceeds, sum, Scalar};
use simplex::{minimize, LinearRow, Sense, SimplexError};

/// Cut rounds before giving up.
pub const MAX_CUT_ROUNDS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("iteration limit exceeded after {0} cut rounds")]
    IterationLimit(usize),
    #[error("LP backend infeasible")]
    Infeasible,
    #[error("LP backend: {0}")]
    Backend(SimplexError),
}

impl From<SimplexError> for LpError {
    fn from(e: SimplexError) -> Self {
        match e {
            SimplexError::Infeasible => LpError::Infeasible,
            other => LpError::Backend(other),
        }
    }
}

/// What a model row encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Conservation { commodity: usize, vertex: usize },
    SourceOutflow { commodity: usize },
    SinkInflow { commodity: usize },
    Visit { commodity: usize, vertex: usize },
    Coverage { vertex: usize },
    Cut(CutConstraint),
}

/// `x_i(out(U)) >= y[i][v]` with `v ∈ U` and `t_i ∉ U`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutConstraint {
    pub commodity: usize,
    pub vertex: usize,
    /// Sorted members of `U`.
    pub set: Vec<usize>,
}

impl CutConstraint {
    fn mask(&self, n: usize) -> Vec<bool> {
        let mut inside = vec![false; n];
        for &u in &self.set {
            inside[u] = true;
        }
        inside
    }

    /// `y[i][v] - x_i(out(U))`; positive means violated.
    pub fn violation<T: Scalar>(&self, graph: &BidirectedGraph, x: &FractionalSolution<T>) -> T {
        let inside = self.mask(graph.num_vertices());
        let leaving = graph
            .arcs()
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| inside[u] && !inside[v])
            .fold(T::zero(), |acc, (a, _)| acc + x.flow(self.commodity, a).clone());
        x.visit(self.commodity, self.vertex).clone() - leaving
    }

    fn coefficients(&self, graph: &BidirectedGraph, visit_column: usize) -> Vec<(usize, i32)> {
        let inside = self.mask(graph.num_vertices());
        let base = self.commodity * graph.num_arcs();
        let mut coeffs: Vec<(usize, i32)> = graph
            .arcs()
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| inside[u] && !inside[v])
            .map(|(a, _)| (base + a, 1))
            .collect();
        coeffs.push((visit_column, -1));
        coeffs
    }
}

/// Rows of the relaxation with ±1 coefficients, instantiated per scalar at solve time.
#[derive(Debug, Clone)]
pub struct LpModel {
    graph: BidirectedGraph,
    num_commodities: usize,
    /// Column of `y[i][v]`, indexed `i * n + v`; `None` for sinks.
    visit_columns: Vec<Option<usize>>,
    num_columns: usize,
    rows: Vec<ModelRow>,
}

#[derive(Debug, Clone)]
struct ModelRow {
    kind: RowKind,
    coeffs: Vec<(usize, i32)>,
    sense: Sense,
    rhs: i32,
}

impl LpModel {
    pub fn num_columns(&self) -> usize {
        self.num_columns
    }

    pub fn num_flow_columns(&self) -> usize {
        self.num_commodities * self.graph.num_arcs()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.num_commodities
    }

    pub fn graph(&self) -> &BidirectedGraph {
        &self.graph
    }

    pub fn row_kinds(&self) -> impl Iterator<Item = &RowKind> {
        self.rows.iter().map(|r| &r.kind)
    }

    pub fn column(&self, commodity: usize, arc: usize) -> usize {
        commodity * self.graph.num_arcs() + arc
    }

    /// Column of `y[commodity][v]`, absent for sinks.
    pub fn visit_column(&self, commodity: usize, v: usize) -> Option<usize> {
        self.visit_columns[commodity * self.graph.num_vertices() + v]
    }

    pub fn cuts(&self) -> impl Iterator<Item = &CutConstraint> {
        self.rows.iter().filter_map(|r| match &r.kind {
            RowKind::Cut(c) => Some(c),
            _ => None,
        })
    }

    /// Panics if `cut.vertex` is a sink (such vertices have no visit column).
    pub fn add_cut(&mut self, cut: CutConstraint) {
        let y = self
            .visit_column(cut.commodity, cut.vertex)
            .expect("cut vertex must not be a sink");
        let coeffs = cut.coefficients(&self.graph, y);
        self.rows.push(ModelRow {
            kind: RowKind::Cut(cut),
            coeffs,
            sense: Sense::Ge,
            rhs: 0,
        });
    }

    fn linear_rows<T: Scalar>(&self) -> Vec<LinearRow<T>> {
        let scalar = |c: i32| T::from_i32(c).expect("small integer");
        self.rows
            .iter()
            .map(|r| LinearRow {
                coeffs: r.coeffs.iter().map(|&(j, c)| (j, scalar(c))).collect(),
                sense: r.sense,
                rhs: scalar(r.rhs),
            })
            .collect()
    }

    /// Solves the current rows (no separation).
    pub fn solve<T: Scalar>(&self) -> Result<FractionalSolution<T>, LpError> {
        let flows = self.num_flow_columns();
        let objective: Vec<T> = (0..self.num_columns)
            .map(|j| if j < flows { T::one() } else { T::zero() })
            .collect();
        let mut values = minimize(self.num_columns, &objective, &self.linear_rows::<T>())?;
        let visits = self
            .visit_columns
            .iter()
            .map(|c| c.map_or_else(T::zero, |j| values[j].clone()))
            .collect();
        values.truncate(flows);
        Ok(FractionalSolution::new(&self.graph, self.num_commodities, values).with_visits(visits))
    }

    /// Value of every model column under `x`, visit columns included.
    fn column_values<T: Scalar>(&self, x: &FractionalSolution<T>) -> Vec<T> {
        let mut out = x.values().to_vec();
        out.resize(self.num_columns, T::zero());
        let n = self.graph.num_vertices();
        for (slot, col) in self.visit_columns.iter().enumerate() {
            if let Some(j) = col {
                out[*j] = x.visit(slot / n, slot % n).clone();
            }
        }
        out
    }

    /// Human-readable LP-format dump; columns are named `x_<i>_<tail>_<head>`.
    pub fn to_lp_text(&self) -> String {
        let n = self.graph.num_vertices();
        let mut visit_names = vec![String::new(); self.num_columns];
        for (slot, col) in self.visit_columns.iter().enumerate() {
            if let Some(j) = col {
                visit_names[*j] = format!("y_{}_{}", slot / n, slot % n);
            }
        }
        let flows = self.num_flow_columns();
        let name = |col: usize| {
            if col >= flows {
                return visit_names[col].clone();
            }
            let i = col / self.graph.num_arcs();
            let (u, v) = self.graph.arc(col % self.graph.num_arcs());
            format!("x_{i}_{u}_{v}")
        };
        let linear = |coeffs: &[(usize, i32)]| {
            let mut s = String::new();
            for (idx, &(j, c)) in coeffs.iter().enumerate() {
                let sign = if c < 0 { "-" } else if idx > 0 { "+" } else { "" };
                let mag = c.abs();
                let lead = if idx > 0 { " " } else { "" };
                if mag == 1 {
                    let _ = write!(s, "{lead}{sign} {}", name(j));
                } else {
                    let _ = write!(s, "{lead}{sign} {mag} {}", name(j));
                }
            }
            if s.is_empty() {
                s.push('0');
            }
            s.trim_start().to_string()
        };
        let mut out = String::from("\\ multi-commodity flow relaxation\nMinimize\n obj: ");
        let all: Vec<(usize, i32)> = (0..flows).map(|j| (j, 1)).collect();
        out.push_str(&linear(&all));
        out.push_str("\nSubject To\n");
        let mut cut_idx = 0;
        for row in &self.rows {
            let label = match &row.kind {
                RowKind::Conservation { commodity, vertex } => format!("flow_{commodity}_{vertex}"),
                RowKind::SourceOutflow { commodity } => format!("source_{commodity}"),
                RowKind::SinkInflow { commodity } => format!("sink_{commodity}"),
                RowKind::Visit { commodity, vertex } => format!("visit_{commodity}_{vertex}"),
                RowKind::Coverage { vertex } => format!("cover_{vertex}"),
                RowKind::Cut(_) => {
                    cut_idx += 1;
                    format!("cut_{}", cut_idx - 1)
                }
            };
            let op = match row.sense {
                Sense::Eq => "=",
                Sense::Ge => ">=",
                Sense::Le => "<=",
            };
            let _ = writeln!(out, " {label}: {} {op} {}", linear(&row.coeffs), row.rhs);
        }
        out.push_str("End\n");
        out
    }
}

/// Static rows (no connectivity cuts) for `inst`.
pub fn build_static(inst: &Instance) -> LpModel {
    let graph = BidirectedGraph::new(inst.graph().clone());
    let num_arcs = graph.num_arcs();
    let n = graph.num_vertices();
    let mut rows = Vec::new();

    let net_outflow = |i: usize, v: usize, sign: i32| -> Vec<(usize, i32)> {
        let mut coeffs: Vec<(usize, i32)> = graph
            .out_arcs(v)
            .iter()
            .map(|&a| (i * num_arcs + a, sign))
            .chain(graph.in_arcs(v).iter().map(|&a| (i * num_arcs + a, -sign)))
            .collect();
        coeffs.sort_unstable();
        coeffs
    };

    for (i, c) in inst.commodities().iter().enumerate() {
        for v in 0..n {
            let endpoint = !c.is_closed() && (v == c.source || v == c.sink);
            if !endpoint {
                rows.push(ModelRow {
                    kind: RowKind::Conservation { commodity: i, vertex: v },
                    coeffs: net_outflow(i, v, 1),
                    sense: Sense::Eq,
                    rhs: 0,
                });
            }
        }
        if !c.is_closed() {
            rows.push(ModelRow {
                kind: RowKind::SourceOutflow { commodity: i },
                coeffs: net_outflow(i, c.source, 1),
                sense: Sense::Eq,
                rhs: 1,
            });
            rows.push(ModelRow {
                kind: RowKind::SinkInflow { commodity: i },
                coeffs: net_outflow(i, c.sink, -1),
                sense: Sense::Eq,
                rhs: 1,
            });
        }
    }

    let k = inst.num_commodities();
    let sinks = inst.sink_mask();
    let mut visit_columns = vec![None; k * n];
    let mut next = k * num_arcs;
    for i in 0..k {
        for v in (0..n).filter(|&v| !sinks[v]) {
            visit_columns[i * n + v] = Some(next);
            let mut coeffs: Vec<(usize, i32)> =
                graph.out_arcs(v).iter().map(|&a| (i * num_arcs + a, -1)).collect();
            coeffs.push((next, 1));
            rows.push(ModelRow {
                kind: RowKind::Visit { commodity: i, vertex: v },
                coeffs,
                sense: Sense::Le,
                rhs: 0,
            });
            next += 1;
        }
    }
    for v in (0..n).filter(|&v| !sinks[v]) {
        let coeffs = (0..k)
            .map(|i| (visit_columns[i * n + v].expect("non-sink"), 1))
            .collect();
        rows.push(ModelRow {
            kind: RowKind::Coverage { vertex: v },
            coeffs,
            sense: Sense::Ge,
            rhs: 1,
        });
    }

    LpModel {
        graph,
        num_commodities: k,
        visit_columns,
        num_columns: next,
        rows,
    }
}

/// Per-commodity arc flows with derived vertex outflows and visit values.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution<T> {
    num_commodities: usize,
    num_arcs: usize,
    num_vertices: usize,
    values: Vec<T>,
    outflow: Vec<T>,
    visits: Vec<T>,
    objective: T,
}

impl<T: Scalar> FractionalSolution<T> {
    /// Visit values default to `min(z[i][v], 1)`; see [`Self::with_visits`].
    pub fn new(graph: &BidirectedGraph, num_commodities: usize, values: Vec<T>) -> Self {
        let num_arcs = graph.num_arcs();
        let n = graph.num_vertices();
        assert_eq!(values.len(), num_commodities * num_arcs);
        let mut outflow = vec![T::zero(); num_commodities * n];
        for i in 0..num_commodities {
            for (a, &(u, _)) in graph.arcs().iter().enumerate() {
                let slot = &mut outflow[i * n + u];
                *slot = slot.clone() + values[i * num_arcs + a].clone();
            }
        }
        let objective = sum(values.iter());
        let visits = outflow
            .iter()
            .map(|z| if *z > T::one() { T::one() } else { z.clone() })
            .collect();
        Self {
            num_commodities,
            num_arcs,
            num_vertices: n,
            values,
            outflow,
            visits,
            objective,
        }
    }

    /// Replaces the visit values (indexed `commodity * n + v`).
    pub fn with_visits(mut self, visits: Vec<T>) -> Self {
        assert_eq!(visits.len(), self.visits.len());
        self.visits = visits;
        self
    }

    /// Builds a solution from `(commodity, tail, head, value)` entries; other arcs carry zero.
    pub fn from_arc_flows(
        graph: &BidirectedGraph,
        num_commodities: usize,
        flows: &[(usize, usize, usize, T)],
    ) -> Self {
        let num_arcs = graph.num_arcs();
        let mut values = vec![T::zero(); num_commodities * num_arcs];
        for (i, u, v, val) in flows {
            let a = graph
                .arc_between(*u, *v)
                .unwrap_or_else(|| panic!("({u}, {v}) is not an arc"));
            values[i * num_arcs + a] = values[i * num_arcs + a].clone() + val.clone();
        }
        Self::new(graph, num_commodities, values)
    }

    pub fn num_commodities(&self) -> usize {
        self.num_commodities
    }

    pub fn num_arcs(&self) -> usize {
        self.num_arcs
    }

    pub fn flow(&self, commodity: usize, arc: usize) -> &T {
        &self.values[commodity * self.num_arcs + arc]
    }

    pub fn commodity_flows(&self, commodity: usize) -> &[T] {
        &self.values[commodity * self.num_arcs..(commodity + 1) * self.num_arcs]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `z_{i,v}`: outflow of `v` in commodity `i`.
    pub fn z(&self, commodity: usize, v: usize) -> &T {
        &self.outflow[commodity * self.num_vertices + v]
    }

    /// `y[i][v]`: the share of `v`'s coverage attributed to commodity `i`.
    pub fn visit(&self, commodity: usize, v: usize) -> &T {
        &self.visits[commodity * self.num_vertices + v]
    }

    /// `z_v`: total outflow of `v` over all commodities.
    pub fn z_total(&self, v: usize) -> T {
        (0..self.num_commodities).fold(T::zero(), |acc, i| acc + self.z(i, v).clone())
    }

    pub fn objective(&self) -> &T {
        &self.objective
    }

    /// Largest violation of any static row (zero when all hold exactly).
    pub fn max_static_violation(&self, model: &LpModel) -> T {
        let mut worst = T::zero();
        let columns = model.column_values(self);
        for row in &model.rows {
            if matches!(row.kind, RowKind::Cut(_)) {
                continue;
            }
            let lhs = row.coeffs.iter().fold(T::zero(), |acc, &(j, c)| {
                acc + T::from_i32(c).expect("small integer") * columns[j].clone()
            });
            let diff = lhs - T::from_i32(row.rhs).expect("small integer");
            let violation = match row.sense {
                Sense::Eq => diff.abs(),
                Sense::Ge => -diff,
                Sense::Le => diff,
            };
            if violation > worst {
                worst = violation;
            }
        }
        let most_negative = columns
            .iter()
            .fold(T::zero(), |acc, v| if -v.clone() > acc { -v.clone() } else { acc });
        if most_negative > worst {
            most_negative
        } else {
            worst
        }
    }
}

/// Connectivity cuts violated by `x`, using a fresh bidirected graph.
pub fn separate<T: Scalar>(inst: &Instance, x: &FractionalSolution<T>) -> Vec<CutConstraint> {
    separate_in(&BidirectedGraph::new(inst.graph().clone()), inst, x)
}

/// For each commodity and each non-sink `v` with positive visit value (in
/// increasing order), a minimum `v`-`t_i` cut under capacities `x_i`; reports
/// the source side whenever it is lighter than `y[i][v]`.
pub fn separate_in<T: Scalar>(
    graph: &BidirectedGraph,
    inst: &Instance,
    x: &FractionalSolution<T>,
) -> Vec<CutConstraint> {
    let eps = T::separation_tolerance();
    let mut scratch = MaxFlowScratch::new();
    let sinks = inst.sink_mask();
    let mut cuts = Vec::new();
    for (i, c) in inst.commodities().iter().enumerate() {
        let net = CapacitatedNetwork::new(graph, x.commodity_flows(i).to_vec())
            .unwrap_or_else(|_| {
                // Tiny negative LP noise; clamp before building the network.
                let clamped = x
                    .commodity_flows(i)
                    .iter()
                    .map(|v| if v.is_negative() { T::zero() } else { v.clone() })
                    .collect();
                CapacitatedNetwork::new(graph, clamped).expect("clamped capacities are valid")
            });
        for v in 0..graph.num_vertices() {
            if sinks[v] {
                continue;
            }
            let out = x.visit(i, v).clone();
            if !exceeds(&out, &T::zero(), &eps) {
                continue;
            }
            let cut = min_cut_with(&net, v, c.sink, &mut scratch);
            if exceeds(&out, &cut.value, &eps) {
                cuts.push(CutConstraint {
                    commodity: i,
                    vertex: v,
                    set: cut.members(),
                });
            }
        }
    }
    cuts
}

/// One iteration of the cutting-plane loop.
#[derive(Debug, Clone)]
pub struct CutRound<T> {
    /// Optimum of the model at the start of the round.
    pub solution: FractionalSolution<T>,
    /// Cuts separated from `solution` and added for the next round.
    pub cuts: Vec<CutConstraint>,
}

/// Final LP optimum together with the full cut history.
#[derive(Debug, Clone)]
pub struct LpRun<T> {
    pub model: LpModel,
    pub rounds: Vec<CutRound<T>>,
}

impl<T: Scalar> LpRun<T> {
    pub fn solution(&self) -> &FractionalSolution<T> {
        &self.rounds.last().expect("at least one round").solution
    }

    pub fn into_solution(mut self) -> FractionalSolution<T> {
        self.rounds.pop().expect("at least one round").solution
    }
}

/// Cutting-plane loop: solve, separate, add all violated cuts, repeat.
pub fn solve_lp_traced<T: Scalar>(inst: &Instance, max_rounds: usize) -> Result<LpRun<T>, LpError> {
    let mut model = build_static(inst);
    let mut rounds = Vec::new();
    for _ in 0..max_rounds {
        let solution = model.solve::<T>()?;
        let cuts = separate_in(model.graph(), inst, &solution);
        let done = cuts.is_empty();
        for cut in &cuts {
            model.add_cut(cut.clone());
        }
        rounds.push(CutRound { solution, cuts });
        if done {
            return Ok(LpRun { model, rounds });
        }
    }
    Err(LpError::IterationLimit(max_rounds))
}

/// LP optimum with all connectivity cuts satisfied.
pub fn solve_lp<T: Scalar>(inst: &Instance) -> Result<FractionalSolution<T>, LpError> {
    solve_lp_traced(inst, MAX_CUT_ROUNDS).map(LpRun::into_solution)
}
