//! Problem instances, solution validation and the JSON file formats.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{components, is_connected, Graph, GraphError};

/// A source-sink pair. `source == sink` is allowed (closed depot walk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
}

impl Commodity {
    pub fn new(source: usize, sink: usize) -> Self {
        Self { source, sink }
    }

    pub fn is_closed(&self) -> bool {
        self.source == self.sink
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("duplicate commodity ({0}, {1})")]
    DuplicateCommodity(usize, usize),
    #[error("duplicate terminal {0} in order")]
    DuplicateTerminal(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("instance needs at least one commodity")]
    NoCommodities,
    #[error("ordered instance needs at least two terminals, got {0}")]
    TooFewTerminals(usize),
    #[error("expected exactly one of \"commodities\" or \"order\"")]
    AmbiguousKind,
}

impl InstanceError {
    /// Stable machine-readable code for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            InstanceError::Json(_) => "malformed-json",
            InstanceError::SelfLoop(_) => "self-loop",
            InstanceError::VertexOutOfRange { .. } => "index-out-of-range",
            InstanceError::DuplicateEdge(..) => "duplicate-edge",
            InstanceError::DuplicateCommodity(..) => "duplicate-commodity",
            InstanceError::DuplicateTerminal(_) => "duplicate-terminal",
            InstanceError::Disconnected => "disconnected",
            InstanceError::NoCommodities => "no-commodities",
            InstanceError::TooFewTerminals(_) => "too-few-terminals",
            InstanceError::AmbiguousKind => "ambiguous-kind",
        }
    }
}

impl From<GraphError> for InstanceError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::SelfLoop(v) => InstanceError::SelfLoop(v),
            GraphError::VertexOutOfRange { vertex, n } => {
                InstanceError::VertexOutOfRange { vertex, n }
            }
            GraphError::DuplicateEdge(u, v) => InstanceError::DuplicateEdge(u, v),
        }
    }
}

fn check_vertex(v: usize, n: usize) -> Result<(), InstanceError> {
    if v >= n {
        Err(InstanceError::VertexOutOfRange { vertex: v, n })
    } else {
        Ok(())
    }
}

/// Graphic Multi-Path TSP instance: a connected graph and distinct commodities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    commodities: Vec<Commodity>,
}

impl Instance {
    pub fn new(graph: Graph, commodities: Vec<Commodity>) -> Result<Self, InstanceError> {
        if commodities.is_empty() {
            return Err(InstanceError::NoCommodities);
        }
        let n = graph.num_vertices();
        let mut seen = HashSet::new();
        for c in &commodities {
            check_vertex(c.source, n)?;
            check_vertex(c.sink, n)?;
            if !seen.insert(*c) {
                return Err(InstanceError::DuplicateCommodity(c.source, c.sink));
            }
        }
        if !is_connected(&graph) {
            return Err(InstanceError::Disconnected);
        }
        Ok(Self { graph, commodities })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    /// Membership mask of S ∪ T.
    pub fn terminal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for c in &self.commodities {
            mask[c.source] = true;
            mask[c.sink] = true;
        }
        mask
    }

    /// Membership mask of T.
    pub fn sink_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for c in &self.commodities {
            mask[c.sink] = true;
        }
        mask
    }

    /// True when every commodity is a closed depot walk.
    pub fn is_vrp(&self) -> bool {
        self.commodities.iter().all(Commodity::is_closed)
    }
}

/// Graphic Ordered TSP instance: a connected graph and a cyclic terminal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedInstance {
    graph: Graph,
    order: Vec<usize>,
}

impl OrderedInstance {
    pub fn new(graph: Graph, order: Vec<usize>) -> Result<Self, InstanceError> {
        if order.len() < 2 {
            return Err(InstanceError::TooFewTerminals(order.len()));
        }
        let mut seen = HashSet::new();
        for &o in &order {
            check_vertex(o, graph.num_vertices())?;
            if !seen.insert(o) {
                return Err(InstanceError::DuplicateTerminal(o));
            }
        }
        if !is_connected(&graph) {
            return Err(InstanceError::Disconnected);
        }
        Ok(Self { graph, order })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Commodities `(o_i, o_{i+1})` with `o_{k+1} = o_1`.
    pub fn commodities(&self) -> Vec<Commodity> {
        let k = self.order.len();
        (0..k)
            .map(|i| Commodity::new(self.order[i], self.order[(i + 1) % k]))
            .collect()
    }

    /// The equivalent Multi-Path instance.
    pub fn to_instance(&self) -> Instance {
        Instance::new(self.graph.clone(), self.commodities())
            .expect("distinct terminals give distinct commodity tuples")
    }
}

/// Either kind of instance, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyInstance {
    MultiPath(Instance),
    Ordered(OrderedInstance),
}

impl AnyInstance {
    pub fn graph(&self) -> &Graph {
        match self {
            AnyInstance::MultiPath(i) => i.graph(),
            AnyInstance::Ordered(o) => o.graph(),
        }
    }

    /// The Multi-Path view (ordered instances are converted).
    pub fn to_instance(&self) -> Instance {
        match self {
            AnyInstance::MultiPath(i) => i.clone(),
            AnyInstance::Ordered(o) => o.to_instance(),
        }
    }
}

/// Every `s_i` reaches `t_i` and every vertex reaches some source.
pub fn check_feasible(inst: &Instance) -> bool {
    commodities_feasible(inst.graph(), inst.commodities())
}

/// [`check_feasible`] for a graph that may be disconnected.
pub fn commodities_feasible(g: &Graph, commodities: &[Commodity]) -> bool {
    let label = components(g);
    let sources: HashSet<usize> = commodities.iter().map(|c| label[c.source]).collect();
    commodities.iter().all(|c| label[c.source] == label[c.sink])
        && label.iter().all(|l| sources.contains(l))
}

/// One walk per commodity plus the total edge count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub walks: Vec<Vec<usize>>,
    pub cost: usize,
}

impl Solution {
    /// Builds a solution whose cost is derived from the walks.
    pub fn from_walks(walks: Vec<Vec<usize>>) -> Self {
        let cost = walks.iter().map(|w| w.len().saturating_sub(1)).sum();
        Self { walks, cost }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))
    }
}

/// First violated solution condition found by [`validate_solution`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WalkCount { expected: usize, got: usize },
    EmptyWalk(usize),
    VertexOutOfRange { walk: usize, vertex: usize },
    WrongStart { walk: usize, expected: usize, got: usize },
    WrongEnd { walk: usize, expected: usize, got: usize },
    NotAnEdge { walk: usize, u: usize, v: usize },
    UncoveredVertex(usize),
    CostMismatch { reported: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WalkCount { expected, got } => {
                write!(f, "expected {expected} walks, got {got}")
            }
            Violation::EmptyWalk(i) => write!(f, "walk {i} is empty"),
            Violation::VertexOutOfRange { walk, vertex } => {
                write!(f, "walk {walk} uses vertex {vertex} which is out of range")
            }
            Violation::WrongStart { walk, expected, got } => {
                write!(f, "walk {walk} starts at {got}, expected {expected}")
            }
            Violation::WrongEnd { walk, expected, got } => {
                write!(f, "walk {walk} ends at {got}, expected {expected}")
            }
            Violation::NotAnEdge { walk, u, v } => {
                write!(f, "walk {walk}: {{{u}, {v}}} is not an edge")
            }
            Violation::UncoveredVertex(v) => write!(f, "uncovered vertex {v}"),
            Violation::CostMismatch { reported, actual } => {
                write!(f, "reported cost {reported} but walks use {actual} edges")
            }
        }
    }
}

impl std::error::Error for Violation {}

/// Checks every solution invariant; `Err` names the first violation.
pub fn validate_solution(inst: &Instance, sol: &Solution) -> Result<(), Violation> {
    let g = inst.graph();
    let n = g.num_vertices();
    if sol.walks.len() != inst.num_commodities() {
        return Err(Violation::WalkCount {
            expected: inst.num_commodities(),
            got: sol.walks.len(),
        });
    }
    let mut covered = vec![false; n];
    for (i, (walk, c)) in sol.walks.iter().zip(inst.commodities()).enumerate() {
        let (&first, &last) = match (walk.first(), walk.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Violation::EmptyWalk(i)),
        };
        if let Some(&vertex) = walk.iter().find(|&&v| v >= n) {
            return Err(Violation::VertexOutOfRange { walk: i, vertex });
        }
        if first != c.source {
            return Err(Violation::WrongStart {
                walk: i,
                expected: c.source,
                got: first,
            });
        }
        if last != c.sink {
            return Err(Violation::WrongEnd {
                walk: i,
                expected: c.sink,
                got: last,
            });
        }
        if let Some(w) = walk.windows(2).find(|w| !g.has_edge(w[0], w[1])) {
            return Err(Violation::NotAnEdge {
                walk: i,
                u: w[0],
                v: w[1],
            });
        }
        for &v in walk {
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|&c| !c) {
        return Err(Violation::UncoveredVertex(v));
    }
    let actual: usize = sol.walks.iter().map(|w| w.len() - 1).sum();
    if actual != sol.cost {
        return Err(Violation::CostMismatch {
            reported: sol.cost,
            actual,
        });
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    commodities: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<usize>>,
}

/// Parses the instance JSON format (`commodities` or `order`).
pub fn load_instance(text: &str) -> Result<AnyInstance, InstanceError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
    let edges = file.edges.iter().map(|&[u, v]| (u, v)).collect();
    let graph = Graph::new(file.n, edges)?;
    match (file.commodities, file.order) {
        (Some(pairs), None) => {
            let commodities = pairs.iter().map(|&[s, t]| Commodity::new(s, t)).collect();
            Instance::new(graph, commodities).map(AnyInstance::MultiPath)
        }
        (None, Some(order)) => OrderedInstance::new(graph, order).map(AnyInstance::Ordered),
        _ => Err(InstanceError::AmbiguousKind),
    }
}

fn edge_list(g: &Graph) -> Vec<[usize; 2]> {
    g.edges().iter().map(|&(u, v)| [u, v]).collect()
}

pub fn save_instance(inst: &AnyInstance) -> String {
    let file = match inst {
        AnyInstance::MultiPath(i) => InstanceFile {
            n: i.num_vertices(),
            edges: edge_list(i.graph()),
            commodities: Some(
                i.commodities()
                    .iter()
                    .map(|c| [c.source, c.sink])
                    .collect(),
            ),
            order: None,
        },
        AnyInstance::Ordered(o) => InstanceFile {
            n: o.graph().num_vertices(),
            edges: edge_list(o.graph()),
            commodities: None,
            order: Some(o.order().to_vec()),
        },
    };
    serde_json::to_string(&file).expect("instance serializes")
}
