//! Greedy path/cycle decomposition of per-commodity flows.
//!
//! Paths are pulled from `s_i` first: the walk always takes the lowest-indexed
//! arc with residual flow, and a revisited vertex closes a loop that is
//! extracted immediately as a cycle, so every emitted path is simple. Once the
//! source surplus is exhausted the remaining circulation is split into cycles
//! the same way. Each extraction saturates at least one arc, bounding the
//! element count by the number of arcs.

use thiserror::Error;

use crate::graph::BidirectedGraph;
use crate::instance::Instance;
use crate::lp::FractionalSolution;
use crate::scalar::{exceeds, min_of, sum, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error("residual not decomposable: commodity {commodity} keeps {residual} units of flow")]
    NotDecomposable { commodity: usize, residual: f64 },
}

/// A simple path or cycle with its weight. For cycles the first vertex is
/// repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedWalk<T> {
    pub arcs: Vec<usize>,
    pub vertices: Vec<usize>,
    pub weight: T,
}

impl<T> WeightedWalk<T> {
    /// Number of arcs (edge cost of the walk).
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommodityDecomposition<T> {
    pub paths: Vec<WeightedWalk<T>>,
    pub cycles: Vec<WeightedWalk<T>>,
}

impl<T: Scalar> CommodityDecomposition<T> {
    pub fn num_elements(&self) -> usize {
        self.paths.len() + self.cycles.len()
    }

    pub fn path_weight(&self) -> T {
        sum(self.paths.iter().map(|p| &p.weight))
    }

    /// Expected length of a path drawn with probabilities `weight`.
    pub fn expected_path_length(&self) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| {
            acc + p.weight.clone() * T::from_count(p.len())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub commodities: Vec<CommodityDecomposition<T>>,
}

impl<T: Scalar> Decomposition<T> {
    /// Largest per-arc gap between `x` and the weighted sum of all elements.
    pub fn reconstruction_error(&self, graph: &BidirectedGraph, x: &FractionalSolution<T>) -> T {
        let mut worst = T::zero();
        for (i, dec) in self.commodities.iter().enumerate() {
            let mut rebuilt = vec![T::zero(); graph.num_arcs()];
            for walk in dec.paths.iter().chain(&dec.cycles) {
                for &a in &walk.arcs {
                    rebuilt[a] = rebuilt[a].clone() + walk.weight.clone();
                }
            }
            for (a, r) in rebuilt.into_iter().enumerate() {
                let gap = (x.flow(i, a).clone() - r).abs();
                if gap > worst {
                    worst = gap;
                }
            }
        }
        worst
    }
}

/// Decomposes every commodity of `x`.
pub fn decompose<T: Scalar>(
    inst: &Instance,
    x: &FractionalSolution<T>,
) -> Result<Decomposition<T>, DecompositionError> {
    decompose_in(&BidirectedGraph::new(inst.graph().clone()), inst, x)
}

pub fn decompose_in<T: Scalar>(
    graph: &BidirectedGraph,
    inst: &Instance,
    x: &FractionalSolution<T>,
) -> Result<Decomposition<T>, DecompositionError> {
    let commodities = inst
        .commodities()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let source = (!c.is_closed()).then_some((c.source, c.sink));
            decompose_flow(graph, x.commodity_flows(i), source).map_err(|residual| {
                DecompositionError::NotDecomposable {
                    commodity: i,
                    residual,
                }
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Decomposition { commodities })
}

struct Residual<'g, T> {
    graph: &'g BidirectedGraph,
    flow: Vec<T>,
    eps: T,
}

impl<T: Scalar> Residual<'_, T> {
    fn clean(&mut self) {
        for f in &mut self.flow {
            if !exceeds(f, &T::zero(), &self.eps) {
                *f = T::zero();
            }
        }
    }

    fn positive(&self, a: usize) -> bool {
        exceeds(&self.flow[a], &T::zero(), &self.eps)
    }

    fn surplus(&self, v: usize) -> T {
        let out = sum(self.graph.out_arcs(v).iter().map(|&a| &self.flow[a]));
        let inn = sum(self.graph.in_arcs(v).iter().map(|&a| &self.flow[a]));
        out - inn
    }

    fn first_out(&self, v: usize) -> Option<usize> {
        self.graph.out_arcs(v).iter().copied().find(|&a| self.positive(a))
    }

    fn subtract(&mut self, arcs: &[usize], amount: &T) {
        for &a in arcs {
            self.flow[a] = self.flow[a].clone() - amount.clone();
        }
        self.clean();
    }

    fn bottleneck(&self, arcs: &[usize]) -> T {
        arcs.iter()
            .map(|&a| self.flow[a].clone())
            .reduce(min_of)
            .expect("nonempty walk")
    }

    fn extract_cycle(&mut self, vertices: Vec<usize>, arcs: Vec<usize>) -> WeightedWalk<T> {
        let weight = self.bottleneck(&arcs);
        self.subtract(&arcs, &weight);
        WeightedWalk {
            arcs,
            vertices,
            weight,
        }
    }

    /// Follows lowest-indexed positive arcs from `start` until `stop` (if
    /// any) is reached, extracting every closed loop on the way. Returns the
    /// simple walk to `stop`, or `None` when the walk got stuck or, with no
    /// stop vertex, once the first loop has been extracted.
    fn walk(
        &mut self,
        start: usize,
        stop: Option<usize>,
        cycles: &mut Vec<WeightedWalk<T>>,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let n = self.graph.num_vertices();
        let mut position: Vec<Option<usize>> = vec![None; n];
        let mut vertices = vec![start];
        let mut arcs: Vec<usize> = Vec::new();
        position[start] = Some(0);
        let mut cur = start;
        loop {
            if Some(cur) == stop {
                return Some((vertices, arcs));
            }
            let a = self.first_out(cur)?;
            let w = self.graph.head(a);
            match position[w] {
                Some(p) => {
                    let mut loop_vertices = vertices[p..].to_vec();
                    loop_vertices.push(w);
                    let mut loop_arcs = arcs[p..].to_vec();
                    loop_arcs.push(a);
                    cycles.push(self.extract_cycle(loop_vertices, loop_arcs));
                    if stop.is_none() {
                        return None;
                    }
                    for &v in &vertices[p + 1..] {
                        position[v] = None;
                    }
                    vertices.truncate(p + 1);
                    arcs.truncate(p);
                    cur = w;
                }
                None => {
                    position[w] = Some(vertices.len());
                    vertices.push(w);
                    arcs.push(a);
                    cur = w;
                }
            }
        }
    }
}

/// Decomposes one commodity's arc flows. `endpoints` is `Some((s, t))` for an
/// open commodity. On failure returns the undecomposed residual mass.
fn decompose_flow<T: Scalar>(
    graph: &BidirectedGraph,
    flow: &[T],
    endpoints: Option<(usize, usize)>,
) -> Result<CommodityDecomposition<T>, f64> {
    let eps = T::decomposition_tolerance();
    let mut residual = Residual {
        graph,
        flow: flow.to_vec(),
        eps: eps.clone(),
    };
    residual.clean();
    let mut paths = Vec::new();
    let mut cycles = Vec::new();

    if let Some((s, t)) = endpoints {
        loop {
            let surplus = residual.surplus(s);
            if !exceeds(&surplus, &T::zero(), &eps) {
                break;
            }
            let Some((vertices, arcs)) = residual.walk(s, Some(t), &mut cycles) else {
                break;
            };
            let bottleneck = residual.bottleneck(&arcs);
            let weight = if bottleneck <= surplus.clone() + eps.clone() {
                bottleneck
            } else {
                surplus
            };
            residual.subtract(&arcs, &weight);
            paths.push(WeightedWalk {
                arcs,
                vertices,
                weight,
            });
        }
    }

    while let Some(a) = (0..graph.num_arcs()).find(|&a| residual.positive(a)) {
        let before = cycles.len();
        residual.walk(graph.tail(a), None, &mut cycles);
        if cycles.len() == before {
            break;
        }
    }

    let left = sum(residual.flow.iter());
    let limit = eps * T::from_count(graph.num_arcs().max(1));
    if exceeds(&left, &T::zero(), &limit) {
        return Err(left.approx_f64());
    }
    Ok(CommodityDecomposition { paths, cycles })
}

/// Path-only outflow `z^P[i][v]`: total weight of commodity `i` paths through
/// `v`, zero at `t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMass<T> {
    num_vertices: usize,
    values: Vec<T>,
}

impl<T: Scalar> PathMass<T> {
    pub fn get(&self, commodity: usize, v: usize) -> &T {
        &self.values[commodity * self.num_vertices + v]
    }

    pub fn total(&self, v: usize) -> T {
        let k = self.values.len() / self.num_vertices.max(1);
        (0..k).fold(T::zero(), |acc, i| acc + self.get(i, v).clone())
    }

    pub fn num_commodities(&self) -> usize {
        if self.num_vertices == 0 {
            0
        } else {
            self.values.len() / self.num_vertices
        }
    }
}

pub fn path_mass<T: Scalar>(inst: &Instance, dec: &Decomposition<T>) -> PathMass<T> {
    let n = inst.num_vertices();
    let mut values = vec![T::zero(); inst.num_commodities() * n];
    for (i, (c, d)) in inst.commodities().iter().zip(&dec.commodities).enumerate() {
        for p in &d.paths {
            for &v in &p.vertices {
                if v != c.sink {
                    values[i * n + v] = values[i * n + v].clone() + p.weight.clone();
                }
            }
        }
    }
    PathMass {
        num_vertices: n,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, *};
    use crate::graph::Graph;
    use crate::instance::Commodity;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn fig1_reference_x() -> (Instance, BidirectedGraph, FractionalSolution<f64>) {
        let inst = fixtures::fig1();
        let g = BidirectedGraph::new(inst.graph().clone());
        let x = FractionalSolution::from_arc_flows(&g, 2, &fixtures::fig1_lp_flows());
        (inst, g, x)
    }

    #[test]
    fn single_integral_path() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(0, 2)]).unwrap();
        let b = BidirectedGraph::new(g);
        let x = FractionalSolution::from_arc_flows(&b, 1, &[(0, 0, 1, 1.0), (0, 1, 2, 1.0)]);
        let dec = decompose(&inst, &x).unwrap();
        let d = &dec.commodities[0];
        assert_eq!(d.paths.len(), 1);
        assert!(d.cycles.is_empty());
        assert_eq!(d.paths[0].vertices, vec![0, 1, 2]);
        assert_eq!(d.paths[0].weight, 1.0);

        let mass = path_mass(&inst, &dec);
        assert_eq!((*mass.get(0, 0), *mass.get(0, 1), *mass.get(0, 2)), (1.0, 1.0, 0.0));
    }

    #[test]
    fn reference_decomposition_is_recovered() {
        let (inst, g, x) = fig1_reference_x();
        let dec = decompose_in(&g, &inst, &x).unwrap();
        let expected = fixtures::fig1_lp_decomposition();
        for (got, want) in dec.commodities.iter().zip(expected.iter()) {
            let mut paths: Vec<(Vec<usize>, f64)> =
                got.paths.iter().map(|p| (p.vertices.clone(), p.weight)).collect();
            let mut want_paths: Vec<(Vec<usize>, f64)> = want
                .iter()
                .filter(|e| !e.2)
                .map(|e| (e.0.clone(), e.1))
                .collect();
            paths.sort_by(|a, b| a.0.cmp(&b.0));
            want_paths.sort_by(|a, b| a.0.cmp(&b.0));
            assert_eq!(paths, want_paths);
            let cycle_weights: Vec<f64> = got.cycles.iter().map(|c| c.weight).collect();
            let want_cycles: Vec<f64> = want.iter().filter(|e| e.2).map(|e| e.1).collect();
            assert_eq!(cycle_weights, want_cycles);
        }
        assert_eq!(dec.commodities[0].cycles[0].vertices, vec![V1, V3, V2, V4, V1]);
        assert_eq!(dec.reconstruction_error(&g, &x), 0.0);
    }

    #[test]
    fn fig1_path_mass() {
        let (inst, g, x) = fig1_reference_x();
        let dec = decompose_in(&g, &inst, &x).unwrap();
        let mass = path_mass(&inst, &dec);
        assert_eq!(*mass.get(0, V5), 0.5);
        assert_eq!(*mass.get(0, T1), 0.0);
        assert_eq!(*mass.get(0, S1), 1.0);
        // v1 carries 1/4 path mass in commodity 1; the cycle's 1/4 is excluded.
        assert_eq!(*mass.get(0, V1), 0.25);
        assert_eq!(*x.z(0, V1), 0.5);

        // Independent re-summation from the transcribed path list.
        for v in 0..10 {
            let mut expected = 0.0;
            for (i, elements) in fixtures::fig1_lp_decomposition().iter().enumerate() {
                let sink = inst.commodities()[i].sink;
                for (walk, weight, is_cycle) in elements {
                    if !is_cycle && v != sink && walk.contains(&v) {
                        expected += weight;
                    }
                }
            }
            assert_eq!(mass.total(v), expected, "vertex {v}");
        }
    }

    #[test]
    fn closed_commodity_with_zero_flow() {
        let inst = fixtures::fig1_vrp();
        let g = BidirectedGraph::new(inst.graph().clone());
        let x = FractionalSolution::new(&g, 2, vec![0.0; 2 * g.num_arcs()]);
        let dec = decompose_in(&g, &inst, &x).unwrap();
        assert!(dec.commodities.iter().all(|d| d.paths.is_empty() && d.cycles.is_empty()));
    }

    #[test]
    fn loop_on_the_way_becomes_a_cycle() {
        // 0 -> 1 -> 2 -> 1 -> 3 with the loop 1 -> 2 -> 1 weighted 1/2.
        let g = Graph::new(4, vec![(0, 1), (1, 2), (1, 3)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(0, 3)]).unwrap();
        let b = BidirectedGraph::new(g);
        let x = FractionalSolution::from_arc_flows(
            &b,
            1,
            &[(0, 0, 1, 1.0), (0, 1, 2, 0.5), (0, 2, 1, 0.5), (0, 1, 3, 1.0)],
        );
        let dec = decompose(&inst, &x).unwrap();
        let d = &dec.commodities[0];
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].vertices, vec![0, 1, 3]);
        assert_eq!(d.cycles.len(), 1);
        assert_eq!(d.cycles[0].vertices, vec![1, 2, 1]);
        assert_eq!(d.cycles[0].weight, 0.5);
    }

    #[test]
    fn path_weight_is_capped_by_source_surplus() {
        // Arc 0->1 carries 1.5: one unit of path plus a 0.5 cycle through t.
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(0, 1)]).unwrap();
        let b = BidirectedGraph::new(g);
        let x = FractionalSolution::from_arc_flows(&b, 1, &[(0, 0, 1, 1.5), (0, 1, 0, 0.5)]);
        let dec = decompose(&inst, &x).unwrap();
        let d = &dec.commodities[0];
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].weight, 1.0);
        assert_eq!(d.cycles.len(), 1);
        assert_eq!(d.cycles[0].weight, 0.5);
        assert_eq!(dec.reconstruction_error(&b, &x), 0.0);
    }

    #[test]
    fn unbalanced_flow_is_rejected() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(0, 2)]).unwrap();
        let b = BidirectedGraph::new(g);
        // Flow enters 1 but never leaves.
        let x = FractionalSolution::from_arc_flows(&b, 1, &[(0, 0, 1, 1.0)]);
        assert!(matches!(
            decompose(&inst, &x),
            Err(DecompositionError::NotDecomposable { commodity: 0, .. })
        ));
    }

    #[test]
    fn exact_decomposition_of_exact_lp() {
        let inst = fixtures::fig1();
        let x = crate::lp::solve_lp::<BigRational>(&inst).unwrap();
        let g = BidirectedGraph::new(inst.graph().clone());
        let dec = decompose_in(&g, &inst, &x).unwrap();
        assert!(dec.reconstruction_error(&g, &x).is_zero());
        for d in &dec.commodities {
            assert_eq!(d.path_weight(), BigRational::from_integer(1.into()));
            assert!(d.num_elements() <= g.num_arcs());
        }
    }
}
