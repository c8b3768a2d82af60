//! Graphviz rendering of an instance with its walks.

use std::fmt::Write as _;

use mptsp_core::{Instance, Solution};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Base edges in grey, then one coloured edge per walk step. A step over an
/// edge its walk has already used is dashed (a doubled edge).
pub fn export_dot(inst: &Instance, sol: &Solution) -> String {
    export_dot_with_parity(inst, sol, &[])
}

/// Like [`export_dot`], additionally drawing `parity` edges (indices into the
/// base edge list) dotted in black.
pub fn export_dot_with_parity(inst: &Instance, sol: &Solution, parity: &[usize]) -> String {
    let g = inst.graph();
    let mut out = String::from("graph mptsp {\n  node [shape=circle, fontsize=10];\n");
    let mut role = vec![String::new(); g.num_vertices()];
    for (i, c) in inst.commodities().iter().enumerate() {
        if c.is_closed() {
            role[c.source] += &format!(" d{}", i + 1);
        } else {
            role[c.source] += &format!(" s{}", i + 1);
            role[c.sink] += &format!(" t{}", i + 1);
        }
    }
    for (v, r) in role.iter().enumerate() {
        if r.is_empty() {
            let _ = writeln!(out, "  {v};");
        } else {
            let _ = writeln!(
                out,
                "  {v} [label=\"{v}\\n{}\", shape=doublecircle];",
                r.trim_start()
            );
        }
    }
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "  {u} -- {v} [color=\"#c0c0c0\"];");
    }
    for (i, walk) in sol.walks.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut used = vec![0usize; g.num_edges()];
        for step in walk.windows(2) {
            let e = g.edge_between(step[0], step[1]);
            let doubled = e.is_some_and(|e| {
                used[e] += 1;
                used[e] > 1
            });
            let style = if doubled { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  {} -- {} [color=\"{color}\", penwidth=2.5{style}];",
                step[0], step[1]
            );
        }
    }
    for &e in parity {
        let (u, v) = g.edge(e);
        let _ = writeln!(out, "  {u} -- {v} [color=black, style=dotted, penwidth=2];");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptsp_core::exact::exact_opt;
    use mptsp_core::fixtures::fig1;
    use mptsp_core::{Commodity, Graph};

    fn count(dot: &str, needle: &str) -> usize {
        dot.lines().filter(|l| l.contains(needle)).count()
    }

    #[test]
    fn singleton() {
        let inst = Instance::new(Graph::new(1, vec![]).unwrap(), vec![Commodity::new(0, 0)]).unwrap();
        let dot = export_dot(&inst, &Solution::from_walks(vec![vec![0]]));
        assert_eq!(count(&dot, "shape=doublecircle"), 1);
        assert_eq!(count(&dot, " -- "), 0);
    }

    #[test]
    fn fixture_with_exact_solution() {
        let inst = fig1();
        let sol = exact_opt(&inst).unwrap().solution;
        let dot = export_dot(&inst, &sol);
        let nodes = dot
            .lines()
            .filter(|l| !l.contains(" -- ") && l.trim().starts_with(|c: char| c.is_ascii_digit()))
            .count();
        assert_eq!(nodes, 10);
        assert_eq!(count(&dot, "#c0c0c0"), 17);
        assert_eq!(count(&dot, "penwidth=2.5"), sol.cost);
        assert_eq!(dot, export_dot(&inst, &sol));
    }

    #[test]
    fn highlighted_edges_exist_in_the_base_graph() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let inst = Instance::new(g.clone(), vec![Commodity::new(1, 1)]).unwrap();
        let sol = Solution::from_walks(vec![vec![1, 0, 1, 2, 3, 2, 1]]);
        let dot = export_dot_with_parity(&inst, &sol, &[2]);
        for line in dot.lines().filter(|l| l.contains("penwidth")) {
            let ends: Vec<usize> = line
                .split(" [")
                .next()
                .unwrap()
                .split(" -- ")
                .map(|t| t.trim().parse().unwrap())
                .collect();
            assert!(g.has_edge(ends[0], ends[1]), "{line}");
        }
        // Returning steps 0-1, 3-2 and 2-1 re-use edges of the walk.
        assert_eq!(count(&dot, "style=dashed"), 3);
        assert_eq!(count(&dot, "style=dotted"), 1);
    }
}
