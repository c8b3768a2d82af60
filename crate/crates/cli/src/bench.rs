//! Experiment harness: generate instances, run every solver, tabulate.
//!
//! Rows are computed in parallel on a pool with a fixed worker count and
//! collected in index order, so a report depends only on its config.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mptsp_core::exact::{exact_opt_with, ExactError};
use mptsp_core::fixtures;
use mptsp_core::instance::validate_solution;
use mptsp_core::multipath::Prepared;
use mptsp_core::ordered::OrderedPlan;
use mptsp_core::vrp::{solve_combiner, solve_vrp_forest, Branch, ForestDoubling, VrpInstance};
use mptsp_core::{AnyInstance, Instance, Solution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{generate, instance_seed, BenchConfig, Family, GenerateError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub index: usize,
    pub name: String,
    /// Generator seed; absent for the reference instance.
    pub seed: Option<u64>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lp: Option<f64>,
    /// Exact optimum; blank when the oracle limits are exceeded.
    pub opt: Option<usize>,
    /// `opt / lp`, the integrality-gap sample.
    pub gap: Option<f64>,
    /// Derandomized multi-path cost (not run for ordered rows).
    pub derandomized: Option<usize>,
    /// Mean and max over the randomized trials (the ordered solver for
    /// ordered rows, the multi-path solver otherwise).
    pub randomized_mean: Option<f64>,
    pub randomized_min: Option<usize>,
    pub randomized_max: Option<usize>,
    /// Largest parity-correction cost over the ordered trials.
    pub parity_max: Option<usize>,
    pub combiner: Option<usize>,
    pub winner: Option<Branch>,
    /// Forest-doubling cost (VRP rows only).
    pub forest: Option<usize>,
    pub derandomized_over_lp: Option<f64>,
    pub randomized_mean_over_lp: Option<f64>,
    /// Best solver cost over `opt`.
    pub best_over_opt: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: u32,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Max and mean of every numeric column over the rows where it is set.
    pub aggregate: BTreeMap<String, Aggregate>,
    pub failed_rows: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl BenchRow {
    fn blank(index: usize, name: String, seed: Option<u64>, inst: &AnyInstance) -> Self {
        let g = inst.graph();
        let k = match inst {
            AnyInstance::MultiPath(i) => i.num_commodities(),
            AnyInstance::Ordered(o) => o.order().len(),
        };
        BenchRow {
            index,
            name,
            seed,
            n: g.num_vertices(),
            m: g.num_edges(),
            k,
            lp: None,
            opt: None,
            gap: None,
            derandomized: None,
            randomized_mean: None,
            randomized_min: None,
            randomized_max: None,
            parity_max: None,
            combiner: None,
            winner: None,
            forest: None,
            derandomized_over_lp: None,
            randomized_mean_over_lp: None,
            best_over_opt: None,
            error: None,
        }
    }

    fn best_cost(&self) -> Option<usize> {
        [self.derandomized, self.randomized_min, self.combiner, self.forest]
            .into_iter()
            .flatten()
            .min()
    }
}

/// Re-derives the cost from the walks and validates them.
fn checked_cost(inst: &Instance, sol: &Solution, what: &str) -> Result<usize, String> {
    let fresh = Solution::from_walks(sol.walks.clone());
    validate_solution(inst, &fresh).map_err(|v| format!("{what}: {v}"))?;
    Ok(fresh.cost)
}

fn mean(values: &[usize]) -> f64 {
    values.iter().sum::<usize>() as f64 / values.len() as f64
}

fn fill_row(row: &mut BenchRow, config: &BenchConfig, any: &AnyInstance, seed: u64) -> Result<(), String> {
    let inst = any.to_instance();
    let trials: Vec<u64> = (0..config.trials).map(|t| instance_seed(seed, t)).collect();
    let lp = match any {
        AnyInstance::Ordered(o) => {
            let plan = OrderedPlan::<f64>::new(o).map_err(|e| e.to_string())?;
            let lp = plan.lp_objective();
            let mut costs = Vec::new();
            let mut parity = 0;
            for &t in &trials {
                let run = plan.run_seed(t).map_err(|e| e.to_string())?;
                if !run.solution.preserves_order(o.order()) {
                    return Err(format!("ordered run {t} breaks the terminal order"));
                }
                costs.push(checked_cost(&inst, &run.solution.to_solution(), "ordered")?);
                parity = parity.max(run.report.parity);
            }
            if !costs.is_empty() {
                row.randomized_mean = Some(mean(&costs));
                row.randomized_min = costs.iter().min().copied();
                row.randomized_max = costs.iter().max().copied();
                row.parity_max = Some(parity);
            }
            lp
        }
        AnyInstance::MultiPath(_) => {
            let prep = Prepared::<f64>::new(&inst).map_err(|e| e.to_string())?;
            let lp = prep.lp_objective();
            let derand = prep.run_derandomized();
            row.derandomized = Some(checked_cost(&inst, &derand.solution, "derandomized")?);
            let mut costs = Vec::new();
            for &t in &trials {
                let (sol, _) = prep.run_seed(t);
                costs.push(checked_cost(&inst, &sol, "randomized")?);
            }
            if !costs.is_empty() {
                row.randomized_mean = Some(mean(&costs));
                row.randomized_min = costs.iter().min().copied();
                row.randomized_max = costs.iter().max().copied();
            }
            let comb = solve_combiner::<f64>(&inst, &ForestDoubling).map_err(|e| e.to_string())?;
            row.combiner = Some(checked_cost(&inst, &comb.solution, "combiner")?);
            row.winner = Some(comb.winner);
            if let Some(vrp) = VrpInstance::from_instance(&inst) {
                row.forest = Some(checked_cost(&inst, &solve_vrp_forest(&vrp), "forest")?);
            }
            lp
        }
    };
    row.lp = Some(lp);
    let ratio = |c: f64| if lp > 0.0 { c / lp } else if c == 0.0 { 1.0 } else { f64::INFINITY };
    row.derandomized_over_lp = row.derandomized.map(|c| ratio(c as f64));
    row.randomized_mean_over_lp = row.randomized_mean.map(ratio);

    match exact_opt_with(&inst, config.exact_limits) {
        Ok(res) => {
            let opt = checked_cost(&inst, &res.solution, "exact")?;
            row.opt = Some(opt);
            row.gap = Some(ratio(opt as f64));
            row.best_over_opt = row.best_cost().map(|c| {
                if opt > 0 {
                    c as f64 / opt as f64
                } else {
                    1.0
                }
            });
        }
        Err(ExactError::TooLarge { .. }) => {}
    }
    Ok(())
}

fn evaluate(config: &BenchConfig, index: usize) -> Result<BenchRow, GenerateError> {
    let (name, seed, inst) = if config.include_fixture && index == 0 {
        let inst = match config.family {
            Family::MultiPath => AnyInstance::MultiPath(fixtures::fig1()),
            Family::Ordered => AnyInstance::Ordered(fixtures::fig1_ordered()),
            Family::Vrp => AnyInstance::MultiPath(fixtures::fig1_vrp()),
        };
        ("fig1".to_owned(), None, inst)
    } else {
        let seed = instance_seed(config.seed, index);
        (format!("gen-{index}"), Some(seed), generate(config, seed)?)
    };
    let mut row = BenchRow::blank(index, name, seed, &inst);
    if let Err(e) = fill_row(&mut row, config, &inst, seed.unwrap_or(config.seed)) {
        row.error = Some(e);
    }
    Ok(row)
}

fn aggregate(rows: &[BenchRow]) -> BTreeMap<String, Aggregate> {
    let columns: [(&str, fn(&BenchRow) -> Option<f64>); 10] = [
        ("lp", |r| r.lp),
        ("opt", |r| r.opt.map(|v| v as f64)),
        ("gap", |r| r.gap),
        ("derandomized", |r| r.derandomized.map(|v| v as f64)),
        ("randomized_mean", |r| r.randomized_mean),
        ("combiner", |r| r.combiner.map(|v| v as f64)),
        ("forest", |r| r.forest.map(|v| v as f64)),
        ("derandomized_over_lp", |r| r.derandomized_over_lp),
        ("randomized_mean_over_lp", |r| r.randomized_mean_over_lp),
        ("best_over_opt", |r| r.best_over_opt),
    ];
    columns
        .iter()
        .filter_map(|(name, get)| {
            let values: Vec<f64> = rows.iter().filter_map(get).collect();
            (!values.is_empty()).then(|| {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                (
                    name.to_string(),
                    Aggregate {
                        count: values.len(),
                        max,
                        mean,
                    },
                )
            })
        })
        .collect()
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let total = config.instances + usize::from(config.include_fixture);
    let rows = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|i| evaluate(config, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(BenchReport {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        aggregate: aggregate(&rows),
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table, one line per row plus an aggregate footer.
    pub fn to_table(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "-".to_owned(), |v| v.to_string())
        }
        fn f3(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"))
        }
        let header = [
            "name", "n", "m", "k", "lp", "opt", "gap", "derand", "rand_mean", "combiner", "winner",
            "forest", "derand/lp", "mean/lp", "best/opt", "error",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
        for r in &self.rows {
            cells.push(vec![
                r.name.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.k.to_string(),
                f3(r.lp),
                opt(r.opt),
                f3(r.gap),
                opt(r.derandomized),
                f3(r.randomized_mean),
                opt(r.combiner),
                opt(r.winner.map(|w| match w {
                    Branch::MultiPath => "multi-path",
                    Branch::Vrp => "vrp",
                })),
                opt(r.forest),
                f3(r.derandomized_over_lp),
                f3(r.randomized_mean_over_lp),
                f3(r.best_over_opt),
                opt(r.error.clone()),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        let _ = writeln!(out);
        for (name, agg) in &self.aggregate {
            let _ = writeln!(
                out,
                "{name:<24} count {:>4}  max {:>9.4}  mean {:>9.4}",
                agg.count, agg.max, agg.mean
            );
        }
        let _ = writeln!(out, "failed rows: {}", self.failed_rows);
        out
    }
}
