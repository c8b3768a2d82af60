use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mptsp_core::decomposition::decompose;
use mptsp_core::exact::exact_opt;
use mptsp_core::graph::BidirectedGraph;
use mptsp_core::instance::{load_instance, save_instance, validate_solution};
use mptsp_core::lp::solve_lp_traced;
use mptsp_core::lp::MAX_CUT_ROUNDS;
use mptsp_core::multipath::Prepared;
use mptsp_core::ordered::OrderedPlan;
use mptsp_core::parity::{min_tjoin, odd_vertices, EdgeMultiset};
use mptsp_core::vrp::{solve_combiner, ForestDoubling, VrpInstance, VrpSolver};
use mptsp_core::{AnyInstance, Instance, Solution};
use mptsp_cli::{export_dot, generate, run_bench, BenchConfig, Family, GraphModel};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mptsp", version, about = "Multi-path TSP, ordered TSP and multi-depot VRP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of randomized runs (seeds `seed`, `seed + 1`, ...); the cheapest is kept.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Also write the cost breakdown of the kept run as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// LP-based randomized (or derandomized) multi-path solver.
    SolveMultipath {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        derandomize: bool,
    },
    /// Ordered TSP solver with parity correction.
    SolveOrdered {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Forest-doubling VRP heuristic (every commodity must be closed).
    SolveVrp {
        #[command(flatten)]
        io: Io,
    },
    /// Cheaper of the derandomized multi-path solution and the VRP reduction.
    SolveCombined {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Exact optimum by assignment enumeration (small instances only).
    Exact {
        #[command(flatten)]
        io: Io,
    },
    /// Solve the LP relaxation with connectivity cuts.
    Lp {
        #[command(flatten)]
        io: Io,
        /// Write the final model in CPLEX LP format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Decompose the LP optimum into weighted paths and cycles.
    Decompose {
        #[command(flatten)]
        io: Io,
    },
    /// Minimum T-join in the instance graph.
    Tjoin {
        #[command(flatten)]
        io: Io,
        /// Comma-separated targets; defaults to the odd-degree vertices of the graph.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<usize>>,
    },
    /// Generate a random instance.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the benchmark harness.
    Bench {
        /// Full config as JSON; the flags below are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Randomized runs per instance.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Prepend the reference instance as the first row.
        #[arg(long)]
        include_fixture: bool,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the aligned text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Render an instance and a solution as Graphviz DOT.
    ExportDot {
        #[command(flatten)]
        io: Io,
        /// Solution JSON (`{"walks": ..., "cost": ...}`).
        #[arg(long)]
        solution: PathBuf,
    },
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = Family::MultiPath)]
    family: Family,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    /// Use G(n, p) instead of tree-plus-chords.
    #[arg(long)]
    edge_probability: Option<f64>,
    /// Chords added to the random spanning tree.
    #[arg(long, default_value_t = 6)]
    extra_edges: usize,
    #[arg(long, default_value_t = 20)]
    max_edges: usize,
    #[arg(long, default_value_t = 0.3)]
    closed_probability: f64,
}

impl FamilyArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            family: self.family,
            n_min: self.n_min,
            n_max: self.n_max,
            graph: match self.edge_probability {
                Some(p) => GraphModel::ErdosRenyi { p },
                None => GraphModel::Tree { extra: self.extra_edges },
            },
            max_edges: Some(self.max_edges),
            k_min: self.k_min,
            k_max: self.k_max,
            closed_probability: self.closed_probability,
            ..BenchConfig::default()
        }
    }
}

/// Failure classes, mapped to the process exit code.
enum Failure {
    /// Unreadable or invalid input, unusable arguments: exit 2.
    Input(String),
    /// A solver broke one of its own guarantees: exit 3.
    Internal(String),
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn internal<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Internal(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<AnyInstance, Failure> {
    load_instance(&read(path)?).map_err(|e| Failure::Input(format!("{} ({})", e, e.code())))
}

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(path: Option<&Path>, value: &Value) -> Outcome {
    emit(path, &(serde_json::to_string_pretty(value).expect("JSON value") + "\n"))
}

fn checked(inst: &Instance, sol: &Solution) -> Result<Value, Failure> {
    let fresh = Solution::from_walks(sol.walks.clone());
    validate_solution(inst, &fresh).map_err(|v| internal(format!("invalid output: {v}")))?;
    Ok(json!({ "walks": fresh.walks, "cost": fresh.cost }))
}

fn solve_multipath(io: &Io, sampling: &Sampling, derandomize: bool) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let prep = Prepared::<f64>::new(&inst).map_err(internal)?;
    let (sol, report) = if derandomize {
        let run = prep.run_derandomized();
        (run.solution, run.report)
    } else {
        (0..sampling.trials.max(1))
            .map(|t| prep.run_seed(sampling.seed.wrapping_add(t)))
            .min_by_key(|(sol, _)| sol.cost)
            .expect("at least one trial")
    };
    let mut out = checked(&inst, &sol)?;
    out["report"] = serde_json::to_value(&report).expect("report");
    if let Some(path) = &sampling.report {
        emit_json(Some(path), &out["report"])?;
    }
    emit_json(io.output.as_deref(), &out)
}

fn solve_ordered(io: &Io, sampling: &Sampling) -> Outcome {
    let AnyInstance::Ordered(ord) = load(&io.input)? else {
        return Err(Failure::Input("solve-ordered needs an instance with an \"order\"".into()));
    };
    let plan = OrderedPlan::<f64>::new(&ord).map_err(internal)?;
    let mut best = None;
    for t in 0..sampling.trials.max(1) {
        let run = plan.run_seed(sampling.seed.wrapping_add(t)).map_err(internal)?;
        if !run.solution.preserves_order(ord.order()) {
            return Err(internal("output breaks the terminal order"));
        }
        if best.as_ref().is_none_or(|b: &mptsp_core::ordered::OrderedRun| run.solution.cost < b.solution.cost) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one trial");
    let mut out = checked(&ord.to_instance(), &run.solution.to_solution())?;
    out["report"] = serde_json::to_value(&run.report).expect("report");
    out["odd_vertices"] = json!(run.odd);
    out["tjoin_edges"] = json!(run.join.edges);
    if let Some(path) = &sampling.report {
        emit_json(Some(path), &out["report"])?;
    }
    emit_json(io.output.as_deref(), &out)
}

fn solve_vrp(io: &Io) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let vrp = VrpInstance::from_instance(&inst)
        .ok_or_else(|| Failure::Input("solve-vrp needs every commodity closed (s = t)".into()))?;
    let solver = ForestDoubling;
    let sol = solver.solve(&vrp).map_err(internal)?;
    let mut out = checked(&inst, &sol)?;
    out["solver"] = json!(solver.name());
    emit_json(io.output.as_deref(), &out)
}

fn solve_combined(io: &Io, report: Option<&Path>) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let res = solve_combiner::<f64>(&inst, &ForestDoubling).map_err(internal)?;
    let mut out = checked(&inst, &res.solution)?;
    let multipath = checked(&inst, &res.multipath)?;
    let vrp = checked(&inst, &res.vrp)?;
    out["winner"] = serde_json::to_value(res.winner).expect("branch");
    let details = json!({
        "multipath_cost": multipath["cost"],
        "vrp_extended_cost": vrp["cost"],
        "vrp_cost": res.vrp_cost,
        "distance_sum": res.distance_sum,
        "multipath_report": res.multipath_report,
    });
    if let Some(path) = report {
        emit_json(Some(path), &details)?;
    }
    out["branches"] = details;
    emit_json(io.output.as_deref(), &out)
}

fn exact(io: &Io) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let res = exact_opt(&inst).map_err(input)?;
    let mut out = checked(&inst, &res.solution)?;
    out["assignment"] = json!(res.assignment);
    out["orders"] = json!(res.orders);
    emit_json(io.output.as_deref(), &out)
}

fn lp(io: &Io, dump: Option<&Path>) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let run = solve_lp_traced::<f64>(&inst, MAX_CUT_ROUNDS).map_err(internal)?;
    if let Some(path) = dump {
        emit(Some(path), &run.model.to_lp_text())?;
    }
    let x = run.solution();
    let graph = run.model.graph();
    let flows: Vec<Value> = (0..x.num_commodities())
        .flat_map(|i| {
            (0..x.num_arcs()).filter_map(move |a| {
                let f = *x.flow(i, a);
                (f > 1e-9).then(|| {
                    let (u, v) = graph.arc(a);
                    json!({ "commodity": i, "tail": u, "head": v, "value": f })
                })
            })
        })
        .collect();
    let out = json!({
        "objective": x.objective(),
        "rounds": run.rounds.len(),
        "cuts": run.model.cuts().count(),
        "flows": flows,
    });
    emit_json(io.output.as_deref(), &out)
}

fn decompose_cmd(io: &Io) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let graph = BidirectedGraph::new(inst.graph().clone());
    let prep = Prepared::<f64>::new(&inst).map_err(internal)?;
    let dec = decompose(&inst, prep.lp()).map_err(internal)?;
    let walk = |w: &mptsp_core::decomposition::WeightedWalk<f64>| {
        json!({ "vertices": w.vertices, "weight": w.weight })
    };
    let commodities: Vec<Value> = dec
        .commodities
        .iter()
        .map(|c| {
            json!({
                "paths": c.paths.iter().map(walk).collect::<Vec<_>>(),
                "cycles": c.cycles.iter().map(walk).collect::<Vec<_>>(),
            })
        })
        .collect();
    let out = json!({
        "objective": prep.lp().objective(),
        "reconstruction_error": dec.reconstruction_error(&graph, prep.lp()),
        "commodities": commodities,
    });
    emit_json(io.output.as_deref(), &out)
}

fn tjoin(io: &Io, targets: Option<&[usize]>) -> Outcome {
    let any = load(&io.input)?;
    let g = any.graph();
    let targets = match targets {
        Some(t) => t.to_vec(),
        None => {
            let mut all = EdgeMultiset::new(g.num_edges());
            for e in 0..g.num_edges() {
                all.add(e, 1);
            }
            odd_vertices(g, &all)
        }
    };
    let join = min_tjoin(g, &targets).map_err(input)?;
    let edges: Vec<[usize; 2]> = join.edges.iter().map(|&e| g.edge(e).into()).collect();
    let out = json!({ "targets": join.targets, "cost": join.cost(), "edges": edges });
    emit_json(io.output.as_deref(), &out)
}

fn bench(config: BenchConfig, output: Option<&Path>, table: Option<&Path>) -> Outcome {
    let report = run_bench(&config).map_err(input)?;
    if let Some(path) = table {
        emit(Some(path), &report.to_table())?;
    }
    emit(output, &(report.to_json() + "\n"))?;
    if report.failed_rows > 0 {
        return Err(internal(format!("{} rows failed", report.failed_rows)));
    }
    Ok(())
}

fn export(io: &Io, solution: &Path) -> Outcome {
    let inst = load(&io.input)?.to_instance();
    let sol = Solution::from_json(&read(solution)?).map_err(input)?;
    validate_solution(&inst, &sol).map_err(|v| Failure::Input(format!("solution: {v}")))?;
    emit(io.output.as_deref(), &export_dot(&inst, &sol))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::SolveMultipath {
            io,
            sampling,
            derandomize,
        } => solve_multipath(&io, &sampling, derandomize),
        Command::SolveOrdered { io, sampling } => solve_ordered(&io, &sampling),
        Command::SolveVrp { io } => solve_vrp(&io),
        Command::SolveCombined { io, report } => solve_combined(&io, report.as_deref()),
        Command::Exact { io } => exact(&io),
        Command::Lp { io, dump_lp } => lp(&io, dump_lp.as_deref()),
        Command::Decompose { io } => decompose_cmd(&io),
        Command::Tjoin { io, targets } => tjoin(&io, targets.as_deref()),
        Command::Gen {
            family,
            seed,
            output,
        } => {
            let inst = generate(&family.config(), seed).map_err(input)?;
            emit(output.as_deref(), &(save_instance(&inst) + "\n"))
        }
        Command::Bench {
            config,
            family,
            seed,
            instances,
            trials,
            workers,
            include_fixture,
            output,
            table,
        } => {
            let config = match config {
                Some(path) => serde_json::from_str(&read(&path)?).map_err(input)?,
                None => BenchConfig {
                    seed,
                    instances,
                    trials,
                    workers,
                    include_fixture,
                    ..family.config()
                },
            };
            bench(config, output.as_deref(), table.as_deref())
        }
        Command::ExportDot { io, solution } => export(&io, &solution),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
