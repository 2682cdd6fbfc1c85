//! Command-line driver: solve instance documents, generate random
//! instances and run solver batches into a CSV of experiment records.

mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sensorgame::lp::DEFAULT_NODE_LIMIT;
use sensorgame::netio::{generate, parse_instance, serialize_instance, GeneratorKind, GeneratorParams};
use sensorgame::{Error, Instance};

use solve::{append_records, print_records, run, write_trace, Settings, Solver};

#[derive(Parser)]
#[command(name = "sensorgame", version, about = "Sensor placement games on monitored networks")]
struct Cli {
    /// Branch-and-bound node limit for covers, packings and pricing.
    #[arg(long, global = true, env = "SENSORGAME_NODE_LIMIT", default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact value by enumerating every placement.
    SolveExact(SolveArgs),
    /// Closed-form equilibrium for disjoint monitoring sets.
    SolveDisjoint(SolveArgs),
    /// Equilibrium for a budget of one sensor.
    SolveSingle(SolveArgs),
    /// Cover/packing approximate equilibrium with its certificate.
    SolveCover(SolveArgs),
    /// Approximate equilibrium focused on the most critical components.
    SolveFocused {
        #[command(flatten)]
        solve: SolveArgs,
        /// Comma-separated component names of the focus class.
        #[arg(long, value_delimiter = ',')]
        focus: Option<Vec<String>>,
    },
    /// Exact equilibrium by column generation.
    SolveColgen {
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        colgen: ColgenArgs,
    },
    /// Write a random instance document.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        /// Output path; standard output when omitted.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Run solvers over a batch of generated instances.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Comma-separated budgets; overrides --budget.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', default_value = "cover,colgen")]
        solvers: Vec<Solver>,
        #[command(flatten)]
        colgen: ColgenArgs,
        /// CSV of experiment records (appended).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for per-run column generation traces.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Instance document (JSON).
    instance: PathBuf,
    /// Overrides the document's budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Identifier written to the record; defaults to the file stem.
    #[arg(long)]
    instance_id: Option<String>,
    /// CSV of experiment records (appended).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ColgenArgs {
    /// Columns to add at most; ten times the node count by default.
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Known game value, used for the d column of the trace.
    #[arg(long)]
    oracle_value: Option<f64>,
    /// CSV trace of master values (solve-colgen only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// disjoint, random-bipartite or random-dag.
    #[arg(long, default_value = "random-bipartite")]
    kind: GeneratorKind,
    #[arg(long)]
    n: usize,
    /// Component count; must equal --n for random-dag.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    budget: usize,
    #[arg(long, default_value_t = 0.1)]
    w_lo: f64,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 8)]
    layers: usize,
    #[arg(long, default_value_t = 0.02)]
    extra_edge_prob: f64,
}

impl GenArgs {
    fn params(&self, budget: usize) -> GeneratorParams {
        GeneratorParams {
            budget,
            w_lo: self.w_lo,
            density: self.density,
            layers: self.layers,
            extra_edge_prob: self.extra_edge_prob,
        }
    }

    fn m(&self) -> usize {
        self.m.unwrap_or(self.n)
    }

    fn id(&self, seed: u64) -> String {
        let kind = match self.kind {
            GeneratorKind::Disjoint => "disjoint",
            GeneratorKind::RandomBipartite => "random-bipartite",
            GeneratorKind::RandomDag => "random-dag",
        };
        format!("{kind}-n{}-m{}-s{seed}", self.n, self.m())
    }
}

fn load(args: &SolveArgs) -> Result<(Instance, String)> {
    let text = std::fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let mut inst = parse_instance(&text).with_context(|| format!("parsing {}", args.instance.display()))?;
    if let Some(b) = args.budget {
        inst = inst.with_budget(b)?;
    }
    let id = args.instance_id.clone().unwrap_or_else(|| {
        args.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    Ok((inst, id))
}

fn settings(node_limit: usize, colgen: Option<&ColgenArgs>, focus: Option<Vec<String>>) -> Settings {
    Settings {
        node_limit,
        max_iters: colgen.and_then(|c| c.max_iters),
        tol: colgen.map_or(1e-7, |c| c.tol),
        oracle_value: colgen.and_then(|c| c.oracle_value),
        focus,
    }
}

fn solve_one(
    args: &SolveArgs,
    solver: Solver,
    settings: &Settings,
    trace_path: Option<&Path>,
) -> Result<()> {
    let (inst, id) = load(args)?;
    let outcome = run(&inst, &id, solver, settings)?;
    if let (Some(path), Some(trace)) = (trace_path, &outcome.trace) {
        write_trace(path, &inst, trace)?;
    }
    let records = [outcome.record];
    match &args.out {
        Some(path) => append_records(path, &records)?,
        None => print_records(&records)?,
    }
    if !outcome.converged {
        eprintln!("warning: column generation stopped at the iteration limit; value is an upper bound");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    gen: &GenArgs,
    runs: u64,
    budgets: Option<Vec<usize>>,
    solvers: &[Solver],
    colgen: &ColgenArgs,
    out: Option<&Path>,
    trace_dir: Option<&Path>,
    node_limit: usize,
) -> Result<bool> {
    let budgets = budgets.unwrap_or_else(|| vec![gen.budget]);
    let settings = settings(node_limit, Some(colgen), None);
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut all_ok = true;
    let mut printed = Vec::new();
    for seed in gen.seed..gen.seed + runs {
        for &b in &budgets {
            let inst = generate(gen.kind, gen.n, gen.m(), seed, &gen.params(b))?;
            let id = gen.id(seed);
            for &solver in solvers {
                let outcome = match run(&inst, &id, solver, &settings) {
                    Ok(o) => o,
                    Err(err) => {
                        eprintln!("{id} b={b} {}: {err:#}", solver.name());
                        all_ok = false;
                        continue;
                    }
                };
                if let (Some(dir), Some(trace)) = (trace_dir, &outcome.trace) {
                    write_trace(&dir.join(format!("{id}-b{b}-{}.csv", solver.name())), &inst, trace)?;
                }
                if !outcome.converged {
                    eprintln!("{id} b={b} {}: stopped at the iteration limit", solver.name());
                    all_ok = false;
                }
                match out {
                    Some(path) => append_records(path, &[outcome.record])?,
                    None => printed.push(outcome.record),
                }
            }
        }
    }
    if !printed.is_empty() {
        print_records(&printed)?;
    }
    Ok(all_ok)
}

fn execute(cli: Cli) -> Result<bool> {
    let nl = cli.node_limit;
    match cli.command {
        Command::SolveExact(args) => solve_one(&args, Solver::Exact, &settings(nl, None, None), None)?,
        Command::SolveDisjoint(args) => solve_one(&args, Solver::Disjoint, &settings(nl, None, None), None)?,
        Command::SolveSingle(args) => solve_one(&args, Solver::Single, &settings(nl, None, None), None)?,
        Command::SolveCover(args) => solve_one(&args, Solver::Cover, &settings(nl, None, None), None)?,
        Command::SolveFocused { solve, focus } => {
            solve_one(&solve, Solver::Focused, &settings(nl, None, focus), None)?
        }
        Command::SolveColgen { solve, colgen } => {
            solve_one(&solve, Solver::Colgen, &settings(nl, Some(&colgen), None), colgen.trace.as_deref())?
        }
        Command::Gen { gen, output } => {
            let inst = generate(gen.kind, gen.n, gen.m(), gen.seed, &gen.params(gen.budget))?;
            let text = serialize_instance(&inst);
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Bench { gen, runs, budgets, solvers, colgen, out, trace_dir } => {
            return bench(&gen, runs, budgets, &solvers, &colgen, out.as_deref(), trace_dir.as_deref(), nl);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            let resource = err.chain().any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::Resource { .. })));
            ExitCode::from(if resource { 3 } else { 1 })
        }
    }
}
