//! `itwa`: graph generation, simulation runs, reference oracles and sweeps.
//!
//! Exit status: 0 success, 1 I/O failure, 2 invalid input, 3 problem too
//! large for the requested oracle, 4 numerical failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use itwa::oracles::AnnealingParams;
use itwa::sde::DEFAULT_D_TAU;

use commands::{
    cmd_graph, cmd_oracle, cmd_sweep, execute_run, write_output, Manifest, OracleChoice, SweepAxis, SweepPlan,
};
use config::{parse_dims, Dims, taus_from, BoundaryArg, ModelConfig, Observable, RunConfig};
use error::{validation, CliResult};

#[derive(Parser)]
#[command(name = "itwa", version, about = "Imaginary-time truncated Wigner simulations of spin models")]
struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "ITWA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random k-regular graph.
    Graph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve an ensemble and write estimates as CSV.
    #[command(allow_negative_numbers = true)]
    Run(RunArgs),
    /// Exact or heuristic reference values.
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Window-averaged observable along a parameter axis.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModelKind {
    Ising,
    Tfim,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Graph file (ising).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Lattice sides, e.g. `8`, `4x4` or `site` (tfim).
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    #[arg(long, value_enum, default_value = "periodic")]
    boundary: BoundaryArg,
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    /// Transverse field (tfim).
    #[arg(long)]
    h: Option<f64>,
}

impl ModelArgs {
    fn config(&self) -> CliResult<ModelConfig> {
        match self.model {
            None => Err(validation("--model is required")),
            Some(ModelKind::Ising) => {
                let graph = self.graph.clone().ok_or_else(|| validation("--graph is required for --model ising"))?;
                Ok(ModelConfig::Ising { graph, j: self.j })
            }
            Some(ModelKind::Tfim) => {
                let Dims(dims) = self.dims.clone().ok_or_else(|| validation("--dims is required for --model tfim"))?;
                let h = self.h.ok_or_else(|| validation("--h is required for --model tfim"))?;
                Ok(ModelConfig::Tfim { dims, boundary: self.boundary, j: self.j, h })
            }
        }
    }
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, default_value_t = DEFAULT_D_TAU)]
    d_tau: f64,
    /// Snapshot times `0, every, …, tau_max`.
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    every: f64,
    /// Explicit snapshot times.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10_000)]
    n_traj: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    invalid_tolerance: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "energy")]
    observables: Vec<Observable>,
    /// Reference ground energy; adds `rel_error` rows.
    #[arg(long)]
    e0: Option<f64>,
    /// Re-run the configuration stored in a manifest; model and schedule flags are ignored.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// CSV output; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    every: f64,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "exact")]
    method: OracleChoice,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, value_enum)]
    axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Averaging window `start,end`.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    window: Vec<f64>,
    #[arg(long, value_enum, default_value = "m2")]
    observable: Observable,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_config(model: &ModelArgs, s: &ScheduleArgs, observables: Vec<Observable>, e0: Option<f64>) -> CliResult<RunConfig> {
    Ok(RunConfig {
        d_tau: s.d_tau,
        taus: taus_from(s.taus.clone(), s.tau_max, s.every)?,
        n_traj: s.n_traj,
        seed: s.seed,
        observables,
        e0,
        invalid_tolerance: s.invalid_tolerance,
        model: model.config()?,
    })
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| validation(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Graph { n, k, seed, out } => {
            let (text, edges) = cmd_graph(n, k, seed)?;
            write_output(out.as_deref(), &text)?;
            eprintln!("nodes={n} edges={edges}");
        }
        Command::Run(args) => {
            let started = Instant::now();
            let cfg = match &args.from_manifest {
                Some(path) => Manifest::read(path)?.config,
                None => run_config(&args.model, &args.schedule, args.observables.clone(), args.e0)?,
            };
            let output = execute_run(&cfg)?;
            write_output(args.out.as_deref(), &output.to_csv())?;
            if let Some(path) = &args.manifest {
                Manifest::new(cfg, output.invalid_trajectories, started).write(path)?;
            }
        }
        Command::Oracle(args) => {
            let taus = taus_from(args.taus.clone(), args.tau_max, args.every)?;
            let anneal =
                AnnealingParams { restarts: args.restarts, sweeps: args.sweeps, seed: args.seed, ..Default::default() };
            let csv = cmd_oracle(&args.model.config()?, &taus, args.method, anneal)?;
            write_output(args.out.as_deref(), &csv)?;
        }
        Command::Sweep(args) => {
            let window = match args.window[..] {
                [a, b] => (a, b),
                _ => return Err(validation("--window takes exactly two values: start,end")),
            };
            let mut schedule = args.schedule;
            if schedule.taus.is_none() && schedule.tau_max.is_none() {
                let end = match args.axis {
                    SweepAxis::H => window.1,
                    SweepAxis::TauEnd => args.values.iter().cloned().fold(window.1, f64::max),
                };
                schedule.tau_max = Some(end);
            }
            let mut model = args.model;
            if args.axis == SweepAxis::H && model.h.is_none() {
                model.h = args.values.first().copied();
            }
            let cfg = run_config(&model, &schedule, vec![args.observable], None)?;
            let plan = SweepPlan { axis: args.axis, values: args.values, window, observable: args.observable };
            write_output(args.out.as_deref(), &cmd_sweep(&cfg, &plan)?)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
