//! `lair` — experiment runner for the nonsymmetric AMG solver. Generates or
//! loads a linear system, solves it with the selected restriction variant as
//! a GMRES preconditioner, and reports CF / CC / WPD rows.

use clap::{Args, Parser, Subcommand, ValueEnum};
use lair::krylov::SolveConfig;
use lair_cli::{
    fidelity_table, parse_csv, parse_json_lines, render, run_experiment, ExperimentConfig,
    FidelityConfig, InterpolationChoice, OutputFormat, ProblemKind, ProblemSource, Row, SolverKind,
    SolverOverrides, SplittingKind, Sweep,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lair",
    about = "Nonsymmetric algebraic multigrid experiments built on local approximate ideal restriction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a generated or loaded system, emitting one report row per
    /// swept parameter. Exit code 0 only when every solve converged.
    Run(RunArgs),
    /// Compare restriction variants against the exact ideal operator
    /// (relative Frobenius error table).
    Fidelity(FidelityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Poisson,
    Adr,
    Recirculating,
    Curved,
    BlockAdvection,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Poisson => ProblemKind::Poisson,
            ProblemArg::Adr => ProblemKind::Adr,
            ProblemArg::Recirculating => ProblemKind::Recirculating,
            ProblemArg::Curved => ProblemKind::Curved,
            ProblemArg::BlockAdvection => ProblemKind::BlockAdvection,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Lair1,
    Lair2,
    LairBlock,
    Neumann,
    ClassicalPt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Jsonl,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::JsonLines,
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Built-in problem generator.
    #[arg(long, value_enum, default_value = "curved", conflicts_with = "load")]
    problem: ProblemArg,
    /// Load a Matrix Market file instead of generating.
    #[arg(long)]
    load: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Spatial dimension of the generated problem.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Diffusion coefficient (problem-specific default when omitted).
    #[arg(long)]
    kappa: Option<f64>,
    /// Constant reaction coefficient; the curved problem defaults to the
    /// piecewise cross section when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    /// Block size of the block-advection problem.
    #[arg(long, default_value_t = 3)]
    block_size: usize,
}

impl ProblemArgs {
    fn source(&self) -> ProblemSource {
        match &self.load {
            Some(path) => ProblemSource::Loaded(path.clone()),
            None => ProblemSource::Generated {
                kind: self.problem.into(),
                dim: self.dim,
                n: self.n,
                sigma: self.sigma,
                block_size: self.block_size,
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated list of diffusion coefficients, one row each.
    #[arg(long, value_delimiter = ',', conflicts_with = "kappa")]
    kappa_sweep: Option<Vec<f64>>,
    /// Backward-Euler time step: solve I + dt*S instead of S.
    #[arg(long)]
    dt: Option<f64>,
    /// Comma-separated list of time steps, one row each.
    #[arg(long, value_delimiter = ',', conflicts_with = "dt")]
    dt_sweep: Option<Vec<f64>>,
    /// Solver: restriction build paired with its interpolation.
    #[arg(long, value_enum, default_value = "lair2")]
    solver: SolverArg,
    /// Neumann restriction order (with --solver neumann).
    #[arg(long, default_value_t = 2)]
    neumann_order: usize,
    /// Restriction neighborhood distance override (1 or 2).
    #[arg(long)]
    distance: Option<u8>,
    /// Interpolation paired with the lAIR/Neumann restriction.
    #[arg(long, value_enum)]
    interpolation: Option<InterpolationArg>,
    /// Coarsening strength threshold.
    #[arg(long)]
    theta_c: Option<f64>,
    /// Restriction/interpolation strength threshold.
    #[arg(long)]
    theta_r: Option<f64>,
    /// Lumping tolerance.
    #[arg(long)]
    theta_d: Option<f64>,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    /// GMRES restart length.
    #[arg(long, default_value_t = 100)]
    restart: usize,
    /// Seed for the random initial guess.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the assembled system as Matrix Market plus a .meta.json
    /// sidecar.
    #[arg(long)]
    emit_mtx: Option<PathBuf>,
    /// Print the per-level setup table to standard error.
    #[arg(long)]
    setup_report: bool,
}

#[derive(Args)]
struct FidelityArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// CF splitting used for the comparison.
    #[arg(long, value_enum, default_value = "classical")]
    splitting: SplittingArg,
    #[arg(long, default_value_t = 0.4)]
    theta_c: f64,
    /// Allow dense factorization beyond the built-in size cap.
    #[arg(long)]
    force_dense: bool,
    /// Also report sigma_max(K^-1) for the projection-lemma coarse operator
    /// (informational; no threshold is asserted).
    #[arg(long)]
    report_kinv: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplittingArg {
    Classical,
    SemicoarsenX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InterpolationArg {
    OnePoint,
    Classical,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match do_run(&args) {
            Ok(all_converged) => {
                if all_converged {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(2)
            }
        },
        Command::Fidelity(args) => match do_fidelity(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(2)
            }
        },
    }
}

fn do_run(args: &RunArgs) -> lair::Result<bool> {
    let sweep = if let Some(values) = &args.kappa_sweep {
        Sweep::Kappa {
            values: values.clone(),
            dt: args.dt,
        }
    } else if let Some(values) = &args.dt_sweep {
        Sweep::Dt {
            kappa: args.problem.kappa,
            values: values.clone(),
        }
    } else {
        Sweep::Single {
            kappa: args.problem.kappa,
            dt: args.dt,
        }
    };
    let solver = match args.solver {
        SolverArg::Lair1 => SolverKind::Lair1,
        SolverArg::Lair2 => SolverKind::Lair2,
        SolverArg::LairBlock => SolverKind::LairBlock,
        SolverArg::Neumann => SolverKind::Neumann(args.neumann_order),
        SolverArg::ClassicalPt => SolverKind::ClassicalPt,
    };
    let cfg = ExperimentConfig {
        source: args.problem.source(),
        sweep,
        solver,
        overrides: SolverOverrides {
            distance: args.distance,
            theta_c: args.theta_c,
            theta_r: args.theta_r,
            theta_d: args.theta_d,
            interpolation: args.interpolation.map(|i| match i {
                InterpolationArg::OnePoint => InterpolationChoice::OnePoint,
                InterpolationArg::Classical => InterpolationChoice::Classical,
            }),
        },
        solve: SolveConfig {
            rel_tol: args.tol,
            max_iters: args.max_iters,
            restart: args.restart,
            seed: args.seed,
        },
        emit_mtx: args.emit_mtx.clone(),
        setup_report: args.setup_report,
    };
    let rows = run_experiment(&cfg)?;
    let text = render(&rows, args.format.into());
    debug_assert!(round_trips(&rows, &text, args.format));
    write_out(&text, &args.out)?;
    Ok(rows.iter().all(|r| r.converged))
}

fn round_trips(rows: &[Row], text: &str, format: FormatArg) -> bool {
    match format {
        FormatArg::Csv => parse_csv(text).map(|b| b == rows).unwrap_or(false),
        FormatArg::Jsonl => parse_json_lines(text).map(|b| b == rows).unwrap_or(false),
        FormatArg::Table => true,
    }
}

fn do_fidelity(args: &FidelityArgs) -> lair::Result<()> {
    let cfg = FidelityConfig {
        source: args.problem.source(),
        kappa: args.problem.kappa,
        splitting: match args.splitting {
            SplittingArg::Classical => SplittingKind::Classical,
            SplittingArg::SemicoarsenX => SplittingKind::SemicoarsenX,
        },
        theta_c: args.theta_c,
        force_dense: args.force_dense,
        report_kinv: args.report_kinv,
    };
    let report = fidelity_table(&cfg)?;
    let text = match args.format {
        FormatArg::Table => report.to_table(),
        FormatArg::Csv => {
            let mut text = format!(
                "n,n_f,zero_reference,neumann1,neumann2,lair1,lair2\n{},{},{},{},{},{},{}\n",
                report.n,
                report.n_f,
                report.zero_reference,
                report.neumann1,
                report.neumann2,
                report.lair1,
                report.lair2
            );
            if let Some(s) = report.k_inv_norm {
                text.push_str(&format!("# sigma_max(K^-1),{s}\n"));
            }
            text
        }
        FormatArg::Jsonl => format!(
            "{}\n",
            serde_json::json!({
                "n": report.n,
                "n_f": report.n_f,
                "zero_reference": report.zero_reference,
                "neumann1": report.neumann1,
                "neumann2": report.neumann2,
                "lair1": report.lair1,
                "lair2": report.lair2,
                "k_inv_norm": report.k_inv_norm,
            })
        ),
    };
    write_out(&text, &args.out)
}

fn write_out(text: &str, out: &Option<PathBuf>) -> lair::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
