use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magma_core::checks::{self, SUITES};
use magma_core::harness::{config_entries, run_compare, summarize, write_records, write_trace, ExperimentSpec};
use magma_core::io::{read_matrix, read_vector, write_vector, write_vector_csv};
use magma_core::problem::DEFAULT_LAMBDA;
use magma_core::solvers::MuSchedule;
use magma_core::{solve, CompositeProblem, Error, L1LeastSquares, SolverConfig, SolverKind};
use ndarray::Array1;

const EXIT_INPUT: u8 = 1;
const EXIT_UNCONVERGED: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "magma", version, about = "Multilevel accelerated solvers for l1-regularized least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance read from a matrix file and an observation file.
    Solve(SolveArgs),
    /// Run a benchmark described by an experiment spec file.
    Bench(BenchArgs),
    /// Run the built-in invariant suites.
    Check(CheckArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long = "Kd")]
    kd: Option<usize>,
    /// Armijo sufficient-decrease constant.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    /// Fixed smoothing parameter.
    #[arg(long, conflicts_with = "zeta")]
    mu: Option<f64>,
    /// Use the horizon-based smoothing schedule with this constant.
    #[arg(long)]
    zeta: Option<f64>,
    /// Chain depth including the fine level; 1 disables coarse steps.
    #[arg(long)]
    levels: Option<usize>,
}

impl SolverFlags {
    fn config(&self) -> magma_core::Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.kd {
            cfg.kd = v;
        }
        if let Some(v) = self.c {
            cfg.armijo_c = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.s0 {
            cfg.s0 = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = MuSchedule::Fixed(v);
        }
        if let Some(zeta) = self.zeta {
            cfg.mu = MuSchedule::Theoretical { zeta };
        }
        cfg.levels = self.levels;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Dictionary `A` (binary MLMAT1 or CSV).
    matrix: PathBuf,
    /// Observation `b` (binary MLVEC1 or CSV).
    vector: PathBuf,
    #[arg(long, default_value = "magma")]
    solver: SolverKind,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Solve over `[A, I]` so that sparse gross errors are modelled explicitly.
    #[arg(long)]
    bucket: bool,
    #[command(flatten)]
    flags: SolverFlags,
    /// Solution output; `.csv` selects text, anything else binary.
    #[arg(long, default_value = "solution.bin")]
    out: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    spec: PathBuf,
    /// One row per run.
    #[arg(long, default_value = "records.csv")]
    out: PathBuf,
    /// Per-iteration rows keyed by run.
    #[arg(long, default_value = "traces.csv")]
    traces: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Run a single suite.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suite: Option<String>,
    #[command(flatten)]
    flags: SolverFlags,
}

enum Failure {
    Input(String),
    Unconverged,
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::Check(args) => run_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Unconverged) => ExitCode::from(EXIT_UNCONVERGED),
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

fn print_config(header: &[(&str, String)], cfg: &SolverConfig) {
    println!("# resolved configuration");
    for (k, v) in header {
        println!("{k} = {v}");
    }
    for (k, v) in config_entries(cfg) {
        println!("{k} = {v}");
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let cfg = args.flags.config()?;
    let a = read_matrix(&args.matrix)?;
    let b = read_vector(&args.vector)?;
    if a.nrows() != b.len() {
        return Err(Failure::Input(format!(
            "matrix has {} rows but the observation has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    let (m, n) = a.dim();
    let problem = L1LeastSquares::new(a, b, args.lambda, args.bucket)?;
    print_config(
        &[
            ("solver", args.solver.to_string()),
            ("m", m.to_string()),
            ("n", n.to_string()),
            ("lambda", format!("{:?}", args.lambda)),
            ("bucket", args.bucket.to_string()),
            ("L_f", format!("{:?}", problem.lipschitz())),
            ("levels_resolved", cfg.resolved_levels(n).to_string()),
        ],
        &cfg,
    );

    let sol = solve(args.solver, &problem, &Array1::zeros(problem.dim()), &cfg)?;
    if args.out.extension().is_some_and(|e| e == "csv") {
        write_vector_csv(&args.out, &sol.x)?;
    } else {
        write_vector(&args.out, &sol.x)?;
    }
    write_trace(&sol.trace, create(&args.trace)?)?;

    println!("# result");
    println!("converged = {}", sol.converged);
    println!("iterations = {}", sol.iterations);
    println!("objective = {:e}", sol.objective);
    println!("grad_map_norm = {:e}", sol.grad_map_norm);
    println!("steps = {} gradient, {} coarse, {} fallback", sol.gradient_steps, sol.coarse_steps, sol.fallback_steps);
    println!("time_s = {:.6}", sol.elapsed.as_secs_f64());

    if let Some(first) = sol.violations.first() {
        return Err(Failure::Invariant(format!("{first} ({} total)", sol.violations.len())));
    }
    if !sol.converged {
        eprintln!("budget of {} iterations exhausted before reaching eps = {:e}", cfg.max_iters, cfg.eps);
        return Err(Failure::Unconverged);
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    let spec = ExperimentSpec::from_path(&args.spec)?;
    println!("# resolved spec {}", spec.hash());
    print!("{}", spec.canonical());
    let records = run_compare(&spec)?;
    write_records(&records, create(&args.out)?, create(&args.traces)?)?;
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "run failed: {} instance {} rep {}: {}",
            r.solver,
            r.instance,
            r.rep,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("# summary");
    println!("solver,runs,converged,mean_time_s,mean_iterations");
    for s in summarize(&records) {
        println!(
            "{},{},{},{:.6},{:.1}",
            s.solver,
            s.runs,
            s.converged,
            s.mean_time.as_secs_f64(),
            s.mean_iterations
        );
    }
    Ok(())
}

fn run_check(args: CheckArgs) -> Result<(), Failure> {
    let cfg = args.flags.config()?;
    let names: Vec<&str> = match &args.suite {
        Some(name) => vec![name.as_str()],
        None => SUITES.to_vec(),
    };
    let mut failed = Vec::new();
    for name in names {
        let report = checks::run_suite_with(name, &cfg)?;
        println!("{report}");
        if !report.passed() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("suites failed: {}", failed.join(", "))))
    }
}
