use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lkqn::bench::verify::run_verify_suite;
use lkqn::bench::{
    check_curve, parse_sweep_config, performance_profile, read_bench, run_sweep, write_bench, write_profile,
    write_trace, Metric, RunSpec,
};
use lkqn::solvers::run;
use lkqn::Error;

/// Benchmark driver for the adaptive-algebra quasi-Newton solvers.
#[derive(Parser)]
#[command(name = "lkqn-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with one solver and write the iteration trace.
    Run(Box<RunArgs>),
    /// Run every solver/problem pair of a config file and write bench records.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn bench records into performance-profile curves.
    Profile {
        input: PathBuf,
        #[arg(long, default_value = "iters")]
        metric: Metric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the fast paths against their dense oracles.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "lkqn")]
    solver: String,
    /// A named test function, `quad` or `lowrank`.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long)]
    scaled: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    toll_rel: Option<f64>,
    #[arg(long, default_value_t = 5)]
    lbfgs_memory: usize,
    /// Secant (`s`) or non-secant (`ns`) driver for broyden-generic.
    #[arg(long)]
    variant: Option<String>,
    /// `adaptive` or `dense` projection for broyden-generic.
    #[arg(long)]
    strategy: Option<String>,
    /// Condition number of `quad` problems.
    #[arg(long)]
    cond: Option<f64>,
    /// Factorization rank of `lowrank` problems.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    idx_images: Option<PathBuf>,
    #[arg(long)]
    idx_labels: Option<PathBuf>,
    #[arg(long)]
    class: Option<u8>,
    /// Exact minimization along each direction (quadratics only).
    #[arg(long)]
    exact_ls: bool,
    #[arg(long, default_value_t = 1e-6)]
    stop_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 50_000)]
    max_fevals: usize,
    #[arg(long, default_value_t = 1e-20)]
    rel_func_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    ls_ftol: f64,
    #[arg(long, default_value_t = 0.9)]
    ls_gtol: f64,
    #[arg(long, default_value_t = 1e-15)]
    ls_xtol: f64,
    #[arg(long, default_value_t = 1e-15)]
    ls_stpmin: f64,
    #[arg(long, default_value_t = 1e15)]
    ls_stpmax: f64,
    #[arg(long, default_value_t = 20)]
    ls_maxfev: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = vec![
            ("solver", self.solver.clone()),
            ("problem", self.problem.clone()),
            ("phi", self.phi.to_string()),
            ("scaled", self.scaled.to_string()),
            ("seed", self.seed.to_string()),
            ("lbfgs_memory", self.lbfgs_memory.to_string()),
            ("exact_ls", self.exact_ls.to_string()),
            ("stop_tol", self.stop_tol.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("max_fevals", self.max_fevals.to_string()),
            ("rel_func_tol", self.rel_func_tol.to_string()),
            ("ls_ftol", self.ls_ftol.to_string()),
            ("ls_gtol", self.ls_gtol.to_string()),
            ("ls_xtol", self.ls_xtol.to_string()),
            ("ls_stpmin", self.ls_stpmin.to_string()),
            ("ls_stpmax", self.ls_stpmax.to_string()),
            ("ls_maxfev", self.ls_maxfev.to_string()),
        ];
        let optional = [
            ("dim", self.dim.map(|v| v.to_string())),
            ("toll_rel", self.toll_rel.map(|v| v.to_string())),
            ("variant", self.variant.clone()),
            ("strategy", self.strategy.clone()),
            ("cond", self.cond.map(|v| v.to_string())),
            ("rank", self.rank.map(|v| v.to_string())),
            ("idx_images", self.idx_images.as_ref().map(|v| v.display().to_string())),
            ("idx_labels", self.idx_labels.as_ref().map(|v| v.display().to_string())),
            ("class", self.class.map(|v| v.to_string())),
        ];
        p.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        p
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::UnknownProblem(_) | Error::Parse { .. } | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let spec = RunSpec::from_pairs(&args.pairs())?;
    let problem = spec.problem.build()?;
    let result = run(problem.as_ref(), &problem.x0(), &spec.config).map_err(|e| Failure::Run(e.to_string()))?;
    write_trace(output(args.out.as_deref())?, &result)?;
    eprintln!(
        "{} on {}: {} after {} iterations, f = {:e}, |g| = {:e}",
        spec.solver_label(),
        spec.problem.label(),
        result.status,
        result.iters(),
        result.f_final,
        result.gnorm_final
    );
    if result.converged() {
        Ok(())
    } else {
        Err(Failure::Run(format!("run ended with status {}", result.status)))
    }
}

fn cmd_sweep(config: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let text = String::from_utf8(read_file(config)?).map_err(|e| Failure::Usage(e.to_string()))?;
    let specs = parse_sweep_config(&text)?;
    let records = run_sweep(&specs);
    let solved = records.iter().filter(|r| r.solved()).count();
    write_bench(output(out)?, &records)?;
    eprintln!("{solved}/{} runs converged", records.len());
    Ok(())
}

fn cmd_profile(input: &Path, metric: Metric, out: Option<&Path>) -> Result<(), Failure> {
    let records = read_bench(read_file(input)?.as_slice())?;
    let profile = performance_profile(&records, metric)?;
    for w in &profile.warnings {
        eprintln!("warning: {w}");
    }
    for c in &profile.curves {
        check_curve(c).map_err(|e| Failure::Run(e.to_string()))?;
    }
    write_profile(output(out)?, &profile.curves)?;
    Ok(())
}

fn cmd_verify() -> Result<(), Failure> {
    let checks = run_verify_suite();
    for c in &checks {
        println!("{} {}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Run(format!("{failed} check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep { config, out } => cmd_sweep(config, out.as_deref()),
        Command::Profile { input, metric, out } => cmd_profile(input, *metric, out.as_deref()),
        Command::Verify => cmd_verify(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("lkqn-bench: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("lkqn-bench: {msg}");
            ExitCode::from(2)
        }
    }
}
