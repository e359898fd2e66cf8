//! The `fracvar` command line: `solve`, `check` and `sweep`.

pub mod check;
pub mod config;
pub mod output;
pub mod quadrature;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::solver::{solve, SolveError, SolverConfig};
use config::ProblemConfig;
use output::ColumnTable;
use sweep::{Example, Param};

pub const EXIT_OK: i32 = 0;
/// A self-check failed, or output could not be written.
pub const EXIT_FAILURE: i32 = 1;
/// The solver found nothing.
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "fracvar", version, about = "Discrete fractional variational problems on hZ")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find every extremal of the problem in a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// CSV of full trajectories, one column per candidate.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Randomised residual checks of the discrete identities.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Evaluate the shift identities with perturbed weights.
        #[arg(long, hide = true)]
        inject_kernel_error: bool,
    },
    /// Solve a built-in example over a list of steps or orders.
    Sweep {
        example: Example,
        /// Steps, e.g. `1/10,1/20,1/30`.
        #[arg(long, value_delimiter = ',', value_parser = Param::parse)]
        h: Vec<Param>,
        /// Orders, e.g. `0.7,0.75,0.95,0.99`.
        #[arg(long, value_delimiter = ',', value_parser = Param::parse)]
        alpha: Vec<Param>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        starts: Option<usize>,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Solve { config, output, seed, starts } => cmd_solve(&config, output.as_deref(), seed, starts, &mut out),
        Command::Check { seed, instances, inject_kernel_error } => {
            cmd_check(seed, instances, inject_kernel_error, &mut out)
        }
        Command::Sweep { example, h, alpha, output, seed, starts } => {
            let h = if h.is_empty() { example.default_h() } else { h };
            let alpha = if alpha.is_empty() { example.default_alpha() } else { alpha };
            cmd_sweep(example, &h, &alpha, output.as_deref(), seed, starts, &mut out)
        }
    }
}

fn overrides(mut cfg: SolverConfig, seed: Option<u64>, starts: Option<usize>) -> Result<SolverConfig, i32> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match starts {
        Some(0) => {
            eprintln!("error: --starts must be positive");
            return Err(EXIT_USAGE);
        }
        Some(n) => cfg.n_starts = n,
        None => {}
    }
    Ok(cfg)
}

fn write_table(table: &ColumnTable, path: Option<&Path>) -> i32 {
    let Some(path) = path else { return EXIT_OK };
    match table.write(path) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: writing {}: {e}", path.display());
            EXIT_FAILURE
        }
    }
}

pub fn cmd_solve(
    config: &Path,
    output: Option<&Path>,
    seed: Option<u64>,
    starts: Option<usize>,
    out: &mut impl Write,
) -> i32 {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    let parsed = ProblemConfig::parse(&text).and_then(|c| c.problem().map(|p| (c, p)));
    let (cfg_file, problem) = match parsed {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_USAGE;
        }
    };
    let cfg = match overrides(cfg_file.solver_config(SolverConfig::default()), seed, starts) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = match solve(&problem, &cfg) {
        Ok(r) => r,
        Err(SolveError::InvalidConfig(why)) => {
            eprintln!("error: {why}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NO_SOLUTION;
        }
    };

    let mut text = String::new();
    for (i, c) in report.candidates.iter().enumerate() {
        let interior: Vec<String> = c.trajectory.interior().iter().map(|y| format!("{y:.7}")).collect();
        let verdict = if c.legendre_verified { "verified" } else { "violated" };
        text.push_str(&format!("{:>3}  {}  L = {:.7}  {verdict}\n", i + 1, interior.join("  "), c.functional_value));
    }
    let verified = report.candidates.iter().filter(|c| c.legendre_verified).count();
    text.push_str(&format!(
        "{} extremals, {} satisfy the Legendre condition ({} starts converged, {} duplicates merged, {} failed)\n",
        report.candidates.len(),
        verified,
        report.n_starts_converged,
        report.n_duplicates_merged,
        report.n_starts_failed
    ));
    let _ = out.write_all(text.as_bytes());

    let names = (1..=report.candidates.len()).map(|i| format!("candidate_{i}")).collect();
    let series: Vec<Vec<(f64, f64)>> = report
        .candidates
        .iter()
        .map(|c| c.trajectory.points().into_iter().zip(c.trajectory.values().iter().copied()).collect())
        .collect();
    write_table(&ColumnTable::from_series(names, &series), output)
}

pub fn cmd_check(seed: u64, instances: usize, inject: bool, out: &mut impl Write) -> i32 {
    let results = match check::run_checks(seed, instances, inject) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let mut text = String::new();
    for r in &results {
        let verdict = if r.passed() { "ok" } else { "FAIL" };
        text.push_str(&format!(
            "{:<22} max residual {:.3e}  tol {:.0e}  n = {:<4} {verdict}\n",
            r.name, r.max_residual, r.tolerance, r.instances
        ));
    }
    let _ = out.write_all(text.as_bytes());
    if results.iter().all(check::CheckResult::passed) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

pub fn cmd_sweep(
    example: Example,
    hs: &[Param],
    alphas: &[Param],
    output: Option<&Path>,
    seed: Option<u64>,
    starts: Option<usize>,
    out: &mut impl Write,
) -> i32 {
    let cfg = match overrides(SolverConfig::default(), seed, starts) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let runs = match sweep::run_sweep(example, hs, alphas, &cfg) {
        Ok(r) => r,
        Err(e @ (sweep::SweepError::Grid(_) | sweep::SweepError::Problem(_))) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e @ sweep::SweepError::Quadrature(_)) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NO_SOLUTION;
        }
    };
    let mut text = String::new();
    for r in &runs {
        let dev = r.max_deviation().map_or_else(|| "no reference".to_string(), |d| format!("max deviation {d:.6e}"));
        text.push_str(&format!(
            "{example} {:<24} L = {:.7}  {dev}\n",
            r.label, r.candidate.functional_value
        ));
    }
    let _ = out.write_all(text.as_bytes());
    write_table(&sweep::sweep_table(&runs), output)
}
