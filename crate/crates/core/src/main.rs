//! Command-line front end: entanglement curves, phase-boundary scans, and
//! numerical verification suites. Exit codes: 0 success, 1 numerical or
//! verification failure, 2 usage error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mesofluct::scan::{
    self, BoundaryStatus, OutputFormat, PhaseConfig, RunConfig, Suite, VerifyOptions,
};
use mesofluct::Error;

#[derive(Parser)]
#[command(
    name = "mesofluct",
    about = "Bath-induced mesoscopic entanglement of two oscillator chains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the squeezed thermal state and emit the entanglement curve.
    Evolve(EvolveArgs),
    /// Scan the squeezing axis for the critical temperature at maximal
    /// coupling.
    Phase(PhaseArgs),
    /// Run the numerical verification suites and print a check table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// Bath temperature (natural units). Defaults to 0.1.
    #[arg(long, conflicts_with = "beta")]
    temperature: Option<f64>,
    /// Inverse temperature; alternative to --temperature.
    #[arg(long)]
    beta: Option<f64>,
    /// Oscillator frequency.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Bath-induced statistical coupling between the chains (lambda^2 <= 1).
    #[arg(long)]
    lambda: f64,
    /// Squeezing parameter of the initial state.
    #[arg(long, default_value_t = 1.0)]
    squeeze: f64,
    /// Final sample time.
    #[arg(long = "t-max", default_value_t = 10.0)]
    t_max: f64,
    /// Sample spacing.
    #[arg(long = "dt", default_value_t = 0.01)]
    dt: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Seed recorded with the run (curves are deterministic regardless).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PhaseArgs {
    /// Smallest squeezing value.
    #[arg(long = "k-min")]
    k_min: f64,
    /// Largest squeezing value.
    #[arg(long = "k-max")]
    k_max: f64,
    /// Number of grid points (inclusive of both ends).
    #[arg(long = "k-steps")]
    k_steps: usize,
    /// Oscillator frequency.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Statistical coupling. The boundary is defined at the maximal value 1;
    /// overriding it is non-physical for this scan and fails every bracket.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which suite to run: micro, meso, fock, or all.
    #[arg(long)]
    suite: String,
    /// Comma-separated chain lengths for the finite-size checks.
    #[arg(long = "n-list", default_value = "100,1000,10000")]
    n_list: String,
    /// Fock truncation for the oracle checks.
    #[arg(long = "nmax", default_value_t = 24)]
    n_max: usize,
    /// Seed for the randomized grids.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn error_code(e: &Error) -> u8 {
    match e {
        // misuse of flags or parameters out of their documented domain
        Error::InvalidParameter { .. }
        | Error::CompletePositivity { .. }
        | Error::Dimension { .. } => 2,
        // numerical / convergence problems
        _ => 1,
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {path:?}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_evolve(args: &EvolveArgs) -> Result<u8, (u8, String)> {
    let format: OutputFormat = args
        .format
        .parse()
        .map_err(|e: Error| (2, format!("--format: {e}")))?;
    let temperature = match (args.temperature, args.beta) {
        (Some(t), None) => t,
        (None, Some(b)) => {
            if b <= 0.0 {
                return Err((2, "--beta: requires beta > 0".into()));
            }
            1.0 / b
        }
        (None, None) => 0.1,
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let cfg = RunConfig {
        temperature,
        omega: args.omega,
        coupling: args.lambda,
        squeeze: args.squeeze,
        t_max: args.t_max,
        dt_sample: args.dt,
        format,
        seed: args.seed,
    };
    let rows = scan::compute_curve(&cfg).map_err(|e| (error_code(&e), e.to_string()))?;
    let text = match cfg.format {
        OutputFormat::Csv => scan::write_curve_csv(&rows),
        OutputFormat::Json => scan::write_curve_json(&rows),
    };
    emit(&text, args.out.as_ref()).map_err(|m| (1, m))?;
    Ok(0)
}

fn run_phase(args: &PhaseArgs) -> Result<u8, (u8, String)> {
    let format: OutputFormat = args
        .format
        .parse()
        .map_err(|e: Error| (2, format!("--format: {e}")))?;
    let cfg = PhaseConfig {
        k_min: args.k_min,
        k_max: args.k_max,
        k_steps: args.k_steps,
        omega: args.omega,
        coupling: args.lambda,
        format,
    };
    let (rows, all_ok) = scan::compute_phase(&cfg).map_err(|e| (error_code(&e), e.to_string()))?;
    let text = match cfg.format {
        OutputFormat::Csv => scan::write_phase_csv(&rows),
        OutputFormat::Json => scan::write_phase_json(&rows),
    };
    emit(&text, args.out.as_ref()).map_err(|m| (1, m))?;
    if !all_ok {
        let failed: Vec<String> = rows
            .iter()
            .filter(|r| r.status == BoundaryStatus::BracketFailure)
            .map(|r| format!("{}", r.k))
            .collect();
        return Err((1, format!("bracket failure at k = {}", failed.join(", "))));
    }
    Ok(0)
}

fn run_verify(args: &VerifyArgs) -> Result<u8, (u8, String)> {
    let suite: Suite = args
        .suite
        .parse()
        .map_err(|e: Error| (2, format!("--suite: {e}")))?;
    let n_list: Vec<u64> = args
        .n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| (2u8, format!("--n-list: bad entry {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if n_list.len() < 2 {
        return Err((2, "--n-list: need at least two lengths".into()));
    }
    let opts = VerifyOptions {
        suite,
        n_max: args.n_max,
        seed: args.seed,
    };
    let report = scan::verify(&opts, &n_list).map_err(|e| (error_code(&e), e.to_string()))?;
    print!("{}", report.render());
    if report.all_pass() {
        Ok(0)
    } else {
        Err((1, "some checks failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Evolve(args) => run_evolve(args),
        Command::Phase(args) => run_phase(args),
        Command::Verify(args) => run_verify(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
