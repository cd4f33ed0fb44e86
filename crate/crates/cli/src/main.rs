//! `boxworld` — command-line front end over the theory crate.
//!
//! All numeric results go to stdout as one JSON document (with a run
//! manifest); human-readable summaries go to stderr. Exit codes: 0 success or
//! valid, 1 domain failure (invalid object, mismatched value, refusal),
//! 2 I/O or format failure.

mod commands;
mod json;

use std::fmt;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum AppErrorKind {
    /// Domain failure: validation failed, value mismatch, refusal. Exit 1.
    Domain,
    /// I/O or format failure: missing file, bad JSON, bad shape. Exit 2.
    Format,
}

#[derive(Debug)]
pub struct AppError {
    pub kind: AppErrorKind,
    pub message: String,
}

impl AppError {
    pub fn domain(message: String) -> Self {
        AppError { kind: AppErrorKind::Domain, message }
    }

    pub fn format(message: String) -> Self {
        AppError { kind: AppErrorKind::Format, message }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            AppErrorKind::Domain => 1,
            AppErrorKind::Format => 2,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Rational,
    Float,
}

impl Backend {
    fn name(&self) -> &'static str {
        match self {
            Backend::Rational => "rational",
            Backend::Float => "float",
        }
    }
}

#[derive(Parser)]
#[command(name = "boxworld", version, about = "Higher-order boxworld theory toolkit")]
struct Cli {
    /// Number backend; overrides BOXWORLD_BACKEND (default rational)
    #[arg(long, global = true)]
    backend: Option<Backend>,
    /// Worker threads for parallel LP batches; overrides BOXWORLD_JOBS
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ValidateClass {
    Operation,
    Process,
    Nsp,
    Boxworld,
    CausalOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Gyni,
    Lgyni,
    Ocb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizeMode {
    Fixed,
    Seesaw,
    ExhaustiveSymmetric,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an operation or process file against a characterization class
    Validate {
        file: std::path::PathBuf,
        #[arg(long, value_enum)]
        class: ValidateClass,
    },
    /// Contract a process with two instruments; print the correlation,
    /// matching inequality values, and the signaling profile
    Correlate {
        process: std::path::PathBuf,
        alice: std::path::PathBuf,
        bob: std::path::PathBuf,
    },
    /// Evaluate a causal-inequality functional on a correlation file
    Inequality {
        #[command(subcommand)]
        action: InequalityAction,
    },
    /// List or dump the named constructions
    Constructions {
        #[command(subcommand)]
        action: ConstructionsAction,
    },
    /// LP optimization: fixed instruments, seesaw, or the symmetric scan
    Optimize {
        #[arg(long, value_enum)]
        objective: Which,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, value_enum)]
        mode: OptimizeMode,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Force Bob to mirror Alice in the seesaw
        #[arg(long, default_value_t = false)]
        symmetric: bool,
        /// Opt in to the ~10^6-LP exhaustive symmetric scan
        #[arg(long, default_value_t = false)]
        long_run: bool,
        /// Append-only checkpoint file for the exhaustive scan
        #[arg(long)]
        checkpoint: Option<std::path::PathBuf>,
        /// Stop the exhaustive scan after this many new LPs (for smoke runs)
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Recompute the headline values and compare to the stored bound table
    ReproducePaper,
}

#[derive(Subcommand)]
enum InequalityAction {
    Eval {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        correlation: std::path::PathBuf,
    },
}

#[derive(Subcommand)]
enum ConstructionsAction {
    List,
    Dump { name: String },
}

fn resolve_backend(flag: Option<Backend>) -> Result<Backend, AppError> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("BOXWORLD_BACKEND") {
        Ok(s) if s.eq_ignore_ascii_case("rational") => Ok(Backend::Rational),
        Ok(s) if s.eq_ignore_ascii_case("float") => Ok(Backend::Float),
        Ok(other) => Err(AppError::format(format!("BOXWORLD_BACKEND={other:?} is not rational|float"))),
        Err(_) => Ok(Backend::Rational),
    }
}

fn resolve_jobs(flag: Option<usize>) -> Result<usize, AppError> {
    if let Some(j) = flag {
        return Ok(j.max(1));
    }
    if let Ok(s) = std::env::var("BOXWORLD_JOBS") {
        return s
            .trim()
            .parse::<usize>()
            .map(|j| j.max(1))
            .map_err(|_| AppError::format(format!("BOXWORLD_JOBS={s:?} is not a number")));
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub struct RunContext {
    pub backend: Backend,
    pub jobs: usize,
    pub seed: u64,
}

/// Wraps a command result with the run manifest and prints the envelope.
fn emit(
    command: &str,
    ctx: &RunContext,
    started: Instant,
    result: serde_json::Value,
) -> Result<(), AppError> {
    let result_text = serde_json::to_string(&result)
        .map_err(|e| AppError::format(format!("serialization: {e}")))?;
    let digest = Sha256::digest(result_text.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let envelope = serde_json::json!({
        "manifest": {
            "command": command,
            "arguments": std::env::args().skip(1).collect::<Vec<_>>(),
            "seed": ctx.seed,
            "backend": ctx.backend.name(),
            "wall_time_s": started.elapsed().as_secs_f64(),
            "result_digest": format!("sha256:{hex}"),
        },
        "result": result,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&envelope)
            .map_err(|e| AppError::format(format!("serialization: {e}")))?
    );
    Ok(())
}

fn run() -> Result<(), AppError> {
    let cli = Cli::parse();
    let backend = resolve_backend(cli.backend)?;
    let jobs = resolve_jobs(cli.jobs)?;
    let started = Instant::now();
    match cli.command {
        Command::Validate { file, class } => {
            let ctx = RunContext { backend, jobs, seed: 0 };
            let result = commands::validate(&ctx, &file, class)?;
            let valid = result["valid"].as_bool().unwrap_or(false);
            emit("validate", &ctx, started, result)?;
            if !valid {
                return Err(AppError::domain("validation failed".into()));
            }
            Ok(())
        }
        Command::Correlate { process, alice, bob } => {
            let ctx = RunContext { backend, jobs, seed: 0 };
            let result = commands::correlate(&ctx, &process, &alice, &bob)?;
            emit("correlate", &ctx, started, result)
        }
        Command::Inequality { action } => match action {
            InequalityAction::Eval { which, correlation } => {
                let ctx = RunContext { backend, jobs, seed: 0 };
                let result = commands::inequality_eval(&ctx, which, &correlation)?;
                emit("inequality eval", &ctx, started, result)
            }
        },
        Command::Constructions { action } => {
            let ctx = RunContext { backend, jobs, seed: 0 };
            let result = match action {
                ConstructionsAction::List => commands::constructions_list(),
                ConstructionsAction::Dump { name } => commands::constructions_dump(&ctx, &name)?,
            };
            emit("constructions", &ctx, started, result)
        }
        Command::Optimize {
            objective,
            dims,
            mode,
            restarts,
            seed,
            symmetric,
            long_run,
            checkpoint,
            limit,
        } => {
            let ctx = RunContext { backend, jobs, seed };
            let opts = commands::OptimizeArgs {
                objective,
                dims,
                mode,
                restarts,
                symmetric,
                long_run,
                checkpoint,
                limit,
            };
            let result = commands::optimize(&ctx, &opts)?;
            emit("optimize", &ctx, started, result)
        }
        Command::ReproducePaper => {
            let ctx = RunContext { backend, jobs, seed: 0 };
            let (result, all_ok) = commands::reproduce_paper(&ctx)?;
            emit("reproduce-paper", &ctx, started, result)?;
            if !all_ok {
                return Err(AppError::domain("reproduction mismatch".into()));
            }
            Ok(())
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
