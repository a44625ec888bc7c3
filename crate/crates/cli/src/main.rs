//! `sdl-lab`: batch runner for the numerical experiments in `sdl-core`.

mod config;
mod output;
mod registry;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use config::{apply_seed, config_hash, parse_run_config, read_json, CliError, RunConfig, EXIT_SCHEMA};
use output::{emit, unix_now, Header};
use registry::{lookup, REGISTRY};
use sdl_core::report::ExperimentReport;

#[derive(Parser)]
#[command(name = "sdl-lab", version, about = "Numerical experiments for singular-drift diffusions and vorticity equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered experiment from a JSON run config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered experiments.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Simulate SDE paths and write them in the SDE1 format.
    SimulateSde {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the interacting particle system and write PTC1 frames.
    SimulateParticles {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the linear or nonlinear Fokker-Planck equation and write FPE1 frames.
    SolveFpe {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the estimate checks; the optional config is its parameter block.
    Verify {
        kind: VerifyKind,
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The non-uniqueness experiment; the optional config is its parameter block.
    Nonuniqueness {
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Aronson,
    Krylov,
    Holder,
    Decay,
    Inequalities,
    Duhamel,
    Flow,
}

impl VerifyKind {
    fn experiment(self) -> &'static str {
        match self {
            VerifyKind::Aronson => "aronson",
            VerifyKind::Krylov => "krylov-scan",
            VerifyKind::Holder => "holder",
            VerifyKind::Decay => "decay",
            VerifyKind::Inequalities => "inequalities",
            VerifyKind::Duhamel => "duhamel",
            VerifyKind::Flow => "flow",
        }
    }
}

/// `SDL_LAB_THREADS` wins over the config's worker count.
fn init_workers(configured: Option<usize>) -> Result<usize, CliError> {
    let env = match std::env::var("SDL_LAB_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(CliError::Schema(format!("SDL_LAB_THREADS must be a positive integer, got `{s}`"))),
        },
        Err(_) => None,
    };
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = env.or(configured) {
        b = b.num_threads(n);
    }
    // A second initialization in the same process keeps the first pool.
    let _ = b.build_global();
    Ok(rayon::current_num_threads())
}

fn out_dir(flag: Option<PathBuf>, configured: Option<PathBuf>, id: &str) -> PathBuf {
    flag.or(configured).unwrap_or_else(|| Path::new("sdl-lab-out").join(id))
}

fn run_experiment(rc: RunConfig, out: Option<PathBuf>, command: String) -> Result<u8, CliError> {
    let workers = init_workers(rc.workers)?;
    let hash = rc.hash();
    let dir = out_dir(out, rc.output_dir, rc.experiment);
    log::info!("running {} (config {}) with {workers} workers into {}", rc.experiment, &hash[..12], dir.display());
    let started = unix_now();
    let report = (rc.prepared.exec)()?;
    let finished = unix_now();
    let header = Header {
        tool: "sdl-lab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_hash: hash,
        workers,
        started_unix: started,
        finished_unix: finished,
        elapsed_seconds: finished - started,
    };
    summarize(&report);
    emit(&dir, report, Vec::new(), header)
}

fn run_simulation<C, F>(path: &Path, out: Option<PathBuf>, command: &str, f: F) -> Result<u8, CliError>
where
    C: DeserializeOwned + Serialize,
    F: FnOnce(&C) -> sdl_core::error::Result<(ExperimentReport, simulate::Artifacts)>,
{
    let v = read_json(path)?;
    let cfg: C = serde_json::from_value(v).map_err(|e| CliError::Schema(e.to_string()))?;
    let workers = init_workers(None)?;
    let hash = config_hash(&json!({ "command": command, "config": serde_json::to_value(&cfg).expect("configs serialize") }));
    let started = unix_now();
    let (report, files) = f(&cfg)?;
    let finished = unix_now();
    let header = Header {
        tool: "sdl-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.into(),
        config_hash: hash,
        workers,
        started_unix: started,
        finished_unix: finished,
        elapsed_seconds: finished - started,
    };
    summarize(&report);
    emit(&out_dir(out, None, command), report, files, header)
}

fn summarize(report: &ExperimentReport) {
    for (name, ok) in &report.flags {
        println!("{:<40} {}", name, if *ok { "pass" } else { "FAIL" });
    }
    if report.inconclusive {
        println!("inconclusive");
    }
}

fn block_run(id: &str, path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let entry = lookup(id).expect("verify kinds are registered");
    let mut block = match path {
        Some(p) => read_json(p)?,
        None => json!({}),
    };
    apply_seed(&mut block, entry.seed_field, seed)?;
    let mut m = serde_json::Map::new();
    m.insert("experiment".into(), Value::String(id.into()));
    m.insert(entry.block.into(), block);
    parse_run_config(Value::Object(m))
}

fn list(as_json: bool) {
    use std::io::Write;
    let text = if as_json {
        let v: Vec<Value> = REGISTRY
            .iter()
            .map(|e| json!({"id": e.id, "block": e.block, "seed_field": e.seed_field, "expected_runtime": e.runtime, "summary": e.summary}))
            .collect();
        serde_json::to_string_pretty(&v).expect("registry serializes") + "\n"
    } else {
        let mut t = format!("{:<20} {:<15} {:<10} summary\n", "id", "block", "runtime");
        for e in REGISTRY {
            t += &format!("{:<20} {:<15} {:<10} {}\n", e.id, e.block, e.runtime, e.summary);
        }
        t
    };
    // A closed pipe (`sdl-lab list | head`) is not an error.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn dispatch(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::List { json } => {
            list(json);
            Ok(0)
        }
        Command::Run { config, out } => {
            let rc = parse_run_config(read_json(&config)?)?;
            run_experiment(rc, out, "run".into())
        }
        Command::Verify { kind, config, seed, out } => {
            let rc = block_run(kind.experiment(), config.as_deref(), seed)?;
            run_experiment(rc, out, format!("verify {}", kind.experiment()))
        }
        Command::Nonuniqueness { config, seed, out } => {
            let rc = block_run("nonuniqueness", config.as_deref(), seed)?;
            run_experiment(rc, out, "nonuniqueness".into())
        }
        Command::SimulateSde { config, out } => run_simulation(&config, out, "simulate-sde", simulate::simulate_sde),
        Command::SimulateParticles { config, out } => {
            run_simulation(&config, out, "simulate-particles", simulate::simulate_particle_system)
        }
        Command::SolveFpe { config, out } => run_simulation(&config, out, "solve-fpe", simulate::solve_fpe),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sdl-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
