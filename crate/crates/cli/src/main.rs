use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fockcx_cli::config::parse_override;
use fockcx_cli::{resolve, run, CliResult, ExperimentKind};

/// Fock-space complexity of lattice fermion states.
///
/// Every subcommand reads an optional flat TOML config (`key = value`, keys
/// listed in the crate docs of `fockcx_cli::config`), then applies `--set`
/// overrides in order. Worker threads: FOCKCX_THREADS.
///
/// Exit codes: 0 success, 1 i/o, 2 config, 3 numerical failure, 4 capacity.
#[derive(Parser)]
#[command(name = "fockcx", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state entropies and α over lengths × couplings.
    Ground(Common),
    /// Complexity ratio of all eigenstates in the ground-state symmetry sector.
    Excited(Common),
    /// Haar-random states against ln(Q/2).
    Generic(Common),
    /// Cumulative Fock distribution of a ground or uniform state.
    Distribution(Common),
    /// Quadratic finite-size fit of α from a ground.csv table.
    Analyze(Common),
}

#[derive(Args)]
struct Common {
    /// Config file (flat TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set lengths=[4,6]`; repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Input table (analyze).
    #[arg(short, long)]
    input: Option<PathBuf>,
}

fn execute(cli: Cli) -> CliResult<()> {
    let (kind, c) = match cli.command {
        Command::Ground(c) => (ExperimentKind::GroundSweep, c),
        Command::Excited(c) => (ExperimentKind::ExcitedSweep, c),
        Command::Generic(c) => (ExperimentKind::GenericBaseline, c),
        Command::Distribution(c) => (ExperimentKind::Distribution, c),
        Command::Analyze(c) => (ExperimentKind::ScalingFit, c),
    };
    let mut overrides = c.set.iter().map(|s| parse_override(s)).collect::<CliResult<Vec<_>>>()?;
    if let Some(o) = c.output {
        overrides.push(("output".into(), toml::Value::String(o.display().to_string())));
    }
    if let Some(i) = c.input {
        overrides.push(("input".into(), toml::Value::String(i.display().to_string())));
    }
    if let Some(s) = c.seed {
        let s = i64::try_from(s).map_err(|_| fockcx_cli::CliError::Config("seed must fit in i64".into()))?;
        overrides.push(("seed".into(), toml::Value::Integer(s)));
    }
    let cfg = resolve(c.config.as_deref(), kind, &overrides)?;
    for f in run(&cfg)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    fockcx_core::faer::set_global_parallelism(fockcx_core::faer::Par::Seq);
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fockcx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
