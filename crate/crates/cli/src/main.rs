use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relbgk_cli::{commands, parse_config, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "relbgk", version, about = "Relativistic BGK mixture scenarios, probes and plot data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file; may also be given positionally.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, overriding the configuration.
    #[arg(long, global = true, env = "RELBGK_THREADS")]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario.
    Run { path: Option<PathBuf> },
    /// Newtonian-limit sweep over the `[probe]` table.
    ProbeNewtonian { path: Option<PathBuf> },
    /// Compare an equal-mass mixture with the single-species run of its sum.
    CheckIndifferentiability { path: Option<PathBuf> },
    /// Validate a configuration and print it with defaults filled in.
    ValidateConfig { path: Option<PathBuf> },
    /// Write moments and momentum slices of a snapshot as CSV.
    EmitPlotData {
        snapshot: PathBuf,
        /// Spatial cell of the momentum slices.
        #[arg(long, default_value_t = 0)]
        cell: usize,
    },
}

fn config_path(cli: &Cli, positional: &Option<PathBuf>) -> CliResult<PathBuf> {
    positional
        .clone()
        .or_else(|| cli.config.clone())
        .ok_or_else(|| CliError::Invalid(vec!["no configuration file given (positional or --config)".into()]))
}

fn init_threads(n: Option<usize>) -> CliResult<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Invalid(vec!["threads must be ≥ 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    Ok(())
}

fn load(cli: &Cli, positional: &Option<PathBuf>) -> CliResult<(RunConfig, PathBuf)> {
    let cfg = parse_config(&config_path(cli, positional)?)?;
    init_threads(cli.threads.or(cfg.threads))?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Run { path } => {
            let (cfg, out) = load(cli, path)?;
            commands::run(&cfg, &out, cli.verbose)
        }
        Command::ProbeNewtonian { path } => {
            let (cfg, out) = load(cli, path)?;
            commands::probe_newtonian(&cfg, &out)
        }
        Command::CheckIndifferentiability { path } => {
            let (cfg, out) = load(cli, path)?;
            commands::check_indifferentiability(&cfg, &out)
        }
        Command::ValidateConfig { path } => {
            let cfg = parse_config(&config_path(cli, path)?)?;
            cfg.to_toml()
        }
        Command::EmitPlotData { snapshot, cell } => {
            init_threads(cli.threads)?;
            let out = cli.out.clone().unwrap_or_else(|| Path::new("out").to_path_buf());
            commands::emit_plot_data(snapshot, &out, *cell)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let line = serde_json::json!({
                "category": e.category(),
                "exit_code": e.exit_code(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
