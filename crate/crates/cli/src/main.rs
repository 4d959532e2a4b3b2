use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairshare_cli::{
    cmd_dump_graph, cmd_run, cmd_sweep, default_out_dir, load_config, parse_demands, parse_schemes, parse_seeds,
    parse_strategies, revalidate, validate_config, CliError, RunArgs, SweepAxes,
};
use fairshare_core::config::ScenarioConfig;
use fairshare_core::orchestrator::Execution;

#[derive(Parser)]
#[command(name = "fairshare", version, about = "Multi-timescale RAN spectrum-sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Scenario config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario.
    #[arg(long, value_parser = ["fig4", "fig5"])]
    preset: Option<String>,
    /// Seed list overriding the config, e.g. `1,2,3` or `1-10`.
    #[arg(long)]
    seeds: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = load_config(self.config.as_deref(), self.preset.as_deref())?;
        if let Some(s) = &self.seeds {
            cfg.run.seeds = parse_seeds(s)?;
            revalidate(&cfg)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value_os_t = default_out_dir())]
    out: PathBuf,
    /// Write per-window traces under `<out>/traces`.
    #[arg(long)]
    trace: bool,
    /// Run replications one after another.
    #[arg(long)]
    sequential: bool,
}

impl Output {
    fn args(&self) -> RunArgs {
        RunArgs {
            trace: self.trace,
            execution: if self.sequential { Execution::Sequential } else { Execution::Parallel },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Run every scheme × strategy combination (or the listed subsets).
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        strategies: Option<String>,
        /// Demand levels in bit/s, comma separated.
        #[arg(long)]
        demands: Option<String>,
    },
    /// Write the conflict hypergraph and PRB coloring at one xApp tick.
    DumpGraph {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        rapp: u64,
        #[arg(long, default_value_t = 0)]
        xapp: u64,
        #[arg(long, default_value = "graph.json")]
        out: PathBuf,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { source, output } => {
            let cfg = source.load()?;
            let m = cmd_run(&cfg, &output.out, &output.args())?;
            eprintln!("{} replications written to {}", m.replications, output.out.display());
        }
        Command::Sweep {
            source,
            output,
            schemes,
            strategies,
            demands,
        } => {
            let cfg = source.load()?;
            let axes = SweepAxes {
                schemes: schemes.as_deref().map(parse_schemes).transpose()?.unwrap_or_default(),
                strategies: strategies.as_deref().map(parse_strategies).transpose()?.unwrap_or_default(),
                demands: demands.as_deref().map(parse_demands).transpose()?.unwrap_or_default(),
            };
            let m = cmd_sweep(&cfg, &axes, &output.out, &output.args())?;
            eprintln!("{} replications written to {}", m.replications, output.out.display());
        }
        Command::DumpGraph { source, rapp, xapp, out } => {
            let cfg = source.load()?;
            cmd_dump_graph(&cfg, rapp, xapp, &out)?;
        }
        Command::Validate { config } => {
            let cfg = validate_config(&config)?;
            let _ = writeln!(std::io::stdout(), "{}", cfg.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Config(fairshare_core::config::ConfigError::Semantic(diags)) = &e {
                for d in diags {
                    eprintln!("  {d}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
