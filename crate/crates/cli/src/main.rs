use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flocknet_cli::{check, graph_info, load_experiment, simulate, Overrides};
use flocknet_core::ComplementConvention;

/// Stochastic flocking and pattern formation on interaction networks.
#[derive(Parser)]
#[command(name = "flocknet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural constants of one network.
    GraphInfo {
        /// Family name (G0..G4) or edge-list path.
        graph: String,
        /// Vertex count for a family name.
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long, default_value_t = ComplementConvention::WithDiagonal)]
        convention: ComplementConvention,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the hypotheses of the decay estimates. Exits with status 1
    /// when any of them fails.
    Check(RunArgs),
    /// Run the ensemble and write energies.csv, snapshots and summary.json.
    Simulate(RunArgs),
    /// Print the built-in pi configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; the built-in pi configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    convention: Option<ComplementConvention>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, convention: self.convention, out: self.out.clone() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::GraphInfo { graph, n, convention, json } => {
            let info = graph_info(&graph, n, convention)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&info)?);
            } else {
                println!("{info}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check(args) => {
            let exp = load_experiment(args.config.as_deref(), &args.overrides())?;
            let report = check(&exp)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            for failure in &report.failures {
                eprintln!("FAIL {failure}");
            }
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Simulate(args) => {
            let exp = load_experiment(args.config.as_deref(), &args.overrides())?;
            let result = simulate(&exp)?;
            let v = &result.summary.verdicts;
            println!("wrote {} files to {}", result.summary.files.len() + 1, result.dir.display());
            println!(
                "flocking {}  bounded {}  J nonincreasing {}/{}  kinetic ratio {:.3e}",
                v.flocking.flocking,
                v.flocking.bounded,
                v.lyapunov_nonincreasing.passed,
                v.lyapunov_nonincreasing.total,
                v.kinetic_ratio
            );
            if result.complete() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} realization(s) blew up; see failures.json", result.output.failures.len());
                Ok(ExitCode::from(3))
            }
        }
        Command::DefaultConfig => {
            print!("{}", flocknet_core::config::pi_config().to_toml()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
