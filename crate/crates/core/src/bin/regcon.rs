use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use regcon::cli::runner::EXIT_INFEASIBLE;
use regcon::cli::{run_experiment, write_diagnostic, Command, DemoName, ExperimentConfig, RunError, RunOptions, SCHEMA};
use regcon::Error;

/// Regularized versus constrained learning experiments.
#[derive(Parser, Debug)]
#[command(name = "regcon", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the point budget of every grid.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record wall-clock time in the manifest (reruns are then not byte-identical).
    #[arg(long, global = true)]
    wall_clock: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run a pre-wired demo.
    Demo {
        name: DemoName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the config JSON schema.
    Schema,
}

fn fail(dir: Option<&std::path::Path>, err: RunError) -> ExitCode {
    eprintln!("{}", write_diagnostic(dir, &err));
    ExitCode::from(err.exit_code() as u8)
}

type LoadError = Box<(Option<PathBuf>, RunError)>;

fn load(path: &PathBuf) -> Result<ExperimentConfig, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Box::new((None, Error::Config(format!("cannot read {}: {e}", path.display())).into())))?;
    // Find the output directory first so even a rejected config leaves a diagnostic there.
    let dir = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("output_dir").and_then(|d| d.as_str()).map(PathBuf::from));
    ExperimentConfig::from_json(&text).map_err(|e| Box::new((dir, e.into())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        threads: cli.threads,
        budget: cli.budget,
        seed: cli.seed,
        wall_clock: cli.wall_clock,
    };
    let config = match cli.command {
        Sub::Schema => {
            print!("{SCHEMA}");
            return ExitCode::SUCCESS;
        }
        Sub::Run { config } => match load(&config) {
            Ok(c) => c,
            Err(boxed) => {
                let (dir, e) = *boxed;
                return fail(dir.as_deref(), e);
            }
        },
        Sub::Demo { name, out } => ExperimentConfig {
            instance: None,
            command: Command::Demo,
            params: json!({ "name": name }),
            output_dir: out,
            seed: 0,
        },
    };
    match run_experiment(&config, &opts) {
        Ok(artifact) => {
            let code = artifact.exit_code();
            let files: Vec<String> = artifact.files.iter().map(|f| f.display().to_string()).collect();
            println!(
                "{}",
                json!({ "status": artifact.status, "output_dir": artifact.dir, "files": files })
            );
            if code == EXIT_INFEASIBLE {
                eprintln!(
                    "{}",
                    json!({
                        "status": "error",
                        "kind": "feasibility_unmet",
                        "exit_code": code,
                        "message": "the requested feasibility was not met; see result.json",
                    })
                );
            }
            ExitCode::from(code as u8)
        }
        Err(e) => fail(Some(&config.output_dir), e),
    }
}
