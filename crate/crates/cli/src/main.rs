mod config;
mod error;
mod output;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use output::RunDir;

#[derive(Parser)]
#[command(name = "hmhf-lab", version, about = "Runs reduced-geometry, heat-flow and Liouville estimate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    ///
    /// Exit status: 0 when every expectation holds, 2 when an expectation
    /// fails, 1 on configuration or execution errors. HMHF_LAB_THREADS caps
    /// the worker threads.
    #[command(after_long_help = config::CONFIG_HELP)]
    Run { config: PathBuf },
    /// Write .dat tables and SVG figures for the reports under a run directory.
    Plot { dir: PathBuf },
    /// Print the estimate constants for domain dimension m as JSON.
    Constants {
        #[arg(long)]
        m: usize,
        /// Use these values for C_{3/4} and C instead of measuring them.
        #[arg(long, requires = "c")]
        c34: Option<f64>,
        #[arg(long, requires = "c34")]
        c: Option<f64>,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("HMHF_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore the error raised when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn run(path: &PathBuf) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = ExperimentConfig::load(path)?;
    let out = RunDir::create(&cfg.output.directory)?;
    let root = out.root().to_path_buf();
    let checks = run::run_experiment(&cfg, &out)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let files = out.finish(&name, &text)?;
    for c in &checks {
        println!(
            "{:<5} {}/{}: expected {}, observed {}",
            if c.ok { "ok" } else { "FAIL" },
            c.scenario,
            c.name,
            c.expected,
            c.observed
        );
    }
    println!("{} files written to {}", files.len() + 1, root.display());
    Ok(checks.iter().all(|c| c.ok))
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Plot { dir } => plot::emit_plots(dir).map(|files| {
            for f in &files {
                println!("{}", f.display());
            }
            true
        }),
        Command::Constants { m, c34, c } => {
            let k = match (c34, c) {
                (Some(a), Some(b)) => Ok(hmhf_core::estimates::EstimateConstants::from_values(*m, *a, *b)),
                _ => run::measured_constants(*m),
            };
            k.map(|k| {
                println!("{}", serde_json::to_string_pretty(&k).expect("constants serialize"));
                true
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
