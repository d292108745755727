use std::path::PathBuf;
use std::process::ExitCode;

use branchline_cli::pipeline::{run_pipeline, Verb};
use branchline_cli::plot::emit_plot_data;
use branchline_cli::report::read_report;
use branchline_cli::{load_config, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "branchline", version, about = "Branching-line signal experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment configuration; its output directory is consulted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding report.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the fixture: structure set and coincidence constraints.
    Validate(RunArgs),
    /// Build the band-degenerate approximation and verify it.
    Approximate(RunArgs),
    /// Approximate, then recover from the configured observations.
    Recover(RunArgs),
    /// Approximation error versus shrinking band half-width.
    Sweep(RunArgs),
    /// Regenerate plot data from an existing report.
    Report(ReportArgs),
}

fn config_error(message: &str) -> ExitCode {
    eprintln!("{{\"kind\":\"config\",\"message\":{}}}", serde_json::json!(message));
    ExitCode::from(2)
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, String), ExitCode> {
    let mut cfg = load_config(&args.config).map_err(|e| config_error(&e.to_string()))?;
    if let Some(out) = &args.out {
        cfg.outputs = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let name = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".to_string());
    Ok((cfg, name))
}

fn run(args: &RunArgs, verb: Verb) -> ExitCode {
    let (cfg, name) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match run_pipeline(&cfg, &name, verb) {
        Ok(outcome) => {
            for (check, pass) in &outcome.report.checks {
                println!("{check}: {}", if *pass { "pass" } else { "fail" });
            }
            if let Some(err) = &outcome.report.error {
                println!("error: {} ({})", err.message, err.kind);
            }
            println!(
                "{}: {} -> {}",
                outcome.report.status,
                name,
                outcome.report_path.display()
            );
            if outcome.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("{{\"kind\":{},\"message\":{}}}",
                serde_json::json!(e.kind()),
                serde_json::json!(e.to_string()));
            ExitCode::FAILURE
        }
    }
}

fn report_verb(args: &ReportArgs) -> ExitCode {
    let out_dir = if let Some(out) = &args.out {
        out.clone()
    } else if let Some(cfg_path) = &args.config {
        match load_config(cfg_path) {
            Ok(cfg) => cfg.outputs,
            Err(e) => return config_error(&e.to_string()),
        }
    } else {
        return config_error("report: pass --out DIR or --config PATH");
    };
    let report_path = out_dir.join("report.json");
    let report = match read_report(&report_path) {
        Ok(r) => r,
        Err(e) => return config_error(&e.to_string()),
    };
    let plot_path = out_dir.join("plot_data.csv");
    if let Err(e) = emit_plot_data(std::slice::from_ref(&report), &plot_path) {
        return config_error(&e.to_string());
    }
    println!("{}: {} -> {}", report.status, report.experiment, plot_path.display());
    if report.status == "pass" {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Validate(args) => run(args, Verb::Validate),
        Command::Approximate(args) => run(args, Verb::Approximate),
        Command::Recover(args) => run(args, Verb::Recover),
        Command::Sweep(args) => run(args, Verb::Sweep),
        Command::Report(args) => report_verb(args),
    }
}
