//! `groupcf`: train an attrition classifier, explain its attrition predictions
//! with group counterfactuals, and audit the resulting report.

mod artifacts;
mod config;
mod evaluate;
mod explain;
mod pipeline;
mod text;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::{ConfigArgs, RunConfig};
use crate::evaluate::AuditFailure;

const EXIT_OTHER: u8 = 1;
const EXIT_NOTHING_TO_EXPLAIN: u8 = 2;
const EXIT_AUDIT_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "groupcf", version, about = "Group counterfactual explanations for attrition classifiers")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the scaler and classifier; writes model.json, scaler.json, manifest.json.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compute diverse group counterfactuals; writes report.json and report.txt.
    Explain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory holding model.json and scaler.json (default: the output dir).
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Recompute coverage, sparsity, cost and masks of a report and compare.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        model_dir: Option<PathBuf>,
        /// Report to audit (default: report.json in the output dir).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<AuditFailure>().is_some() {
        return EXIT_AUDIT_FAILED;
    }
    match err.downcast_ref::<groupcf::Error>() {
        Some(groupcf::Error::NothingToExplain) => EXIT_NOTHING_TO_EXPLAIN,
        _ => EXIT_OTHER,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { config } => {
            let cfg = RunConfig::resolve(&config)?;
            let out = train::run(&cfg)?;
            println!(
                "trained {} model on {} rows ({} train / {} test), test accuracy {:.4}",
                out.model.model.kind(),
                out.manifest.n_rows,
                out.manifest.train_row_ids.len(),
                out.manifest.test_row_ids.len(),
                out.manifest.test_accuracy
            );
            println!("artifacts written to {}", cfg.output_dir.display());
        }
        Command::Explain { config, model_dir } => {
            let cfg = RunConfig::resolve(&config)?;
            let dir = model_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let doc = explain::run(&cfg, &dir)?;
            print!("{}", text::render_text(&doc));
        }
        Command::Evaluate {
            config,
            model_dir,
            report,
        } => {
            let cfg = RunConfig::resolve(&config)?;
            let dir = model_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let report = report.unwrap_or_else(|| cfg.output_dir.join(artifacts::REPORT_JSON));
            let audits = evaluate::run(&cfg, &dir, &report)?;
            println!("all {} deltas pass the audit", audits.len());
        }
    }
    Ok(())
}
