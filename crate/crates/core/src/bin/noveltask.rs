use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noveltask::accommodation::StrategyId;
use noveltask::detection::Method;
use noveltask::metrics::Averaging;
use noveltask::runner::{self, RunOptions};
use noveltask::{ConfigFile, Error, Result};

#[derive(Parser)]
#[command(name = "noveltask", version, about = "Novelty detection and accommodation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic train, detection and accommodation splits.
    Generate(Common),
    /// Train the base classifier on the training split.
    Train(Common),
    /// Score the detection split and write detection metrics per budget.
    Detect(Pipeline),
    /// Write the feedback set for every scorer and budget.
    Feedback(Pipeline),
    /// Run the accommodation strategies on the written feedback sets.
    Accommodate(Pipeline),
    /// Run the whole pipeline and write results, summary, plots and manifest.
    Sweep(Pipeline),
    /// Summarize a finished sweep.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; desk defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Pipeline {
    #[command(flatten)]
    common: Common,
    /// Comma-separated: maxprob, compmean, euclid, mahalanobis.
    #[arg(long, value_delimiter = ',', default_value = "maxprob,compmean,euclid,mahalanobis")]
    scorers: Vec<Method>,
    /// Comma-separated: retrain, finetune_df, finetune_sampled.
    #[arg(long, value_delimiter = ',', default_value = "retrain,finetune_df,finetune_sampled")]
    strategies: Vec<StrategyId>,
    /// Score CSV `id,true_label,p_1..p_K[,confidence]` added as scorer `external`.
    #[arg(long)]
    external_scores: Option<PathBuf>,
    /// micro, macro or both.
    #[arg(long, default_value = "both")]
    averaging: String,
}

fn load_config(c: &Common) -> Result<ConfigFile> {
    let cf = match &c.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    Ok(match c.seed {
        Some(s) => cf.with_seed(s),
        None => cf,
    })
}

fn options(p: &Pipeline) -> Result<RunOptions> {
    let averaging = match p.averaging.as_str() {
        "both" => Averaging::ALL.to_vec(),
        s => vec![s.parse().map_err(|e: String| Error::Config(vec![e]))?],
    };
    Ok(RunOptions {
        scorers: p.scorers.clone(),
        strategies: p.strategies.clone(),
        external_scores: p.external_scores.clone(),
        averaging,
        cell_limit: None,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            for f in runner::cmd_generate(&load_config(&c)?, &c.out)? {
                println!("{}", f.display());
            }
        }
        Command::Train(c) => println!("{}", runner::cmd_train(&load_config(&c)?, &c.out)?.display()),
        Command::Detect(p) => {
            let path = runner::cmd_detect(&load_config(&p.common)?, &p.common.out, &options(&p)?)?;
            println!("{}", path.display());
        }
        Command::Feedback(p) => {
            for f in runner::cmd_feedback(&load_config(&p.common)?, &p.common.out, &options(&p)?)? {
                println!("{}", f.display());
            }
        }
        Command::Accommodate(p) => {
            let path = runner::cmd_accommodate(&load_config(&p.common)?, &p.common.out, &options(&p)?)?;
            println!("{}", path.display());
        }
        Command::Sweep(p) => {
            let status = runner::cmd_sweep(&load_config(&p.common)?, &p.common.out, &options(&p)?)?;
            println!("cells computed {} reused {}", status.computed, status.reused);
        }
        Command::Report(c) => println!("{}", runner::cmd_report(&c.out)?.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
