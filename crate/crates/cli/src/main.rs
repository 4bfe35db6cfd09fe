use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use limitlab::Execution;
use limitlab_cli::commands::{cmd_classify, cmd_example56, cmd_fourier, cmd_oracle, cmd_resolvent, cmd_wander};
use limitlab_cli::{lint, ExperimentConfig, Format, Run};

#[derive(Parser)]
#[command(name = "lab", version, about = "Limit-operator experiments on contraction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier coefficients of a cyclic model's measure.
    Fourier(Common),
    /// Discrete-side splitting into recurrent and stable components.
    Classify(Common),
    /// Full report: trajectory, limit estimate, splitting and entanglement verdict.
    Example56(Common),
    /// Brute-force analysis of a finite matrix model.
    Oracle(Common),
    /// Weakly wandering index search.
    Wander(Common),
    /// Resolvent computed spectrally and by Laplace transform.
    Resolvent(Common),
    /// Checks that every float in the given reports carries a bound or tier.
    Lint {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Sequence as JSON, e.g. '{"form":"powers","base":3,"len":8}'.
    #[arg(long)]
    seq: Option<String>,
    /// Frame as a JSON list of vectors.
    #[arg(long)]
    frame: Option<String>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let exec = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        Ok(ExperimentConfig::new(
            &self.model,
            &self.out,
            self.tol,
            self.seq.as_deref(),
            self.frame.as_deref(),
            self.format,
        )?
        .with_execution(exec))
    }
}

fn run(command: Command) -> Result<i32> {
    let (common, f): (Common, fn(&ExperimentConfig) -> Result<Run>) = match command {
        Command::Fourier(c) => (c, cmd_fourier),
        Command::Classify(c) => (c, cmd_classify),
        Command::Example56(c) => (c, cmd_example56),
        Command::Oracle(c) => (c, cmd_oracle),
        Command::Wander(c) => (c, cmd_wander),
        Command::Resolvent(c) => (c, cmd_resolvent),
        Command::Lint { paths } => {
            let mut bad = 0;
            for file in lint::collect(&paths)? {
                for v in lint::lint_file(&file)? {
                    eprintln!("{}: {} has no bound or tier", v.file.display(), v.path);
                    bad += 1;
                }
            }
            return Ok(if bad == 0 { 0 } else { 1 });
        }
    };
    let cfg = common.config()?;
    let run = f(&cfg)?;
    let path = run.write(&cfg)?;
    println!("{}", path.display());
    match &run.outcome {
        limitlab_cli::Outcome::Pass => {}
        limitlab_cli::Outcome::Undetermined(msg) => eprintln!("undetermined: {msg}"),
        limitlab_cli::Outcome::Fail(msg) => eprintln!("failed: {msg}"),
    }
    Ok(run.outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
