use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mixture_ep::harness::output::{
    write_as, write_data_csv, write_json, write_json_as_csv, write_lemma_csv, write_trace_csv,
};
use mixture_ep::harness::{
    check_lemma, ep_fit_report, oracle_report, run, simulate, ExperimentConfig, HarnessError,
    LemmaConfig, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "mixture-ep",
    version,
    about = "Recursive filters for mixture models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; `run` defaults to the current directory, other commands print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the observation stream.
    Simulate(Common),
    /// Run every configured method and write the trace and summary.
    Run(Common),
    /// Exact and quadrature posteriors and information integrals.
    Oracle(Common),
    /// Sweep the Fisher / editor information identity.
    CheckLemma(Common),
    /// Expectation propagation for the weight of a pair.
    EpFit(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// A file in `--out`, or stdout.
fn sink(common: &Common, name: &str) -> Result<Box<dyn Write>, HarnessError> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Box::new(BufWriter::new(File::create(dir.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn named(stem: &str, format: OutputFormat) -> String {
    if Path::new(stem).extension().is_some() {
        stem.to_string()
    } else {
        format!("{stem}.{}", format.extension())
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate(c) => {
            let config = load(&c)?;
            let format = c.format.into();
            let data = simulate(&config)?;
            let out = sink(&c, &named(&config.output.data, format))?;
            write_as(&data, format, out, |w| write_data_csv(&data, w))
        }
        Command::Run(c) => {
            let config = load(&c)?;
            let format: OutputFormat = c.format.into();
            let result = run(&config)?;
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            let trace_path = dir.join(named(&config.output.trace, format));
            let summary_path = dir.join(&config.output.summary);
            let trace = BufWriter::new(File::create(&trace_path)?);
            write_as(&result.trace, format, trace, |w| {
                write_trace_csv(&result.trace, w)
            })?;
            write_json(
                &result.summary,
                BufWriter::new(File::create(&summary_path)?),
            )?;
            write_json(
                &serde_json::json!({ "trace": trace_path, "summary": summary_path }),
                io::stdout().lock(),
            )
        }
        Command::Oracle(c) => {
            let config = load(&c)?;
            let format = c.format.into();
            let data = simulate(&config)?;
            let report = oracle_report(&config, &data)?;
            let out = sink(&c, &named("oracle", format))?;
            write_as(&report, format, out, |w| write_json_as_csv(&report, w))
        }
        Command::CheckLemma(c) => {
            let config = match &c.config {
                Some(path) => LemmaConfig::load(path)?,
                None => LemmaConfig::default(),
            };
            let format = c.format.into();
            let report = check_lemma(&config)?;
            let out = sink(&c, &named("lemma", format))?;
            write_as(&report, format, out, |w| write_lemma_csv(&report, w))
        }
        Command::EpFit(c) => {
            let config = load(&c)?;
            let format = c.format.into();
            let report = ep_fit_report(&config)?;
            let out = sink(&c, &named("ep_fit", format))?;
            write_as(&report, format, out, |w| write_json_as_csv(&report, w))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::FAILURE
        }
    }
}
