//! `aqs`: summarize a context with respect to a query, run a corpus through
//! the pipeline with scoring, or simulate majority-vote QA success.
//!
//! Exit codes: 0 success, 1 backend/config/ingestion error, 2 no usable
//! answers (or every batch item failed), 64 usage error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use aqs::data_io::{self, ResultLine, Triplet};
use aqs::metrics::{self, CorpusSummary, EvalOptions, MajoritySimConfig};
use aqs::{AqsError, Pipeline};
use clap::{Args, Parser, Subcommand};

use config::{BackendMode, CliConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_NO_ANSWERS: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "aqs", version, about = "Query-focused summarization with augmented queries")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON settings file; explicit flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendMode>,
    #[arg(long, global = true, env = "AQS_ENDPOINT", value_name = "URL")]
    endpoint: Option<String>,
    /// Paraphrases to generate [default: 8]
    #[arg(long, global = true)]
    beam_size: Option<usize>,
    /// Patience factor in [0, 1) [default: 0.5]
    #[arg(long, global = true)]
    patience: Option<f64>,
    /// Concurrent QA calls, or concurrent items in batch mode [default: 4]
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    #[arg(long, global = true)]
    no_paraphrase: bool,
    #[arg(long, global = true)]
    no_cluster: bool,
    /// Summarize the whole context when no answer is found.
    #[arg(long, global = true)]
    fallback_generic: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Echo the effective configuration and enable debug logging.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize one context and print the summary.
    Summarize {
        #[arg(long)]
        query: String,
        #[arg(long, required_unless_present = "context_file", conflicts_with = "context_file")]
        context: Option<String>,
        #[arg(long, value_name = "PATH")]
        context_file: Option<PathBuf>,
        /// Write the full trace as JSON to PATH, or to stdout when no PATH is given.
        #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "-")]
        trace: Option<PathBuf>,
    },
    /// Summarize and score every item of a triplet JSONL or ECF CSV/TSV file.
    Batch {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Monte Carlo estimate of majority-vote success over k queries.
    Simulate {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 25)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.global.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            match e.downcast_ref::<AqsError>() {
                Some(inner) => eprintln!("aqs: {}: {e:#}", inner.kind()),
                None => eprintln!("aqs: {e:#}"),
            }
            ExitCode::from(code)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<AqsError>() {
        Some(AqsError::NoAnswers) => EXIT_NO_ANSWERS,
        Some(AqsError::EmptyInput) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn effective_config(g: &GlobalArgs) -> anyhow::Result<CliConfig> {
    let mut c = match &g.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    if let Some(b) = g.backend {
        c.backend_mode = b;
    }
    if let Some(e) = &g.endpoint {
        c.endpoint = Some(e.clone());
    }
    if let Some(n) = g.beam_size {
        c.beam_size = n;
    }
    if let Some(q) = g.patience {
        c.patience = q;
    }
    if let Some(n) = g.concurrency {
        c.concurrency = n;
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    c.no_paraphrase |= g.no_paraphrase;
    c.no_cluster |= g.no_cluster;
    c.fallback_generic |= g.fallback_generic;
    if g.verbose {
        eprintln!("effective config: {}", serde_json::to_string_pretty(&c)?);
    }
    Ok(c)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = effective_config(&cli.global)?;
    match cli.command {
        Command::Summarize {
            query,
            context,
            context_file,
            trace,
        } => {
            let context = match (context, context_file) {
                (Some(c), _) => c,
                (None, Some(path)) => std::fs::read_to_string(&path)
                    .map_err(AqsError::from)
                    .with_context(|| format!("reading {}", path.display()))?,
                (None, None) => unreachable!("clap requires one context source"),
            };
            cmd_summarize(&config, &query, &context, trace.as_deref())
        }
        Command::Batch { input, output } => cmd_batch(&config, &input, &output),
        Command::Simulate { p, k, trials } => cmd_simulate(p, k, trials, config.seed),
    }
}

fn cmd_summarize(config: &CliConfig, query: &str, context: &str, trace_out: Option<&Path>) -> anyhow::Result<u8> {
    let pipeline = Pipeline::new(config.pipeline_config()?, config.backends()?)?;
    let trace = pipeline.summarize(query, context)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", trace.summary)?;
    match trace_out {
        Some(p) if p == Path::new("-") => writeln!(stdout, "{}", trace.to_json_line())?,
        Some(p) => data_io::write_jsonl_atomic(std::slice::from_ref(&trace), p)?,
        None => {}
    }
    Ok(0)
}

fn load_items(path: &Path) -> aqs::Result<Vec<Triplet>> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("csv" | "tsv") => Ok(data_io::ecf_to_tasks(&data_io::load_ecf(path)?)),
        _ => data_io::load_triplets(path),
    }
}

fn summary_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

fn cmd_batch(config: &CliConfig, input: &Path, output: &Path) -> anyhow::Result<u8> {
    let items = load_items(input)?;
    let suite = config.backends()?;
    let pipeline = Pipeline::new(config.pipeline_config()?, suite.clone())?;
    let pairs: Vec<(String, String)> = items.iter().map(|t| (t.query.clone(), t.context.clone())).collect();
    let traces = pipeline.batch_summarize(&pairs);

    let options = EvalOptions::default();
    let lines: Vec<ResultLine> = items
        .iter()
        .zip(traces)
        .map(|(item, trace)| {
            let metrics = if trace.is_ok() {
                metrics::evaluate(
                    &item.query,
                    &item.context,
                    &item.reference,
                    &trace.summary,
                    Some(&trace.answers),
                    &suite,
                    &options,
                )
                .map_err(|e| log::warn!("{}: scoring failed: {e}", item.id))
                .ok()
            } else {
                None
            };
            ResultLine {
                id: Some(item.id.clone()),
                trace,
                metrics,
            }
        })
        .collect();

    let records: Vec<_> = lines.iter().filter_map(|l| l.metrics.clone()).collect();
    let summary = CorpusSummary::from_records(&records, lines.len());
    data_io::write_jsonl_atomic(&lines, output)?;
    data_io::write_jsonl_atomic(std::slice::from_ref(&summary), summary_path(output))?;
    print!("{}", summary.to_table());

    let succeeded = lines.iter().filter(|l| l.trace.is_ok()).count();
    Ok(if succeeded == 0 && !lines.is_empty() { EXIT_NO_ANSWERS } else { 0 })
}

fn cmd_simulate(p: f64, k: usize, trials: usize, seed: u64) -> anyhow::Result<u8> {
    let sim = MajoritySimConfig {
        success_prob: p,
        queries_per_doc: k,
        trials,
        rng_seed: seed,
    };
    sim.validate().map_err(|e| UsageError(e.to_string()))?;
    let outcome = metrics::simulate_majority_success(&sim)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "rate {:.6}", outcome.rate)?;
    writeln!(out, "successes trials")?;
    for (successes, count) in &outcome.histogram {
        writeln!(out, "{successes:>9} {count}")?;
    }
    Ok(0)
}
