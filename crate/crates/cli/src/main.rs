//! `mixpr` command-line interface.
//!
//! Machine-readable output (JSON lines, CSV) goes to stdout or `--output`;
//! logs and the effective configuration go to stderr. Exit status is 0 on
//! success, 1 on runtime errors, and 2 on usage errors.

mod config;
mod report;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mixpr::bench::{self, SuiteSpec, TaskKind};
use mixpr::{Index, Method, RetrievalConfig, RetrievalResult};
use serde::Serialize;

use config::{MethodArg, RetrievalFlags};

#[derive(Debug, Parser)]
#[command(
    name = "mixpr",
    version,
    about = "Mixture-of-PageRanks retrieval over long documents"
)]
struct Cli {
    /// TOML file with retrieval settings; flags take precedence
    #[arg(long, global = true, env = "MIXPR_CONFIG")]
    config: Option<PathBuf>,
    /// Log only warnings and errors
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk, embed and link a document, and save the index
    Index {
        /// Document path; stdin when omitted or "-"
        input: Option<PathBuf>,
        /// Where to write the index sidecar
        #[arg(long)]
        save_index: PathBuf,
        #[command(flatten)]
        flags: RetrievalFlags,
    },
    /// Retrieve the top-k chunks of a document
    Retrieve {
        /// Document path; stdin when omitted or "-"
        input: Option<PathBuf>,
        /// Reuse a saved index instead of reading a document
        #[arg(long, conflicts_with = "input")]
        load_index: Option<PathBuf>,
        /// Save the index built from the input
        #[arg(long)]
        save_index: Option<PathBuf>,
        /// Include the assembled context in the output
        #[arg(long)]
        text: bool,
        /// One dense similarity per chunk (JSON array or whitespace separated), for hybrid-nn
        #[arg(long)]
        dense_scores: Option<PathBuf>,
        /// Seed for the random baseline
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        flags: RetrievalFlags,
    },
    /// Compare retrieval methods on a generated task suite
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Methods to score
        #[arg(long, value_enum, value_delimiter = ',', default_value = "mixpr,sparse-nn,random")]
        methods: Vec<MethodArg>,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        flags: RetrievalFlags,
    },
    /// Score a generated task suite at several teleport weights
    Sweep {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Teleport weights; 0 runs plain PageRank
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.3,0.5,0.6,0.8,0.99,1")]
        alphas: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        flags: RetrievalFlags,
    },
    /// Time every pipeline stage on generated documents, one size at a time
    Time {
        /// Document sizes in words
        #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        flags: RetrievalFlags,
    },
}

#[derive(Debug, Clone, clap::Args)]
struct SuiteArgs {
    #[arg(long, value_parser = parse_task, default_value = "needle")]
    task: TaskKind,
    /// Number of instances
    #[arg(long, default_value_t = 10)]
    instances: usize,
    /// Words per instance
    #[arg(long, default_value_t = 32_000)]
    words: usize,
    /// Chain length for hashchain tasks
    #[arg(long, default_value_t = 4)]
    hops: usize,
    /// Seed of the first instance; instance i uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for scoring instances [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
}

impl SuiteArgs {
    fn spec(&self) -> SuiteSpec {
        SuiteSpec {
            kind: self.task,
            instances: self.instances,
            words: self.words,
            hops: self.hops,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, clap::Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_task(s: &str) -> std::result::Result<TaskKind, String> {
    s.parse().map_err(|e: mixpr::Error| e.to_string())
}

fn read_input(input: Option<&Path>) -> Result<String> {
    match input {
        Some(path) if path != Path::new("-") => {
            std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
        }
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("cannot read stdin")?;
            Ok(text)
        }
    }
}

fn read_dense_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad score {t:?} in {}", path.display()))
        })
        .collect()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json_line<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn init_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct IndexSummary<'a> {
    path: &'a Path,
    chunks: usize,
    vocabulary: usize,
    nnz: usize,
    dangling: usize,
    threshold: f64,
    timings: mixpr::retriever::BuildTimings,
}

#[derive(Serialize)]
struct RetrieveOutput<'a> {
    #[serde(flatten)]
    result: &'a RetrievalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<String>,
}

fn save_index(index: &Index, path: &Path) -> Result<()> {
    index
        .save(path)
        .with_context(|| format!("cannot write index {}", path.display()))?;
    log::info!("saved index with {} chunks to {}", index.len(), path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Index {
            input,
            save_index: path,
            flags,
        } => {
            let config = config::resolve(file, &flags)?;
            let index = Index::build(&read_input(input.as_deref())?, &config)?;
            save_index(&index, &path)?;
            let summary = IndexSummary {
                path: &path,
                chunks: index.len(),
                vocabulary: index.vocabulary.len(),
                nnz: index.graph.nnz(),
                dangling: index.graph.dangling().iter().filter(|&&d| d).count(),
                threshold: index.graph.threshold(),
                timings: index.timings,
            };
            write_json_line(&summary, &mut std::io::stdout().lock())
        }
        Command::Retrieve {
            input,
            load_index,
            save_index: save_path,
            text,
            dense_scores,
            seed,
            flags,
        } => {
            let mut config = config::resolve(file, &flags)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            let index = match &load_index {
                Some(path) => {
                    let index = Index::load(path).with_context(|| format!("cannot load index {}", path.display()))?;
                    if index.graph_config != config.graph || index.chunker != config.chunker {
                        log::warn!("index was built with different chunker/graph settings; using the saved ones");
                    }
                    index
                }
                None => Index::build(&read_input(input.as_deref())?, &config)?,
            };
            if let Some(path) = &save_path {
                save_index(&index, path)?;
            }
            let result = match (&dense_scores, config.method) {
                (Some(path), Method::HybridNn) => index.retrieve_hybrid_nn(&read_dense_scores(path)?, &config)?,
                (None, Method::HybridNn) => bail!("--method hybrid-nn needs --dense-scores"),
                (Some(_), _) => bail!("--dense-scores only applies to --method hybrid-nn"),
                (None, _) => index.retrieve(&config)?,
            };
            log::info!("diagnostics: {}", serde_json::to_string(&result.diagnostics)?);
            let output = RetrieveOutput {
                result: &result,
                context: text.then(|| index.assemble_context(&result)),
            };
            write_json_line(&output, &mut std::io::stdout().lock())
        }
        Command::Bench {
            suite,
            methods,
            out,
            flags,
        } => {
            init_pool(suite.jobs)?;
            let mut config = config::resolve(file, &flags)?;
            config.seed = suite.seed;
            let spec = suite.spec();
            let methods: Vec<Method> = methods.into_iter().map(Method::from).collect();
            if methods.contains(&Method::HybridNn) {
                log::warn!("hybrid-nn needs external dense scores and is skipped in benchmarks");
            }
            let report = bench::compare_methods(&spec.generate()?, &methods, &config)?;
            log::info!("bench finished in {:.1} ms", report.elapsed_ms);
            let mut sink = open_output(out.output.as_deref())?;
            match out.format {
                Format::Csv => report::write_bench_csv(&report, &spec, &mut sink),
                Format::Json => write_json_line(
                    &report::Envelope {
                        suite: Some(&spec),
                        seed: None,
                        report: &report,
                    },
                    &mut sink,
                ),
            }
        }
        Command::Sweep {
            suite,
            alphas,
            out,
            flags,
        } => {
            init_pool(suite.jobs)?;
            let config = config::resolve(file, &flags)?;
            let spec = suite.spec();
            let report = bench::sweep_alpha(&spec.generate()?, &alphas, &config)?;
            log::info!("sweep finished in {:.1} ms", report.elapsed_ms);
            let mut sink = open_output(out.output.as_deref())?;
            match out.format {
                Format::Csv => report::write_sweep_csv(&report, &spec, &mut sink),
                Format::Json => write_json_line(
                    &report::Envelope {
                        suite: Some(&spec),
                        seed: None,
                        report: &report,
                    },
                    &mut sink,
                ),
            }
        }
        Command::Time {
            sizes,
            seed,
            out,
            flags,
        } => {
            let config: RetrievalConfig = config::resolve(file, &flags)?;
            log::info!("timing runs are serialized; keep the machine otherwise idle");
            let rows = bench::time_pipeline(&sizes, seed, &config)?;
            let mut sink = open_output(out.output.as_deref())?;
            match out.format {
                Format::Csv => {
                    bench::write_csv(&rows, &mut sink)?;
                    Ok(sink.flush()?)
                }
                Format::Json => write_json_line(
                    &report::Envelope {
                        suite: None,
                        seed: Some(seed),
                        report: &report::Timings {
                            config: &config,
                            rows: &rows,
                        },
                    },
                    &mut sink,
                ),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
