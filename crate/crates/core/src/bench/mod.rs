//! Synthetic benchmarks: α sweeps, method comparisons, and stage timings.

pub mod generate;
pub mod metrics;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generate::{generate, Gold, TaskInstance, TaskKind};
pub use metrics::{global_overlap, local_recall, score, top_words};

use crate::retriever::{top_k, Index, Method, RetrievalConfig};
use crate::{Error, Result};

/// `count` instances with seeds `seed, seed + 1, ...`.
pub fn generate_suite(kind: TaskKind, count: usize, words: usize, hops: usize, seed: u64) -> Result<Vec<TaskInstance>> {
    (0..count as u64)
        .map(|i| generate(kind, words, hops, seed.wrapping_add(i)))
        .collect()
}

/// Score of one instance under one retrieval setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub task: TaskKind,
    pub seed: u64,
    pub method: Method,
    /// Teleport weight for MixPR rows.
    pub alpha: Option<f64>,
    pub score: f64,
}

/// Aggregate over a suite for one retrieval setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub task: TaskKind,
    pub method: Method,
    pub alpha: Option<f64>,
    pub k: usize,
    pub instances: usize,
    pub mean_score: f64,
    pub min_score: f64,
    pub max_score: f64,
}

/// Parameters of a generated suite, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub kind: TaskKind,
    pub instances: usize,
    pub words: usize,
    pub hops: usize,
    pub seed: u64,
}

impl SuiteSpec {
    pub fn generate(&self) -> Result<Vec<TaskInstance>> {
        generate_suite(self.kind, self.instances, self.words, self.hops, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: RetrievalConfig,
    pub rows: Vec<ScoreRow>,
    pub details: Vec<InstanceScore>,
    pub elapsed_ms: f64,
}

impl BenchReport {
    pub fn row(&self, method: Method, alpha: Option<f64>) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.method == method && r.alpha == alpha)
    }
}

fn aggregate(details: &[InstanceScore], k: usize) -> Vec<ScoreRow> {
    let mut rows: Vec<ScoreRow> = Vec::new();
    for d in details {
        match rows
            .iter_mut()
            .find(|r| r.task == d.task && r.method == d.method && r.alpha == d.alpha)
        {
            Some(r) => {
                r.instances += 1;
                r.mean_score += d.score;
                r.min_score = r.min_score.min(d.score);
                r.max_score = r.max_score.max(d.score);
            }
            None => rows.push(ScoreRow {
                task: d.task,
                method: d.method,
                alpha: d.alpha,
                k,
                instances: 1,
                mean_score: d.score,
                min_score: d.score,
                max_score: d.score,
            }),
        }
    }
    for r in &mut rows {
        r.mean_score /= r.instances as f64;
    }
    rows
}

fn retrieved_texts<'a>(index: &'a Index, selected: &[usize]) -> Vec<&'a str> {
    selected.iter().map(|&i| index.chunks[i].text.as_str()).collect()
}

/// Instances are scored in parallel on the current rayon pool; the output
/// keeps instance order.
fn collect_scores<F>(instances: &[TaskInstance], per_instance: F) -> Result<Vec<InstanceScore>>
where
    F: Fn(&TaskInstance) -> Result<Vec<InstanceScore>> + Sync + Send,
{
    let nested: Vec<Vec<InstanceScore>> = instances.par_iter().map(per_instance).collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Score every instance with PageRank at each `alpha`, bypassing the router.
/// `alpha = 0` runs plain PageRank. The graph is built once per instance.
pub fn sweep_alpha(instances: &[TaskInstance], alphas: &[f64], config: &RetrievalConfig) -> Result<BenchReport> {
    config.validate()?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParameter(format!("alpha must be in [0, 1], got {a}")));
    }
    let start = Instant::now();
    let details = collect_scores(instances, |inst| {
        let index = Index::build(&inst.document, config)?;
        alphas
            .iter()
            .map(|&alpha| {
                let dist = index.pagerank_scores(alpha, &config.solver)?;
                let selected: Vec<usize> = top_k(&dist.scores, config.k).iter().map(|s| s.index).collect();
                Ok(InstanceScore {
                    task: inst.kind,
                    seed: inst.seed,
                    method: Method::Mixpr,
                    alpha: Some(alpha),
                    score: score(&retrieved_texts(&index, &selected), inst),
                })
            })
            .collect()
    })?;
    Ok(BenchReport {
        config: config.clone(),
        rows: aggregate(&details, config.k),
        details,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Score every instance with each method; MixPR goes through `config.router`.
/// Hybrid-NN is skipped since it needs external dense scores.
pub fn compare_methods(
    instances: &[TaskInstance],
    methods: &[Method],
    config: &RetrievalConfig,
) -> Result<BenchReport> {
    config.validate()?;
    let start = Instant::now();
    let details = collect_scores(instances, |inst| {
        let index = Index::build(&inst.document, config)?;
        methods
            .iter()
            .filter(|&&m| m != Method::HybridNn)
            .map(|&method| {
                let run = RetrievalConfig {
                    method,
                    ..config.clone()
                };
                let result = index.retrieve(&run)?;
                Ok(InstanceScore {
                    task: inst.kind,
                    seed: inst.seed,
                    method,
                    alpha: result.diagnostics.solver.as_ref().map(|s| s.alpha),
                    score: score(&retrieved_texts(&index, &result.indices()), inst),
                })
            })
            .collect()
    })?;
    Ok(BenchReport {
        config: config.clone(),
        rows: aggregate(&details, config.k),
        details,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Stage timings of one index build plus one retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub words: usize,
    pub chunks: usize,
    pub nnz: usize,
    pub threshold: f64,
    pub chunk_ms: f64,
    pub embed_ms: f64,
    pub graph_ms: f64,
    pub route_ms: f64,
    pub solve_ms: f64,
    pub select_ms: f64,
    pub total_ms: f64,
    /// Solver iterations; zero for methods without a solver.
    pub iterations: usize,
    pub converged: bool,
}

/// Time the full pipeline on needle documents of each size in `sizes`, one
/// after another. Runs are serialized so stages never compete for cores.
pub fn time_pipeline(sizes: &[usize], seed: u64, config: &RetrievalConfig) -> Result<Vec<TimingRow>> {
    sizes
        .iter()
        .map(|&words| {
            let inst = generate::gen_needle(words, seed)?;
            let row = time_document(&inst.document, config)?;
            log::info!("timed {} words: {:.1} ms", row.words, row.total_ms);
            Ok(row)
        })
        .collect()
}

/// Build an index over `document` and run one retrieval with `config.method`.
pub fn time_document(document: &str, config: &RetrievalConfig) -> Result<TimingRow> {
    let start = Instant::now();
    let index = Index::build(document, config)?;
    let result = index.retrieve(config)?;
    let total_ms = start.elapsed().as_secs_f64() * 1e3;
    let t = result.diagnostics.timings;
    let (iterations, converged) = result
        .diagnostics
        .solver
        .map_or((0, true), |s| (s.iterations, s.converged));
    Ok(TimingRow {
        method: config.method,
        words: document.split_whitespace().count(),
        chunks: index.len(),
        nnz: index.graph.nnz(),
        threshold: index.graph.threshold(),
        chunk_ms: index.timings.chunk_ms,
        embed_ms: index.timings.embed_ms,
        graph_ms: index.timings.graph_ms,
        route_ms: t.route_ms,
        solve_ms: t.score_ms,
        select_ms: t.select_ms,
        total_ms,
        iterations,
        converged,
    })
}

/// Write serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
