use std::io::Write;

use anyhow::Result;
use mixpr::bench::{BenchReport, SuiteSpec, TaskKind, TimingRow};
use mixpr::{Method, RetrievalConfig};
use serde::Serialize;

/// JSON report with the generating parameters alongside.
#[derive(Serialize)]
pub struct Envelope<'a, R: Serialize> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<&'a SuiteSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub report: &'a R,
}

#[derive(Serialize)]
pub struct Timings<'a> {
    pub config: &'a RetrievalConfig,
    pub rows: &'a [TimingRow],
}

#[derive(Serialize)]
struct BenchRow {
    task: TaskKind,
    method: Method,
    alpha: Option<f64>,
    score: f64,
    min_score: f64,
    max_score: f64,
    k: usize,
    instances: usize,
    words: usize,
    hops: usize,
    seed: u64,
    threshold: f64,
    max_iter: usize,
}

/// `recall` holds top-word overlap for frequency tasks.
#[derive(Serialize)]
struct SweepRow {
    alpha: Option<f64>,
    task: TaskKind,
    recall: f64,
    min: f64,
    max: f64,
    k: usize,
    instances: usize,
    words: usize,
    hops: usize,
    seed: u64,
    threshold: f64,
    max_iter: usize,
}

pub fn write_bench_csv(report: &BenchReport, spec: &SuiteSpec, out: &mut dyn Write) -> Result<()> {
    let rows: Vec<BenchRow> = report
        .rows
        .iter()
        .map(|r| BenchRow {
            task: r.task,
            method: r.method,
            alpha: r.alpha,
            score: r.mean_score,
            min_score: r.min_score,
            max_score: r.max_score,
            k: r.k,
            instances: r.instances,
            words: spec.words,
            hops: spec.hops,
            seed: spec.seed,
            threshold: report.config.graph.similarity_threshold,
            max_iter: report.config.solver.max_iterations,
        })
        .collect();
    mixpr::bench::write_csv(&rows, &mut *out)?;
    Ok(out.flush()?)
}

pub fn write_sweep_csv(report: &BenchReport, spec: &SuiteSpec, out: &mut dyn Write) -> Result<()> {
    let rows: Vec<SweepRow> = report
        .rows
        .iter()
        .map(|r| SweepRow {
            alpha: r.alpha,
            task: r.task,
            recall: r.mean_score,
            min: r.min_score,
            max: r.max_score,
            k: r.k,
            instances: r.instances,
            words: spec.words,
            hops: spec.hops,
            seed: spec.seed,
            threshold: report.config.graph.similarity_threshold,
            max_iter: report.config.solver.max_iterations,
        })
        .collect();
    mixpr::bench::write_csv(&rows, &mut *out)?;
    Ok(out.flush()?)
}
