//! End-to-end retrieval: MixPR and the nearest-neighbor baselines.
//!
//! Every method scores all chunks, keeps the `k` best (ties go to the
//! earlier chunk), and returns them in document order.

mod index;

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use index::elapsed_ms;
pub use index::{BuildTimings, Index};

use crate::chunker::ChunkerConfig;
use crate::embed::embed_query;
use crate::graph::GraphConfig;
use crate::pagerank::{make_personalization, solve, solve_pure, ScoreDistribution, SolverConfig, SHORT_QUERY_WORDS};
use crate::router::{classify, extract_probe, QueryClass, RouterConfig, TaskScope};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 100;
pub const DEFAULT_HYBRID_SPARSE_WEIGHT: f64 = 0.15;
pub const DEFAULT_HYBRID_DENSE_WEIGHT: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Mixpr,
    SparseNn,
    HybridNn,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k: usize,
    pub method: Method,
    /// Teleport weight used when the router picks local retrieval.
    pub alpha_local: f64,
    pub hybrid_sparse_weight: f64,
    pub hybrid_dense_weight: f64,
    /// Seed for the random baseline.
    pub seed: u64,
    pub chunker: ChunkerConfig,
    pub graph: GraphConfig,
    /// Iteration limits; `alpha` here is ignored in favor of routing.
    pub solver: SolverConfig,
    pub router: RouterConfig,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            method: Method::Mixpr,
            alpha_local: crate::pagerank::DEFAULT_ALPHA,
            hybrid_sparse_weight: DEFAULT_HYBRID_SPARSE_WEIGHT,
            hybrid_dense_weight: DEFAULT_HYBRID_DENSE_WEIGHT,
            seed: 0,
            chunker: ChunkerConfig::default(),
            graph: GraphConfig::default(),
            solver: SolverConfig::default(),
            router: RouterConfig::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.alpha_local > 0.0 && self.alpha_local <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_local must be in (0, 1], got {}",
                self.alpha_local
            )));
        }
        if !(self.hybrid_sparse_weight >= 0.0 && self.hybrid_dense_weight >= 0.0) {
            return Err(Error::InvalidParameter("hybrid weights must be non-negative".into()));
        }
        self.chunker.validate()?;
        self.graph.validate()?;
        SolverConfig {
            alpha: self.alpha_local,
            ..self.solver
        }
        .validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub route_ms: f64,
    pub score_ms: f64,
    pub select_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: Option<SolverDiagnostics>,
    /// The sparse query had no in-vocabulary term; the last `k` chunks were returned.
    pub zero_query: bool,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub method: Method,
    pub k: usize,
    /// Selected chunks in increasing index order.
    pub selected: Vec<Selected>,
    /// Routing decision; only MixPR routes.
    pub query_class: Option<QueryClass>,
    pub diagnostics: Diagnostics,
}

impl RetrievalResult {
    pub fn indices(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.index).collect()
    }
}

fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// The `k` highest scores (earlier index wins ties), in index order.
pub fn top_k(scores: &[f64], k: usize) -> Vec<Selected> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx.into_iter()
        .map(|index| Selected {
            index,
            score: scores[index],
        })
        .collect()
}

impl Index {
    /// PageRank with the query personalization at teleport weight `alpha`;
    /// `alpha = 0` is plain PageRank.
    pub fn pagerank_scores(&self, alpha: f64, solver: &SolverConfig) -> Result<ScoreDistribution> {
        let solver = SolverConfig { alpha, ..*solver };
        if alpha == 0.0 {
            solve_pure(&self.graph, &solver)
        } else {
            let p = make_personalization(&self.chunks)?;
            solve(&self.graph, &p, &solver)
        }
    }

    pub fn retrieve(&self, config: &RetrievalConfig) -> Result<RetrievalResult> {
        match config.method {
            Method::Mixpr => self.retrieve_mixpr(config),
            Method::SparseNn => self.retrieve_sparse_nn(config),
            Method::Random => self.retrieve_random(config),
            Method::HybridNn => Err(Error::InvalidParameter(
                "hybrid-nn needs externally supplied dense scores".into(),
            )),
        }
    }

    pub fn retrieve_mixpr(&self, config: &RetrievalConfig) -> Result<RetrievalResult> {
        config.validate()?;
        let start = Instant::now();
        let probe = extract_probe(&self.chunks)?;
        let class = classify(&probe, &config.router);
        let route_ms = elapsed_ms(start);

        let alpha = match class.scope {
            TaskScope::Local => config.alpha_local,
            TaskScope::Global => 0.0,
        };
        let start = Instant::now();
        let dist = self.pagerank_scores(alpha, &config.solver)?;
        let score_ms = elapsed_ms(start);

        let start = Instant::now();
        let selected = top_k(&dist.scores, config.k);
        let select_ms = elapsed_ms(start);

        Ok(RetrievalResult {
            method: Method::Mixpr,
            k: config.k,
            selected,
            query_class: Some(class),
            diagnostics: Diagnostics {
                solver: Some(SolverDiagnostics {
                    alpha,
                    iterations: dist.iterations_used,
                    converged: dist.converged,
                    residual: dist.residual,
                }),
                zero_query: false,
                timings: StageTimings {
                    route_ms,
                    score_ms,
                    select_ms,
                },
            },
        })
    }

    /// Text of the query: the last chunk, or the last two when the last is short.
    pub fn query_text(&self) -> String {
        let m = self.chunks.len();
        match self.chunks.last() {
            Some(last) if last.word_count < SHORT_QUERY_WORDS && m >= 2 => {
                format!("{} {}", self.chunks[m - 2].text, last.text)
            }
            Some(last) => last.text.clone(),
            None => String::new(),
        }
    }

    /// `Eᵀq` for the sparse query vector; `None` when the query is empty.
    pub fn sparse_scores(&self) -> Option<Vec<f64>> {
        let q = embed_query(&self.query_text(), &self.vocabulary);
        (!q.is_zero()).then(|| self.embeddings.transpose_mul(&q))
    }

    pub fn retrieve_sparse_nn(&self, config: &RetrievalConfig) -> Result<RetrievalResult> {
        config.validate()?;
        let start = Instant::now();
        let scores = self.sparse_scores();
        let score_ms = elapsed_ms(start);
        self.nn_result(Method::SparseNn, scores, score_ms, config)
    }

    /// `w_s · s_sparse + w_d · s_dense` with caller-provided dense similarities.
    pub fn retrieve_hybrid_nn(&self, dense_scores: &[f64], config: &RetrievalConfig) -> Result<RetrievalResult> {
        config.validate()?;
        if dense_scores.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: dense_scores.len(),
            });
        }
        let start = Instant::now();
        let sparse = self.sparse_scores().unwrap_or_else(|| vec![0.0; self.len()]);
        let combined = sparse
            .iter()
            .zip(dense_scores)
            .map(|(s, d)| config.hybrid_sparse_weight * s + config.hybrid_dense_weight * d)
            .collect();
        let score_ms = elapsed_ms(start);
        self.nn_result(Method::HybridNn, Some(combined), score_ms, config)
    }

    fn nn_result(
        &self,
        method: Method,
        scores: Option<Vec<f64>>,
        score_ms: f64,
        config: &RetrievalConfig,
    ) -> Result<RetrievalResult> {
        let start = Instant::now();
        let zero_query = scores.is_none();
        let selected = match scores {
            Some(scores) => top_k(&scores, config.k),
            None => {
                let m = self.len();
                (m.saturating_sub(config.k)..m)
                    .map(|index| Selected { index, score: 0.0 })
                    .collect()
            }
        };
        let select_ms = elapsed_ms(start);
        Ok(RetrievalResult {
            method,
            k: config.k,
            selected,
            query_class: None,
            diagnostics: Diagnostics {
                solver: None,
                zero_query,
                timings: StageTimings {
                    route_ms: 0.0,
                    score_ms,
                    select_ms,
                },
            },
        })
    }

    /// `k` chunks drawn uniformly without replacement, seeded by `config.seed`.
    pub fn retrieve_random(&self, config: &RetrievalConfig) -> Result<RetrievalResult> {
        config.validate()?;
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scores: Vec<f64> = (0..self.len()).map(|_| rng.random::<f64>()).collect();
        let score_ms = elapsed_ms(start);
        let mut result = self.nn_result(Method::Random, Some(scores), score_ms, config)?;
        result.method = Method::Random;
        Ok(result)
    }

    /// Selected chunk texts in document order, one per line.
    pub fn assemble_context(&self, result: &RetrievalResult) -> String {
        result
            .selected
            .iter()
            .map(|s| self.chunks[s.index].text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Convenience wrapper for [`Index::build`].
pub fn build_index(document: &str, config: &RetrievalConfig) -> Result<Index> {
    Index::build(document, config)
}
