//! Effective retrieval configuration: defaults, then an optional TOML file,
//! then command-line flags.

use std::path::Path;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mixpr::router::EndpointConfig;
use mixpr::{Method, RetrievalConfig, RouterMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouterArg {
    Llm,
    Heuristic,
    ForcedLocal,
    ForcedGlobal,
}

impl From<RouterArg> for RouterMode {
    fn from(r: RouterArg) -> Self {
        match r {
            RouterArg::Llm => RouterMode::Llm,
            RouterArg::Heuristic => RouterMode::Heuristic,
            RouterArg::ForcedLocal => RouterMode::ForcedLocal,
            RouterArg::ForcedGlobal => RouterMode::ForcedGlobal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mixpr,
    SparseNn,
    HybridNn,
    Random,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mixpr => Method::Mixpr,
            MethodArg::SparseNn => Method::SparseNn,
            MethodArg::HybridNn => Method::HybridNn,
            MethodArg::Random => Method::Random,
        }
    }
}

/// Retrieval settings shared by every subcommand. Unset flags keep the
/// config-file value, or the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct RetrievalFlags {
    /// Number of chunks to retrieve [default: 100]
    #[arg(long)]
    pub k: Option<usize>,
    /// Teleport weight for query-dependent tasks [default: 0.6]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Minimum cosine similarity kept as a graph edge [default: 0.27]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Power-iteration limit [default: 18]
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Per-chunk convergence tolerance on the L1 change [default: 1e-6]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Word limit per chunk [default: 32]
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Task router [default: heuristic]
    #[arg(long, value_enum)]
    pub router: Option<RouterArg>,
    /// Retrieval method [default: mixpr]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

pub fn load_file(path: Option<&Path>) -> Result<RetrievalConfig> {
    let Some(path) = path else {
        return Ok(RetrievalConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RetrievalFlags {
    pub fn apply(&self, config: &mut RetrievalConfig) {
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(a) = self.alpha {
            config.alpha_local = a;
        }
        if let Some(t) = self.threshold {
            config.graph.similarity_threshold = t;
        }
        if let Some(n) = self.max_iter {
            config.solver.max_iterations = n;
        }
        if let Some(t) = self.tolerance {
            config.solver.tolerance = t;
        }
        if let Some(n) = self.max_words {
            config.chunker.max_words = n;
        }
        if let Some(r) = self.router {
            config.router.mode = r.into();
        }
        if let Some(m) = self.method {
            config.method = m.into();
        }
    }
}

/// Defaults, then the config file, then flags. An LLM router without a
/// reachable configuration falls back to the heuristic with a warning.
pub fn resolve(file: Option<&Path>, flags: &RetrievalFlags) -> Result<RetrievalConfig> {
    let mut config = load_file(file)?;
    flags.apply(&mut config);
    if config.router.mode == RouterMode::Llm && config.router.endpoint.is_none() {
        config.router.endpoint = EndpointConfig::from_env();
        if config.router.endpoint.is_none() {
            log::warn!(
                "llm router needs {} (or [router.endpoint] in the config file); falling back to the heuristic router",
                mixpr::router::ENV_URL
            );
            config.router.mode = RouterMode::Heuristic;
        }
    }
    config.validate()?;
    log::info!("effective config: {}", serde_json::to_string(&config)?);
    Ok(config)
}
