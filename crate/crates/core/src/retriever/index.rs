use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::RetrievalConfig;
use crate::chunker::{chunk_text, Chunk, ChunkerConfig};
use crate::embed::{build_vocabulary, embed_chunks, EmbeddingMatrix, Vocabulary};
use crate::graph::{build_graph, GraphConfig, TransitionMatrix};
use crate::{Error, Result};

/// Wall-clock milliseconds spent in each indexing stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildTimings {
    pub chunk_ms: f64,
    pub embed_ms: f64,
    pub graph_ms: f64,
}

impl BuildTimings {
    pub fn total_ms(&self) -> f64 {
        self.chunk_ms + self.embed_ms + self.graph_ms
    }
}

/// Everything derived from one document. Immutable once built, so any
/// number of retrievals can share it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub chunker: ChunkerConfig,
    pub graph_config: GraphConfig,
    pub chunks: Vec<Chunk>,
    pub vocabulary: Vocabulary,
    pub embeddings: EmbeddingMatrix,
    pub graph: TransitionMatrix,
    #[serde(default)]
    pub timings: BuildTimings,
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

impl Index {
    /// Chunk, embed, and link `document`.
    pub fn build(document: &str, config: &RetrievalConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let chunks = chunk_text(document, &config.chunker);
        let chunk_ms = elapsed_ms(start);
        if chunks.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Self::from_chunks(chunks, config, chunk_ms)
    }

    /// Build from chunks produced elsewhere. Chunk indices must be `0..M`.
    pub fn from_chunks(chunks: Vec<Chunk>, config: &RetrievalConfig, chunk_ms: f64) -> Result<Self> {
        if let Some((i, _)) = chunks.iter().enumerate().find(|(i, c)| c.index != *i) {
            return Err(Error::InvalidParameter(format!(
                "chunk at position {i} has a mismatched index"
            )));
        }
        let start = Instant::now();
        let vocabulary = build_vocabulary(&chunks)?;
        let embeddings = embed_chunks(&chunks, &vocabulary);
        let embed_ms = elapsed_ms(start);

        let start = Instant::now();
        let graph = build_graph(&embeddings, &config.graph)?;
        let graph_ms = elapsed_ms(start);

        Ok(Self {
            chunker: config.chunker,
            graph_config: config.graph,
            chunks,
            vocabulary,
            embeddings,
            graph,
            timings: BuildTimings {
                chunk_ms,
                embed_ms,
                graph_ms,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Write the index as a JSON sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        let index: Self = serde_json::from_reader(file)?;
        if index.embeddings.num_columns() != index.chunks.len() || index.graph.dim() != index.chunks.len() {
            return Err(Error::DimensionMismatch {
                expected: index.chunks.len(),
                actual: index.embeddings.num_columns(),
            });
        }
        Ok(index)
    }
}
