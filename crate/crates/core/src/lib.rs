//! Mixture-of-PageRanks retrieval for long documents.
//!
//! The pipeline chunks raw text, embeds chunks as L2-normalized TF-IDF
//! vectors, links chunks whose cosine similarity clears a threshold, and
//! ranks them with personalized PageRank (query-dependent tasks) or plain
//! PageRank (document-wide tasks). Retrieved chunks are always returned in
//! their original document order.
//!
//! ```
//! use mixpr::{Index, RetrievalConfig, RouterMode};
//!
//! let doc = "Alice keeps the red key. Bob keeps a blue box. Where is the red key?";
//! let mut config = RetrievalConfig::default();
//! config.k = 2;
//! config.router.mode = RouterMode::ForcedLocal;
//! let index = Index::build(doc, &config).unwrap();
//! let result = index.retrieve(&config).unwrap();
//! assert_eq!(result.indices(), vec![0, 2]);
//! ```

pub mod bench;
pub mod chunker;
pub mod embed;
mod error;
pub mod graph;
pub mod pagerank;
pub mod retriever;
pub mod router;
pub mod sparse;

pub use chunker::{chunk_text, Chunk, ChunkerConfig};
pub use embed::{build_vocabulary, embed_chunks, embed_query, tokenize, EmbeddingMatrix, Vocabulary};
pub use error::{Error, Result};
pub use graph::{build_graph, GraphConfig, TransitionMatrix};
pub use pagerank::{make_personalization, solve, solve_pure, PersonalizationVector, ScoreDistribution, SolverConfig};
pub use retriever::{Index, Method, RetrievalConfig, RetrievalResult};
pub use router::{classify, extract_probe, QueryClass, RouteSource, RouterConfig, RouterMode, TaskScope};
pub use sparse::SparseVector;
