//! TF-IDF chunk embeddings.
//!
//! Weights are raw term counts times the smoothed inverse document
//! frequency `ln((1 + M) / (1 + df)) + 1`, where `M` is the number of chunks
//! the vocabulary was built from. Every vector is then scaled to unit L2
//! norm, so inner products between columns are cosine similarities.

use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sparse::SparseVector;
use crate::{Chunk, Error, Result};

/// Lowercased runs of at least two alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = Cow<'_, str>> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| {
            let mut chars = run.chars();
            chars.next().is_some() && chars.next().is_some()
        })
        .map(|run| {
            if run.chars().any(|c| c.is_uppercase()) {
                Cow::Owned(run.to_lowercase())
            } else {
                Cow::Borrowed(run)
            }
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    terms: Vec<String>,
    document_frequency: Vec<u32>,
    num_chunks: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    num_chunks: usize,
    terms: Vec<String>,
    document_frequency: Vec<u32>,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            num_chunks: v.num_chunks,
            terms: v.terms,
            document_frequency: v.document_frequency,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        if r.terms.len() != r.document_frequency.len() {
            return Err(Error::DimensionMismatch {
                expected: r.terms.len(),
                actual: r.document_frequency.len(),
            });
        }
        let ids = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Self {
            ids,
            terms: r.terms,
            document_frequency: r.document_frequency,
            num_chunks: r.num_chunks,
        })
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_chunks(&self) -> usize {
        self.num_chunks
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, id: u32) -> u32 {
        self.document_frequency[id as usize]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.id(term).map(|id| self.document_frequency(id))
    }

    pub fn idf(&self, id: u32) -> f64 {
        let m = self.num_chunks as f64;
        ((1.0 + m) / (1.0 + self.document_frequency(id) as f64)).ln() + 1.0
    }
}

/// Collect every token of every chunk. Term ids follow lexicographic order,
/// so the vocabulary does not depend on chunk order.
pub fn build_vocabulary(chunks: &[Chunk]) -> Result<Vocabulary> {
    if chunks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: HashMap<String, u32> = HashMap::new();
    let mut seen: Vec<Cow<'_, str>> = Vec::new();
    for chunk in chunks {
        seen.clear();
        seen.extend(tokenize(&chunk.text));
        seen.sort_unstable();
        seen.dedup();
        for term in &seen {
            match df.get_mut(term.as_ref()) {
                Some(count) => *count += 1,
                None => {
                    df.insert(term.to_string(), 1);
                }
            }
        }
    }
    let mut entries: Vec<(String, u32)> = df.into_iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (terms, document_frequency): (Vec<String>, Vec<u32>) = entries.into_iter().unzip();
    let ids = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    Ok(Vocabulary {
        ids,
        terms,
        document_frequency,
        num_chunks: chunks.len(),
    })
}

/// Unit-norm TF-IDF vector of `text`. Out-of-vocabulary terms are ignored,
/// so the result may be the zero vector.
pub fn embed_query(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for term in tokenize(text) {
        if let Some(id) = vocab.id(&term) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let pairs = counts
        .into_iter()
        .map(|(id, tf)| (id, tf as f64 * vocab.idf(id)))
        .collect();
    let mut v = SparseVector::from_pairs(vocab.len(), pairs).expect("ids come from the vocabulary");
    v.normalize();
    v
}

/// Chunk embeddings stored as columns in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CscArrays", into = "CscArrays")]
pub struct EmbeddingMatrix {
    dimension: usize,
    columns: Vec<SparseVector>,
}

/// Column-compressed sidecar layout: column `j` owns
/// `row_idx[col_ptr[j]..col_ptr[j + 1]]` and the matching `values`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CscArrays {
    pub dimension: usize,
    pub columns: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl From<EmbeddingMatrix> for CscArrays {
    fn from(e: EmbeddingMatrix) -> Self {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in &e.columns {
            row_idx.extend_from_slice(col.indices());
            values.extend_from_slice(col.values());
            col_ptr.push(row_idx.len());
        }
        Self {
            dimension: e.dimension,
            columns: e.columns.len(),
            col_ptr,
            row_idx,
            values,
        }
    }
}

impl TryFrom<CscArrays> for EmbeddingMatrix {
    type Error = Error;

    fn try_from(a: CscArrays) -> Result<Self> {
        if a.col_ptr.len() != a.columns + 1
            || a.row_idx.len() != a.values.len()
            || a.col_ptr.last() != Some(&a.row_idx.len())
        {
            return Err(Error::InvalidParameter("malformed embedding arrays".into()));
        }
        let columns = a
            .col_ptr
            .windows(2)
            .map(|w| {
                let pairs = a.row_idx[w[0]..w[1]]
                    .iter()
                    .copied()
                    .zip(a.values[w[0]..w[1]].iter().copied())
                    .collect();
                SparseVector::from_pairs(a.dimension, pairs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dimension: a.dimension,
            columns,
        })
    }
}

impl EmbeddingMatrix {
    pub fn from_columns(dimension: usize, columns: Vec<SparseVector>) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.dimension != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: bad.dimension,
            });
        }
        Ok(Self { dimension, columns })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &SparseVector {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVector] {
        &self.columns
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseVector::nnz).sum()
    }

    /// Indices of chunks without any in-vocabulary term.
    pub fn zero_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// `Eᵀq`: cosine similarity of every column with `query`.
    pub fn transpose_mul(&self, query: &SparseVector) -> Vec<f64> {
        self.columns.iter().map(|c| c.dot(query)).collect()
    }

    /// Inverted index: for every term, the chunks containing it, ascending.
    pub fn postings(&self) -> Vec<Vec<u32>> {
        let mut postings = vec![Vec::new(); self.dimension];
        for (j, col) in self.columns.iter().enumerate() {
            for &t in col.indices() {
                postings[t as usize].push(j as u32);
            }
        }
        postings
    }
}

pub fn embed_chunks(chunks: &[Chunk], vocab: &Vocabulary) -> EmbeddingMatrix {
    let columns = chunks.iter().map(|c| embed_query(&c.text, vocab)).collect();
    EmbeddingMatrix {
        dimension: vocab.len(),
        columns,
    }
}
