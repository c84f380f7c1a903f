//! Chunk similarity graph.
//!
//! `S = EᵀE` holds cosine similarities between unit-norm chunk embeddings.
//! Entries below the similarity threshold are dropped, then each surviving
//! column is scaled to sum to one, giving the column-stochastic transition
//! matrix used by the PageRank solver. Columns with no surviving entry are
//! flagged as dangling.
//!
//! Only the entries that survive the threshold are ever computed. Terms are
//! ranked from most to least common, and each vector is split into a prefix
//! of common terms whose L2 norm stays below the threshold and a suffix with
//! the rest. By Cauchy-Schwarz, two unit vectors whose similarity reaches the
//! threshold must overlap on at least one suffix term, so candidates come
//! from an inverted index over suffix terms only. Partial dots accumulated
//! from that index plus a bound on the prefix part discard most candidates
//! before the exact dot product is taken.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.27;

/// Default cap on stored entries of the transition matrix.
pub const DEFAULT_MAX_NNZ: usize = 50_000_000;

const ROW_BLOCK: usize = 1 << 13;

// Slack on the prefix bound so rounding in the norm cannot hide a pair.
const PREFIX_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Minimum cosine similarity kept as an edge.
    pub similarity_threshold: f64,
    pub keep_self_loops: bool,
    /// When set, the threshold is raised until at most this many entries remain.
    pub max_nnz: Option<usize>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            keep_self_loops: true,
            max_nnz: Some(DEFAULT_MAX_NNZ),
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.similarity_threshold) {
            return Err(Error::InvalidParameter(format!(
                "similarity_threshold must be in [0, 1), got {}",
                self.similarity_threshold
            )));
        }
        if self.max_nnz == Some(0) {
            return Err(Error::InvalidParameter("max_nnz must be positive".into()));
        }
        Ok(())
    }
}

/// Column-stochastic transition matrix, stored by rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    matrix: CsrMatrix,
    /// Column sums before normalization.
    column_sums: Vec<f64>,
    dangling: Vec<bool>,
    /// Threshold actually applied; above the configured one when capped.
    threshold: f64,
}

impl TransitionMatrix {
    /// Column-normalize arbitrary non-negative weights given as
    /// `(row, col, weight)` triplets.
    pub fn from_weights(dim: usize, triplets: &[(u32, u32, f64)]) -> Result<Self> {
        if let Some(&(r, c, w)) = triplets.iter().find(|t| !(t.2 >= 0.0 && t.2.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weight at ({r}, {c}) must be finite and non-negative, got {w}"
            )));
        }
        let mut column_sums = vec![0.0; dim];
        let raw = CsrMatrix::from_triplets(dim, dim, triplets)?;
        for r in 0..dim {
            for (c, w) in raw.row(r) {
                column_sums[c as usize] += w;
            }
        }
        let normalized: Vec<(u32, u32, f64)> = triplets
            .iter()
            .filter(|t| t.2 > 0.0)
            .map(|&(r, c, w)| (r, c, w / column_sums[c as usize]))
            .collect();
        let matrix = CsrMatrix::from_triplets(dim, dim, &normalized)?;
        let dangling = column_sums.iter().map(|&s| s <= 0.0).collect();
        Ok(Self {
            matrix,
            column_sums,
            dangling,
            threshold: 0.0,
        })
    }

    /// Convenience constructor from a dense row-major weight matrix.
    pub fn from_dense(weights: &[Vec<f64>]) -> Result<Self> {
        let dim = weights.len();
        let mut triplets = Vec::new();
        for (r, row) in weights.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            for (c, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    triplets.push((r as u32, c as u32, w));
                }
            }
        }
        Self::from_weights(dim, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.dangling.len()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn is_dangling(&self, col: usize) -> bool {
        self.dangling[col]
    }

    pub fn dangling(&self) -> &[bool] {
        &self.dangling
    }

    pub fn column_sums(&self) -> &[f64] {
        &self.column_sums
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        const PAR_MIN_ROWS: usize = 1 << 14;
        if self.dim() < PAR_MIN_ROWS {
            self.matrix.mul_vec_into(x, y);
            return;
        }
        let m = &self.matrix;
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = 0.0;
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                acc += m.values[k] * x[m.col_idx[k] as usize];
            }
            *out = acc;
        });
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.matrix.to_dense()
    }
}

/// Build the thresholded, column-normalized similarity graph over the
/// columns of `embeddings`.
pub fn build_graph(embeddings: &EmbeddingMatrix, config: &GraphConfig) -> Result<TransitionMatrix> {
    config.validate()?;
    let m = embeddings.num_columns();
    if m == 0 {
        return Err(Error::EmptyCorpus);
    }
    let threshold = config.similarity_threshold;
    let split = SplitIndex::new(embeddings, threshold);

    // Rows are processed in blocks small enough for the per-row scratch
    // state to stay cache resident.
    let mut lower: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
    for lo in (0..m).step_by(ROW_BLOCK) {
        let block = Block {
            lo,
            hi: (lo + ROW_BLOCK).min(m),
            starts: split
                .postings
                .iter()
                .map(|p| p.partition_point(|&(x, _)| (x as usize) < lo))
                .collect(),
        };
        let parts: Vec<Vec<(u32, f64)>> = (lo + 1..m)
            .into_par_iter()
            .map_init(
                || Scratch {
                    slots: (block.lo..block.hi)
                        .map(|x| Slot {
                            acc: 0.0,
                            prefix_norm: split.prefix_norm[x] as f32,
                            cut: split.cut[x],
                        })
                        .collect(),
                    candidates: vec![0; ROW_BLOCK + 1],
                },
                |scratch, y| similar_in_block(embeddings, &split, &block, y, scratch, threshold),
            )
            .collect();
        for (col, part) in lower[lo + 1..].iter_mut().zip(parts) {
            col.extend(part);
        }
    }
    if config.keep_self_loops {
        for (y, col) in lower.iter_mut().enumerate() {
            let column = embeddings.column(y);
            let s = column.dot(column);
            if s >= threshold && s > 0.0 {
                col.push((y as u32, s));
            }
        }
    }
    let mut columns = mirror(lower);

    let mut applied = threshold;
    if let Some(cap) = config.max_nnz {
        if let Some(raised) = enforce_cap(&mut columns, cap) {
            log::warn!("similarity threshold raised from {threshold} to {raised} to keep at most {cap} entries");
            applied = raised;
        }
    }

    Ok(assemble_symmetric(columns, applied))
}

/// Prefix/suffix split of every column plus an inverted index over suffixes.
struct SplitIndex {
    /// Frequency rank of each term; 0 is the most common.
    rank: Vec<u32>,
    /// Per term, `(column, weight)` for columns holding the term in their
    /// suffix. Single precision is enough for pruning; kept pairs are rescored.
    postings: Vec<Vec<(u32, f32)>>,
    /// Per column, the rank where its suffix starts.
    cut: Vec<u32>,
    /// Per column, the L2 norm of its prefix.
    prefix_norm: Vec<f64>,
}

impl SplitIndex {
    fn new(embeddings: &EmbeddingMatrix, threshold: f64) -> Self {
        let dim = embeddings.dimension();
        let mut df = vec![0u32; dim];
        for col in embeddings.columns() {
            for &t in col.indices() {
                df[t as usize] += 1;
            }
        }
        let mut order: Vec<u32> = (0..dim as u32).collect();
        order.sort_unstable_by(|&a, &b| df[b as usize].cmp(&df[a as usize]).then(a.cmp(&b)));
        let mut rank = vec![0u32; dim];
        for (r, &t) in order.iter().enumerate() {
            rank[t as usize] = r as u32;
        }

        let budget = threshold * threshold * (1.0 - PREFIX_SLACK);
        let m = embeddings.num_columns();
        let mut postings = vec![Vec::new(); dim];
        let mut cut = Vec::with_capacity(m);
        let mut prefix_norm = Vec::with_capacity(m);
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for (j, col) in embeddings.columns().iter().enumerate() {
            entries.clear();
            entries.extend(col.iter());
            entries.sort_unstable_by_key(|&(t, _)| rank[t as usize]);
            let mut prefix = 0.0;
            let mut split = 0;
            for &(_, w) in &entries {
                if prefix + w * w > budget {
                    break;
                }
                prefix += w * w;
                split += 1;
            }
            for &(t, w) in &entries[split..] {
                postings[t as usize].push((j as u32, w as f32));
            }
            cut.push(entries.get(split).map_or(u32::MAX, |&(t, _)| rank[t as usize]));
            prefix_norm.push(prefix.sqrt());
        }
        Self {
            rank,
            postings,
            cut,
            prefix_norm,
        }
    }
}

// Per-column state packed together so the hot loops touch one cache line.
#[derive(Clone, Copy)]
struct Slot {
    /// Partial dot with the current column; zero between calls.
    acc: f32,
    prefix_norm: f32,
    cut: u32,
}

struct Scratch {
    slots: Vec<Slot>,
    candidates: Vec<u32>,
}

/// A range of rows `lo..hi` and, per term, the first posting at or after `lo`.
struct Block {
    lo: usize,
    hi: usize,
    starts: Vec<usize>,
}

/// Entries `S[x, y] >= threshold` of column `y` with `x` in the block and
/// `x < y`, sorted by `x`.
///
/// `S[x, y]` splits into `x`'s suffix part, accumulated from the postings,
/// and its prefix part, bounded by `|x_prefix| * |y restricted to x's prefix
/// terms|`. Only pairs whose bound reaches the threshold get an exact dot.
fn similar_in_block(
    embeddings: &EmbeddingMatrix,
    split: &SplitIndex,
    block: &Block,
    y: usize,
    scratch: &mut Scratch,
    threshold: f64,
) -> Vec<(u32, f64)> {
    let column = embeddings.column(y);
    let mut out = Vec::new();
    if column.is_zero() {
        return out;
    }
    let end = y.min(block.hi) as u32;
    let Scratch { slots, candidates } = scratch;
    let mut found = 0;
    for (t, wy) in column.iter() {
        let wy = wy as f32;
        let postings = &split.postings[t as usize][block.starts[t as usize]..];
        for &(x, wx) in postings.iter().take_while(|&&(x, _)| x < end) {
            let slot = &mut slots[x as usize - block.lo];
            // weights are positive, so a touched slot is never zero again;
            // the write is unconditional and only kept for first touches
            candidates[found] = x;
            found += usize::from(slot.acc == 0.0);
            slot.acc += wx * wy;
        }
    }
    if found == 0 {
        return out;
    }

    // y's term ranks in order with the norm of each rank prefix, for the
    // prefix bound
    let mut ranked: Vec<(u32, f64)> = column.iter().map(|(t, w)| (split.rank[t as usize], w)).collect();
    ranked.sort_unstable_by_key(|&(r, _)| r);
    let ranks: Vec<u32> = ranked.iter().map(|&(r, _)| r).collect();
    let mut prefix_norms = Vec::with_capacity(ranked.len() + 1);
    let mut sum = 0.0;
    prefix_norms.push(0.0);
    for &(_, w) in &ranked {
        sum += w * w;
        prefix_norms.push(f64::sqrt(sum));
    }

    // absorbs single-precision rounding in the partial dots
    let floor = threshold - 1e-4;
    for &x in &candidates[..found] {
        let xi = x as usize;
        let slot = &mut slots[xi - block.lo];
        let mut bound = f64::from(std::mem::take(&mut slot.acc));
        if slot.prefix_norm > 0.0 {
            let below = ranks.iter().filter(|&&r| r < slot.cut).count();
            bound += f64::from(slot.prefix_norm) * prefix_norms[below];
        }
        if bound < floor {
            continue;
        }
        let s = embeddings.column(xi).dot(column);
        if s >= threshold && s > 0.0 {
            out.push((x, s));
        }
    }
    out.sort_unstable_by_key(|&(x, _)| x);
    out
}

/// Full sorted columns of a symmetric matrix from its lower triangle.
fn mirror(lower: Vec<Vec<(u32, f64)>>) -> Vec<Vec<(u32, f64)>> {
    let mut degree = vec![0usize; lower.len()];
    for (y, col) in lower.iter().enumerate() {
        for &(x, _) in col {
            degree[y] += 1;
            if x as usize != y {
                degree[x as usize] += 1;
            }
        }
    }
    let mut full: Vec<Vec<(u32, f64)>> = degree.into_iter().map(Vec::with_capacity).collect();
    for (y, col) in lower.into_iter().enumerate() {
        // rows above y were already appended when their own columns were visited
        full[y].extend_from_slice(&col);
        for (x, s) in col {
            if x as usize != y {
                full[x as usize].push((y as u32, s));
            }
        }
    }
    full
}

/// Drop the smallest entries until at most `cap` remain. Returns the new
/// effective threshold when anything was removed.
fn enforce_cap(columns: &mut [Vec<(u32, f64)>], cap: usize) -> Option<f64> {
    let total: usize = columns.iter().map(Vec::len).sum();
    if total <= cap {
        return None;
    }
    let mut values: Vec<f64> = columns.iter().flatten().map(|&(_, s)| s).collect();
    let (_, &mut pivot, _) = values.select_nth_unstable_by(cap, |a, b| b.total_cmp(a));
    // everything at or below the (cap + 1)-th largest value goes
    let raised = pivot.next_up();
    for col in columns.iter_mut() {
        col.retain(|&(_, s)| s >= raised);
    }
    Some(raised)
}

/// Column lists of a symmetric `S` double as its row lists, so
/// `A[x, y] = S[x, y] / colsum[y]` can be laid out by rows without a transpose.
fn assemble_symmetric(columns: Vec<Vec<(u32, f64)>>, threshold: f64) -> TransitionMatrix {
    let m = columns.len();
    let column_sums: Vec<f64> = columns.iter().map(|c| c.iter().map(|&(_, s)| s).sum()).collect();
    let nnz = columns.iter().map(Vec::len).sum();
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for row in columns {
        for (y, s) in row {
            col_idx.push(y);
            values.push(s / column_sums[y as usize]);
        }
        row_ptr.push(col_idx.len());
    }
    let dangling = column_sums.iter().map(|&s| s <= 0.0).collect();
    TransitionMatrix {
        matrix: CsrMatrix {
            rows: m,
            cols: m,
            row_ptr,
            col_idx,
            values,
        },
        column_sums,
        dangling,
        threshold,
    }
}
