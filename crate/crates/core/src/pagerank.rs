//! Personalized and plain PageRank by sparse power iteration.
//!
//! The personalized fixed point is `π = (1 − α)Aπ + αp`. Each step computes
//!
//! ```text
//! π' = (1 − α)(Aπ + d(π)·r) + αp
//! ```
//!
//! where `d(π)` is the mass sitting on dangling columns and `r` is where that
//! mass goes: `p` when `α > 0`, the uniform distribution when `α = 0` (plain
//! PageRank has no personalization). Iteration stops once the L1 change drops
//! to `tolerance · M` or the iteration budget runs out; running out is
//! reported, not treated as an error.

use serde::{Deserialize, Serialize};

use crate::graph::TransitionMatrix;
use crate::{Chunk, Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_MAX_ITERATIONS: usize = 18;
/// Per-node tolerance; the L1 stopping bound is this times the node count.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// A final chunk with fewer words than this is treated as a fragment of the
/// query, and the chunk before it shares the personalization mass.
pub const SHORT_QUERY_WORDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Teleport weight toward the personalization vector.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Per-node L1 tolerance.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Restart distribution of the random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizationVector(Vec<f64>);

impl PersonalizationVector {
    /// Accepts any non-negative weights with a positive sum and rescales
    /// them to sum to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "personalization weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidParameter(
                "personalization weights must have a positive sum".into(),
            ));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Self(v)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Put the restart mass on the query, which sits at the end of the document:
/// the last chunk, or the last two when the last one is short.
pub fn make_personalization(chunks: &[Chunk]) -> Result<PersonalizationVector> {
    let m = chunks.len();
    let last = chunks.last().ok_or(Error::EmptyCorpus)?;
    if last.word_count >= SHORT_QUERY_WORDS || m == 1 {
        return Ok(PersonalizationVector::one_hot(m, m - 1));
    }
    let mut v = vec![0.0; m];
    v[m - 2] = 0.5;
    v[m - 1] = 0.5;
    Ok(PersonalizationVector(v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub scores: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// L1 change of the final step.
    pub residual: f64,
}

/// Personalized PageRank.
pub fn solve(a: &TransitionMatrix, p: &PersonalizationVector, config: &SolverConfig) -> Result<ScoreDistribution> {
    config.validate()?;
    let m = a.dim();
    if p.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: p.len(),
        });
    }
    if m == 0 {
        return Ok(ScoreDistribution {
            scores: Vec::new(),
            iterations_used: 0,
            converged: true,
            residual: 0.0,
        });
    }

    let alpha = config.alpha;
    let uniform;
    let restart = if alpha > 0.0 {
        p.as_slice()
    } else {
        uniform = vec![1.0 / m as f64; m];
        &uniform
    };
    let dangling: Vec<usize> = (0..m).filter(|&j| a.is_dangling(j)).collect();
    let tolerance = config.tolerance * m as f64;

    let mut scores = restart.to_vec();
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    let mut iterations_used = 0;
    let mut converged = false;
    while iterations_used < config.max_iterations {
        iterations_used += 1;
        a.mul_vec_into(&scores, &mut next);
        let dangling_mass: f64 = dangling.iter().map(|&j| scores[j]).sum();
        for ((x, &r), &pi) in next.iter_mut().zip(restart).zip(p.as_slice()) {
            *x = (1.0 - alpha) * (*x + dangling_mass * r) + alpha * pi;
        }
        residual = scores.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if residual <= tolerance {
            converged = true;
            break;
        }
    }
    Ok(ScoreDistribution {
        scores,
        iterations_used,
        converged,
        residual,
    })
}

/// Plain PageRank: `α = 0` from the uniform start.
pub fn solve_pure(a: &TransitionMatrix, config: &SolverConfig) -> Result<ScoreDistribution> {
    let m = a.dim();
    let config = SolverConfig { alpha: 0.0, ..*config };
    let p = if m == 0 {
        PersonalizationVector(Vec::new())
    } else {
        PersonalizationVector::uniform(m)
    };
    solve(a, &p, &config)
}
