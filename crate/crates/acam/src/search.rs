//! Parallel similarity search over an ACAM array.
//!
//! The analog score of row i against query q is a generalized Hamming
//! similarity: the number of query components falling inside their stored
//! windows,
//!
//! ```text
//! S_analog(s_i, q) = sum_j 1(q[j] in [a_ij, b_ij])
//! ```
//!
//! Digital Hamming similarity (exact symbol equality) and cosine similarity
//! on raw embeddings are provided as the software baselines.

use serde::Serialize;

use crate::array::AcamArray;
use crate::error::{Error, Result};
use crate::window::cell_match;

/// Scores for every row plus the argmax row. Ties at the maximum are broken
/// toward the lowest row index; `tie_policy_applied` records whether that
/// rule was exercised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityResult {
    pub scores: Vec<f64>,
    pub best_row: usize,
    #[serde(skip)]
    pub tie_policy_applied: bool,
}

impl SimilarityResult {
    fn from_scores(scores: Vec<f64>) -> Self {
        let mut best_row = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best_row] {
                best_row = i;
            }
        }
        let tie_policy_applied = scores
            .iter()
            .enumerate()
            .any(|(i, &s)| i != best_row && s == scores[best_row]);
        Self {
            scores,
            best_row,
            tie_policy_applied,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("similarity result serializes")
    }
}

/// Generalized Hamming similarity of the query against every stored row.
pub fn analog_hamming(array: &AcamArray, query: &[f64]) -> Result<SimilarityResult> {
    if query.len() != array.cols() {
        return Err(Error::DimensionMismatch {
            expected: array.cols(),
            got: query.len(),
        });
    }
    let scores = (0..array.rows())
        .map(|i| {
            array
                .row(i)
                .iter()
                .zip(query)
                .filter(|(w, &v)| cell_match(w, v))
                .count() as f64
        })
        .collect();
    Ok(SimilarityResult::from_scores(scores))
}

/// Digital Hamming similarity: the number of positions with equal symbols.
pub fn digital_hamming<T: PartialEq>(stored: &[T], query: &[T]) -> Result<usize> {
    if stored.len() != query.len() {
        return Err(Error::DimensionMismatch {
            expected: stored.len(),
            got: query.len(),
        });
    }
    Ok(stored.iter().zip(query).filter(|(a, b)| a == b).count())
}

/// Cosine similarity of two real vectors, in [-1, 1].
pub fn cosine_similarity(s: &[f64], q: &[f64]) -> Result<f64> {
    if s.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: q.len(),
        });
    }
    let dot: f64 = s.iter().zip(q).map(|(a, b)| a * b).sum();
    let ns: f64 = s.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nq: f64 = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    if ns == 0.0 || nq == 0.0 {
        return Err(Error::DegenerateInput(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok((dot / (ns * nq)).clamp(-1.0, 1.0))
}
