//! Similarity-weighted training targets.
//!
//! A distance matrix is turned into similarity ratios `1 / (d + K)`,
//! normalized by the global maximum so the diagonal sits at 1. A class's
//! soft target is its row of the normalized matrix; the weighted loss is
//! cross-entropy of the prediction against that row, which collapses to
//! ordinary categorical cross-entropy for one-hot rows.

use thiserror::Error;

use crate::alphabet::{AlphabetId, ChordClass};
use crate::distance::DistanceMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("smoothing constant K must be positive, got {0}")]
    NonPositiveK(f64),
    #[error("input distance matrix is not symmetric at ({i}, {j})")]
    AsymmetricInput { i: usize, j: usize },
    #[error("class index {index} does not belong to alphabet {alphabet}")]
    IndexOutOfAlphabet { index: usize, alphabet: AlphabetId },
    #[error("length mismatch: target has {target} components, prediction {prediction}")]
    LengthMismatch { target: usize, prediction: usize },
    #[error("probabilities must be non-negative and sum to 1 (sum = {sum})")]
    InvalidDistribution { sum: f64 },
}

/// Normalized similarity matrix over one alphabet: symmetric, entries in
/// (0, 1], unit diagonal.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    alphabet: AlphabetId,
    k: f64,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn alphabet(&self) -> AlphabetId {
        self.alphabet
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.entries[i * n..(i + 1) * n]
    }

    /// Write the matrix as CSV with canonical chord labels as headers.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let classes = crate::alphabet::enumerate_classes(self.alphabet);
        write!(out, "label")?;
        for c in &classes {
            write!(out, ",{}", c.label())?;
        }
        writeln!(out)?;
        for (i, c) in classes.iter().enumerate() {
            write!(out, "{}", c.label())?;
            for j in 0..classes.len() {
                write!(out, ",{}", self.get(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Build the normalized similarity matrix from a distance matrix.
///
/// Entries are `1 / (d_ij + K)` divided by the global maximum, which equals
/// `1 / K` whenever the distance diagonal is zero.
pub fn build_similarity(dist: &DistanceMatrix, k: f64) -> Result<SimilarityMatrix, SimilarityError> {
    if !(k > 0.0) {
        return Err(SimilarityError::NonPositiveK(k));
    }
    let n = dist.size();
    for i in 0..n {
        for j in (i + 1)..n {
            if dist.get(i, j) != dist.get(j, i) {
                return Err(SimilarityError::AsymmetricInput { i, j });
            }
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let value = 1.0 / (dist.get(i, j) + k);
            max = max.max(value);
            entries.push(value);
        }
    }
    for e in &mut entries {
        *e /= max;
    }
    Ok(SimilarityMatrix {
        alphabet: dist.alphabet(),
        k,
        entries,
    })
}

/// A training target over the classes of one alphabet. One-hot targets are
/// the special case where only the source component is non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    weights: Vec<f64>,
    source: usize,
}

impl TargetDistribution {
    pub fn one_hot(size: usize, source: usize) -> Self {
        let mut weights = vec![0.0; size];
        weights[source] = 1.0;
        Self { weights, source }
    }

    pub fn from_weights(weights: Vec<f64>, source: usize) -> Self {
        Self { weights, source }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Scaled copy whose components sum to 1. Optional: by default soft
    /// targets are used exactly as the matrix row.
    pub fn renormalized(&self) -> Self {
        let total = self.sum();
        Self {
            weights: self.weights.iter().map(|w| w / total).collect(),
            source: self.source,
        }
    }
}

/// Soft target for a class: its row of the normalized similarity matrix.
pub fn soft_target(
    class: &ChordClass,
    matrix: &SimilarityMatrix,
) -> Result<TargetDistribution, SimilarityError> {
    if class.alphabet() != matrix.alphabet() || class.index() >= matrix.size() {
        return Err(SimilarityError::IndexOutOfAlphabet {
            index: class.index(),
            alphabet: matrix.alphabet(),
        });
    }
    Ok(TargetDistribution {
        weights: matrix.row(class.index()).to_vec(),
        source: class.index(),
    })
}

/// A probability vector over the classes of one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDistribution {
    probabilities: Vec<f64>,
}

impl PredictionDistribution {
    /// Validate an explicit probability vector (non-negative, sums to 1
    /// within 1e-9).
    pub fn new(probabilities: Vec<f64>) -> Result<Self, SimilarityError> {
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SimilarityError::InvalidDistribution { sum });
        }
        Ok(Self { probabilities })
    }

    pub fn from_logits(logits: &[f64]) -> Self {
        Self {
            probabilities: softmax(logits),
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Floor for probabilities inside the logarithm.
pub const LOG_EPSILON: f64 = 1e-12;

/// Weighted cross-entropy `-sum_j target_j * ln(pred_j)`.
pub fn weighted_loss(
    target: &TargetDistribution,
    pred: &PredictionDistribution,
) -> Result<f64, SimilarityError> {
    if target.len() != pred.len() {
        return Err(SimilarityError::LengthMismatch {
            target: target.len(),
            prediction: pred.len(),
        });
    }
    Ok(target
        .weights()
        .iter()
        .zip(pred.probabilities().iter())
        .map(|(&t, &p)| -t * p.max(LOG_EPSILON).ln())
        .sum())
}

/// Gradient of `weighted_loss(target, softmax(logits))` with respect to the
/// logits: `(sum_j target_j) * softmax(logits) - target`.
pub fn loss_gradient(
    target: &TargetDistribution,
    logits: &[f64],
) -> Result<Vec<f64>, SimilarityError> {
    if target.len() != logits.len() {
        return Err(SimilarityError::LengthMismatch {
            target: target.len(),
            prediction: logits.len(),
        });
    }
    let probs = softmax(logits);
    let total = target.sum();
    Ok(probs
        .iter()
        .zip(target.weights().iter())
        .map(|(&p, &t)| total * p - t)
        .collect())
}
