//! Feature frames, labeled datasets, and synthetic chroma generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::alphabet::{enumerate_classes, AlphabetId};
use crate::distance::pitch_vector;

use super::LearnerError;

/// A time-by-frequency matrix of features. Chroma inputs are 1x12 rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureFrame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LearnerError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LearnerError::Shape(format!(
                "feature frame {rows}x{cols} does not match {} values",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Single-row frame, e.g. a 12-bin chroma vector.
    pub fn from_row(data: Vec<f64>) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Labeled feature frames over one alphabet. Labels are class indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub alphabet: AlphabetId,
    pub frames: Vec<FeatureFrame>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.is_empty() {
            return Err(LearnerError::EmptyDataset);
        }
        if self.frames.len() != self.labels.len() {
            return Err(LearnerError::Shape(format!(
                "{} frames but {} labels",
                self.frames.len(),
                self.labels.len()
            )));
        }
        let (rows, cols) = self.feature_shape();
        for frame in &self.frames {
            if frame.rows() != rows || frame.cols() != cols {
                return Err(LearnerError::Shape(format!(
                    "mixed frame shapes: {}x{} vs {rows}x{cols}",
                    frame.rows(),
                    frame.cols()
                )));
            }
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.alphabet.size()) {
            return Err(LearnerError::AlphabetMismatch(format!(
                "label index {bad} outside alphabet {} of size {}",
                self.alphabet,
                self.alphabet.size()
            )));
        }
        Ok(())
    }

    pub fn feature_shape(&self) -> (usize, usize) {
        self.frames
            .first()
            .map(|f| (f.rows(), f.cols()))
            .unwrap_or((0, 0))
    }
}

/// Synthetic chroma dataset: for every class of the alphabet,
/// `frames_per_class` copies of its binary pitch template plus Gaussian
/// noise. The no-chord class is pure noise around the zero vector.
/// Deterministic for a fixed seed.
pub fn synth_dataset(
    alphabet: AlphabetId,
    frames_per_class: usize,
    noise_std: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).expect("noise std must be finite and non-negative");
    let mut frames = Vec::with_capacity(alphabet.size() * frames_per_class);
    let mut labels = Vec::with_capacity(alphabet.size() * frames_per_class);
    for class in enumerate_classes(alphabet) {
        let template = pitch_vector(&class.label());
        for _ in 0..frames_per_class {
            let chroma: Vec<f64> = template
                .components()
                .iter()
                .map(|&bit| {
                    f64::from(bit)
                        + if noise_std > 0.0 {
                            noise.sample(&mut rng)
                        } else {
                            0.0
                        }
                })
                .collect();
            frames.push(FeatureFrame::from_row(chroma));
            labels.push(class.index());
        }
    }
    Dataset {
        alphabet,
        frames,
        labels,
    }
}
