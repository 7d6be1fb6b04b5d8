//! Chord-label algebra and evaluation toolkit.
//!
//! Parses chord labels, reduces them over a hierarchy of three alphabets,
//! measures musically-informed distances between classes, derives
//! similarity-weighted training targets, trains a small reference
//! classifier, scores annotation tracks, and classifies prediction errors
//! by substitution rule and harmonic degree.

pub mod alphabet;
pub mod analyzer;
pub mod distance;
pub mod evaluation;
pub mod learner;
pub mod similarity;
pub mod syntax;

pub use alphabet::{class_of, enumerate_classes, reduce, AlphabetId, ChordClass};
pub use distance::{
    d0, d1, d1_with, d2, distance, distance_matrix, pitch_vector, DistanceKind, DistanceMatrix,
    PitchVector, TonnetzConfig, TonnetzGraph,
};
pub use similarity::{
    build_similarity, loss_gradient, soft_target, weighted_loss, PredictionDistribution,
    SimilarityMatrix, TargetDistribution,
};
pub use syntax::{ChordLabel, ParseError, PitchClass, Quality};
