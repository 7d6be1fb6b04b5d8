//! Training loop: Adam or plain gradient descent over the weighted loss,
//! with learning-rate reduction on validation plateau, early stopping, and
//! a best-validation snapshot.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::AlphabetId;
use crate::similarity::{weighted_loss, SimilarityMatrix, TargetDistribution};

use super::data::Dataset;
use super::net::{Network, NoiseConfig};
use super::LearnerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    /// Plain gradient descent; with `batch_size = 0` (full batch) this is
    /// the monotonic sanity mode.
    Sgd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before the learning rate
    /// is multiplied by `plateau_factor`.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    /// Epochs without validation-loss improvement before training stops.
    pub early_stop_patience: usize,
    pub input_noise_std: f64,
    pub dropout: f64,
    pub seed: u64,
    /// Mini-batch size; 0 means full batch.
    pub batch_size: usize,
    /// Fraction of frames held out for validation. 0 validates on the
    /// training set itself.
    pub val_fraction: f64,
    pub optimizer: OptimizerKind,
    /// Renormalize soft-target rows to sum to 1 before training.
    pub renorm_targets: bool,
    /// Standardize inputs with statistics of the training split.
    pub normalize_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            max_epochs: 1000,
            plateau_patience: 50,
            plateau_factor: 0.5,
            early_stop_patience: 200,
            input_noise_std: 0.0,
            dropout: 0.0,
            seed: 0,
            batch_size: 32,
            val_fraction: 0.2,
            optimizer: OptimizerKind::Adam,
            renorm_targets: false,
            normalize_inputs: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot of the model with the best validation accuracy.
    pub model: Network,
    /// Model state after the final epoch.
    pub final_model: Network,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Serializable model bundle (weights as flat arrays with shape headers).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub alphabet: AlphabetId,
    pub network: Network,
}

pub fn write_history_csv<W: std::io::Write>(
    history: &[EpochStats],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "epoch,train_loss,val_loss,val_acc")?;
    for row in history {
        writeln!(
            out,
            "{},{},{},{}",
            row.epoch, row.train_loss, row.val_loss, row.val_accuracy
        )?;
    }
    Ok(())
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bias1 = 1.0 - BETA1.powi(self.t as i32);
        let bias2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

/// Train a network on the dataset.
///
/// With a similarity matrix the targets are its rows (soft targets);
/// without one they are one-hot. Returns the best-validation snapshot plus
/// the full epoch history.
pub fn train(
    network: Network,
    dataset: &Dataset,
    similarity: Option<&SimilarityMatrix>,
    config: &TrainConfig,
) -> Result<TrainOutcome, LearnerError> {
    dataset.validate()?;
    let classes = dataset.alphabet.size();
    if network.output_dim() != classes {
        return Err(LearnerError::AlphabetMismatch(format!(
            "model predicts {} classes but alphabet {} has {}",
            network.output_dim(),
            dataset.alphabet,
            classes
        )));
    }
    if let Some(sim) = similarity {
        if sim.alphabet() != dataset.alphabet {
            return Err(LearnerError::AlphabetMismatch(format!(
                "similarity matrix is over {} but dataset labels are over {}",
                sim.alphabet(),
                dataset.alphabet
            )));
        }
    }

    let mut network = network;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Seeded random split; val_fraction = 0 validates on the training set.
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    indices.shuffle(&mut rng);
    let n_val = ((dataset.len() as f64) * config.val_fraction).round() as usize;
    let n_val = n_val.min(dataset.len().saturating_sub(1));
    let (val_idx, train_idx) = indices.split_at(n_val);
    let train_idx: Vec<usize> = train_idx.to_vec();
    let val_idx: Vec<usize> = if val_idx.is_empty() {
        train_idx.clone()
    } else {
        val_idx.to_vec()
    };

    if config.normalize_inputs {
        let frames: Vec<_> = train_idx.iter().map(|&i| dataset.frames[i].clone()).collect();
        network.set_input_norm(Some(super::net::InputNorm::fit(&frames)));
    }

    // Per-class target rows, shared across frames of the same label.
    let targets: Vec<TargetDistribution> = (0..classes)
        .map(|label| {
            let t = match similarity {
                Some(sim) => TargetDistribution::from_weights(sim.row(label).to_vec(), label),
                None => TargetDistribution::one_hot(classes, label),
            };
            if config.renorm_targets {
                t.renormalized()
            } else {
                t
            }
        })
        .collect();

    let noise = NoiseConfig {
        input_noise_std: config.input_noise_std,
        dropout: config.dropout,
    };

    let mut params = network.params();
    let mut adam = Adam::new(params.len());
    let mut lr = config.learning_rate;

    let mut history = Vec::new();
    let mut best_val_loss = f64::INFINITY;
    let mut best_val_acc = f64::NEG_INFINITY;
    let mut best_model = network.clone();
    let mut best_epoch = 0;
    let mut epochs_since_improvement = 0usize;
    let mut plateau_counter = 0usize;
    let mut stopped_early = false;

    let mut order = train_idx.clone();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let batch = if config.batch_size == 0 {
            order.len()
        } else {
            config.batch_size
        };
        for chunk in order.chunks(batch) {
            let mut grad_sum = vec![0.0; params.len()];
            for &i in chunk {
                let (_, grad) = network.loss_and_gradient_noisy(
                    &dataset.frames[i],
                    &targets[dataset.labels[i]],
                    &noise,
                    Some(&mut rng),
                )?;
                for (g, gi) in grad_sum.iter_mut().zip(&grad) {
                    *g += gi;
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grad_sum {
                *g *= scale;
            }
            match config.optimizer {
                OptimizerKind::Adam => adam.step(&mut params, &grad_sum, lr),
                OptimizerKind::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad_sum) {
                        *p -= lr * g;
                    }
                }
            }
            network.set_params(&params);
        }

        let train_loss = mean_loss(&network, dataset, &targets, &train_idx)?;
        let val_loss = mean_loss(&network, dataset, &targets, &val_idx)?;
        let val_accuracy = accuracy(&network, dataset, &val_idx)?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });

        if val_accuracy > best_val_acc {
            best_val_acc = val_accuracy;
            best_model = network.clone();
            best_epoch = epoch;
        }
        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            epochs_since_improvement = 0;
            plateau_counter = 0;
        } else {
            epochs_since_improvement += 1;
            plateau_counter += 1;
        }
        if epochs_since_improvement >= config.early_stop_patience {
            stopped_early = true;
            break;
        }
        if plateau_counter >= config.plateau_patience {
            lr *= config.plateau_factor;
            plateau_counter = 0;
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        final_model: network,
        history,
        best_epoch,
        stopped_early,
    })
}

fn mean_loss(
    network: &Network,
    dataset: &Dataset,
    targets: &[TargetDistribution],
    indices: &[usize],
) -> Result<f64, LearnerError> {
    let mut total = 0.0;
    for &i in indices {
        let pred = network.predict(&dataset.frames[i])?;
        total += weighted_loss(&targets[dataset.labels[i]], &pred)
            .map_err(|e| LearnerError::Shape(e.to_string()))?;
    }
    Ok(total / indices.len() as f64)
}

/// Fraction of frames whose argmax prediction equals the label.
pub fn accuracy(
    network: &Network,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<f64, LearnerError> {
    let mut correct = 0usize;
    for &i in indices {
        if network.predict(&dataset.frames[i])?.argmax() == dataset.labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::data::synth_dataset;
    use crate::learner::net::Activation;

    fn quick_config() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.05,
            max_epochs: 60,
            batch_size: 0,
            val_fraction: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Dataset {
            alphabet: AlphabetId::A0,
            frames: vec![],
            labels: vec![],
        };
        let net = Network::dense_classifier(12, &[], 25, Activation::Identity, 0);
        assert!(matches!(
            train(net, &ds, None, &TrainConfig::default()),
            Err(LearnerError::EmptyDataset)
        ));
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let ds = synth_dataset(AlphabetId::A0, 1, 0.0, 0);
        let net = Network::dense_classifier(12, &[], 73, Activation::Identity, 0);
        assert!(matches!(
            train(net, &ds, None, &TrainConfig::default()),
            Err(LearnerError::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn full_batch_descent_is_monotone_on_noiseless_data() {
        let ds = synth_dataset(AlphabetId::A0, 5, 0.0, 0);
        let net = Network::dense_classifier(12, &[], 25, Activation::Identity, 1);
        let config = TrainConfig {
            optimizer: OptimizerKind::Sgd,
            learning_rate: 0.1,
            max_epochs: 40,
            batch_size: 0,
            val_fraction: 0.0,
            ..TrainConfig::default()
        };
        let outcome = train(net, &ds, None, &config).unwrap();
        for pair in outcome.history.windows(2) {
            assert!(
                pair[1].train_loss <= pair[0].train_loss + 1e-12,
                "loss increased: {} -> {}",
                pair[0].train_loss,
                pair[1].train_loss
            );
        }
    }

    #[test]
    fn early_stopping_fires_exactly_at_patience() {
        // Zero learning rate: the first epoch sets the best loss and nothing
        // ever improves, so training runs 1 + patience epochs.
        let ds = synth_dataset(AlphabetId::A0, 2, 0.0, 0);
        let net = Network::dense_classifier(12, &[], 25, Activation::Identity, 2);
        let config = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 500,
            early_stop_patience: 7,
            plateau_patience: 100,
            batch_size: 0,
            val_fraction: 0.2,
            ..TrainConfig::default()
        };
        let outcome = train(net, &ds, None, &config).unwrap();
        assert!(outcome.stopped_early);
        assert_eq!(outcome.history.len(), 8);
    }

    #[test]
    fn training_separates_noiseless_templates() {
        let ds = synth_dataset(AlphabetId::A0, 10, 0.0, 0);
        let net = Network::dense_classifier(12, &[], 25, Activation::Identity, 3);
        let outcome = train(net, &ds, None, &quick_config()).unwrap();
        let all: Vec<usize> = (0..ds.len()).collect();
        let acc = accuracy(&outcome.model, &ds, &all).unwrap();
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let ds = synth_dataset(AlphabetId::A0, 3, 0.05, 1);
        let config = TrainConfig {
            max_epochs: 5,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let net = || Network::dense_classifier(12, &[8], 25, Activation::Tanh, 4);
        let a = train(net(), &ds, None, &config).unwrap();
        let b = train(net(), &ds, None, &config).unwrap();
        assert_eq!(a.final_model.params(), b.final_model.params());
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.train_loss, y.train_loss);
            assert_eq!(x.val_loss, y.val_loss);
        }
    }

    #[test]
    fn history_csv_has_header_and_rows() {
        let history = vec![EpochStats {
            epoch: 1,
            train_loss: 0.5,
            val_loss: 0.6,
            val_accuracy: 0.9,
        }];
        let mut buf = Vec::new();
        write_history_csv(&history, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "epoch,train_loss,val_loss,val_acc\n1,0.5,0.6,0.9\n");
    }

    #[test]
    fn checkpoint_round_trips_through_json() {
        let net = Network::dense_classifier(12, &[4], 25, Activation::Tanh, 8);
        let checkpoint = ModelCheckpoint {
            alphabet: AlphabetId::A0,
            network: net,
        };
        let json = serde_json::to_string(&checkpoint).unwrap();
        let back: ModelCheckpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.alphabet, AlphabetId::A0);
        assert_eq!(back.network.params(), checkpoint.network.params());
    }
}
