use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lstm::{
    backward, batch_inputs, batch_targets, forward_pass, loss_and_output_grad, LstmParams,
    ParamBlock,
};
use super::{evaluate, EvalMetrics, PredictError, PredictorModel, WindowSample, DEFAULT_GAP_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden_size: usize,
    pub gap_max: f64,
    /// Predict coordinates as an offset from the last window frame.
    pub coord_residual: bool,
    /// Stop after this many epochs without validation-loss improvement and
    /// keep the best parameters. Ignored without a validation set.
    #[serde(default)]
    pub patience: Option<usize>,
    /// Decoupled (AdamW-style) decay on the weight matrices; biases and
    /// skip weights are not decayed.
    #[serde(default)]
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 16,
            learning_rate: 3e-4,
            seed: 0,
            hidden_size: 128,
            gap_max: DEFAULT_GAP_MAX,
            coord_residual: false,
            patience: None,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch, measured before each batch update.
    pub loss_curve: Vec<f64>,
    /// Validation loss after each epoch (empty without a validation set).
    pub validation_curve: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_metrics: EvalMetrics,
    pub validation_metrics: Option<EvalMetrics>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
}

impl From<PredictError> for TrainError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::EmptyDataset => TrainError::EmptyDataset,
            other => TrainError::Config(other.to_string()),
        }
    }
}

struct Adam {
    m: LstmParams,
    v: LstmParams,
    step: i32,
    lr: f64,
    decay: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(hidden: usize, lr: f64, decay: f64) -> Self {
        Self {
            m: LstmParams::zeros(hidden),
            v: LstmParams::zeros(hidden),
            step: 0,
            lr,
            decay,
        }
    }

    fn update(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.step += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.step);
        let bc2 = 1.0 - Self::BETA2.powi(self.step);
        for block in ParamBlock::ALL {
            let decay = match block {
                ParamBlock::InputWeights
                | ParamBlock::RecurrentWeights
                | ParamBlock::HeadWeights => 1.0 - self.lr * self.decay,
                _ => 1.0,
            };
            let p = params.block_mut(block);
            let g = grads.block(block);
            let m = self.m.block_mut(block);
            let v = self.v.block_mut(block);
            for (((pi, gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = Self::BETA1 * *mi + (1.0 - Self::BETA1) * gi;
                *vi = Self::BETA2 * *vi + (1.0 - Self::BETA2) * gi * gi;
                *pi = *pi * decay - self.lr * (*mi / bc1) / ((*vi / bc2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Mini-batch Adam on `loss = MSE(coords) + CE(behavior)` summed over
/// champions. Single-threaded and bit-deterministic for a fixed seed.
pub fn train(
    model: &PredictorModel,
    samples: &[WindowSample],
    config: &TrainConfig,
) -> Result<(PredictorModel, TrainReport), TrainError> {
    train_with_validation(model, samples, &[], config)
}

pub fn train_with_validation(
    model: &PredictorModel,
    samples: &[WindowSample],
    validation: &[WindowSample],
    config: &TrainConfig,
) -> Result<(PredictorModel, TrainReport), TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(TrainError::Config(
            "epochs and batch size must be at least 1".into(),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(TrainError::Config("learning rate must be positive".into()));
    }
    if !(config.weight_decay >= 0.0 && config.learning_rate * config.weight_decay < 1.0) {
        return Err(TrainError::Config(
            "weight decay must be in [0, 1/learning_rate)".into(),
        ));
    }

    let mut trained = model.clone();
    trained.config = TrainConfig {
        hidden_size: model.hidden(),
        coord_residual: model.config.coord_residual,
        ..*config
    };
    let residual = trained.config.coord_residual;
    let mut adam = Adam::new(trained.hidden(), config.learning_rate, config.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut validation_curve = Vec::new();
    let mut best: Option<(f64, usize, LstmParams)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&WindowSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let fwd = forward_pass(&trained.params, &batch_inputs(&batch), residual);
            let (loss, d_raw) = loss_and_output_grad(&fwd, &batch_targets(&batch), 1.0);
            if !loss.is_finite() {
                return Err(TrainError::Divergence { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let grads = backward(&trained.params, &fwd, &d_raw);
            adam.update(&mut trained.params, &grads);
        }
        if !trained.params.is_finite() {
            return Err(TrainError::Divergence { epoch });
        }
        loss_curve.push(epoch_loss / samples.len() as f64);

        if !validation.is_empty() {
            let v = trained.loss(validation, 1.0);
            validation_curve.push(v);
            if let Some(patience) = config.patience {
                if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                    best = Some((v, epoch, trained.params.clone()));
                } else if epoch - best.as_ref().map_or(0, |b| b.1) >= patience {
                    break;
                }
            }
        }
    }
    let best_epoch = match best {
        Some((_, epoch, params)) => {
            trained.params = params;
            epoch
        }
        None => loss_curve.len() - 1,
    };

    let train_metrics = evaluate(&trained, samples)?;
    let validation_metrics = if validation.is_empty() {
        None
    } else {
        Some(evaluate(&trained, validation)?)
    };
    Ok((
        trained,
        TrainReport {
            loss_curve,
            validation_curve,
            best_epoch,
            train_metrics,
            validation_metrics,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::small_match;
    use crate::predictor::build_windows;
    use crate::telemetry::NormalizationStats;

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 40,
            hidden_size: 16,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    fn windows(n: usize) -> Vec<WindowSample> {
        build_windows(&small_match(n), &NormalizationStats::new(0.0, 5000.0), 2.0)
    }

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (1000, 16, 3e-4));
    }

    #[test]
    fn empty_dataset_rejected() {
        let model = PredictorModel::new(small_config());
        assert_eq!(
            train(&model, &[], &small_config()).unwrap_err(),
            TrainError::EmptyDataset
        );
        let bad = TrainConfig {
            epochs: 0,
            ..small_config()
        };
        assert!(matches!(
            train(&model, &windows(8), &bad),
            Err(TrainError::Config(_))
        ));
    }

    #[test]
    fn identical_samples_loss_non_increasing() {
        let one = windows(6).remove(0);
        let data = vec![one; 12];
        let config = small_config();
        let model = PredictorModel::new(config);
        let (_, report) = train(&model, &data, &config).unwrap();
        for pair in report.loss_curve[1..].windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = windows(30);
        let config = TrainConfig {
            epochs: 5,
            ..small_config()
        };
        let model = PredictorModel::new(config);
        let (a, ra) = train(&model, &data, &config).unwrap();
        let (b, rb) = train(&model, &data, &config).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(ra.loss_curve, rb.loss_curve);
    }

    #[test]
    fn divergence_detected() {
        let data = windows(10);
        let config = TrainConfig {
            learning_rate: 1e300,
            epochs: 50,
            ..small_config()
        };
        let model = PredictorModel::new(config);
        let mut poisoned = model.clone();
        poisoned.params.head_b[2] = f64::INFINITY;
        assert!(matches!(
            train(&poisoned, &data, &config),
            Err(TrainError::Divergence { .. })
        ));
    }

    #[test]
    fn early_stopping_restores_best_epoch() {
        let all = windows(60);
        let (train_set, val_set) = all.split_at(40);
        let config = TrainConfig {
            epochs: 300,
            learning_rate: 1e-2,
            patience: Some(3),
            ..small_config()
        };
        let model = PredictorModel::new(config);
        let (trained, report) = train_with_validation(&model, train_set, val_set, &config).unwrap();
        let curve = &report.validation_curve;
        let best = curve.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(curve[report.best_epoch], best);
        assert!(curve.len() <= report.best_epoch + 4);
        assert_eq!(trained.loss(val_set, 1.0), best);
    }

    #[test]
    fn weight_decay_shrinks_weights_only() {
        let data = windows(30);
        let plain = TrainConfig {
            epochs: 5,
            ..small_config()
        };
        let decayed = TrainConfig {
            weight_decay: 5.0,
            ..plain
        };
        let model = PredictorModel::new(plain);
        let (a, _) = train(&model, &data, &plain).unwrap();
        let (b, _) = train(&model, &data, &decayed).unwrap();
        let norm = |m: &PredictorModel| m.params.w_x.iter().map(|v| v * v).sum::<f64>();
        assert!(norm(&b) < norm(&a));
        let bad = TrainConfig {
            weight_decay: -1.0,
            ..plain
        };
        assert!(matches!(
            train(&model, &data, &bad),
            Err(TrainError::Config(_))
        ));
    }
}
