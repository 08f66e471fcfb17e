//! Next-frame strategy prediction.
//!
//! A window is the previous five frames of all ten champions encoded as
//! 9-feature vectors; the target is each champion's next-frame coordinates
//! and behavior. [`StrategyPredictor`] abstracts over the trained LSTM, the
//! persistence baseline, and the ground-truth oracle used in tests.

mod checkpoint;
mod gradcheck;
mod lstm;
mod train;

use ndarray::ArrayView3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::{
    encode_champion_frame, BehaviorClass, MatchLog, NormalizationStats, Position, BEHAVIOR_COUNT,
    CHAMPIONS_PER_FRAME, FRAME_FEATURES,
};

pub use checkpoint::{
    read_checkpoint, write_checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use gradcheck::{analytic_gradients, gradient_check, GradCheckReport};
pub use lstm::{LstmGradients, LstmParams, ParamBlock, PredictorModel};
pub use train::{train, train_with_validation, TrainConfig, TrainError, TrainReport};

pub const WINDOW_FRAMES: usize = 5;
pub const TARGET_FEATURES: usize = 7;
pub const INPUT_SIZE: usize = CHAMPIONS_PER_FRAME * FRAME_FEATURES;
pub const OUTPUT_SIZE: usize = CHAMPIONS_PER_FRAME * TARGET_FEATURES;
/// Default upper bound on the spacing of consecutive frames inside a window.
pub const DEFAULT_GAP_MAX: f64 = 2.0;

pub type WindowTensor = [[[f64; FRAME_FEATURES]; CHAMPIONS_PER_FRAME]; WINDOW_FRAMES];
pub type TargetTensor = [[f64; TARGET_FEATURES]; CHAMPIONS_PER_FRAME];

/// One training/inference example.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// `(frame, champion, feature)`.
    pub x: WindowTensor,
    /// `(champion, [x, y, one-hot behavior x5])`.
    pub y: TargetTensor,
    pub t_target: f64,
    pub target_frame: usize,
    pub frame_times: [f64; WINDOW_FRAMES],
}

impl WindowSample {
    pub fn observed_behavior(&self, slot: usize) -> BehaviorClass {
        argmax(&self.y[slot][2..])
            .and_then(BehaviorClass::from_index)
            .unwrap_or(BehaviorClass::Inaction)
    }

    pub fn observed_coords(&self, slot: usize) -> Position {
        Position::new(self.y[slot][0], self.y[slot][1])
    }

    pub fn last_coords(&self, slot: usize) -> Position {
        let v = &self.x[WINDOW_FRAMES - 1][slot];
        Position::new(v[2], v[3])
    }
}

/// Index of the largest entry; ties go to the lower index.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Builds one sample per target frame preceded by five frames, skipping any
/// window whose six frames contain a spacing larger than `gap_max` seconds.
pub fn build_windows(
    log: &MatchLog,
    stats: &NormalizationStats,
    gap_max: f64,
) -> Vec<WindowSample> {
    let encoded: Vec<[[f64; FRAME_FEATURES]; CHAMPIONS_PER_FRAME]> = log
        .frames
        .iter()
        .map(|frame| {
            std::array::from_fn(|slot| {
                encode_champion_frame(&frame.champions[slot], stats)
                    .vector
                    .0
            })
        })
        .collect();

    let n = log.frames.len();
    let mut out = Vec::new();
    for target in WINDOW_FRAMES..n {
        let first = target - WINDOW_FRAMES;
        let contiguous = (first..target).all(|i| log.frames[i + 1].t - log.frames[i].t <= gap_max);
        if !contiguous {
            continue;
        }
        let x: WindowTensor = std::array::from_fn(|k| encoded[first + k]);
        let y: TargetTensor = std::array::from_fn(|slot| {
            let v = &encoded[target][slot];
            [v[2], v[3], v[4], v[5], v[6], v[7], v[8]]
        });
        out.push(WindowSample {
            x,
            y,
            t_target: log.frames[target].t,
            target_frame: target,
            frame_times: std::array::from_fn(|k| log.frames[first + k].t),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedBehavior {
    pub behavior: BehaviorClass,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionPrediction {
    pub coords: Position,
    pub behavior_probs: [f64; BEHAVIOR_COUNT],
    /// All five behaviors, most probable first; equal probabilities keep the
    /// lower behavior index first.
    pub top_k: Vec<RankedBehavior>,
}

impl ChampionPrediction {
    pub fn new(coords: Position, behavior_probs: [f64; BEHAVIOR_COUNT]) -> Self {
        let mut order: Vec<usize> = (0..BEHAVIOR_COUNT).collect();
        order.sort_by(|&a, &b| {
            behavior_probs[b]
                .total_cmp(&behavior_probs[a])
                .then(a.cmp(&b))
        });
        let top_k = order
            .into_iter()
            .map(|i| RankedBehavior {
                behavior: BehaviorClass::ALL[i],
                prob: behavior_probs[i],
            })
            .collect();
        Self {
            coords: coords.clamped(),
            behavior_probs,
            top_k,
        }
    }

    pub fn top1(&self) -> &RankedBehavior {
        &self.top_k[0]
    }

    pub fn top(&self, k: usize) -> &[RankedBehavior] {
        &self.top_k[..k.min(self.top_k.len())]
    }

    /// `[x, y, p_minion, ..., p_inaction]`, comparable to a target row.
    pub fn as_target_row(&self) -> [f64; TARGET_FEATURES] {
        let p = &self.behavior_probs;
        [self.coords.x, self.coords.y, p[0], p[1], p[2], p[3], p[4]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyPrediction {
    pub champions: [ChampionPrediction; CHAMPIONS_PER_FRAME],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("input has shape {got:?}, expected {expected:?}")]
    Shape {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("empty dataset")]
    EmptyDataset,
}

pub trait StrategyPredictor: Sync {
    /// Gold normalization the predictor was fitted with; windows must be
    /// encoded with these stats.
    fn stats(&self) -> Option<&NormalizationStats>;

    fn predict(&self, sample: &WindowSample) -> Result<StrategyPrediction, PredictError>;

    fn predict_batch(
        &self,
        samples: &[WindowSample],
    ) -> Result<Vec<StrategyPrediction>, PredictError> {
        samples.iter().map(|s| self.predict(s)).collect()
    }
}

/// Repeats the last window frame: same coordinates, same behavior.
#[derive(Debug, Clone, Default)]
pub struct PersistenceBaseline {
    pub stats: Option<NormalizationStats>,
}

impl StrategyPredictor for PersistenceBaseline {
    fn stats(&self) -> Option<&NormalizationStats> {
        self.stats.as_ref()
    }

    fn predict(&self, sample: &WindowSample) -> Result<StrategyPrediction, PredictError> {
        let last = &sample.x[WINDOW_FRAMES - 1];
        Ok(StrategyPrediction {
            champions: std::array::from_fn(|slot| {
                let v = &last[slot];
                ChampionPrediction::new(Position::new(v[2], v[3]), [v[4], v[5], v[6], v[7], v[8]])
            }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub mae: f64,
    pub accuracy: f64,
    pub samples: usize,
}

/// MSE and MAE over the concatenated 7x10 prediction vs. target, and top-1
/// behavior accuracy over all champion-frames.
pub fn evaluate(
    predictor: &dyn StrategyPredictor,
    samples: &[WindowSample],
) -> Result<EvalMetrics, PredictError> {
    if samples.is_empty() {
        return Err(PredictError::EmptyDataset);
    }
    let predictions = predictor.predict_batch(samples)?;
    let mut se = 0.0;
    let mut ae = 0.0;
    let mut hits = 0usize;
    for (sample, pred) in samples.iter().zip(&predictions) {
        for slot in 0..CHAMPIONS_PER_FRAME {
            let row = pred.champions[slot].as_target_row();
            for (p, y) in row.iter().zip(&sample.y[slot]) {
                se += (p - y).powi(2);
                ae += (p - y).abs();
            }
            if pred.champions[slot].top1().behavior == sample.observed_behavior(slot) {
                hits += 1;
            }
        }
    }
    let n = (samples.len() * OUTPUT_SIZE) as f64;
    Ok(EvalMetrics {
        mse: se / n,
        mae: ae / n,
        accuracy: hits as f64 / (samples.len() * CHAMPIONS_PER_FRAME) as f64,
        samples: samples.len(),
    })
}

/// Contiguous split of `items` into train/validation/test at the given
/// fractions (the test split takes the remainder).
pub fn contiguous_split<T: Clone>(
    items: &[T],
    train: f64,
    validation: f64,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = items.len();
    let n_train = ((n as f64) * train).round() as usize;
    let n_val = (((n as f64) * validation).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    (
        items[..n_train].to_vec(),
        items[n_train..n_train + n_val].to_vec(),
        items[n_train + n_val..].to_vec(),
    )
}

/// Accepts a dynamically shaped `(frame, champion, feature)` tensor.
pub fn window_from_view(x: ArrayView3<'_, f64>) -> Result<WindowTensor, PredictError> {
    let expected = [WINDOW_FRAMES, CHAMPIONS_PER_FRAME, FRAME_FEATURES];
    if x.shape() != expected {
        return Err(PredictError::Shape {
            expected: expected.to_vec(),
            got: x.shape().to_vec(),
        });
    }
    Ok(std::array::from_fn(|f| {
        std::array::from_fn(|c| std::array::from_fn(|k| x[[f, c, k]]))
    }))
}
