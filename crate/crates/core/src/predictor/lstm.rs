use ndarray::{s, Array1, Array2, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::train::TrainConfig;
use super::{
    window_from_view, ChampionPrediction, PredictError, StrategyPrediction, StrategyPredictor,
    WindowSample, INPUT_SIZE, OUTPUT_SIZE, TARGET_FEATURES, WINDOW_FRAMES,
};
use crate::telemetry::{
    NormalizationStats, Position, BEHAVIOR_COUNT, CHAMPIONS_PER_FRAME, FRAME_FEATURES,
};

/// Single-layer LSTM over flattened 90-feature steps plus a linear head to
/// 70 outputs. Gate column blocks are ordered input, forget, cell, output.
/// Each behavior logit also reads its own one-hot from the last window frame
/// through a learned per-output weight (`skip`).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `(INPUT_SIZE, 4H)`
    pub w_x: Array2<f64>,
    /// `(H, 4H)`
    pub w_h: Array2<f64>,
    /// `(4H)`
    pub b: Array1<f64>,
    /// `(H, OUTPUT_SIZE)`
    pub head_w: Array2<f64>,
    /// `(OUTPUT_SIZE)`
    pub head_b: Array1<f64>,
    /// `(CHAMPIONS * BEHAVIOR_COUNT)`, slot-major.
    pub skip: Array1<f64>,
}

/// Gradients share the parameter layout.
pub type LstmGradients = LstmParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamBlock {
    InputWeights,
    RecurrentWeights,
    GateBias,
    HeadWeights,
    HeadBias,
    BehaviorSkip,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 6] = [
        ParamBlock::InputWeights,
        ParamBlock::RecurrentWeights,
        ParamBlock::GateBias,
        ParamBlock::HeadWeights,
        ParamBlock::HeadBias,
        ParamBlock::BehaviorSkip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamBlock::InputWeights => "w_x",
            ParamBlock::RecurrentWeights => "w_h",
            ParamBlock::GateBias => "b",
            ParamBlock::HeadWeights => "head_w",
            ParamBlock::HeadBias => "head_b",
            ParamBlock::BehaviorSkip => "skip",
        }
    }
}

impl LstmParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            w_x: Array2::zeros((INPUT_SIZE, 4 * hidden)),
            w_h: Array2::zeros((hidden, 4 * hidden)),
            b: Array1::zeros(4 * hidden),
            head_w: Array2::zeros((hidden, OUTPUT_SIZE)),
            head_b: Array1::zeros(OUTPUT_SIZE),
            skip: Array1::zeros(CHAMPIONS_PER_FRAME * BEHAVIOR_COUNT),
        }
    }

    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget bias 1, and a damped
    /// head on the coordinate outputs.
    pub fn random(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(hidden);
        for v in p
            .w_x
            .iter_mut()
            .chain(p.w_h.iter_mut())
            .chain(p.head_w.iter_mut())
        {
            *v = rng.random_range(-k..k);
        }
        p.b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        for c in 0..CHAMPIONS_PER_FRAME {
            p.head_w
                .column_mut(TARGET_FEATURES * c)
                .mapv_inplace(|v| v * 0.1);
            p.head_w
                .column_mut(TARGET_FEATURES * c + 1)
                .mapv_inplace(|v| v * 0.1);
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.w_h.nrows()
    }

    pub fn block(&self, block: ParamBlock) -> &[f64] {
        let slice = match block {
            ParamBlock::InputWeights => self.w_x.as_slice(),
            ParamBlock::RecurrentWeights => self.w_h.as_slice(),
            ParamBlock::GateBias => self.b.as_slice(),
            ParamBlock::HeadWeights => self.head_w.as_slice(),
            ParamBlock::HeadBias => self.head_b.as_slice(),
            ParamBlock::BehaviorSkip => self.skip.as_slice(),
        };
        slice.expect("parameters are stored in standard layout")
    }

    pub fn block_mut(&mut self, block: ParamBlock) -> &mut [f64] {
        let slice = match block {
            ParamBlock::InputWeights => self.w_x.as_slice_mut(),
            ParamBlock::RecurrentWeights => self.w_h.as_slice_mut(),
            ParamBlock::GateBias => self.b.as_slice_mut(),
            ParamBlock::HeadWeights => self.head_w.as_slice_mut(),
            ParamBlock::HeadBias => self.head_b.as_slice_mut(),
            ParamBlock::BehaviorSkip => self.skip.as_slice_mut(),
        };
        slice.expect("parameters are stored in standard layout")
    }

    pub fn is_finite(&self) -> bool {
        ParamBlock::ALL
            .iter()
            .all(|b| self.block(*b).iter().all(|v| v.is_finite()))
    }

    pub fn len(&self) -> usize {
        ParamBlock::ALL.iter().map(|b| self.block(*b).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    tanh_c: Array2<f64>,
}

pub(crate) struct ForwardPass {
    steps: Vec<StepCache>,
    h: Array2<f64>,
    /// `(B, 20)` clamped coordinates.
    coords: Array2<f64>,
    /// 1 where the coordinate was inside [0, 1] before clamping.
    coord_mask: Array2<f64>,
    /// `(B, 50)` softmax probabilities.
    probs: Array2<f64>,
}

pub(crate) fn batch_inputs(samples: &[&WindowSample]) -> Vec<Array2<f64>> {
    (0..WINDOW_FRAMES)
        .map(|t| {
            let mut x = Array2::zeros((samples.len(), INPUT_SIZE));
            for (row, sample) in samples.iter().enumerate() {
                for c in 0..CHAMPIONS_PER_FRAME {
                    for k in 0..FRAME_FEATURES {
                        x[[row, c * FRAME_FEATURES + k]] = sample.x[t][c][k];
                    }
                }
            }
            x
        })
        .collect()
}

pub(crate) fn batch_targets(samples: &[&WindowSample]) -> Array2<f64> {
    let mut y = Array2::zeros((samples.len(), OUTPUT_SIZE));
    for (row, sample) in samples.iter().enumerate() {
        for c in 0..CHAMPIONS_PER_FRAME {
            for k in 0..TARGET_FEATURES {
                y[[row, c * TARGET_FEATURES + k]] = sample.y[c][k];
            }
        }
    }
    y
}

pub(crate) fn forward_pass(
    params: &LstmParams,
    inputs: &[Array2<f64>],
    coord_residual: bool,
) -> ForwardPass {
    let hidden = params.hidden();
    let batch = inputs[0].nrows();
    let mut h = Array2::<f64>::zeros((batch, hidden));
    let mut c = Array2::<f64>::zeros((batch, hidden));
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let mut z = x.dot(&params.w_x) + h.dot(&params.w_h);
        z += &params.b;
        let i = z.slice(s![.., 0..hidden]).mapv(sigmoid);
        let f = z.slice(s![.., hidden..2 * hidden]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * hidden..3 * hidden]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * hidden..4 * hidden]).mapv(sigmoid);
        let c_new = &f * &c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        steps.push(StepCache {
            x: x.clone(),
            h_prev: std::mem::replace(&mut h, h_new),
            c_prev: std::mem::replace(&mut c, c_new),
            i,
            f,
            g,
            o,
            tanh_c,
        });
    }

    let mut raw = h.dot(&params.head_w);
    raw += &params.head_b;
    let last = inputs.last().expect("at least one step");
    let mut coords = Array2::zeros((batch, 2 * CHAMPIONS_PER_FRAME));
    let mut coord_mask = Array2::zeros((batch, 2 * CHAMPIONS_PER_FRAME));
    let mut probs = Array2::zeros((batch, BEHAVIOR_COUNT * CHAMPIONS_PER_FRAME));
    for b in 0..batch {
        for ch in 0..CHAMPIONS_PER_FRAME {
            let base = ch * TARGET_FEATURES;
            for k in 0..2 {
                let mut v = raw[[b, base + k]];
                if coord_residual {
                    v += last[[b, ch * FRAME_FEATURES + 2 + k]];
                }
                coords[[b, 2 * ch + k]] = v.clamp(0.0, 1.0);
                coord_mask[[b, 2 * ch + k]] = if (0.0..=1.0).contains(&v) { 1.0 } else { 0.0 };
            }
            let mut logits = raw
                .slice(s![b, base + 2..base + TARGET_FEATURES])
                .to_owned();
            for k in 0..BEHAVIOR_COUNT {
                logits[k] +=
                    params.skip[ch * BEHAVIOR_COUNT + k] * last[[b, ch * FRAME_FEATURES + 4 + k]];
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            for k in 0..BEHAVIOR_COUNT {
                probs[[b, ch * BEHAVIOR_COUNT + k]] = exps[k] / sum;
            }
        }
    }
    ForwardPass {
        steps,
        h,
        coords,
        coord_mask,
        probs,
    }
}

/// Mean over the batch of `sum_champions [ mean((xy - y)^2) + CE(behavior) ]`,
/// times `scale`, with its gradient w.r.t. the head outputs.
pub(crate) fn loss_and_output_grad(
    fwd: &ForwardPass,
    targets: &Array2<f64>,
    scale: f64,
) -> (f64, Array2<f64>) {
    let batch = targets.nrows();
    let mut d_raw = Array2::zeros((batch, OUTPUT_SIZE));
    let mut loss = 0.0;
    let norm = scale / batch as f64;
    for b in 0..batch {
        for ch in 0..CHAMPIONS_PER_FRAME {
            let base = ch * TARGET_FEATURES;
            for k in 0..2 {
                let diff = fwd.coords[[b, 2 * ch + k]] - targets[[b, base + k]];
                loss += 0.5 * diff * diff;
                d_raw[[b, base + k]] = norm * diff * fwd.coord_mask[[b, 2 * ch + k]];
            }
            for k in 0..BEHAVIOR_COUNT {
                let p = fwd.probs[[b, ch * BEHAVIOR_COUNT + k]];
                let y = targets[[b, base + 2 + k]];
                if y > 0.0 {
                    loss -= y * p.max(1e-300).ln();
                }
                d_raw[[b, base + 2 + k]] = norm * (p - y);
            }
        }
    }
    (loss * norm, d_raw)
}

pub(crate) fn backward(
    params: &LstmParams,
    fwd: &ForwardPass,
    d_raw: &Array2<f64>,
) -> LstmGradients {
    let hidden = params.hidden();
    let mut grads = LstmParams::zeros(hidden);
    grads.head_w = fwd.h.t().dot(d_raw);
    grads.head_b = d_raw.sum_axis(Axis(0));
    let last = &fwd.steps.last().expect("at least one step").x;
    for ch in 0..CHAMPIONS_PER_FRAME {
        for k in 0..BEHAVIOR_COUNT {
            let logit = d_raw.column(ch * TARGET_FEATURES + 2 + k);
            let onehot = last.column(ch * FRAME_FEATURES + 4 + k);
            grads.skip[ch * BEHAVIOR_COUNT + k] = logit.dot(&onehot);
        }
    }
    let mut dh = d_raw.dot(&params.head_w.t());
    let mut dc = Array2::<f64>::zeros(dh.raw_dim());
    let batch = dh.nrows();
    let mut dz = Array2::<f64>::zeros((batch, 4 * hidden));

    for step in fwd.steps.iter().rev() {
        // dc accumulates the path through h = o * tanh(c).
        dc = dc + &dh * &step.o * &step.tanh_c.mapv(|t| 1.0 - t * t);
        let d_o = &dh * &step.tanh_c;
        let d_i = &dc * &step.g;
        let d_g = &dc * &step.i;
        let d_f = &dc * &step.c_prev;
        dz.slice_mut(s![.., 0..hidden])
            .assign(&(&d_i * &step.i.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![.., hidden..2 * hidden])
            .assign(&(&d_f * &step.f.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![.., 2 * hidden..3 * hidden])
            .assign(&(&d_g * &step.g.mapv(|v| 1.0 - v * v)));
        dz.slice_mut(s![.., 3 * hidden..4 * hidden])
            .assign(&(&d_o * &step.o.mapv(|v| v * (1.0 - v))));
        grads.w_x += &step.x.t().dot(&dz);
        grads.w_h += &step.h_prev.t().dot(&dz);
        grads.b += &dz.sum_axis(Axis(0));
        dh = dz.dot(&params.w_h.t());
        dc = &dc * &step.f;
    }
    grads
}

/// Trained (or constructed) predictor: LSTM parameters, the gold
/// normalization it was fitted with, and its training configuration.
/// Behavior probabilities use a fixed softmax temperature of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub params: LstmParams,
    pub stats: Option<NormalizationStats>,
    pub config: TrainConfig,
}

impl PredictorModel {
    pub fn new(config: TrainConfig) -> Self {
        Self {
            params: LstmParams::random(config.hidden_size, config.seed),
            stats: None,
            config,
        }
    }

    pub fn zeros(config: TrainConfig) -> Self {
        Self {
            params: LstmParams::zeros(config.hidden_size),
            stats: None,
            config,
        }
    }

    pub fn with_stats(mut self, stats: NormalizationStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn hidden(&self) -> usize {
        self.params.hidden()
    }

    /// Forward pass on a `(5, 10, 9)` tensor.
    pub fn forward(&self, x: ArrayView3<'_, f64>) -> Result<StrategyPrediction, PredictError> {
        let window = window_from_view(x)?;
        let sample = WindowSample {
            x: window,
            y: [[0.0; TARGET_FEATURES]; CHAMPIONS_PER_FRAME],
            t_target: 0.0,
            target_frame: 0,
            frame_times: [0.0; WINDOW_FRAMES],
        };
        Ok(self.predict_refs(&[&sample]).remove(0))
    }

    pub(crate) fn predict_refs(&self, samples: &[&WindowSample]) -> Vec<StrategyPrediction> {
        if samples.is_empty() {
            return Vec::new();
        }
        let fwd = forward_pass(
            &self.params,
            &batch_inputs(samples),
            self.config.coord_residual,
        );
        (0..samples.len())
            .map(|b| StrategyPrediction {
                champions: std::array::from_fn(|ch| {
                    let probs: [f64; BEHAVIOR_COUNT] =
                        std::array::from_fn(|k| fwd.probs[[b, ch * BEHAVIOR_COUNT + k]]);
                    ChampionPrediction::new(
                        Position::new(fwd.coords[[b, 2 * ch]], fwd.coords[[b, 2 * ch + 1]]),
                        probs,
                    )
                }),
            })
            .collect()
    }

    /// Batch-mean training loss, times `scale`.
    pub fn loss(&self, samples: &[WindowSample], scale: f64) -> f64 {
        let refs: Vec<&WindowSample> = samples.iter().collect();
        let fwd = forward_pass(
            &self.params,
            &batch_inputs(&refs),
            self.config.coord_residual,
        );
        loss_and_output_grad(&fwd, &batch_targets(&refs), scale).0
    }
}

impl StrategyPredictor for PredictorModel {
    fn stats(&self) -> Option<&NormalizationStats> {
        self.stats.as_ref()
    }

    fn predict(&self, sample: &WindowSample) -> Result<StrategyPrediction, PredictError> {
        Ok(self.predict_refs(&[sample]).remove(0))
    }

    fn predict_batch(
        &self,
        samples: &[WindowSample],
    ) -> Result<Vec<StrategyPrediction>, PredictError> {
        Ok(samples
            .par_chunks(128)
            .map(|chunk| {
                let refs: Vec<&WindowSample> = chunk.iter().collect();
                self.predict_refs(&refs)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::small_match;
    use crate::predictor::build_windows;
    use crate::telemetry::BehaviorClass;

    fn config(hidden: usize) -> TrainConfig {
        TrainConfig {
            hidden_size: hidden,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = PredictorModel::zeros(config(8));
        let x =
            ndarray::Array3::from_shape_fn((5, 10, 9), |(f, c, k)| ((f + c + k) % 7) as f64 / 7.0);
        let pred = model.forward(x.view()).unwrap();
        for ch in &pred.champions {
            assert_eq!(ch.behavior_probs, [0.2; 5]);
            let top: Vec<BehaviorClass> = ch.top(3).iter().map(|r| r.behavior).collect();
            assert_eq!(
                top,
                vec![
                    BehaviorClass::Minion,
                    BehaviorClass::Champion,
                    BehaviorClass::Resource
                ]
            );
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = PredictorModel::new(TrainConfig {
            seed: 3,
            ..config(16)
        });
        let windows = build_windows(&small_match(12), &NormalizationStats::new(0.0, 5000.0), 2.0);
        for pred in model.predict_batch(&windows).unwrap() {
            for ch in &pred.champions {
                let s: f64 = ch.behavior_probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-6);
                assert!(ch.behavior_probs.iter().all(|p| *p >= 0.0));
                assert!(ch.coords.in_unit_square());
            }
        }
    }

    #[test]
    fn batched_and_single_predictions_agree() {
        let model = PredictorModel::new(TrainConfig {
            seed: 9,
            ..config(12)
        });
        let windows = build_windows(&small_match(20), &NormalizationStats::new(0.0, 5000.0), 2.0);
        let batch = model.predict_batch(&windows).unwrap();
        for (w, p) in windows.iter().zip(&batch) {
            let single = model.predict(w).unwrap();
            for (a, b) in single.champions.iter().zip(&p.champions) {
                for (x, y) in a.behavior_probs.iter().zip(&b.behavior_probs) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forget_bias_initialized_to_one() {
        let p = LstmParams::random(4, 1);
        assert_eq!(
            p.b.to_vec(),
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(p.len(), 90 * 16 + 4 * 16 + 16 + 4 * 70 + 70 + 50);
        assert!(p.skip.iter().all(|v| *v == 0.0));
    }
}
