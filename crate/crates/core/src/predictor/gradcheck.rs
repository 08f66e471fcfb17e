use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{
    backward, batch_inputs, batch_targets, forward_pass, loss_and_output_grad, LstmGradients,
    ParamBlock,
};
use super::{PredictorModel, WindowSample};

/// Gradients smaller than this in both routes are compared on an absolute
/// scale; central differences at eps=1e-5 carry ~1e-10 absolute noise.
const GRAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Worst relative error per parameter block, keyed by block name.
    pub per_block: BTreeMap<String, f64>,
    pub checked: usize,
}

/// Backprop gradient of the (scaled) batch loss.
pub fn analytic_gradients(
    model: &PredictorModel,
    samples: &[WindowSample],
    scale: f64,
) -> LstmGradients {
    let refs: Vec<&WindowSample> = samples.iter().collect();
    let fwd = forward_pass(
        &model.params,
        &batch_inputs(&refs),
        model.config.coord_residual,
    );
    let (_, d_raw) = loss_and_output_grad(&fwd, &batch_targets(&refs), scale);
    backward(&model.params, &fwd, &d_raw)
}

/// Compares backprop against central finite differences on `per_block`
/// randomly drawn parameters from each parameter block. A coordinate output
/// within `eps` of the [0, 1] clamp makes the difference straddle the kink
/// and reports a spurious error for that parameter.
pub fn gradient_check(
    model: &PredictorModel,
    sample: &WindowSample,
    eps: f64,
    per_block: usize,
    seed: u64,
) -> GradCheckReport {
    let samples = std::slice::from_ref(sample);
    let analytic = analytic_gradients(model, samples, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        per_block: BTreeMap::new(),
        checked: 0,
    };
    for block in ParamBlock::ALL {
        let len = model.params.block(block).len();
        let mut worst: f64 = 0.0;
        for _ in 0..per_block {
            let idx = rng.random_range(0..len);
            let original = probe.params.block(block)[idx];
            probe.params.block_mut(block)[idx] = original + eps;
            let plus = probe.loss(samples, 1.0);
            probe.params.block_mut(block)[idx] = original - eps;
            let minus = probe.loss(samples, 1.0);
            probe.params.block_mut(block)[idx] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.block(block)[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max(rel);
            report.checked += 1;
        }
        report.per_block.insert(block.name().to_string(), worst);
        report.max_relative_error = report.max_relative_error.max(worst);
    }
    report
}
