//! Central finite-difference checks of the analytic gradients.

use serde::{Deserialize, Serialize};

use super::network::{loss_and_gradients, softmax_cross_entropy, LayerStack, ModelSpec};
use super::params::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Lower bound on the relative-error denominator, so coordinates whose
    /// gradient is essentially zero are compared absolutely.
    pub floor: f64,
    /// Coordinates probed per tensor, evenly spaced; 0 probes all of them.
    pub max_per_tensor: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { step: 1e-5, floor: 1e-6, max_per_tensor: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Location of the largest error, e.g. `"2.conv3x3.weight[17]"`.
    pub worst: String,
}

impl GradCheckReport {
    fn record(&mut self, what: impl FnOnce() -> String, analytic: f64, numeric: f64, floor: f64) {
        let e = relative_error(analytic, numeric, floor);
        self.checked += 1;
        if self.worst.is_empty() || e > self.max_rel_error {
            self.max_rel_error = e;
            self.worst = what();
        }
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn probe_indices(len: usize, max: usize) -> Vec<usize> {
    if max == 0 || len <= max {
        (0..len).collect()
    } else {
        (0..max).map(|i| i * len / max).collect()
    }
}

/// Checks parameter and input gradients of a stack under the scalar loss
/// `sum(probe * output)`.
pub fn check_stack_gradients(
    stack: &LayerStack,
    params: &Parameters<f64>,
    input: &[f64],
    probe: &[f64],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if input.len() != stack.input_shape().len() {
        return Err(Error::shape(format!("input has {} values, stack expects {}", input.len(), stack.input_shape().len())));
    }
    if probe.len() != stack.output_shape().len() {
        return Err(Error::shape(format!("probe has {} values, stack emits {}", probe.len(), stack.output_shape().len())));
    }
    let loss = |p: &Parameters<f64>, x: &[f64]| -> f64 {
        stack.forward_output(p, x).iter().zip(probe).map(|(o, r)| o * r).sum()
    };

    let trace = stack.forward_item(params, input);
    let mut grads = params.zeros_like();
    let dinput = stack
        .backward_item(params, &trace, probe.to_vec(), &mut grads, true)
        .expect("input gradient requested");

    let mut report = GradCheckReport::default();
    let mut p = params.clone();
    for (t, tensor) in params.tensors().iter().enumerate() {
        for i in probe_indices(tensor.data.len(), cfg.max_per_tensor) {
            let orig = tensor.data[i];
            p.tensors_mut()[t].data[i] = orig + cfg.step;
            let up = loss(&p, input);
            p.tensors_mut()[t].data[i] = orig - cfg.step;
            let down = loss(&p, input);
            p.tensors_mut()[t].data[i] = orig;
            let numeric = (up - down) / (2.0 * cfg.step);
            report.record(|| format!("{}[{i}]", tensor.name), grads.tensors()[t].data[i], numeric, cfg.floor);
        }
    }
    let mut x = input.to_vec();
    for i in probe_indices(input.len(), cfg.max_per_tensor) {
        let orig = x[i];
        x[i] = orig + cfg.step;
        let up = loss(params, &x);
        x[i] = orig - cfg.step;
        let down = loss(params, &x);
        x[i] = orig;
        report.record(|| format!("input[{i}]"), dinput[i], (up - down) / (2.0 * cfg.step), cfg.floor);
    }
    Ok(report)
}

/// Checks every parameter gradient of a full model under mean softmax
/// cross-entropy over a batch.
pub fn check_model_gradients(
    spec: &ModelSpec,
    params: &Parameters<f64>,
    inputs: &[&[f64]],
    targets: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_gradients(spec, params, inputs, targets)?;
    let loss = |p: &Parameters<f64>| -> Result<f64> {
        let logits: Vec<f64> = inputs.iter().flat_map(|x| spec.stack.forward_output(p, x)).collect();
        Ok(softmax_cross_entropy(&logits, spec.num_classes, targets)?.0)
    };

    let mut report = GradCheckReport::default();
    let mut p = params.clone();
    for (t, tensor) in params.tensors().iter().enumerate() {
        for i in probe_indices(tensor.data.len(), cfg.max_per_tensor) {
            let orig = tensor.data[i];
            p.tensors_mut()[t].data[i] = orig + cfg.step;
            let up = loss(&p)?;
            p.tensors_mut()[t].data[i] = orig - cfg.step;
            let down = loss(&p)?;
            p.tensors_mut()[t].data[i] = orig;
            let numeric = (up - down) / (2.0 * cfg.step);
            report.record(|| format!("{}[{i}]", tensor.name), grads.tensors()[t].data[i], numeric, cfg.floor);
        }
    }
    Ok(report)
}
