use serde::{Deserialize, Serialize};

use super::metrics::{confusion, multiclass_accuracy, ConfusionMatrix};
use crate::data::{Dataset, EmotionLabel};
use crate::error::{Error, Result};
use crate::model::{
    adam_step, forward_batch, init_weights, loss_and_gradients, softmax_cross_entropy, AdamConfig,
    AdamState, ModelName, ModelSpec, Parameters,
};
use crate::rng::{mix64, SeededStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
    pub model_name: ModelName,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 20,
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            seed: 0,
            model_name: ModelName::MiniVgg,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }
}

/// Metrics recorded after each epoch. `epoch` counts from 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub final_params: Parameters<f32>,
    /// Parameters after the epoch chosen by [`select_best`].
    pub best_params: Parameters<f32>,
    /// 0-based position in `history`.
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
    pub optimizer_steps: u64,
}

/// Full-pass evaluation of one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<EmotionLabel>,
    pub confusion: ConfusionMatrix,
}

/// Index of the highest validation accuracy; ties go to the earliest epoch.
pub fn select_best(history: &[EpochMetrics]) -> Result<usize> {
    if history.is_empty() {
        return Err(Error::invalid("cannot select from an empty history"));
    }
    let mut best = 0;
    for (i, m) in history.iter().enumerate().skip(1) {
        if m.val_acc > history[best].val_acc {
            best = i;
        }
    }
    Ok(best)
}

fn check_compatible(spec: &ModelSpec, ds: &Dataset, what: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::invalid(format!("{what} set is empty")));
    }
    let input = spec.input_shape();
    let (w, h) = ds.image_shape().expect("nonempty");
    if input.channels != 1 || input.width != w || input.height != h {
        return Err(Error::shape(format!(
            "{what} images are 1x{h}x{w}, {} expects {}x{}x{}",
            spec.name, input.channels, input.height, input.width
        )));
    }
    if let Some(s) = ds.items().iter().find(|s| s.label.code() >= spec.num_classes) {
        return Err(Error::invalid(format!(
            "label {} outside the model's {} classes",
            s.label, spec.num_classes
        )));
    }
    Ok(())
}

/// Mean cross-entropy (accumulated in f64), accuracy and confusion matrix.
pub fn evaluate(spec: &ModelSpec, params: &Parameters<f32>, ds: &Dataset) -> Result<Evaluation> {
    check_compatible(spec, ds, "evaluation")?;
    let inputs: Vec<&[f32]> = ds.items().iter().map(|s| s.image.pixels()).collect();
    let logits = forward_batch(spec, params, &inputs);
    let truth = ds.labels();
    let mut loss_sum = 0.0f64;
    let mut predictions = Vec::with_capacity(logits.len());
    for (row, label) in logits.iter().zip(&truth) {
        let row64: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        loss_sum += softmax_cross_entropy(&row64, spec.num_classes, &[label.code()])?.0;
        predictions.push(EmotionLabel::from_code(argmax(row))?);
    }
    Ok(Evaluation {
        loss: loss_sum / truth.len() as f64,
        accuracy: multiclass_accuracy(&predictions, &truth)?,
        confusion: confusion(&predictions, &truth)?,
        predictions,
    })
}

/// First index of the maximum.
fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch Adam training with per-epoch full-pass metrics.
///
/// Weights are initialised from `config.seed`; epoch orderings come from a
/// separate stream derived from the same seed. The final short batch is
/// trained, not dropped.
pub fn train(spec: &ModelSpec, train_set: &Dataset, val_set: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_compatible(spec, train_set, "training")?;
    check_compatible(spec, val_set, "validation")?;

    let mut params: Parameters<f32> = init_weights(spec, config.seed);
    let mut adam = AdamState::new(&params, config.adam());
    let mut order_stream = SeededStream::new(mix64(config.seed ^ 0x5348_5546_464C_4521));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let items = train_set.items();

    let mut history: Vec<EpochMetrics> = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, Parameters<f32>)> = None;
    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order_stream.shuffle(&mut order);
        }
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<&[f32]> = batch.iter().map(|&i| items[i].image.pixels()).collect();
            let targets: Vec<usize> = batch.iter().map(|&i| items[i].label.code()).collect();
            let (_, grads) = loss_and_gradients(spec, &params, &inputs, &targets)?;
            adam_step(&mut params, &grads, &mut adam);
        }

        let tr = evaluate(spec, &params, train_set)?;
        let va = evaluate(spec, &params, val_set)?;
        let metrics = EpochMetrics {
            epoch: epoch + 1,
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            val_loss: va.loss,
            val_acc: va.accuracy,
        };
        if best.as_ref().is_none_or(|(b, _)| metrics.val_acc > history[*b].val_acc) {
            best = Some((epoch, params.clone()));
        }
        history.push(metrics);
    }

    let best_epoch = select_best(&history)?;
    let (tracked, best_params) = best.expect("at least one epoch");
    debug_assert_eq!(tracked, best_epoch);
    Ok(TrainOutcome {
        final_params: params,
        best_params,
        best_epoch,
        history,
        optimizer_steps: adam.step,
    })
}
