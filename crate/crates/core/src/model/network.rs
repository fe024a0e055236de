use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{layer_backward, layer_forward, LayerSpec, LayerTrace, Shape3};
use super::ops::softmax;
use super::params::{Gradients, Parameters};
use super::real::Real;
use crate::data::{CANONICAL_SIDE, NUM_CLASSES};
use crate::error::{Error, Result};

/// A validated sequence of layers with a fixed per-item input shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    input: Shape3,
    layers: Vec<LayerSpec>,
    /// `shapes[i]` is the input of layer `i`; the last entry is the output.
    shapes: Vec<Shape3>,
}

impl LayerStack {
    pub fn new(input: Shape3, layers: Vec<LayerSpec>) -> Result<Self> {
        if input.is_empty() {
            return Err(Error::shape("input shape has a zero dimension"));
        }
        let mut shapes = vec![input];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(*shapes.last().expect("nonempty"))
                .map_err(|e| Error::shape(format!("layer {i} ({}): {e}", layer.kind_name())))?;
            shapes.push(next);
        }
        Ok(Self { input, layers, shapes })
    }

    pub fn input_shape(&self) -> Shape3 {
        self.input
    }

    pub fn output_shape(&self) -> Shape3 {
        *self.shapes.last().expect("nonempty")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Forward pass for one item, keeping what backward needs.
    pub fn forward_item<T: Real>(&self, params: &Parameters<T>, input: &[T]) -> Trace<T> {
        assert_eq!(input.len(), self.input.len(), "input length");
        let mut x = input.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let (out, trace) = layer_forward(layer, self.shapes[i], &params.layer_slices(i), x);
            layers.push(trace);
            x = out;
        }
        Trace { layers, output: x }
    }

    /// Output only; drops intermediate activations as it goes.
    pub fn forward_output<T: Real>(&self, params: &Parameters<T>, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.input.len(), "input length");
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer_forward(layer, self.shapes[i], &params.layer_slices(i), x).0;
        }
        x
    }

    /// Reverse pass for one item. Parameter gradients are accumulated into
    /// `grads`; the input gradient is returned when requested.
    pub fn backward_item<T: Real>(
        &self,
        params: &Parameters<T>,
        trace: &Trace<T>,
        dout: Vec<T>,
        grads: &mut Gradients<T>,
        need_input_grad: bool,
    ) -> Option<Vec<T>> {
        let mut g = dout;
        for i in (0..self.layers.len()).rev() {
            let need = need_input_grad || i > 0;
            let slices = params.layer_slices(i);
            let mut gslices: Vec<&mut [T]> =
                grads.layer_mut(i).iter_mut().map(|t| t.data.as_mut_slice()).collect();
            g = layer_backward(&self.layers[i], self.shapes[i], &slices, &trace.layers[i], g, &mut gslices, need)?;
        }
        Some(g)
    }
}

/// Activations saved by [`LayerStack::forward_item`].
#[derive(Clone, Debug)]
pub struct Trace<T> {
    layers: Vec<LayerTrace<T>>,
    pub output: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    MiniVgg,
    MiniResnet,
    MiniXception,
    LinearBaseline,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [
        ModelName::MiniVgg,
        ModelName::MiniResnet,
        ModelName::MiniXception,
        ModelName::LinearBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::MiniVgg => "mini_vgg",
            ModelName::MiniResnet => "mini_resnet",
            ModelName::MiniXception => "mini_xception",
            ModelName::LinearBaseline => "linear_baseline",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown model '{s}' (known: mini_vgg, mini_resnet, mini_xception, linear_baseline)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub num_classes: usize,
    pub stack: LayerStack,
}

impl ModelSpec {
    pub fn new(name: ModelName, stack: LayerStack, num_classes: usize) -> Result<Self> {
        let out = stack.output_shape();
        if out != Shape3::new(num_classes, 1, 1) {
            return Err(Error::shape(format!(
                "model must end in {num_classes} logits, final shape is {}x{}x{}",
                out.channels, out.height, out.width
            )));
        }
        Ok(Self { name, num_classes, stack })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        self.stack.layers()
    }

    pub fn input_shape(&self) -> Shape3 {
        self.stack.input_shape()
    }

    pub fn param_count(&self) -> usize {
        self.stack.param_count()
    }
}

/// Builds one of the named mini architectures for 1×48×48 inputs and 7 classes.
pub fn build_model(name: &str) -> Result<ModelSpec> {
    build_model_for(name.parse()?, Shape3::new(1, CANONICAL_SIDE, CANONICAL_SIDE), NUM_CLASSES)
}

/// Builds a mini architecture for an arbitrary single-channel input size.
///
/// * `mini_vgg`: two blocks of `[conv3x3, relu, conv3x3, relu, maxpool2]`
///   (1→8→8, then 8→8→8), flatten, dense.
/// * `mini_resnet`: conv3x3 stem (1→8) + relu, two 8-channel residual
///   blocks, maxpool2, flatten, dense.
/// * `mini_xception`: conv3x3 stem (1→8) + relu, depthwise-separable 8→16
///   and 16→16 each followed by relu, maxpool2, flatten, dense.
/// * `linear_baseline`: flatten, dense.
pub fn build_model_for(name: ModelName, input: Shape3, num_classes: usize) -> Result<ModelSpec> {
    use LayerSpec::*;
    let c = input.channels;
    let conv = |i, o| Conv3x3 { in_channels: i, out_channels: o };
    let mut layers = match name {
        ModelName::MiniVgg => vec![
            conv(c, 8), Relu, conv(8, 8), Relu, Maxpool2,
            conv(8, 8), Relu, conv(8, 8), Relu, Maxpool2,
        ],
        ModelName::MiniResnet => vec![
            conv(c, 8), Relu,
            ResidualBlock { channels: 8 },
            ResidualBlock { channels: 8 },
            Maxpool2,
        ],
        ModelName::MiniXception => vec![
            conv(c, 8), Relu,
            DepthwiseSeparable { in_channels: 8, out_channels: 16 }, Relu,
            DepthwiseSeparable { in_channels: 16, out_channels: 16 }, Relu,
            Maxpool2,
        ],
        ModelName::LinearBaseline => vec![],
    };
    layers.push(Flatten);
    let features = LayerStack::new(input, layers.clone())?.output_shape().channels;
    layers.push(Dense { in_features: features, out_features: num_classes });
    ModelSpec::new(name, LayerStack::new(input, layers)?, num_classes)
}

/// Mean softmax cross-entropy over a batch of `targets.len()` rows of
/// `num_classes` logits. Returns the loss and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy<T: Real>(logits: &[T], num_classes: usize, targets: &[usize]) -> Result<(T, Vec<T>)> {
    let batch = targets.len();
    if batch == 0 || logits.len() != batch * num_classes {
        return Err(Error::shape(format!(
            "{} logits do not form {batch} rows of {num_classes}",
            logits.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= num_classes) {
        return Err(Error::invalid(format!("target class {t} outside 0..{num_classes}")));
    }
    let inv_b = T::one() / T::from_f64(batch as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &t) in logits.chunks_exact(num_classes).zip(targets) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = row.iter().map(|&z| (z - m).exp()).sum();
        let log_z = m + sum_exp.ln();
        loss += log_z - row[t];
        for (k, &z) in row.iter().enumerate() {
            let p = (z - log_z).exp();
            let onehot = if k == t { T::one() } else { T::zero() };
            grad.push((p - onehot) * inv_b);
        }
    }
    Ok((loss * inv_b, grad))
}

/// Logits for each input item, computed in parallel.
pub fn forward_batch<T: Real>(model: &ModelSpec, params: &Parameters<T>, inputs: &[&[T]]) -> Vec<Vec<T>> {
    inputs
        .par_iter()
        .map(|x| model.stack.forward_output(params, x))
        .collect()
}

pub fn predict_probabilities<T: Real>(model: &ModelSpec, params: &Parameters<T>, input: &[T]) -> Vec<T> {
    softmax(&model.stack.forward_output(params, input))
}

/// Mean cross-entropy and its exact gradient w.r.t. every parameter.
///
/// Items are processed in parallel, each into its own gradient buffer; the
/// buffers are then summed in item order, so the result is bit-identical
/// regardless of thread scheduling.
pub fn loss_and_gradients<T: Real>(
    model: &ModelSpec,
    params: &Parameters<T>,
    inputs: &[&[T]],
    targets: &[usize],
) -> Result<(T, Gradients<T>)> {
    if inputs.len() != targets.len() {
        return Err(Error::shape(format!("{} inputs but {} targets", inputs.len(), targets.len())));
    }
    let expect = model.input_shape().len();
    if let Some(x) = inputs.iter().find(|x| x.len() != expect) {
        return Err(Error::shape(format!("input has {} values, model expects {expect}", x.len())));
    }
    let traces: Vec<Trace<T>> = inputs.par_iter().map(|x| model.stack.forward_item(params, x)).collect();
    let logits: Vec<T> = traces.iter().flat_map(|t| t.output.iter().copied()).collect();
    let (loss, dlogits) = softmax_cross_entropy(&logits, model.num_classes, targets)?;

    let k = model.num_classes;
    let per_item: Vec<Gradients<T>> = traces
        .par_iter()
        .enumerate()
        .map(|(i, trace)| {
            let mut g = params.zeros_like();
            model
                .stack
                .backward_item(params, trace, dlogits[i * k..(i + 1) * k].to_vec(), &mut g, false);
            g
        })
        .collect();
    let mut total = params.zeros_like();
    for g in &per_item {
        total.add_assign(g);
    }
    Ok((loss, total))
}
