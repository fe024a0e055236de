use serde::{Deserialize, Serialize};

use super::ops;
use super::real::Real;
use crate::error::{Error, Result};

/// Shape of one item: `(channels, height, width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape3 {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Batch tensor shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorShape {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub fn new(batch: usize, channels: usize, height: usize, width: usize) -> Result<Self> {
        if [batch, channels, height, width].contains(&0) {
            return Err(Error::shape(format!(
                "tensor dimensions must be at least 1, got {batch}x{channels}x{height}x{width}"
            )));
        }
        Ok(Self {
            batch,
            channels,
            height,
            width,
        })
    }

    pub fn item(&self) -> Shape3 {
        Shape3::new(self.channels, self.height, self.width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv3x3 { in_channels: usize, out_channels: usize },
    DepthwiseSeparable { in_channels: usize, out_channels: usize },
    /// `x + conv3x3(relu(conv3x3(x)))` with a `channels → channels` branch.
    ResidualBlock { channels: usize },
    Maxpool2,
    Relu,
    Flatten,
    Dense { in_features: usize, out_features: usize },
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv3x3 { .. } => "conv3x3",
            LayerSpec::DepthwiseSeparable { .. } => "depthwise_separable",
            LayerSpec::ResidualBlock { .. } => "residual_block",
            LayerSpec::Maxpool2 => "maxpool2",
            LayerSpec::Relu => "relu",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
        }
    }

    /// Learnable tensors as `(name, shape, fan_in)`, in declaration order.
    /// `fan_in` is zero for biases.
    pub fn param_layout(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        match *self {
            LayerSpec::Conv3x3 { in_channels: i, out_channels: o } => vec![
                ("weight", vec![o, i, 3, 3], i * 9),
                ("bias", vec![o], 0),
            ],
            LayerSpec::DepthwiseSeparable { in_channels: i, out_channels: o } => vec![
                ("depthwise", vec![i, 1, 3, 3], 9),
                ("pointwise", vec![o, i, 1, 1], i),
                ("bias", vec![o], 0),
            ],
            LayerSpec::ResidualBlock { channels: c } => vec![
                ("conv1.weight", vec![c, c, 3, 3], c * 9),
                ("conv1.bias", vec![c], 0),
                ("conv2.weight", vec![c, c, 3, 3], c * 9),
                ("conv2.bias", vec![c], 0),
            ],
            LayerSpec::Dense { in_features: i, out_features: o } => {
                vec![("weight", vec![o, i], i), ("bias", vec![o], 0)]
            }
            LayerSpec::Maxpool2 | LayerSpec::Relu | LayerSpec::Flatten => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_layout()
            .iter()
            .map(|(_, s, _)| s.iter().product::<usize>())
            .sum()
    }

    pub fn output_shape(&self, input: Shape3) -> Result<Shape3> {
        let Shape3 { channels: c, height: h, width: w } = input;
        let expect_channels = |want: usize| {
            if c == want {
                Ok(())
            } else {
                Err(Error::shape(format!(
                    "{} expects {want} input channels, got {c}",
                    self.kind_name()
                )))
            }
        };
        match *self {
            LayerSpec::Conv3x3 { in_channels, out_channels }
            | LayerSpec::DepthwiseSeparable { in_channels, out_channels } => {
                expect_channels(in_channels)?;
                if out_channels == 0 {
                    return Err(Error::shape("zero output channels"));
                }
                Ok(Shape3::new(out_channels, h, w))
            }
            LayerSpec::ResidualBlock { channels } => {
                expect_channels(channels)?;
                Ok(input)
            }
            LayerSpec::Maxpool2 => {
                if h < 2 || w < 2 {
                    return Err(Error::shape(format!("maxpool2 needs at least 2x2 input, got {h}x{w}")));
                }
                Ok(Shape3::new(c, h / 2, w / 2))
            }
            LayerSpec::Relu => Ok(input),
            LayerSpec::Flatten => Ok(Shape3::new(c * h * w, 1, 1)),
            LayerSpec::Dense { in_features, out_features } => {
                if h != 1 || w != 1 {
                    return Err(Error::shape(format!(
                        "dense expects a flattened input, got {c}x{h}x{w}"
                    )));
                }
                if c != in_features {
                    return Err(Error::shape(format!(
                        "dense expects {in_features} features, got {c}"
                    )));
                }
                Ok(Shape3::new(out_features, 1, 1))
            }
        }
    }
}

/// Intermediate values a layer keeps for its backward pass.
#[derive(Clone, Debug)]
pub enum LayerTrace<T> {
    Input(Vec<T>),
    Separable { input: Vec<T>, depthwise_out: Vec<T> },
    Residual { input: Vec<T>, branch_pre_relu: Vec<T>, branch_hidden: Vec<T> },
    Pool { input_len: usize, argmax: Vec<usize> },
    None,
}

/// Applies one layer to one item. `params` are the layer's tensors in
/// declaration order.
pub fn layer_forward<T: Real>(
    layer: &LayerSpec,
    shape: Shape3,
    params: &[&[T]],
    input: Vec<T>,
) -> (Vec<T>, LayerTrace<T>) {
    let Shape3 { channels: c, height: h, width: w } = shape;
    match *layer {
        LayerSpec::Conv3x3 { in_channels, out_channels } => {
            let out = ops::conv3x3_forward(&input, in_channels, h, w, params[0], params[1], out_channels);
            (out, LayerTrace::Input(input))
        }
        LayerSpec::DepthwiseSeparable { in_channels, out_channels } => {
            let mid = ops::depthwise3x3_forward(&input, in_channels, h, w, params[0]);
            let out = ops::pointwise_forward(&mid, in_channels, h * w, params[1], params[2], out_channels);
            (out, LayerTrace::Separable { input, depthwise_out: mid })
        }
        LayerSpec::ResidualBlock { channels } => {
            let pre = ops::conv3x3_forward(&input, channels, h, w, params[0], params[1], channels);
            let hidden = ops::relu_forward(&pre);
            let mut out = ops::conv3x3_forward(&hidden, channels, h, w, params[2], params[3], channels);
            for (o, &x) in out.iter_mut().zip(&input) {
                *o += x;
            }
            (
                out,
                LayerTrace::Residual { input, branch_pre_relu: pre, branch_hidden: hidden },
            )
        }
        LayerSpec::Maxpool2 => {
            let (out, argmax) = ops::maxpool2_forward(&input, c, h, w);
            (out, LayerTrace::Pool { input_len: input.len(), argmax })
        }
        LayerSpec::Relu => {
            let out = ops::relu_forward(&input);
            (out, LayerTrace::Input(input))
        }
        LayerSpec::Flatten => (input, LayerTrace::None),
        LayerSpec::Dense { out_features, .. } => {
            let out = ops::dense_forward(&input, params[0], params[1], out_features);
            (out, LayerTrace::Input(input))
        }
    }
}

/// Backward through one layer: accumulates into `grads` (same order as
/// `params`) and returns the input gradient when `need_input_grad`.
pub fn layer_backward<T: Real>(
    layer: &LayerSpec,
    shape: Shape3,
    params: &[&[T]],
    trace: &LayerTrace<T>,
    dout: Vec<T>,
    grads: &mut [&mut [T]],
    need_input_grad: bool,
) -> Option<Vec<T>> {
    let Shape3 { height: h, width: w, .. } = shape;
    match (*layer, trace) {
        (LayerSpec::Conv3x3 { in_channels, out_channels }, LayerTrace::Input(x)) => {
            let (gw, gb) = split2(grads);
            ops::conv3x3_backward(x, in_channels, h, w, params[0], out_channels, &dout, gw, gb, need_input_grad)
        }
        (
            LayerSpec::DepthwiseSeparable { in_channels, out_channels },
            LayerTrace::Separable { input, depthwise_out },
        ) => {
            let [gd, gp, gb] = grads else { unreachable!("separable layer has three tensors") };
            let dmid = ops::pointwise_backward(depthwise_out, in_channels, h * w, params[1], out_channels, &dout, gp, gb);
            let dx = ops::depthwise3x3_backward(input, in_channels, h, w, params[0], &dmid, gd);
            need_input_grad.then_some(dx)
        }
        (
            LayerSpec::ResidualBlock { channels: c },
            LayerTrace::Residual { input, branch_pre_relu, branch_hidden },
        ) => {
            let [gw1, gb1, gw2, gb2] = grads else { unreachable!("residual block has four tensors") };
            let dhidden = ops::conv3x3_backward(branch_hidden, c, h, w, params[2], c, &dout, gw2, gb2, true)
                .expect("input grad requested");
            let dpre = ops::relu_backward(branch_pre_relu, &dhidden);
            let dbranch = ops::conv3x3_backward(input, c, h, w, params[0], c, &dpre, gw1, gb1, need_input_grad);
            dbranch.map(|mut dx| {
                for (d, &g) in dx.iter_mut().zip(&dout) {
                    *d += g;
                }
                dx
            })
        }
        (LayerSpec::Maxpool2, LayerTrace::Pool { input_len, argmax }) => {
            need_input_grad.then(|| ops::maxpool2_backward(*input_len, argmax, &dout))
        }
        (LayerSpec::Relu, LayerTrace::Input(x)) => need_input_grad.then(|| ops::relu_backward(x, &dout)),
        (LayerSpec::Flatten, LayerTrace::None) => need_input_grad.then_some(dout),
        (LayerSpec::Dense { .. }, LayerTrace::Input(x)) => {
            let (gw, gb) = split2(grads);
            ops::dense_backward(x, params[0], &dout, gw, gb, need_input_grad)
        }
        (layer, _) => unreachable!("trace does not match layer {}", layer.kind_name()),
    }
}

fn split2<'a, T>(grads: &'a mut [&mut [T]]) -> (&'a mut [T], &'a mut [T]) {
    match grads {
        [a, b] => (&mut **a, &mut **b),
        _ => unreachable!("layer has two tensors"),
    }
}

/// Weights of a full `k × k` convolution (biases excluded).
pub fn full_conv_weight_count(in_channels: usize, out_channels: usize, k: usize) -> usize {
    in_channels * out_channels * k * k
}

/// Weights of a depthwise `k × k` plus pointwise `1 × 1` factorization
/// (biases excluded).
pub fn depthwise_separable_weight_count(in_channels: usize, out_channels: usize, k: usize) -> usize {
    in_channels * k * k + in_channels * out_channels
}

/// Receptive field of `stacked` stride-1 3×3 convolutions: `2 * stacked + 1`.
pub fn receptive_field(stacked: usize) -> Result<usize> {
    if stacked == 0 {
        return Err(Error::invalid("receptive field needs at least one convolution"));
    }
    Ok(2 * stacked + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receptive_fields() {
        assert_eq!(receptive_field(1).unwrap(), 3);
        assert_eq!(receptive_field(2).unwrap(), 5);
        assert_eq!(receptive_field(3).unwrap(), 7);
        assert!(receptive_field(0).is_err());
    }

    #[test]
    fn separable_counts() {
        assert_eq!(depthwise_separable_weight_count(3, 64, 3), 219);
        assert_eq!(full_conv_weight_count(3, 64, 3), 1728);
        let layer = LayerSpec::DepthwiseSeparable { in_channels: 3, out_channels: 64 };
        assert_eq!(layer.param_count(), 219 + 64);
    }

    #[test]
    fn shape_rules() {
        let s = Shape3::new(1, 5, 5);
        let conv = LayerSpec::Conv3x3 { in_channels: 1, out_channels: 4 };
        assert_eq!(conv.output_shape(s).unwrap(), Shape3::new(4, 5, 5));
        assert!(LayerSpec::Conv3x3 { in_channels: 2, out_channels: 4 }.output_shape(s).is_err());
        assert_eq!(LayerSpec::Maxpool2.output_shape(s).unwrap(), Shape3::new(1, 2, 2));
        assert!(LayerSpec::Maxpool2.output_shape(Shape3::new(1, 1, 4)).is_err());
        assert_eq!(LayerSpec::Flatten.output_shape(s).unwrap(), Shape3::new(25, 1, 1));
        let dense = LayerSpec::Dense { in_features: 25, out_features: 7 };
        assert!(dense.output_shape(s).is_err());
        assert_eq!(dense.output_shape(Shape3::new(25, 1, 1)).unwrap(), Shape3::new(7, 1, 1));
        assert!(TensorShape::new(1, 0, 2, 2).is_err());
    }
}
