//! Per-item layer kernels on `(channels, height, width)` row-major buffers.
//!
//! Convolutions are 3×3 cross-correlations, stride 1, zero padding 1. Pooling
//! is 2×2 with stride 2 (odd trailing rows/columns are dropped). Backward
//! functions accumulate into the gradient buffers they are given.

use super::real::Real;

/// Copies each `h × w` plane into a zero-bordered `(h + 2) × (w + 2)` plane.
pub fn pad1<T: Real>(input: &[T], channels: usize, h: usize, w: usize) -> Vec<T> {
    let (ph, pw) = (h + 2, w + 2);
    let mut out = vec![T::zero(); channels * ph * pw];
    for c in 0..channels {
        for y in 0..h {
            let src = &input[(c * h + y) * w..(c * h + y + 1) * w];
            let dst = (c * ph + y + 1) * pw + 1;
            out[dst..dst + w].copy_from_slice(src);
        }
    }
    out
}

/// Full 3×3 convolution. `weight` is `[c_out][c_in][3][3]`.
pub fn conv3x3_forward<T: Real>(
    input: &[T],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[T],
    bias: &[T],
    c_out: usize,
) -> Vec<T> {
    let padded = pad1(input, c_in, h, w);
    conv3x3_forward_padded(&padded, c_in, h, w, weight, bias, c_out)
}

fn conv3x3_forward_padded<T: Real>(
    padded: &[T],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[T],
    bias: &[T],
    c_out: usize,
) -> Vec<T> {
    let (ph, pw) = (h + 2, w + 2);
    // Output rows are computed at padded stride so each tap is one long axpy;
    // the two trailing columns of every row are scratch.
    let span = (h - 1) * pw + w;
    let mut wide = vec![T::zero(); span];
    let mut out = Vec::with_capacity(c_out * h * w);
    for oc in 0..c_out {
        wide.fill(bias[oc]);
        for ic in 0..c_in {
            let src = &padded[ic * ph * pw..(ic + 1) * ph * pw];
            let k = &weight[(oc * c_in + ic) * 9..(oc * c_in + ic + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let base = ky * pw + kx;
                    T::axpy(k[ky * 3 + kx], &src[base..base + span], &mut wide);
                }
            }
        }
        for y in 0..h {
            out.extend_from_slice(&wide[y * pw..y * pw + w]);
        }
    }
    out
}

/// Lays `h × w` planes out at row stride `w + 2` with zero scratch columns,
/// trimmed to the span touched by padded-stride kernels.
fn widen<T: Real>(x: &[T], channels: usize, h: usize, w: usize) -> Vec<T> {
    let pw = w + 2;
    let span = (h - 1) * pw + w;
    let mut out = vec![T::zero(); channels * span];
    for c in 0..channels {
        for y in 0..h {
            let d = c * span + y * pw;
            out[d..d + w].copy_from_slice(&x[(c * h + y) * w..(c * h + y + 1) * w]);
        }
    }
    out
}

/// Backward of [`conv3x3_forward`]. Returns the input gradient when `need_input_grad`.
#[allow(clippy::too_many_arguments)]
pub fn conv3x3_backward<T: Real>(
    input: &[T],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[T],
    c_out: usize,
    dout: &[T],
    dweight: &mut [T],
    dbias: &mut [T],
    need_input_grad: bool,
) -> Option<Vec<T>> {
    let (ph, pw) = (h + 2, w + 2);
    let padded = pad1(input, c_in, h, w);
    let mut dpad = if need_input_grad {
        vec![T::zero(); c_in * ph * pw]
    } else {
        Vec::new()
    };
    let span = (h - 1) * pw + w;
    let gw = widen(dout, c_out, h, w);
    for oc in 0..c_out {
        let g = &gw[oc * span..(oc + 1) * span];
        dbias[oc] += T::sum_slice(g);
        for ic in 0..c_in {
            let src = &padded[ic * ph * pw..(ic + 1) * ph * pw];
            let widx = (oc * c_in + ic) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let base = ky * pw + kx;
                    dweight[widx + ky * 3 + kx] += T::dot(g, &src[base..base + span]);
                }
            }
            if need_input_grad {
                let dst = &mut dpad[ic * ph * pw..(ic + 1) * ph * pw];
                let k = &weight[widx..widx + 9];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let base = ky * pw + kx;
                        T::axpy(k[ky * 3 + kx], g, &mut dst[base..base + span]);
                    }
                }
            }
        }
    }
    need_input_grad.then(|| crop1(&dpad, c_in, h, w))
}

fn crop1<T: Real>(padded: &[T], channels: usize, h: usize, w: usize) -> Vec<T> {
    let (ph, pw) = (h + 2, w + 2);
    let mut out = Vec::with_capacity(channels * h * w);
    for c in 0..channels {
        for y in 0..h {
            let s = (c * ph + y + 1) * pw + 1;
            out.extend_from_slice(&padded[s..s + w]);
        }
    }
    out
}

/// Per-channel 3×3 convolution without bias. `weight` is `[c][3][3]`.
pub fn depthwise3x3_forward<T: Real>(input: &[T], c: usize, h: usize, w: usize, weight: &[T]) -> Vec<T> {
    let (ph, pw) = (h + 2, w + 2);
    let padded = pad1(input, c, h, w);
    let span = (h - 1) * pw + w;
    let mut wide = vec![T::zero(); span];
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        let src = &padded[ch * ph * pw..(ch + 1) * ph * pw];
        let k = &weight[ch * 9..(ch + 1) * 9];
        wide.fill(T::zero());
        for ky in 0..3 {
            for kx in 0..3 {
                let base = ky * pw + kx;
                T::axpy(k[ky * 3 + kx], &src[base..base + span], &mut wide);
            }
        }
        for y in 0..h {
            out.extend_from_slice(&wide[y * pw..y * pw + w]);
        }
    }
    out
}

pub fn depthwise3x3_backward<T: Real>(
    input: &[T],
    c: usize,
    h: usize,
    w: usize,
    weight: &[T],
    dout: &[T],
    dweight: &mut [T],
) -> Vec<T> {
    let (ph, pw) = (h + 2, w + 2);
    let padded = pad1(input, c, h, w);
    let mut dpad = vec![T::zero(); c * ph * pw];
    let span = (h - 1) * pw + w;
    let gw = widen(dout, c, h, w);
    for ch in 0..c {
        let g = &gw[ch * span..(ch + 1) * span];
        let src = &padded[ch * ph * pw..(ch + 1) * ph * pw];
        let dst = &mut dpad[ch * ph * pw..(ch + 1) * ph * pw];
        for ky in 0..3 {
            for kx in 0..3 {
                let base = ky * pw + kx;
                dweight[ch * 9 + ky * 3 + kx] += T::dot(g, &src[base..base + span]);
                T::axpy(weight[ch * 9 + ky * 3 + kx], g, &mut dst[base..base + span]);
            }
        }
    }
    crop1(&dpad, c, h, w)
}

/// 1×1 convolution. `weight` is `[c_out][c_in]`; `plane` is `h * w`.
pub fn pointwise_forward<T: Real>(input: &[T], c_in: usize, plane: usize, weight: &[T], bias: &[T], c_out: usize) -> Vec<T> {
    let mut out = vec![T::zero(); c_out * plane];
    for oc in 0..c_out {
        let dst = &mut out[oc * plane..(oc + 1) * plane];
        dst.fill(bias[oc]);
        for ic in 0..c_in {
            T::axpy(weight[oc * c_in + ic], &input[ic * plane..(ic + 1) * plane], dst);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn pointwise_backward<T: Real>(
    input: &[T],
    c_in: usize,
    plane: usize,
    weight: &[T],
    c_out: usize,
    dout: &[T],
    dweight: &mut [T],
    dbias: &mut [T],
) -> Vec<T> {
    let mut din = vec![T::zero(); c_in * plane];
    for oc in 0..c_out {
        let g = &dout[oc * plane..(oc + 1) * plane];
        dbias[oc] += T::sum_slice(g);
        for ic in 0..c_in {
            let x = &input[ic * plane..(ic + 1) * plane];
            dweight[oc * c_in + ic] += T::dot(g, x);
            T::axpy(weight[oc * c_in + ic], g, &mut din[ic * plane..(ic + 1) * plane]);
        }
    }
    din
}

pub fn relu_forward<T: Real>(input: &[T]) -> Vec<T> {
    input.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// Gradient passes where the forward input was strictly positive.
pub fn relu_backward<T: Real>(input: &[T], dout: &[T]) -> Vec<T> {
    input
        .iter()
        .zip(dout)
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect()
}

/// 2×2 max pooling, stride 2. Returns the output and, per output cell, the
/// flat input index that won (first maximum in scan order).
pub fn maxpool2_forward<T: Real>(input: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = (ch * h + 2 * y) * w + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

pub fn maxpool2_backward<T: Real>(input_len: usize, argmax: &[usize], dout: &[T]) -> Vec<T> {
    let mut din = vec![T::zero(); input_len];
    for (&i, &g) in argmax.iter().zip(dout) {
        din[i] += g;
    }
    din
}

/// Fully connected layer. `weight` is `[out][in]`.
pub fn dense_forward<T: Real>(input: &[T], weight: &[T], bias: &[T], out_features: usize) -> Vec<T> {
    let n = input.len();
    (0..out_features)
        .map(|o| bias[o] + T::dot(&weight[o * n..(o + 1) * n], input))
        .collect()
}

pub fn dense_backward<T: Real>(
    input: &[T],
    weight: &[T],
    dout: &[T],
    dweight: &mut [T],
    dbias: &mut [T],
    need_input_grad: bool,
) -> Option<Vec<T>> {
    let n = input.len();
    let mut din = if need_input_grad { vec![T::zero(); n] } else { Vec::new() };
    for (o, &g) in dout.iter().enumerate() {
        dbias[o] += g;
        T::axpy(g, input, &mut dweight[o * n..(o + 1) * n]);
        if need_input_grad {
            T::axpy(g, &weight[o * n..(o + 1) * n], &mut din);
        }
    }
    need_input_grad.then_some(din)
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}
