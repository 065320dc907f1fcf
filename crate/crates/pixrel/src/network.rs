//! Feed-forward inference with full activation recording and exact
//! reverse-mode input gradients.
//!
//! Supported layers: dense, 2-d convolution (zero padding), 2-d max pooling,
//! ReLU, and flatten. Everything is double precision and deterministic;
//! max-pool ties go to the smallest row-major index.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// The shape of a value flowing between layers: a `channels x height x width`
/// volume or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerShape {
    Spatial {
        channels: usize,
        height: usize,
        width: usize,
    },
    Flat {
        len: usize,
    },
}

impl LayerShape {
    pub fn element_count(&self) -> usize {
        match *self {
            LayerShape::Spatial {
                channels,
                height,
                width,
            } => channels * height * width,
            LayerShape::Flat { len } => len,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            LayerShape::Spatial {
                channels,
                height,
                width,
            } => vec![channels, height, width],
            LayerShape::Flat { len } => vec![len],
        }
    }

    fn of_tensor(t: &Tensor) -> Self {
        match *t.shape() {
            [c, h, w] => LayerShape::Spatial {
                channels: c,
                height: h,
                width: w,
            },
            _ => LayerShape::Flat { len: t.len() },
        }
    }
}

impl std::fmt::Display for LayerShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            LayerShape::Spatial {
                channels,
                height,
                width,
            } => write!(f, "{channels}x{height}x{width}"),
            LayerShape::Flat { len } => write!(f, "[{len}]"),
        }
    }
}

/// One layer of a [`NetworkModel`].
///
/// Weight layouts are row-major: dense weights are `out x in`, convolution
/// filters are `out_ch x in_ch x kh x kw`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        out_features: usize,
        in_features: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Conv2D {
        out_channels: usize,
        in_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        filters: Vec<f64>,
        bias: Vec<f64>,
    },
    MaxPool2D {
        window: (usize, usize),
        stride: (usize, usize),
    },
    ReLU,
    Flatten,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2D { .. } => "conv2d",
            LayerSpec::MaxPool2D { .. } => "maxpool",
            LayerSpec::ReLU => "relu",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Checks the layer's internal invariants (weight/bias lengths, positive
    /// strides and windows) without reference to neighbouring layers.
    fn check_internal(&self, index: usize) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::ShapeMismatch {
                layer: index,
                expected: msg,
                found: "inconsistent layer parameters".into(),
            })
        };
        match self {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                bias,
            } => {
                if *out_features == 0 || *in_features == 0 {
                    return fail("positive dense dimensions".into());
                }
                if weights.len() != out_features * in_features {
                    return fail(format!(
                        "dense weights of length {}",
                        out_features * in_features
                    ));
                }
                if bias.len() != *out_features {
                    return fail(format!("dense bias of length {out_features}"));
                }
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                filters,
                bias,
                ..
            } => {
                if *out_channels == 0 || *in_channels == 0 || kernel.0 == 0 || kernel.1 == 0 {
                    return fail("positive conv dimensions".into());
                }
                if stride.0 == 0 || stride.1 == 0 {
                    return fail("conv stride >= 1".into());
                }
                let want = out_channels * in_channels * kernel.0 * kernel.1;
                if filters.len() != want {
                    return fail(format!("conv filters of length {want}"));
                }
                if bias.len() != *out_channels {
                    return fail(format!("conv bias of length {out_channels}"));
                }
            }
            LayerSpec::MaxPool2D { window, stride } => {
                if window.0 == 0 || window.1 == 0 {
                    return fail("pool window >= 1".into());
                }
                if stride.0 == 0 || stride.1 == 0 {
                    return fail("pool stride >= 1".into());
                }
            }
            LayerSpec::ReLU | LayerSpec::Flatten => {}
        }
        Ok(())
    }

    /// Output shape of this layer for a given input shape, or the reason it
    /// does not accept that input.
    fn output_shape(&self, input: LayerShape, index: usize) -> Result<LayerShape> {
        let mismatch = |expected: String| Error::ShapeMismatch {
            layer: index,
            expected,
            found: input.to_string(),
        };
        match self {
            LayerSpec::Dense {
                out_features,
                in_features,
                ..
            } => match input {
                LayerShape::Flat { len } if len == *in_features => Ok(LayerShape::Flat {
                    len: *out_features,
                }),
                _ => Err(mismatch(format!("[{in_features}]"))),
            },
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                ..
            } => match input {
                LayerShape::Spatial {
                    channels,
                    height,
                    width,
                } if channels == *in_channels => {
                    let padded_h = height + 2 * padding.0;
                    let padded_w = width + 2 * padding.1;
                    if padded_h < kernel.0 || padded_w < kernel.1 {
                        return Err(mismatch(format!(
                            "spatial extent >= {}x{} after padding",
                            kernel.0, kernel.1
                        )));
                    }
                    Ok(LayerShape::Spatial {
                        channels: *out_channels,
                        height: (padded_h - kernel.0) / stride.0 + 1,
                        width: (padded_w - kernel.1) / stride.1 + 1,
                    })
                }
                _ => Err(mismatch(format!("{in_channels}xHxW"))),
            },
            LayerSpec::MaxPool2D { window, stride } => match input {
                LayerShape::Spatial {
                    channels,
                    height,
                    width,
                } => {
                    if height < window.0 || width < window.1 {
                        return Err(mismatch(format!(
                            "spatial extent >= {}x{}",
                            window.0, window.1
                        )));
                    }
                    Ok(LayerShape::Spatial {
                        channels,
                        height: (height - window.0) / stride.0 + 1,
                        width: (width - window.1) / stride.1 + 1,
                    })
                }
                _ => Err(mismatch("CxHxW".into())),
            },
            LayerSpec::ReLU => Ok(input),
            LayerSpec::Flatten => match input {
                LayerShape::Spatial { .. } => Ok(LayerShape::Flat {
                    len: input.element_count(),
                }),
                _ => Err(mismatch("CxHxW".into())),
            },
        }
    }

    /// Number of weight/bias parameters stored by this layer.
    pub fn parameter_count(&self) -> usize {
        match self {
            LayerSpec::Dense { weights, bias, .. } => weights.len() + bias.len(),
            LayerSpec::Conv2D { filters, bias, .. } => filters.len() + bias.len(),
            _ => 0,
        }
    }
}

/// A whole-image classifier: an input volume, a layer stack, and one output
/// score per class name. Models end at the linear output; there is no softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub input_shape: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
    pub class_names: Vec<String>,
}

impl NetworkModel {
    pub fn input_layer_shape(&self) -> LayerShape {
        LayerShape::Spatial {
            channels: self.input_shape.0,
            height: self.input_shape.1,
            width: self.input_shape.2,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Total learned parameter count across all layers.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::parameter_count).sum()
    }

    /// Structural + weight fingerprint used to pair traces with models.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_usize(self.input_shape.0);
        h.write_usize(self.input_shape.1);
        h.write_usize(self.input_shape.2);
        h.write_usize(self.class_names.len());
        for name in &self.class_names {
            h.write_bytes(name.as_bytes());
        }
        for layer in &self.layers {
            h.write_bytes(layer.kind_name().as_bytes());
            match layer {
                LayerSpec::Dense { weights, bias, .. } => {
                    h.write_floats(weights);
                    h.write_floats(bias);
                }
                LayerSpec::Conv2D {
                    kernel,
                    stride,
                    padding,
                    filters,
                    bias,
                    ..
                } => {
                    h.write_usize(kernel.0);
                    h.write_usize(kernel.1);
                    h.write_usize(stride.0);
                    h.write_usize(stride.1);
                    h.write_usize(padding.0);
                    h.write_usize(padding.1);
                    h.write_floats(filters);
                    h.write_floats(bias);
                }
                LayerSpec::MaxPool2D { window, stride } => {
                    h.write_usize(window.0);
                    h.write_usize(window.1);
                    h.write_usize(stride.0);
                    h.write_usize(stride.1);
                }
                LayerSpec::ReLU | LayerSpec::Flatten => {}
            }
        }
        h.finish()
    }
}

/// FNV-1a, enough to tell two models apart in trace pairing.
struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
    fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }
    fn write_usize(&mut self, v: usize) {
        self.write_bytes(&(v as u64).to_le_bytes());
    }
    fn write_floats(&mut self, vs: &[f64]) {
        for v in vs {
            self.write_bytes(&v.to_bits().to_le_bytes());
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Checks layer-internal invariants and shape chaining; returns the inferred
/// shape chain (input shape first, then one entry per layer output).
///
/// The final shape must be a flat vector with one entry per class name.
pub fn validate_model(model: &NetworkModel) -> Result<Vec<LayerShape>> {
    if model.class_names.is_empty() {
        return Err(Error::InvalidArgument("model has no class names".into()));
    }
    if model.input_shape.0 == 0 || model.input_shape.1 == 0 || model.input_shape.2 == 0 {
        return Err(Error::InvalidArgument(
            "model input shape has a zero dimension".into(),
        ));
    }
    let mut chain = vec![model.input_layer_shape()];
    for (index, layer) in model.layers.iter().enumerate() {
        layer.check_internal(index)?;
        let out = layer.output_shape(chain[index], index)?;
        chain.push(out);
    }
    let last = *chain.last().expect("chain holds at least the input shape");
    let want = LayerShape::Flat {
        len: model.class_names.len(),
    };
    if last != want {
        return Err(Error::ShapeMismatch {
            layer: model.layers.len(),
            expected: want.to_string(),
            found: last.to_string(),
        });
    }
    Ok(chain)
}

/// Per-layer activations recorded during a forward pass, plus the winning
/// input index of every max-pool window. Replaying the trace's final output
/// reproduces the forward scores bit-exactly.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    model_fingerprint: u64,
    layer_inputs: Vec<Tensor>,
    layer_outputs: Vec<Tensor>,
    /// For max-pool layers: flat input index of each output element's winner.
    pool_winners: Vec<Option<Vec<usize>>>,
    scores: Vec<f64>,
}

impl ActivationTrace {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn layer_input(&self, layer: usize) -> &Tensor {
        &self.layer_inputs[layer]
    }

    pub fn layer_output(&self, layer: usize) -> &Tensor {
        &self.layer_outputs[layer]
    }

    pub fn pool_winners(&self, layer: usize) -> Option<&[usize]> {
        self.pool_winners[layer].as_deref()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_inputs.len()
    }

    pub(crate) fn check_model(&self, model: &NetworkModel) -> Result<()> {
        if self.model_fingerprint != model.fingerprint()
            || self.layer_inputs.len() != model.layers.len()
        {
            return Err(Error::TraceMismatch);
        }
        Ok(())
    }

    pub(crate) fn check_class(&self, model: &NetworkModel, class_index: usize) -> Result<()> {
        self.check_model(model)?;
        if class_index >= model.class_names.len() {
            return Err(Error::ClassIndexOutOfRange {
                index: class_index,
                classes: model.class_names.len(),
            });
        }
        Ok(())
    }
}

/// Runs the model on `input`, returning the per-class scores and the full
/// activation trace. Pure and deterministic.
pub fn forward(model: &NetworkModel, input: &Tensor) -> Result<(Vec<f64>, ActivationTrace)> {
    validate_model(model)?;
    let want = model.input_layer_shape();
    if LayerShape::of_tensor(input) != want {
        return Err(Error::ShapeMismatch {
            layer: 0,
            expected: want.to_string(),
            found: LayerShape::of_tensor(input).to_string(),
        });
    }

    let mut layer_inputs = Vec::with_capacity(model.layers.len());
    let mut layer_outputs = Vec::with_capacity(model.layers.len());
    let mut pool_winners = vec![None; model.layers.len()];

    let mut current = input.clone();
    for (index, layer) in model.layers.iter().enumerate() {
        layer_inputs.push(current.clone());
        current = match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                bias,
            } => dense_forward(&current, *out_features, *in_features, weights, bias),
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                bias,
            } => conv_forward(
                &current,
                *out_channels,
                *in_channels,
                *kernel,
                *stride,
                *padding,
                filters,
                bias,
            ),
            LayerSpec::MaxPool2D { window, stride } => {
                let (out, winners) = maxpool_forward(&current, *window, *stride);
                pool_winners[index] = Some(winners);
                out
            }
            LayerSpec::ReLU => Tensor::from_raw(
                current.shape().to_vec(),
                current.data().iter().map(|&v| v.max(0.0)).collect(),
            ),
            LayerSpec::Flatten => current.reshaped(vec![current.len()])?,
        };
        layer_outputs.push(current.clone());
    }

    let scores = current.data().to_vec();
    let trace = ActivationTrace {
        model_fingerprint: model.fingerprint(),
        layer_inputs,
        layer_outputs,
        pool_winners,
        scores: scores.clone(),
    };
    Ok((scores, trace))
}

fn dense_forward(
    input: &Tensor,
    out_features: usize,
    in_features: usize,
    weights: &[f64],
    bias: &[f64],
) -> Tensor {
    let x = input.data();
    let mut out = vec![0.0; out_features];
    for (o, out_v) in out.iter_mut().enumerate() {
        let row = &weights[o * in_features..(o + 1) * in_features];
        let mut acc = bias[o];
        for (w, xv) in row.iter().zip(x) {
            acc += w * xv;
        }
        *out_v = acc;
    }
    Tensor::from_raw(vec![out_features], out)
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    input: &Tensor,
    out_channels: usize,
    in_channels: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
    filters: &[f64],
    bias: &[f64],
) -> Tensor {
    let (h, w) = (input.shape()[1], input.shape()[2]);
    let out_h = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
    let out_w = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
    let mut out = vec![0.0; out_channels * out_h * out_w];
    let x = input.data();
    for oc in 0..out_channels {
        for oh in 0..out_h {
            let ih0 = (oh * stride.0) as isize - padding.0 as isize;
            for ow in 0..out_w {
                let iw0 = (ow * stride.1) as isize - padding.1 as isize;
                let mut acc = bias[oc];
                for ic in 0..in_channels {
                    for kh in 0..kernel.0 {
                        let ih = ih0 + kh as isize;
                        if ih < 0 || ih >= h as isize {
                            continue; // padded rows contribute zero
                        }
                        let x_row = (ic * h + ih as usize) * w;
                        let f_row = ((oc * in_channels + ic) * kernel.0 + kh) * kernel.1;
                        for kw in 0..kernel.1 {
                            let iw = iw0 + kw as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            acc += filters[f_row + kw] * x[x_row + iw as usize];
                        }
                    }
                }
                out[(oc * out_h + oh) * out_w + ow] = acc;
            }
        }
    }
    Tensor::from_raw(vec![out_channels, out_h, out_w], out)
}

/// Max pooling. Windows always lie fully inside the input; the winner of a
/// tie is the smallest row-major input index.
fn maxpool_forward(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
) -> (Tensor, Vec<usize>) {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let out_h = (h - window.0) / stride.0 + 1;
    let out_w = (w - window.1) / stride.1 + 1;
    let mut out = vec![0.0; c * out_h * out_w];
    let mut winners = vec![0usize; c * out_h * out_w];
    let x = input.data();
    for ch in 0..c {
        for oh in 0..out_h {
            for ow in 0..out_w {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0usize;
                for kh in 0..window.0 {
                    let ih = oh * stride.0 + kh;
                    for kw in 0..window.1 {
                        let iw = ow * stride.1 + kw;
                        let idx = (ch * h + ih) * w + iw;
                        // strict > keeps the first (smallest row-major) maximum
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (ch * out_h + oh) * out_w + ow;
                out[o] = best;
                winners[o] = best_idx;
            }
        }
    }
    (Tensor::from_raw(vec![c, out_h, out_w], out), winners)
}

/// How a backward sweep treats ReLU layers.
///
/// `Mask` multiplies by the 0/1 activation indicator (the true derivative,
/// defined as 0 at an input of exactly 0). `PassThrough` forwards the signal
/// unchanged. `RectifySignal` clamps the backward signal at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ReluBackward {
    Mask,
    PassThrough,
    RectifySignal,
}

/// Shared backward sweep for gradient-style signals: dense/conv layers apply
/// transposed weights (biases ignored), max-pool routes to the recorded
/// winner, flatten reshapes, and ReLU behaves per `relu_mode`.
pub(crate) fn backward_sweep(
    model: &NetworkModel,
    trace: &ActivationTrace,
    output_signal: Vec<f64>,
    relu_mode: ReluBackward,
) -> Tensor {
    let mut signal = Tensor::from_raw(vec![output_signal.len()], output_signal);
    for (index, layer) in model.layers.iter().enumerate().rev() {
        let layer_in = trace.layer_input(index);
        signal = match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                ..
            } => {
                let s = signal.data();
                let mut down = vec![0.0; *in_features];
                for o in 0..*out_features {
                    let g = s[o];
                    if g == 0.0 {
                        continue;
                    }
                    let row = &weights[o * in_features..(o + 1) * in_features];
                    for (d, w) in down.iter_mut().zip(row) {
                        *d += g * w;
                    }
                }
                Tensor::from_raw(vec![*in_features], down)
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                ..
            } => conv_backward_signal(
                &signal,
                layer_in,
                *out_channels,
                *in_channels,
                *kernel,
                *stride,
                *padding,
                filters,
            ),
            LayerSpec::MaxPool2D { .. } => {
                let winners = trace
                    .pool_winners(index)
                    .expect("max-pool layer has recorded winners");
                let mut down = vec![0.0; layer_in.len()];
                for (o, &win) in winners.iter().enumerate() {
                    down[win] += signal.data()[o];
                }
                Tensor::from_raw(layer_in.shape().to_vec(), down)
            }
            LayerSpec::ReLU => {
                let data: Vec<f64> = match relu_mode {
                    ReluBackward::Mask => signal
                        .data()
                        .iter()
                        .zip(layer_in.data())
                        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
                        .collect(),
                    ReluBackward::PassThrough => signal.data().to_vec(),
                    ReluBackward::RectifySignal => {
                        signal.data().iter().map(|&g| g.max(0.0)).collect()
                    }
                };
                Tensor::from_raw(layer_in.shape().to_vec(), data)
            }
            LayerSpec::Flatten => signal.reshaped(layer_in.shape().to_vec()).expect(
                "flatten backward reshapes to the recorded input shape of equal length",
            ),
        };
    }
    signal
}

#[allow(clippy::too_many_arguments)]
fn conv_backward_signal(
    signal: &Tensor,
    layer_in: &Tensor,
    out_channels: usize,
    in_channels: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
    filters: &[f64],
) -> Tensor {
    let (h, w) = (layer_in.shape()[1], layer_in.shape()[2]);
    let (out_h, out_w) = (signal.shape()[1], signal.shape()[2]);
    let s = signal.data();
    let mut down = vec![0.0; layer_in.len()];
    for oc in 0..out_channels {
        for oh in 0..out_h {
            let ih0 = (oh * stride.0) as isize - padding.0 as isize;
            for ow in 0..out_w {
                let g = s[(oc * out_h + oh) * out_w + ow];
                if g == 0.0 {
                    continue;
                }
                let iw0 = (ow * stride.1) as isize - padding.1 as isize;
                for ic in 0..in_channels {
                    for kh in 0..kernel.0 {
                        let ih = ih0 + kh as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let d_row = (ic * h + ih as usize) * w;
                        let f_row = ((oc * in_channels + ic) * kernel.0 + kh) * kernel.1;
                        for kw in 0..kernel.1 {
                            let iw = iw0 + kw as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            down[d_row + iw as usize] += g * filters[f_row + kw];
                        }
                    }
                }
            }
        }
    }
    Tensor::from_raw(layer_in.shape().to_vec(), down)
}

/// Exact reverse-mode derivative of `scores[class_index]` with respect to
/// every input subpixel.
///
/// The trace must come from [`forward`] on the same model. ReLU backward uses
/// the 0/1 mask (derivative 0 at an input of exactly 0); max-pool backward
/// routes the derivative to the recorded winner only.
pub fn input_gradient(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
) -> Result<Tensor> {
    trace.check_class(model, class_index)?;
    let mut seed = vec![0.0; trace.scores().len()];
    seed[class_index] = 1.0;
    Ok(backward_sweep(model, trace, seed, ReluBackward::Mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_input(values: &[f64]) -> Tensor {
        Tensor::new(vec![values.len(), 1, 1], values.to_vec()).unwrap()
    }

    fn dense_layer(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> LayerSpec {
        let out = weights.len();
        let inp = weights[0].len();
        LayerSpec::Dense {
            out_features: out,
            in_features: inp,
            weights: weights.into_iter().flatten().collect(),
            bias,
        }
    }

    fn two_class_names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn validate_accepts_consistent_chain() {
        let model = NetworkModel {
            input_shape: (3, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![0.0, 0.0]),
            ],
            class_names: two_class_names(2),
        };
        let chain = validate_model(&model).unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[1], LayerShape::Flat { len: 3 });
        assert_eq!(chain[2], LayerShape::Flat { len: 2 });
    }

    #[test]
    fn validate_reports_first_inconsistent_layer() {
        let model = NetworkModel {
            input_shape: (3, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![0.0; 4], vec![0.0; 4]], vec![0.0, 0.0]),
            ],
            class_names: two_class_names(2),
        };
        match validate_model(&model).unwrap_err() {
            Error::ShapeMismatch { layer, .. } => assert_eq!(layer, 1),
            other => panic!("expected ShapeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn validate_same_padding_conv_shape() {
        let model = NetworkModel {
            input_shape: (1, 8, 8),
            layers: vec![LayerSpec::Conv2D {
                out_channels: 1,
                in_channels: 1,
                kernel: (3, 3),
                stride: (1, 1),
                padding: (1, 1),
                filters: vec![0.0; 9],
                bias: vec![0.0],
            }],
            class_names: two_class_names(1),
        };
        // the conv itself chains 1x8x8 -> 1x8x8; the model then fails only at
        // the final flat-vector requirement
        let err = validate_model(&model).unwrap_err();
        match err {
            Error::ShapeMismatch { layer, found, .. } => {
                assert_eq!(layer, 1);
                assert_eq!(found, "1x8x8");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn forward_identity_dense_then_relu() {
        let model = NetworkModel {
            input_shape: (2, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
                LayerSpec::ReLU,
            ],
            class_names: two_class_names(2),
        };
        let (scores, _) = forward(&model, &flat_input(&[1.0, -2.0])).unwrap();
        assert_eq!(scores, vec![1.0, 0.0]);
    }

    #[test]
    fn forward_scalar_conv_scales_input() {
        let model = NetworkModel {
            input_shape: (1, 2, 2),
            layers: vec![
                LayerSpec::Conv2D {
                    out_channels: 1,
                    in_channels: 1,
                    kernel: (1, 1),
                    stride: (1, 1),
                    padding: (0, 0),
                    filters: vec![2.0],
                    bias: vec![0.0],
                },
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0, 1.0, 1.0, 1.0]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let input = Tensor::new(vec![1, 2, 2], vec![1.0; 4]).unwrap();
        let (scores, trace) = forward(&model, &input).unwrap();
        assert_eq!(trace.layer_output(0).data(), &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(scores, vec![8.0]);
    }

    #[test]
    fn forward_rejects_wrong_input_shape() {
        let model = NetworkModel {
            input_shape: (1, 2, 2),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0; 4]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let input = Tensor::new(vec![1, 3, 3], vec![0.0; 9]).unwrap();
        assert!(matches!(
            forward(&model, &input),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn trace_final_output_equals_scores_bit_exactly() {
        let model = NetworkModel {
            input_shape: (2, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![0.3, -0.7], vec![1.1, 0.2]], vec![0.05, -0.4]),
            ],
            class_names: two_class_names(2),
        };
        let (scores, trace) = forward(&model, &flat_input(&[0.9, -1.3])).unwrap();
        let replay = trace.layer_output(trace.layer_count() - 1).data();
        assert_eq!(scores.len(), replay.len());
        for (a, b) in scores.iter().zip(replay) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn gradient_of_linear_model_is_weights() {
        let w = [0.5, -1.5, 2.0];
        let model = NetworkModel {
            input_shape: (3, 1, 1),
            layers: vec![LayerSpec::Flatten, dense_layer(vec![w.to_vec()], vec![0.7])],
            class_names: two_class_names(1),
        };
        for input in [[1.0, 2.0, 3.0], [-4.0, 0.0, 9.0]] {
            let (_, trace) = forward(&model, &flat_input(&input)).unwrap();
            let g = input_gradient(&model, &trace, 0).unwrap();
            assert_eq!(g.data(), &w);
        }
    }

    #[test]
    fn gradient_through_dead_relu_is_zero() {
        // pre-activation -1 kills the unit; downstream weight 1
        let model = NetworkModel {
            input_shape: (1, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0]], vec![-2.0]),
                LayerSpec::ReLU,
                dense_layer(vec![vec![1.0]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let (scores, trace) = forward(&model, &flat_input(&[1.0])).unwrap();
        assert_eq!(scores, vec![0.0]);
        let g = input_gradient(&model, &trace, 0).unwrap();
        assert_eq!(g.data(), &[0.0]);
    }

    #[test]
    fn relu_derivative_at_exact_zero_is_zero() {
        let model = NetworkModel {
            input_shape: (1, 1, 1),
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::ReLU,
                dense_layer(vec![vec![3.0]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let (_, trace) = forward(&model, &flat_input(&[0.0])).unwrap();
        let g = input_gradient(&model, &trace, 0).unwrap();
        assert_eq!(g.data(), &[0.0]);
    }

    #[test]
    fn pool_ties_go_to_smallest_row_major_index() {
        let model = NetworkModel {
            input_shape: (1, 2, 2),
            layers: vec![
                LayerSpec::MaxPool2D {
                    window: (2, 2),
                    stride: (1, 1),
                },
                LayerSpec::Flatten,
                dense_layer(vec![vec![1.0]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let input = Tensor::new(vec![1, 2, 2], vec![5.0; 4]).unwrap();
        let (_, trace) = forward(&model, &input).unwrap();
        assert_eq!(trace.pool_winners(0).unwrap(), &[0]);
        // gradient flows only to the winner
        let g = input_gradient(&model, &trace, 0).unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let model = NetworkModel {
            input_shape: (1, 3, 3),
            layers: vec![
                LayerSpec::Conv2D {
                    out_channels: 2,
                    in_channels: 1,
                    kernel: (2, 2),
                    stride: (1, 1),
                    padding: (1, 1),
                    filters: vec![0.3, -0.2, 0.9, 0.1, -0.4, 0.6, 0.8, -0.7],
                    bias: vec![0.1, -0.2],
                },
                LayerSpec::ReLU,
                LayerSpec::MaxPool2D {
                    window: (2, 2),
                    stride: (2, 2),
                },
                LayerSpec::Flatten,
                dense_layer(vec![vec![0.25; 8]], vec![0.0]),
            ],
            class_names: two_class_names(1),
        };
        let input = Tensor::new(vec![1, 3, 3], (0..9).map(|i| f64::from(i) * 0.17).collect())
            .unwrap();
        let (a, _) = forward(&model, &input).unwrap();
        let (b, _) = forward(&model, &input).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn trace_from_other_model_is_rejected() {
        let model_a = NetworkModel {
            input_shape: (1, 1, 1),
            layers: vec![LayerSpec::Flatten, dense_layer(vec![vec![1.0]], vec![0.0])],
            class_names: two_class_names(1),
        };
        let mut model_b = model_a.clone();
        if let LayerSpec::Dense { weights, .. } = &mut model_b.layers[1] {
            weights[0] = 2.0;
        }
        let (_, trace) = forward(&model_a, &flat_input(&[1.0])).unwrap();
        assert!(matches!(
            input_gradient(&model_b, &trace, 0),
            Err(Error::TraceMismatch)
        ));
    }
}
