//! Backward passes that turn a classifier prediction into per-subpixel
//! scores, and the reductions that turn those into per-pixel heatmaps.
//!
//! Four methods are implemented:
//!
//! - **Gradient** — the exact input derivative of the class score.
//! - **Deconvolution** — starts from the class score and walks down through
//!   transposed weights and max-pool winner switches.
//! - **LRP ε** — relevance redistribution proportional to `z_ij = x_i w_ij`,
//!   with an ε-stabilized denominator (`ε = 0` gives the plain rule).
//! - **LRP αβ** — redistribution that splits positive and negative
//!   contributions, weighted α and β with `α + β = 1`, `α > 0`, `β ≤ 0`.
//!
//! For ε = 0 and any valid (α, β), the sum of the resulting map equals the
//! attributed class score whenever no redistribution denominator is exactly
//! zero; biases are excluded from `z` and from denominators, which is what
//! makes the layer-wise sums exact.

use crate::error::{Error, Result};
use crate::network::{
    backward_sweep, forward, ActivationTrace, LayerSpec, NetworkModel, ReluBackward,
};
use crate::tensor::Tensor;

/// How deconvolution treats ReLU layers on the way down.
///
/// The default passes scores through unchanged; `Rectify` clamps the backward
/// signal at zero instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeconvRelu {
    #[default]
    PassThrough,
    Rectify,
}

/// An attribution backend with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttributionMethod {
    Gradient,
    Deconvolution { relu: DeconvRelu },
    /// `epsilon > 0` stabilizes denominators; `epsilon = 0` is the plain rule.
    LrpEpsilon { epsilon: f64 },
    LrpAlphaBeta { alpha: f64, beta: f64 },
}

impl AttributionMethod {
    pub fn gradient() -> Self {
        AttributionMethod::Gradient
    }

    pub fn deconvolution() -> Self {
        AttributionMethod::Deconvolution {
            relu: DeconvRelu::default(),
        }
    }

    /// LRP with an ε-stabilized denominator. Requires `epsilon >= 0`.
    pub fn lrp_epsilon(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidMethodParams(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        Ok(AttributionMethod::LrpEpsilon { epsilon })
    }

    /// LRP αβ. Requires `alpha + beta = 1`, `alpha > 0`, `beta <= 0`.
    pub fn lrp_alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() || alpha + beta != 1.0 || alpha <= 0.0 || beta > 0.0
        {
            return Err(Error::InvalidMethodParams(format!(
                "alpha-beta rule needs alpha + beta = 1, alpha > 0, beta <= 0; got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(AttributionMethod::LrpAlphaBeta { alpha, beta })
    }

    /// Short stable tag used for file names and report rows.
    pub fn tag(&self) -> &'static str {
        match self {
            AttributionMethod::Gradient => "gradient",
            AttributionMethod::Deconvolution { .. } => "deconv",
            AttributionMethod::LrpEpsilon { .. } => "lrp-eps",
            AttributionMethod::LrpAlphaBeta { .. } => "lrp-ab",
        }
    }
}

/// A method plus the subpixel aggregation used to reduce its maps, under a
/// human-readable label. Studies and reports work in these units.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub method: AttributionMethod,
    pub aggregation: AggregationMode,
}

impl MethodSpec {
    pub fn new(
        label: impl Into<String>,
        method: AttributionMethod,
        aggregation: AggregationMode,
    ) -> Self {
        Self {
            label: label.into(),
            method,
            aggregation,
        }
    }
}

/// Per-subpixel backward scores for one class, in the model's input shape.
#[derive(Debug, Clone)]
pub struct RelevanceMap {
    pub scores: Tensor,
    pub class_index: usize,
    pub method: AttributionMethod,
}

impl RelevanceMap {
    /// Sum over all subpixels.
    pub fn total(&self) -> f64 {
        self.scores.data().iter().sum()
    }
}

/// Ways to combine a pixel's channel scores into one pixel score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// `s(p) = sum_s v(p,s)`
    SumChannels,
    /// `s(p) = -sum over negative v(p,s)`: the magnitude of negative mass.
    NegativeSum,
    /// `s(p) = sqrt(sum_s v(p,s)^2)`
    L2Norm,
}

impl AggregationMode {
    pub fn tag(&self) -> &'static str {
        match self {
            AggregationMode::SumChannels => "sum",
            AggregationMode::NegativeSum => "negsum",
            AggregationMode::L2Norm => "l2",
        }
    }
}

/// A per-pixel score grid for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub class_index: usize,
}

impl Heatmap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, class_index: usize) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::DimensionMismatch {
                expected_rows: rows,
                expected_cols: cols,
                found_rows: values.len(),
                found_cols: 1,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "heatmap values must be finite".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            values,
            class_index,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Runs a fresh forward pass and dispatches to the method's backward pass.
pub fn attribute(
    model: &NetworkModel,
    input: &Tensor,
    class_index: usize,
    method: AttributionMethod,
) -> Result<RelevanceMap> {
    let (_, trace) = forward(model, input)?;
    attribute_with_trace(model, &trace, class_index, method)
}

/// Same as [`attribute`] but reuses an existing trace, so several methods can
/// share one forward pass.
pub fn attribute_with_trace(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
    method: AttributionMethod,
) -> Result<RelevanceMap> {
    let scores = match method {
        AttributionMethod::Gradient => gradient_relevance(model, trace, class_index)?,
        AttributionMethod::Deconvolution { relu } => {
            deconv_relevance(model, trace, class_index, relu)?
        }
        AttributionMethod::LrpEpsilon { epsilon } => {
            // re-check here so maps built from raw enum values are still valid
            if !epsilon.is_finite() || epsilon < 0.0 {
                return Err(Error::InvalidMethodParams(format!(
                    "epsilon must be finite and >= 0, got {epsilon}"
                )));
            }
            lrp_backward(model, trace, class_index, LrpRule::Epsilon(epsilon))?
        }
        AttributionMethod::LrpAlphaBeta { alpha, beta } => {
            AttributionMethod::lrp_alpha_beta(alpha, beta)?;
            lrp_backward(model, trace, class_index, LrpRule::AlphaBeta { alpha, beta })?
        }
    };
    Ok(RelevanceMap {
        scores,
        class_index,
        method,
    })
}

/// Raw per-subpixel derivatives of the class score. Identical, bit for bit,
/// to [`crate::network::input_gradient`].
pub fn gradient_relevance(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
) -> Result<Tensor> {
    crate::network::input_gradient(model, trace, class_index)
}

/// Deconvolution scores: the class score is placed at the chosen output and
/// walked down through transposed weights (biases ignored) and max-pool
/// winner switches; ReLU handling follows `relu`.
pub fn deconv_relevance(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
    relu: DeconvRelu,
) -> Result<Tensor> {
    trace.check_class(model, class_index)?;
    let mut seed = vec![0.0; trace.scores().len()];
    seed[class_index] = trace.scores()[class_index];
    let mode = match relu {
        DeconvRelu::PassThrough => ReluBackward::PassThrough,
        DeconvRelu::Rectify => ReluBackward::RectifySignal,
    };
    Ok(backward_sweep(model, trace, seed, mode))
}

#[derive(Debug, Clone, Copy)]
enum LrpRule {
    Epsilon(f64),
    AlphaBeta { alpha: f64, beta: f64 },
}

/// Layer-wise relevance propagation.
///
/// Relevance starts at the output as the class score and is redistributed
/// layer by layer: dense/conv layers use `z_ij = x_i w_ij` (no bias terms),
/// max-pool layers route winner-take-all, ReLU and flatten pass through.
/// A neuron whose denominator is exactly zero redistributes nothing.
pub fn lrp_relevance(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
    variant: AttributionMethod,
) -> Result<Tensor> {
    match variant {
        AttributionMethod::LrpEpsilon { epsilon } => {
            lrp_backward(model, trace, class_index, LrpRule::Epsilon(epsilon))
        }
        AttributionMethod::LrpAlphaBeta { alpha, beta } => {
            AttributionMethod::lrp_alpha_beta(alpha, beta)?;
            lrp_backward(model, trace, class_index, LrpRule::AlphaBeta { alpha, beta })
        }
        other => Err(Error::InvalidMethodParams(format!(
            "lrp_relevance needs an LRP variant, got {other:?}"
        ))),
    }
}

fn lrp_backward(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
    rule: LrpRule,
) -> Result<Tensor> {
    trace.check_class(model, class_index)?;
    let mut relevance = vec![0.0; trace.scores().len()];
    relevance[class_index] = trace.scores()[class_index];
    let mut current = Tensor::from_raw(vec![relevance.len()], relevance);

    for (index, layer) in model.layers.iter().enumerate().rev() {
        let layer_in = trace.layer_input(index);
        current = match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                ..
            } => {
                let x = layer_in.data();
                let upper = current.data();
                let mut lower = vec![0.0; *in_features];
                for o in 0..*out_features {
                    let r = upper[o];
                    if r == 0.0 {
                        continue;
                    }
                    let row = &weights[o * in_features..(o + 1) * in_features];
                    redistribute(rule, r, x, row, |i, share| lower[i] += share);
                }
                Tensor::from_raw(vec![*in_features], lower)
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                ..
            } => lrp_conv(
                rule,
                &current,
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
                let mut lower = vec![0.0; layer_in.len()];
                for (o, &win) in winners.iter().enumerate() {
                    lower[win] += current.data()[o];
                }
                Tensor::from_raw(layer_in.shape().to_vec(), lower)
            }
            LayerSpec::ReLU => current
                .reshaped(layer_in.shape().to_vec())
                .expect("relu keeps element count"),
            LayerSpec::Flatten => current
                .reshaped(layer_in.shape().to_vec())
                .expect("flatten keeps element count"),
        };
    }
    Ok(current)
}

/// Redistributes one upper neuron's relevance `r` over its inputs.
///
/// `xs` and `ws` are the neuron's input activations and weights, pairwise;
/// `emit(i, share)` receives each input's share.
fn redistribute<F: FnMut(usize, f64)>(rule: LrpRule, r: f64, xs: &[f64], ws: &[f64], mut emit: F) {
    match rule {
        LrpRule::Epsilon(eps) => {
            let mut denom = 0.0;
            for (xv, wv) in xs.iter().zip(ws) {
                denom += xv * wv;
            }
            // sign(0) is defined as +1, so -0.0 also counts as non-negative
            let stabilized = denom + eps * if denom >= 0.0 { 1.0 } else { -1.0 };
            if stabilized == 0.0 {
                return; // plain rule with a dead denominator: drop
            }
            let scale = r / stabilized;
            for (i, (xv, wv)) in xs.iter().zip(ws).enumerate() {
                let z = xv * wv;
                if z != 0.0 {
                    emit(i, z * scale);
                }
            }
        }
        LrpRule::AlphaBeta { alpha, beta } => {
            let mut sum_pos = 0.0;
            let mut sum_neg = 0.0;
            for (xv, wv) in xs.iter().zip(ws) {
                let z = xv * wv;
                if z > 0.0 {
                    sum_pos += z;
                } else {
                    sum_neg += z;
                }
            }
            let pos_scale = if sum_pos != 0.0 {
                alpha * r / sum_pos
            } else {
                0.0
            };
            let neg_scale = if sum_neg != 0.0 {
                beta * r / sum_neg
            } else {
                0.0
            };
            for (i, (xv, wv)) in xs.iter().zip(ws).enumerate() {
                let z = xv * wv;
                if z > 0.0 {
                    if pos_scale != 0.0 {
                        emit(i, z * pos_scale);
                    }
                } else if z < 0.0 && neg_scale != 0.0 {
                    emit(i, z * neg_scale);
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn lrp_conv(
    rule: LrpRule,
    upper: &Tensor,
    layer_in: &Tensor,
    out_channels: usize,
    in_channels: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
    filters: &[f64],
) -> Tensor {
    let (h, w) = (layer_in.shape()[1], layer_in.shape()[2]);
    let (out_h, out_w) = (upper.shape()[1], upper.shape()[2]);
    let x = layer_in.data();
    let up = upper.data();
    let mut lower = vec![0.0; layer_in.len()];

    // scratch for one output neuron's receptive field
    let field = in_channels * kernel.0 * kernel.1;
    let mut xs = vec![0.0; field];
    let mut ws = vec![0.0; field];
    let mut idxs = vec![0usize; field];

    for oc in 0..out_channels {
        for oh in 0..out_h {
            let ih0 = (oh * stride.0) as isize - padding.0 as isize;
            for ow in 0..out_w {
                let r = up[(oc * out_h + oh) * out_w + ow];
                if r == 0.0 {
                    continue;
                }
                let iw0 = (ow * stride.1) as isize - padding.1 as isize;
                let mut n = 0;
                for ic in 0..in_channels {
                    for kh in 0..kernel.0 {
                        let ih = ih0 + kh as isize;
                        if ih < 0 || ih >= h as isize {
                            continue; // padded taps have x = 0, z = 0
                        }
                        let x_row = (ic * h + ih as usize) * w;
                        let f_row = ((oc * in_channels + ic) * kernel.0 + kh) * kernel.1;
                        for kw in 0..kernel.1 {
                            let iw = iw0 + kw as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            xs[n] = x[x_row + iw as usize];
                            ws[n] = filters[f_row + kw];
                            idxs[n] = x_row + iw as usize;
                            n += 1;
                        }
                    }
                }
                redistribute(rule, r, &xs[..n], &ws[..n], |i, share| {
                    lower[idxs[i]] += share;
                });
            }
        }
    }
    Tensor::from_raw(layer_in.shape().to_vec(), lower)
}

/// Combines channel scores into per-pixel scores.
pub fn aggregate_subpixels(map: &RelevanceMap, mode: AggregationMode) -> Heatmap {
    let shape = map.scores.shape();
    assert_eq!(shape.len(), 3, "relevance maps are channels x height x width");
    let (channels, rows, cols) = (shape[0], shape[1], shape[2]);
    let mut values = vec![0.0; rows * cols];
    for (p, value) in values.iter_mut().enumerate() {
        let (r, c) = (p / cols, p % cols);
        let mut acc = 0.0;
        for ch in 0..channels {
            let v = map.scores.at3(ch, r, c);
            match mode {
                AggregationMode::SumChannels => acc += v,
                AggregationMode::NegativeSum => {
                    if v < 0.0 {
                        acc -= v;
                    }
                }
                AggregationMode::L2Norm => acc += v * v,
            }
        }
        *value = if mode == AggregationMode::L2Norm {
            acc.sqrt()
        } else {
            acc
        };
    }
    Heatmap {
        rows,
        cols,
        values,
        class_index: map.class_index,
    }
}

/// Sets negative pixel scores to zero.
pub fn rectify(heatmap: &Heatmap) -> Heatmap {
    Heatmap {
        rows: heatmap.rows,
        cols: heatmap.cols,
        values: heatmap.values.iter().map(|&v| v.max(0.0)).collect(),
        class_index: heatmap.class_index,
    }
}
