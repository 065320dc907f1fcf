//! Shared test support: seeded random networks and independent oracles.
//!
//! Everything here recomputes results from first principles (plain nested
//! loops over the layer definitions) so library outputs can be checked
//! against code that shares none of the library's backward machinery.

#![allow(dead_code)]

use pixrel::attribution::Heatmap;
use pixrel::boundary::BoundaryMap;
use pixrel::network::{ActivationTrace, LayerSpec, NetworkModel};
use pixrel::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub struct RandomNet {
    pub model: NetworkModel,
    pub input: Tensor,
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn dense(rng: &mut ChaCha12Rng, out: usize, inp: usize) -> LayerSpec {
    LayerSpec::Dense {
        out_features: out,
        in_features: inp,
        weights: (0..out * inp).map(|_| uniform(rng, -1.0, 1.0)).collect(),
        bias: (0..out).map(|_| uniform(rng, -0.5, 0.5)).collect(),
    }
}

fn conv(rng: &mut ChaCha12Rng, oc: usize, ic: usize, k: usize, pad: usize) -> LayerSpec {
    LayerSpec::Conv2D {
        out_channels: oc,
        in_channels: ic,
        kernel: (k, k),
        stride: (1, 1),
        padding: (pad, pad),
        filters: (0..oc * ic * k * k).map(|_| uniform(rng, -1.0, 1.0)).collect(),
        bias: (0..oc).map(|_| uniform(rng, -0.5, 0.5)).collect(),
    }
}

/// A small random network and a matching random input, both fully
/// determined by `seed`. Architectures mix dense, conv, ReLU, and max-pool
/// stacks with at most 32 units per layer.
pub fn random_net(seed: u64) -> RandomNet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let arch = rng.random_range(0..5u32);
    let channels = rng.random_range(1..=3usize);
    // pooling architectures need enough spatial extent for conv + pool
    let (lo, hi) = if arch >= 3 { (5usize, 6usize) } else { (3, 6) };
    let height = rng.random_range(lo..=hi);
    let width = rng.random_range(lo..=hi);
    let classes = rng.random_range(1..=3usize);
    let flat = channels * height * width;
    // single-channel convs use 3x3 kernels so every output neuron sees
    // enough taps for mixed-sign contributions
    let conv_k = if channels == 1 { 3 } else { 2 };

    let layers = match arch {
        0 => vec![LayerSpec::Flatten, dense(&mut rng, classes, flat)],
        1 => {
            let hidden = rng.random_range(8..=16usize);
            vec![
                LayerSpec::Flatten,
                dense(&mut rng, hidden, flat),
                LayerSpec::ReLU,
                dense(&mut rng, classes, hidden),
            ]
        }
        2 => {
            let oc = rng.random_range(1..=3usize);
            let pad = if conv_k == 3 { 1 } else { 0 };
            let (ch, cw) = (
                height + 2 * pad - conv_k + 1,
                width + 2 * pad - conv_k + 1,
            );
            vec![
                conv(&mut rng, oc, channels, conv_k, pad),
                LayerSpec::ReLU,
                LayerSpec::Flatten,
                dense(&mut rng, classes, oc * ch * cw),
            ]
        }
        3 => {
            let oc = rng.random_range(1..=3usize);
            let (ch, cw) = (height - conv_k + 1, width - conv_k + 1);
            let (ph, pw) = ((ch - 2) + 1, (cw - 2) + 1);
            vec![
                conv(&mut rng, oc, channels, conv_k, 0),
                LayerSpec::ReLU,
                LayerSpec::MaxPool2D {
                    window: (2, 2),
                    stride: (1, 1),
                },
                LayerSpec::Flatten,
                dense(&mut rng, classes, oc * ph * pw),
            ]
        }
        _ => {
            let oc = rng.random_range(1..=3usize);
            let (ch, cw) = (height - conv_k + 1, width - conv_k + 1);
            let (ph, pw) = (ch - 1, cw - 1);
            vec![
                conv(&mut rng, oc, channels, conv_k, 0),
                LayerSpec::MaxPool2D {
                    window: (2, 2),
                    stride: (1, 1),
                },
                LayerSpec::ReLU,
                LayerSpec::Flatten,
                dense(&mut rng, classes, oc * ph * pw),
            ]
        }
    };

    let input = Tensor::new(
        vec![channels, height, width],
        (0..flat).map(|_| uniform(&mut rng, -1.0, 1.0)).collect(),
    )
    .expect("random inputs are finite");
    let model = NetworkModel {
        input_shape: (channels, height, width),
        layers,
        class_names: (0..classes).map(|i| format!("c{i}")).collect(),
    };
    RandomNet { model, input }
}

/// Scaled relative error: `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

/// Independent forward pass: plain nested loops over the layer definitions.
pub fn naive_forward(model: &NetworkModel, input: &Tensor) -> Vec<f64> {
    let mut shape = vec![
        model.input_shape.0,
        model.input_shape.1,
        model.input_shape.2,
    ];
    let mut values = input.data().to_vec();
    for layer in &model.layers {
        match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                bias,
            } => {
                let mut next = Vec::with_capacity(*out_features);
                for o in 0..*out_features {
                    let mut acc = bias[o];
                    for i in 0..*in_features {
                        acc += weights[o * in_features + i] * values[i];
                    }
                    next.push(acc);
                }
                values = next;
                shape = vec![*out_features];
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                bias,
            } => {
                let (h, w) = (shape[1], shape[2]);
                let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
                let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
                let mut next = vec![0.0; out_channels * oh * ow];
                #[allow(clippy::needless_range_loop)]
                for oc in 0..*out_channels {
                    for r in 0..oh {
                        for c in 0..ow {
                            let mut acc = bias[oc];
                            for ic in 0..*in_channels {
                                for kr in 0..kernel.0 {
                                    for kc in 0..kernel.1 {
                                        let ir = (r * stride.0 + kr) as isize - padding.0 as isize;
                                        let icol =
                                            (c * stride.1 + kc) as isize - padding.1 as isize;
                                        if ir < 0
                                            || icol < 0
                                            || ir >= h as isize
                                            || icol >= w as isize
                                        {
                                            continue;
                                        }
                                        let x = values
                                            [(ic * h + ir as usize) * w + icol as usize];
                                        let f = filters[((oc * in_channels + ic) * kernel.0 + kr)
                                            * kernel.1
                                            + kc];
                                        acc += f * x;
                                    }
                                }
                            }
                            next[(oc * oh + r) * ow + c] = acc;
                        }
                    }
                }
                values = next;
                shape = vec![*out_channels, oh, ow];
            }
            LayerSpec::MaxPool2D { window, stride } => {
                let (ch, h, w) = (shape[0], shape[1], shape[2]);
                let oh = (h - window.0) / stride.0 + 1;
                let ow = (w - window.1) / stride.1 + 1;
                let mut next = vec![0.0; ch * oh * ow];
                for c in 0..ch {
                    for r in 0..oh {
                        for col in 0..ow {
                            let mut best = f64::NEG_INFINITY;
                            for kr in 0..window.0 {
                                for kc in 0..window.1 {
                                    let v = values
                                        [(c * h + r * stride.0 + kr) * w + col * stride.1 + kc];
                                    if v > best {
                                        best = v;
                                    }
                                }
                            }
                            next[(c * oh + r) * ow + col] = best;
                        }
                    }
                }
                values = next;
                shape = vec![ch, oh, ow];
            }
            LayerSpec::ReLU => {
                for v in &mut values {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            LayerSpec::Flatten => {
                shape = vec![values.len()];
            }
        }
    }
    values
}

/// Central finite differences of `scores[class_index]` through the library's
/// forward pass.
pub fn finite_difference_gradient(
    model: &NetworkModel,
    input: &Tensor,
    class_index: usize,
    h: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; input.len()];
    let base = input.data().to_vec();
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let shape = input.shape().to_vec();
        let (s_plus, _) =
            pixrel::network::forward(model, &Tensor::new(shape.clone(), plus).unwrap()).unwrap();
        let (s_minus, _) =
            pixrel::network::forward(model, &Tensor::new(shape, minus).unwrap()).unwrap();
        grad[i] = (s_plus[class_index] - s_minus[class_index]) / (2.0 * h);
    }
    grad
}

/// Per-neuron redistribution denominators across all dense/conv layers,
/// using the recorded layer inputs: the smallest `|sum z|`, `|sum z+|`, and
/// `|sum z-|` seen anywhere. A neuron with no terms on one side reports 0
/// for that side.
#[derive(Debug, Clone, Copy)]
pub struct DenomStats {
    pub min_abs_total: f64,
    pub min_abs_pos: f64,
    pub min_abs_neg: f64,
}

pub fn denominator_stats(model: &NetworkModel, trace: &ActivationTrace) -> DenomStats {
    let mut stats = DenomStats {
        min_abs_total: f64::INFINITY,
        min_abs_pos: f64::INFINITY,
        min_abs_neg: f64::INFINITY,
    };
    let mut record = |zs: &[f64]| {
        let total: f64 = zs.iter().sum();
        let pos: f64 = zs.iter().filter(|z| **z > 0.0).sum();
        let neg: f64 = zs.iter().filter(|z| **z < 0.0).sum();
        stats.min_abs_total = stats.min_abs_total.min(total.abs());
        stats.min_abs_pos = stats.min_abs_pos.min(pos.abs());
        stats.min_abs_neg = stats.min_abs_neg.min(neg.abs());
    };
    for (index, layer) in model.layers.iter().enumerate() {
        let x = trace.layer_input(index).data();
        match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                ..
            } => {
                for o in 0..*out_features {
                    let zs: Vec<f64> = (0..*in_features)
                        .map(|i| x[i] * weights[o * in_features + i])
                        .collect();
                    record(&zs);
                }
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                ..
            } => {
                let shape = trace.layer_input(index).shape();
                let (h, w) = (shape[1], shape[2]);
                let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
                let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
                for oc in 0..*out_channels {
                    for r in 0..oh {
                        for c in 0..ow {
                            let mut zs = Vec::new();
                            for ic in 0..*in_channels {
                                for kr in 0..kernel.0 {
                                    for kc in 0..kernel.1 {
                                        let ir = (r * stride.0 + kr) as isize - padding.0 as isize;
                                        let icol =
                                            (c * stride.1 + kc) as isize - padding.1 as isize;
                                        if ir < 0
                                            || icol < 0
                                            || ir >= h as isize
                                            || icol >= w as isize
                                        {
                                            continue;
                                        }
                                        zs.push(
                                            x[(ic * h + ir as usize) * w + icol as usize]
                                                * filters[((oc * in_channels + ic) * kernel.0
                                                    + kr)
                                                    * kernel.1
                                                    + kc],
                                        );
                                    }
                                }
                            }
                            record(&zs);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    stats
}

/// Smallest `|pre-activation|` over all ReLU layer inputs; finite-difference
/// checks need this bounded away from the kink.
pub fn min_relu_margin(model: &NetworkModel, trace: &ActivationTrace) -> f64 {
    let mut min_abs = f64::INFINITY;
    for (index, layer) in model.layers.iter().enumerate() {
        if matches!(layer, LayerSpec::ReLU) {
            for &v in trace.layer_input(index).data() {
                min_abs = min_abs.min(v.abs());
            }
        }
    }
    min_abs
}

/// Smallest winner-versus-runner-up gap over all max-pool windows.
pub fn min_pool_margin(model: &NetworkModel, trace: &ActivationTrace) -> f64 {
    let mut min_gap = f64::INFINITY;
    for (index, layer) in model.layers.iter().enumerate() {
        if let LayerSpec::MaxPool2D { window, stride } = layer {
            let t = trace.layer_input(index);
            let (ch, h, w) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            let oh = (h - window.0) / stride.0 + 1;
            let ow = (w - window.1) / stride.1 + 1;
            for c in 0..ch {
                for r in 0..oh {
                    for col in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut second = f64::NEG_INFINITY;
                        for kr in 0..window.0 {
                            for kc in 0..window.1 {
                                let v = t.data()
                                    [(c * h + r * stride.0 + kr) * w + col * stride.1 + kc];
                                if v > best {
                                    second = best;
                                    best = v;
                                } else if v > second {
                                    second = v;
                                }
                            }
                        }
                        if second.is_finite() {
                            min_gap = min_gap.min(best - second);
                        }
                    }
                }
            }
        }
    }
    min_gap
}

/// Independent z+-rule relevance: `R_i = sum_j (z+_ij / sum_i' z+_i'j) R_j`
/// at dense/conv layers, winner routing at pools, pass-through elsewhere.
pub fn zplus_relevance(
    model: &NetworkModel,
    trace: &ActivationTrace,
    class_index: usize,
) -> Vec<f64> {
    let mut upper = vec![0.0; trace.scores().len()];
    upper[class_index] = trace.scores()[class_index];

    for (index, layer) in model.layers.iter().enumerate().rev() {
        let x = trace.layer_input(index).data();
        upper = match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                weights,
                ..
            } => {
                let mut lower = vec![0.0; *in_features];
                for o in 0..*out_features {
                    if upper[o] == 0.0 {
                        continue;
                    }
                    let mut denom = 0.0;
                    for i in 0..*in_features {
                        let z = x[i] * weights[o * in_features + i];
                        if z > 0.0 {
                            denom += z;
                        }
                    }
                    if denom == 0.0 {
                        continue;
                    }
                    for i in 0..*in_features {
                        let z = x[i] * weights[o * in_features + i];
                        if z > 0.0 {
                            lower[i] += z / denom * upper[o];
                        }
                    }
                }
                lower
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                filters,
                ..
            } => {
                let shape = trace.layer_input(index).shape();
                let (h, w) = (shape[1], shape[2]);
                let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
                let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
                let mut lower = vec![0.0; x.len()];
                for oc in 0..*out_channels {
                    for r in 0..oh {
                        for c in 0..ow {
                            let r_up = upper[(oc * oh + r) * ow + c];
                            if r_up == 0.0 {
                                continue;
                            }
                            let mut denom = 0.0;
                            let mut taps: Vec<(usize, f64)> = Vec::new();
                            for ic in 0..*in_channels {
                                for kr in 0..kernel.0 {
                                    for kc in 0..kernel.1 {
                                        let ir = (r * stride.0 + kr) as isize - padding.0 as isize;
                                        let icol =
                                            (c * stride.1 + kc) as isize - padding.1 as isize;
                                        if ir < 0
                                            || icol < 0
                                            || ir >= h as isize
                                            || icol >= w as isize
                                        {
                                            continue;
                                        }
                                        let xi = (ic * h + ir as usize) * w + icol as usize;
                                        let z = x[xi]
                                            * filters[((oc * in_channels + ic) * kernel.0 + kr)
                                                * kernel.1
                                                + kc];
                                        if z > 0.0 {
                                            denom += z;
                                            taps.push((xi, z));
                                        }
                                    }
                                }
                            }
                            if denom == 0.0 {
                                continue;
                            }
                            for (xi, z) in taps {
                                lower[xi] += z / denom * r_up;
                            }
                        }
                    }
                }
                lower
            }
            LayerSpec::MaxPool2D { .. } => {
                let winners = trace.pool_winners(index).unwrap();
                let mut lower = vec![0.0; x.len()];
                for (o, &win) in winners.iter().enumerate() {
                    lower[win] += upper[o];
                }
                lower
            }
            LayerSpec::ReLU | LayerSpec::Flatten => upper,
        };
    }
    upper
}

/// All-pairs tolerant match counts; quadratic and obviously correct.
pub fn brute_force_counts(
    pred: &BoundaryMap,
    gt: &BoundaryMap,
    radius: f64,
) -> (usize, usize, usize) {
    let pred_pixels = pred.pixels();
    let gt_pixels = gt.pixels();
    let r2 = radius * radius;
    let near = |a: (usize, usize), b: (usize, usize)| {
        let dr = a.0 as f64 - b.0 as f64;
        let dc = a.1 as f64 - b.1 as f64;
        dr * dr + dc * dc <= r2
    };
    let tp = pred_pixels
        .iter()
        .filter(|&&p| gt_pixels.iter().any(|&g| near(p, g)))
        .count();
    let fp = pred_pixels.len() - tp;
    let fn_count = gt_pixels
        .iter()
        .filter(|&&g| !pred_pixels.iter().any(|&p| near(p, g)))
        .count();
    (tp, fp, fn_count)
}

/// Random binary map with roughly `density` foreground.
pub fn random_boundary_map(seed: u64, rows: usize, cols: usize, density: f64) -> BoundaryMap {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mask: Vec<bool> = (0..rows * cols)
        .map(|_| rng.random::<f64>() < density)
        .collect();
    BoundaryMap::new(rows, cols, mask, "t").unwrap()
}

/// Random heatmap with values in [0, 1).
pub fn random_heatmap(seed: u64, rows: usize, cols: usize) -> Heatmap {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    Heatmap::new(rows, cols, values, 0).unwrap()
}
