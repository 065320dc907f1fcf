//! Invariants and properties, via proptest for pure data transforms and
//! seeded sweeps for network-backed behaviour.

mod common;

use common::*;
use pixrel::attribution::{
    aggregate_subpixels, attribute_with_trace, AggregationMode, AttributionMethod, Heatmap,
};
use pixrel::boundary::{
    average_precision, match_counts, max_fscore, pr_curve, thicken, BoundaryMap, ThresholdPolicy,
};
use pixrel::network::{forward, input_gradient, LayerSpec, NetworkModel};
use pixrel::perturbation::{expected_decline, PerturbationSpec, PixelSet};
use pixrel::tensor::Tensor;
use proptest::prelude::*;

fn single_dense_model(weights: Vec<f64>, bias: f64) -> NetworkModel {
    let n = weights.len();
    NetworkModel {
        input_shape: (n, 1, 1),
        layers: vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                out_features: 1,
                in_features: n,
                weights,
                bias: vec![bias],
            },
        ],
        class_names: vec!["c0".into()],
    }
}

/// Σ|R| is non-increasing in ε on single-layer models.
#[test]
fn epsilon_monotonicity_on_single_layer_models() {
    for seed in 0..20 {
        let net = {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            use rand::Rng;
            use rand_chacha::rand_core::SeedableRng as _;
            let n = rng.random_range(2..=8usize);
            let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            (single_dense_model(weights, 0.0), values)
        };
        let input = Tensor::new(vec![net.1.len(), 1, 1], net.1.clone()).unwrap();
        let (_, trace) = forward(&net.0, &input).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let map = attribute_with_trace(
                &net.0,
                &trace,
                0,
                AttributionMethod::lrp_epsilon(eps).unwrap(),
            )
            .unwrap();
            let total_abs: f64 = map.scores.data().iter().map(|v| v.abs()).sum();
            assert!(
                total_abs <= last + 1e-12,
                "seed {seed}: sum|R| grew from {last} to {total_abs} at eps {eps}"
            );
            last = total_abs;
        }
    }
}

/// Scaling the final dense weights by λ > 0 scales the gradient and LRP maps
/// by λ and the deconvolution map by λ²; heatmap argmax positions stay put.
#[test]
fn output_scale_covariance() {
    let lambda = 3.0;
    let mut checked = 0;
    let mut seed = 40;
    while checked < 10 {
        let net = random_net(seed);
        seed += 1;
        let mut scaled = net.model.clone();
        let last = scaled.layers.len() - 1;
        match &mut scaled.layers[last] {
            LayerSpec::Dense { weights, bias, .. } => {
                for w in weights.iter_mut() {
                    *w *= lambda;
                }
                for b in bias.iter_mut() {
                    *b *= lambda;
                }
            }
            _ => unreachable!("generator nets end in a dense layer"),
        }
        let (scores, trace) = forward(&net.model, &net.input).unwrap();
        let (_, trace_scaled) = forward(&scaled, &net.input).unwrap();
        if scores[0].abs() < 1e-3 {
            continue; // keep the argmax comparison meaningful
        }

        let cases = [
            (AttributionMethod::Gradient, lambda),
            (AttributionMethod::deconvolution(), lambda * lambda),
            (AttributionMethod::lrp_epsilon(0.0).unwrap(), lambda),
            (AttributionMethod::lrp_alpha_beta(2.0, -1.0).unwrap(), lambda),
        ];
        for (method, factor) in cases {
            let base = attribute_with_trace(&net.model, &trace, 0, method).unwrap();
            let scaled_map = attribute_with_trace(&scaled, &trace_scaled, 0, method).unwrap();
            for (a, b) in base.scores.data().iter().zip(scaled_map.scores.data()) {
                assert!(
                    rel_err(a * factor, *b) < 1e-9,
                    "seed {}: {method:?} expected x{factor}, got {a} -> {b}",
                    seed - 1
                );
            }
            let heat_a = aggregate_subpixels(&base, AggregationMode::SumChannels);
            let heat_b = aggregate_subpixels(&scaled_map, AggregationMode::SumChannels);
            let argmax = |h: &Heatmap| {
                h.values()
                    .iter()
                    .enumerate()
                    .max_by(|(_, x), (_, y)| x.total_cmp(y))
                    .map(|(i, _)| i)
            };
            assert_eq!(argmax(&heat_a), argmax(&heat_b));
        }
        checked += 1;
    }
}

/// Gradient maps equal the network gradient bit for bit, trace outputs equal
/// the scores bit for bit, and repeated forwards are identical.
#[test]
fn determinism_and_trace_fidelity() {
    for seed in 300..330 {
        let net = random_net(seed);
        let (scores_a, trace_a) = forward(&net.model, &net.input).unwrap();
        let (scores_b, trace_b) = forward(&net.model, &net.input).unwrap();
        assert_eq!(scores_a, scores_b);
        let final_out = trace_a.layer_output(trace_a.layer_count() - 1);
        for (a, b) in scores_a.iter().zip(final_out.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // pool winners replay identically
        for layer in 0..trace_a.layer_count() {
            assert_eq!(trace_a.pool_winners(layer), trace_b.pool_winners(layer));
        }
        let grad = input_gradient(&net.model, &trace_a, 0).unwrap();
        let map =
            attribute_with_trace(&net.model, &trace_a, 0, AttributionMethod::Gradient).unwrap();
        assert_eq!(grad.data(), map.scores.data());
    }
}

/// Identical perturbation specs give bit-identical results, regardless of
/// the parallel schedule underneath.
#[test]
fn perturbation_results_replay_bitwise() {
    let net = random_net(7);
    let set = PixelSet::new(vec![(0, 0), (1, 1), (2, 2)]);
    let spec = PerturbationSpec::uniform(123).with_repetitions(64);
    let a = expected_decline(&net.model, &net.input, 0, &set, &spec).unwrap();
    let b = expected_decline(&net.model, &net.input, 0, &set, &spec).unwrap();
    assert_eq!(a.decline.to_bits(), b.decline.to_bits());
    assert_eq!(a.std_dev.to_bits(), b.std_dev.to_bits());
    assert_eq!(a.mean_perturbed.to_bits(), b.mean_perturbed.to_bits());
}

proptest! {
    /// Thickening only adds pixels, keeps every original pixel, and commutes
    /// with transposition.
    #[test]
    fn thicken_is_monotone_and_transpose_equivariant(
        seed in 0u64..1000,
        rows in 3usize..12,
        cols in 3usize..12,
        iterations in 0usize..3,
    ) {
        let map = random_boundary_map(seed, rows, cols, 0.2);
        let thick = thicken(&map, iterations);
        for r in 0..rows {
            for c in 0..cols {
                prop_assert!(!map.get(r, c) || thick.get(r, c));
            }
        }
        let transpose = |m: &BoundaryMap| {
            let mut mask = vec![false; m.rows() * m.cols()];
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    mask[c * m.rows() + r] = m.get(r, c);
                }
            }
            BoundaryMap::new(m.cols(), m.rows(), mask, "t").unwrap()
        };
        prop_assert_eq!(thicken(&transpose(&map), iterations), transpose(&thick));
    }

    /// Rising thresholds nest the predicted sets, so tp and fp never grow,
    /// and recall never grows either.
    #[test]
    fn threshold_sweep_is_monotone(heat_seed in 0u64..500, gt_seed in 1000u64..1500) {
        let heat = random_heatmap(heat_seed, 10, 10);
        let gt = random_boundary_map(gt_seed, 10, 10, 0.12);
        let thresholds: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
        let curve = pr_curve(&heat, &gt, 1.5, &thresholds).unwrap();
        for pair in curve.points.windows(2) {
            prop_assert!(pair[1].tp <= pair[0].tp);
            prop_assert!(pair[1].fp <= pair[0].fp);
            prop_assert!(pair[1].recall <= pair[0].recall + 1e-15);
        }
    }

    /// With radius 0, matching reduces to exact set intersection counts.
    #[test]
    fn radius_zero_is_exact_set_arithmetic(pred_seed in 0u64..300, gt_seed in 300u64..600) {
        let pred = random_boundary_map(pred_seed, 9, 9, 0.2);
        let gt = random_boundary_map(gt_seed, 9, 9, 0.2);
        let (tp, fp, fn_count) = match_counts(&pred, &gt, 0.0).unwrap();
        let inter = pred
            .pixels()
            .iter()
            .filter(|p| gt.get(p.0, p.1))
            .count();
        prop_assert_eq!(tp, inter);
        prop_assert_eq!(fp, pred.count() - inter);
        prop_assert_eq!(fn_count, gt.count() - inter);
    }

    /// AP and MF are invariant under strictly increasing transforms when the
    /// thresholds are the distinct heatmap values.
    #[test]
    fn ap_mf_invariant_under_monotone_transforms(seed in 0u64..200) {
        let heat = random_heatmap(seed, 8, 8);
        let gt = random_boundary_map(seed + 7000, 8, 8, 0.15);
        let mut thresholds: Vec<f64> = heat.values().to_vec();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();

        let transform = |v: f64| v * v * v + 2.0 * v; // strictly increasing
        let mapped = Heatmap::new(
            8,
            8,
            heat.values().iter().map(|&v| transform(v)).collect(),
            0,
        )
        .unwrap();
        let mapped_thresholds: Vec<f64> = thresholds.iter().map(|&t| transform(t)).collect();

        let base = pr_curve(&heat, &gt, 2.0, &thresholds).unwrap();
        let moved = pr_curve(&mapped, &gt, 2.0, &mapped_thresholds).unwrap();
        prop_assert_eq!(average_precision(&base), average_precision(&moved));
        prop_assert_eq!(max_fscore(&base), max_fscore(&moved));
    }

    /// CSV round-trips arbitrary finite heatmaps exactly.
    #[test]
    fn heatmap_csv_round_trip(values in proptest::collection::vec(-1e12f64..1e12, 12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let heat = Heatmap::new(3, 4, values, 0).unwrap();
        pixrel::io::save_heatmap(&heat, &path, pixrel::io::HeatmapFormat::Csv).unwrap();
        let back = pixrel::io::load_heatmap_csv(&path, 0).unwrap();
        for (a, b) in heat.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

/// Model files round-trip random nets bit-exactly (seeded sweep across the
/// architecture space).
#[test]
fn model_round_trip_across_architectures() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let net = random_net(seed * 31 + 5);
        let path = dir.path().join(format!("m{seed}.pxm"));
        pixrel::io::save_model(&net.model, &path).unwrap();
        let back = pixrel::io::load_model(&path).unwrap();
        assert_eq!(back, net.model);
    }
}

/// Dataset evaluation is invariant under duplicating every pair.
#[test]
fn dataset_duplication_invariance_randomized() {
    use pixrel::boundary::{evaluate_dataset, EvalPair};
    for seed in 0..10 {
        let heat = random_heatmap(seed, 8, 8);
        let gt = random_boundary_map(seed + 50, 8, 8, 0.15);
        let one = [EvalPair {
            image_id: "a".into(),
            class_label: "c".into(),
            heatmap: &heat,
            gt: &gt,
        }];
        let two = [one[0].clone(), one[0].clone()];
        let policy = ThresholdPolicy::Quantiles(35);
        let t1 = evaluate_dataset(&one, 2.0, &policy).unwrap();
        let t2 = evaluate_dataset(&two, 2.0, &policy).unwrap();
        assert_eq!(
            t1.per_class[0].average_precision,
            t2.per_class[0].average_precision
        );
        assert_eq!(t1.per_class[0].max_f_score, t2.per_class[0].max_f_score);
    }
}
