//! Monte-Carlo perturbation analysis: how much does the class score drop
//! when a chosen pixel set is randomized?
//!
//! The headline quantity is the expected decline
//! `m = f(x) - E[f(x_perturbed)]`, estimated over a fixed number of
//! independent perturbation draws. All draws are indexed streams of a seeded
//! generator, so results replay bit-identically regardless of execution
//! order (`rayon` is used across repetitions).

use rand::Rng;
use rayon::prelude::*;

use crate::attribution::{aggregate_subpixels, attribute_with_trace, Heatmap, MethodSpec};
use crate::boundary::{thicken, BoundaryMap};
use crate::error::{Error, Result};
use crate::network::{forward, NetworkModel};
use crate::resize::{resize_bilinear, resize_nearest};
use crate::rng::{derive_seed, stream_rng, RNG_ALGORITHM};
use crate::tensor::Tensor;

/// A deduplicated, row-major-sorted set of pixel coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PixelSet {
    pixels: Vec<(usize, usize)>,
}

impl PixelSet {
    /// Builds a set from arbitrary coordinates; duplicates collapse.
    pub fn new(mut pixels: Vec<(usize, usize)>) -> Self {
        pixels.sort_unstable();
        pixels.dedup();
        Self { pixels }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// All pixels of a boundary map.
    pub fn from_boundary(map: &BoundaryMap) -> Self {
        Self {
            pixels: map.pixels(),
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Coordinates in ascending row-major order.
    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    fn check_bounds(&self, rows: usize, cols: usize) -> Result<()> {
        for &(r, c) in &self.pixels {
            if r >= rows || c >= cols {
                return Err(Error::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        Ok(())
    }
}

/// What replaces the pixels of the perturbed set.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationDistribution {
    /// Every subpixel i.i.d. uniform on [0, 1).
    Uniform01,
    /// Fixed per-channel values; a single entry broadcasts to all channels.
    FixedValue(Vec<f64>),
}

/// Full specification of a perturbation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub distribution: PerturbationDistribution,
    pub repetitions: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    /// Uniform noise with the protocol-default 200 repetitions.
    pub fn uniform(seed: u64) -> Self {
        Self {
            distribution: PerturbationDistribution::Uniform01,
            repetitions: 200,
            seed,
        }
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    fn validate(&self, channels: usize) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument(
                "perturbation repetitions must be >= 1".into(),
            ));
        }
        if let PerturbationDistribution::FixedValue(values) = &self.distribution {
            if values.is_empty() || (values.len() != 1 && values.len() != channels) {
                return Err(Error::InvalidArgument(format!(
                    "fixed perturbation needs 1 or {channels} channel values, got {}",
                    values.len()
                )));
            }
        }
        Ok(())
    }

    /// A copy with a sub-seed derived for `index`; used by studies to give
    /// every (image, set) pair its own replayable stream family.
    pub fn derived(&self, index: u64) -> Self {
        Self {
            distribution: self.distribution.clone(),
            repetitions: self.repetitions,
            seed: derive_seed(self.seed, index),
        }
    }
}

/// Monte-Carlo estimate of the expected prediction decline for one pixel set.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationResult {
    /// `f_c(x)` on the unperturbed image.
    pub baseline: f64,
    /// Mean of `f_c` over the perturbed draws.
    pub mean_perturbed: f64,
    /// `baseline - mean_perturbed`.
    pub decline: f64,
    /// Population standard deviation over the draws.
    pub std_dev: f64,
    pub repetitions: usize,
    /// Identifier of the generator scheme the draws came from.
    pub rng_algorithm: &'static str,
}

/// One perturbation draw: a copy of `image` with every channel of each set
/// pixel replaced according to the distribution. Deterministic in
/// `(spec.seed, draw_index)`.
pub fn perturb_once(
    image: &Tensor,
    set: &PixelSet,
    spec: &PerturbationSpec,
    draw_index: u64,
) -> Result<Tensor> {
    let shape = image.shape();
    if shape.len() != 3 {
        return Err(Error::InvalidArgument(
            "perturbation expects a channels x height x width image".into(),
        ));
    }
    let (channels, rows, cols) = (shape[0], shape[1], shape[2]);
    set.check_bounds(rows, cols)?;
    spec.validate(channels)?;

    let mut out = image.clone();
    let data = out.data_mut();
    match &spec.distribution {
        PerturbationDistribution::Uniform01 => {
            let mut rng = stream_rng(spec.seed, draw_index);
            for &(r, c) in set.pixels() {
                for ch in 0..channels {
                    data[(ch * rows + r) * cols + c] = rng.random::<f64>();
                }
            }
        }
        PerturbationDistribution::FixedValue(values) => {
            for &(r, c) in set.pixels() {
                for ch in 0..channels {
                    let v = if values.len() == 1 { values[0] } else { values[ch] };
                    data[(ch * rows + r) * cols + c] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Runs `spec.repetitions` independent perturb-and-forward evaluations of
/// `scores[class_index]` and reports the decline estimate.
pub fn expected_decline(
    model: &NetworkModel,
    image: &Tensor,
    class_index: usize,
    set: &PixelSet,
    spec: &PerturbationSpec,
) -> Result<PerturbationResult> {
    let (scores, _) = forward(model, image)?;
    if class_index >= scores.len() {
        return Err(Error::ClassIndexOutOfRange {
            index: class_index,
            classes: scores.len(),
        });
    }
    let baseline = scores[class_index];

    // indexed streams keep this deterministic under any parallel schedule
    let samples: Result<Vec<f64>> = (0..spec.repetitions as u64)
        .into_par_iter()
        .map(|draw| {
            let perturbed = perturb_once(image, set, spec, draw)?;
            let (scores, _) = forward(model, &perturbed)?;
            Ok(scores[class_index])
        })
        .collect();
    let samples = samples?;

    // summing deviations from the baseline keeps the no-op case exact:
    // identical samples give a mean equal to the baseline bit for bit
    let deltas: Vec<f64> = samples.iter().map(|s| s - baseline).collect();
    let n = deltas.len() as f64;
    let mean_delta = deltas.iter().sum::<f64>() / n;
    let mean = baseline + mean_delta;
    let variance = deltas
        .iter()
        .map(|d| (d - mean_delta) * (d - mean_delta))
        .sum::<f64>()
        / n;
    Ok(PerturbationResult {
        baseline,
        mean_perturbed: mean,
        decline: baseline - mean,
        std_dev: variance.sqrt(),
        repetitions: samples.len(),
        rng_algorithm: RNG_ALGORITHM,
    })
}

/// The `k` highest-scoring pixels of a heatmap; ties break toward the
/// smaller row-major index.
pub fn top_k_pixels(heatmap: &Heatmap, k: usize) -> Result<PixelSet> {
    let total = heatmap.rows() * heatmap.cols();
    if k > total {
        return Err(Error::KTooLarge { k, available: total });
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        heatmap.values()[b]
            .total_cmp(&heatmap.values()[a])
            .then(a.cmp(&b))
    });
    let cols = heatmap.cols();
    Ok(PixelSet::new(
        order[..k].iter().map(|&i| (i / cols, i % cols)).collect(),
    ))
}

/// One (image, class) case of a decline study.
#[derive(Debug, Clone)]
pub struct StudyCase<'a> {
    pub image_id: String,
    pub class_label: String,
    pub image: &'a Tensor,
    pub gt: &'a BoundaryMap,
}

/// One row of the study table: a pixel-set source and its averaged numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    /// "ground-truth" or a method label.
    pub set_label: String,
    /// Mean of `f_c(x)` over the cases.
    pub baseline_mean: f64,
    /// Mean decline over the cases.
    pub decline_mean: f64,
    /// Mean perturbed score over the cases.
    pub perturbed_mean: f64,
    /// Per-case standard deviations, averaged.
    pub std_mean: f64,
}

/// Results of [`gt_vs_method_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub case_count: usize,
    pub repetitions: usize,
    pub rng_algorithm: &'static str,
}

impl StudyTable {
    pub fn row(&self, label: &str) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.set_label == label)
    }
}

/// Label of the ground-truth row in a study table.
pub const GROUND_TRUTH_LABEL: &str = "ground-truth";

/// Compares the decline caused by perturbing thickened ground-truth boundary
/// pixels against the decline caused by perturbing each method's top-k
/// pixels, with k equal to the thickened ground-truth count.
///
/// Per case: the image is resized (bilinear) to the model input if needed,
/// the ground truth is resized (nearest-neighbor) to the same grid and
/// thickened one step, and every set gets its own derived seed stream.
/// Results are averaged over cases; standard deviations are averaged, not
/// pooled.
pub fn gt_vs_method_study(
    model: &NetworkModel,
    cases: &[StudyCase<'_>],
    methods: &[MethodSpec],
    spec: &PerturbationSpec,
) -> Result<StudyTable> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument(
            "study needs at least one (image, class) case".into(),
        ));
    }
    let (in_c, in_h, in_w) = model.input_shape;
    let sets_per_case = 1 + methods.len();

    let mut sums: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); sets_per_case]; // (decline, std, perturbed)
    let mut baseline_sum = 0.0;

    for (case_index, case) in cases.iter().enumerate() {
        let class_index =
            model
                .class_index(&case.class_label)
                .ok_or_else(|| Error::MissingGroundTruth {
                    image: case.image_id.clone(),
                    class: case.class_label.clone(),
                })?;

        let image = if case.image.shape() == [in_c, in_h, in_w] {
            case.image.clone()
        } else {
            resize_bilinear(case.image, in_h, in_w)?
        };
        let gt = if case.gt.rows() == in_h && case.gt.cols() == in_w {
            case.gt.clone()
        } else {
            resize_nearest(case.gt, in_h, in_w)
        };
        let gt_set = PixelSet::from_boundary(&thicken(&gt, 1));
        let k = gt_set.len();

        let (_, trace) = forward(model, &image)?;
        let mut sets = Vec::with_capacity(sets_per_case);
        sets.push(gt_set);
        for m in methods {
            let map = attribute_with_trace(model, &trace, class_index, m.method)?;
            let heat = aggregate_subpixels(&map, m.aggregation);
            sets.push(top_k_pixels(&heat, k)?);
        }

        for (set_index, set) in sets.iter().enumerate() {
            let derived = spec.derived((case_index * sets_per_case + set_index) as u64);
            let result = expected_decline(model, &image, class_index, set, &derived)?;
            if set_index == 0 {
                baseline_sum += result.baseline;
            }
            sums[set_index].0 += result.decline;
            sums[set_index].1 += result.std_dev;
            sums[set_index].2 += result.mean_perturbed;
        }
    }

    let n = cases.len() as f64;
    let baseline_mean = baseline_sum / n;
    let mut rows = Vec::with_capacity(sets_per_case);
    for (set_index, (decline, std, perturbed)) in sums.iter().enumerate() {
        let set_label = if set_index == 0 {
            GROUND_TRUTH_LABEL.to_string()
        } else {
            methods[set_index - 1].label.clone()
        };
        rows.push(StudyRow {
            set_label,
            baseline_mean,
            decline_mean: decline / n,
            perturbed_mean: perturbed / n,
            std_mean: std / n,
        });
    }
    Ok(StudyTable {
        rows,
        case_count: cases.len(),
        repetitions: spec.repetitions,
        rng_algorithm: RNG_ALGORITHM,
    })
}
