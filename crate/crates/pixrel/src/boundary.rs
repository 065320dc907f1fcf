//! Scoring heatmaps as semantic-boundary predictions: neighborhood-tolerant
//! matching, precision/recall curves, average precision, and maximal F-score.
//!
//! Matching is symmetric but not one-to-one: a predicted pixel counts as a
//! true positive if any ground-truth pixel lies within the match radius, and
//! a ground-truth pixel is missed if no predicted pixel does. Both sides are
//! answered with one exact Euclidean distance transform per map, so results
//! are deterministic and cheap to oracle-check.

use crate::attribution::Heatmap;
use crate::error::{Error, Result};

/// Default neighborhood radius (in pixels) for tolerant matching.
pub const DEFAULT_MATCH_RADIUS: f64 = 2.0;

/// Default number of quantile thresholds swept over a heatmap's positive
/// values.
pub const DEFAULT_THRESHOLD_COUNT: usize = 99;

/// A binary boundary mask with the class it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMap {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    pub label: String,
}

impl BoundaryMap {
    pub fn new(rows: usize, cols: usize, mask: Vec<bool>, label: impl Into<String>) -> Result<Self> {
        if rows * cols != mask.len() {
            return Err(Error::DimensionMismatch {
                expected_rows: rows,
                expected_cols: cols,
                found_rows: mask.len(),
                found_cols: 1,
            });
        }
        Ok(Self {
            rows,
            cols,
            mask,
            label: label.into(),
        })
    }

    pub fn empty(rows: usize, cols: usize, label: impl Into<String>) -> Self {
        Self {
            rows,
            cols,
            mask: vec![false; rows * cols],
            label: label.into(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.cols + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: bool) {
        self.mask[row * self.cols + col] = value;
    }

    /// Number of boundary pixels.
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Row-major coordinates of all boundary pixels.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i / self.cols, i % self.cols))
            .collect()
    }
}

/// Morphological thickening: dilation with a 3x3 cross (the 4-neighborhood),
/// applied `iterations` times. Original pixels are always preserved.
pub fn thicken(map: &BoundaryMap, iterations: usize) -> BoundaryMap {
    let mut current = map.clone();
    for _ in 0..iterations {
        let mut next = current.clone();
        for r in 0..current.rows {
            for c in 0..current.cols {
                if !current.get(r, c) {
                    continue;
                }
                if r > 0 {
                    next.set(r - 1, c, true);
                }
                if r + 1 < current.rows {
                    next.set(r + 1, c, true);
                }
                if c > 0 {
                    next.set(r, c - 1, true);
                }
                if c + 1 < current.cols {
                    next.set(r, c + 1, true);
                }
            }
        }
        current = next;
    }
    current
}

/// Exact squared Euclidean distance transform (lower-envelope-of-parabolas
/// method, applied along columns then rows).
///
/// Returns, for every cell, the squared distance to the nearest `true` cell,
/// or a value larger than any in-grid squared distance when the mask is empty.
pub(crate) fn squared_distance_transform(
    mask: &[bool],
    rows: usize,
    cols: usize,
) -> Vec<f64> {
    // finite stand-in for infinity keeps the envelope arithmetic exact
    let big = ((rows * rows + cols * cols) as f64) * 4.0 + 1.0;
    let mut dist: Vec<f64> = mask.iter().map(|&b| if b { 0.0 } else { big }).collect();

    let mut f = vec![0.0; rows.max(cols)];
    let mut d = vec![0.0; rows.max(cols)];
    let mut v = vec![0usize; rows.max(cols)];
    let mut z = vec![0.0; rows.max(cols) + 1];

    // columns
    for c in 0..cols {
        for r in 0..rows {
            f[r] = dist[r * cols + c];
        }
        dt_one_dim(&f[..rows], &mut d, &mut v, &mut z);
        for r in 0..rows {
            dist[r * cols + c] = d[r];
        }
    }
    // rows
    for r in 0..rows {
        f[..cols].copy_from_slice(&dist[r * cols..(r + 1) * cols]);
        dt_one_dim(&f[..cols], &mut d, &mut v, &mut z);
        dist[r * cols..(r + 1) * cols].copy_from_slice(&d[..cols]);
    }
    dist
}

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of the parabolas `(x - q)^2 + f[q]`).
fn dt_one_dim(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    // horizontal position where the parabolas rooted at q and p cross
    let intersect = |f: &[f64], q: usize, p: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = intersect(f, q, v[k]);
        // z[0] = -inf and finite f keep this from underflowing k
        while s <= z[k] {
            k -= 1;
            s = intersect(f, q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0usize;
    for (q, out) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *out = diff * diff + f[p];
    }
}

/// Tolerant match counts between a predicted and a ground-truth boundary map.
///
/// A predicted pixel is a true positive if some ground-truth pixel lies
/// within Euclidean distance `radius`, otherwise a false positive; a
/// ground-truth pixel with no predicted pixel within `radius` is a false
/// negative. No one-to-one assignment is made.
pub fn match_counts(
    pred: &BoundaryMap,
    gt: &BoundaryMap,
    radius: f64,
) -> Result<(usize, usize, usize)> {
    if pred.rows != gt.rows || pred.cols != gt.cols {
        return Err(Error::DimensionMismatch {
            expected_rows: gt.rows,
            expected_cols: gt.cols,
            found_rows: pred.rows,
            found_cols: pred.cols,
        });
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "match radius must be >= 0, got {radius}"
        )));
    }
    let r2 = radius * radius;
    let gt_dist = squared_distance_transform(&gt.mask, gt.rows, gt.cols);
    let pred_dist = squared_distance_transform(&pred.mask, pred.rows, pred.cols);

    let mut tp = 0;
    let mut fp = 0;
    let mut missed = 0;
    for i in 0..pred.mask.len() {
        if pred.mask[i] {
            if gt_dist[i] <= r2 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        if gt.mask[i] && pred_dist[i] > r2 {
            missed += 1;
        }
    }
    Ok((tp, fp, missed))
}

/// One thresholded operating point of a PR sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
}

/// Precision/recall/F over an ascending threshold sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Precision with the empty-prediction convention: 1 when `tp + fp = 0`.
fn precision_of(tp: usize, fp: usize) -> f64 {
    if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

/// Recall against the missed-pixel count: 1 when there is nothing to find.
fn recall_of(tp: usize, fn_count: usize) -> f64 {
    if tp + fn_count == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_count) as f64
    }
}

fn f_score_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub(crate) fn pr_point(threshold: f64, tp: usize, fp: usize, fn_count: usize) -> PrPoint {
    let precision = precision_of(tp, fp);
    let recall = recall_of(tp, fn_count);
    PrPoint {
        threshold,
        precision,
        recall,
        f_score: f_score_of(precision, recall),
        tp,
        fp,
        fn_count,
    }
}

/// Binarizes the heatmap at `threshold` (scores `>= threshold` are predicted
/// boundary pixels).
pub fn binarize(heatmap: &Heatmap, threshold: f64, label: &str) -> BoundaryMap {
    BoundaryMap {
        rows: heatmap.rows(),
        cols: heatmap.cols(),
        mask: heatmap.values().iter().map(|&v| v >= threshold).collect(),
        label: label.to_string(),
    }
}

/// Sweeps `thresholds` (ascending) over the heatmap and scores each
/// binarization against `gt` with tolerant matching at `radius`.
pub fn pr_curve(
    heatmap: &Heatmap,
    gt: &BoundaryMap,
    radius: f64,
    thresholds: &[f64],
) -> Result<PrCurve> {
    if heatmap.rows() != gt.rows || heatmap.cols() != gt.cols {
        return Err(Error::DimensionMismatch {
            expected_rows: gt.rows,
            expected_cols: gt.cols,
            found_rows: heatmap.rows(),
            found_cols: heatmap.cols(),
        });
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold list must be non-empty".into(),
        ));
    }
    let mut points = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let pred = binarize(heatmap, t, &gt.label);
        let (tp, fp, fn_count) = match_counts(&pred, gt, radius)?;
        points.push(pr_point(t, tp, fp, fn_count));
    }
    Ok(PrCurve { points })
}

/// Average precision: the rectangular-rule area under the curve on the recall
/// axis, `sum_k P(k) * (R(k) - R(k+1))` over ascending thresholds with the
/// recall beyond the last threshold taken as 0.
pub fn average_precision(curve: &PrCurve) -> f64 {
    let mut ap = 0.0;
    for (k, point) in curve.points.iter().enumerate() {
        let next_recall = curve.points.get(k + 1).map_or(0.0, |p| p.recall);
        ap += point.precision * (point.recall - next_recall);
    }
    ap
}

/// Maximum F-score over the curve's thresholds.
pub fn max_fscore(curve: &PrCurve) -> f64 {
    curve
        .points
        .iter()
        .map(|p| p.f_score)
        .fold(0.0, f64::max)
}

/// How the sweep's thresholds are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdPolicy {
    /// Use exactly these thresholds (must be non-empty and ascending).
    Explicit(Vec<f64>),
    /// `n` evenly spaced quantiles of the positive heat values of the pool
    /// being evaluated.
    Quantiles(usize),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Quantiles(DEFAULT_THRESHOLD_COUNT)
    }
}

/// Evenly spaced quantiles (ranks `i/(n+1)`, nearest-rank) of the positive
/// entries of `values`, deduplicated and ascending. Falls back to a single
/// threshold of 1.0 when there are no positive values, so that an all-zero
/// heatmap still yields a (trivially empty) prediction sweep.
pub fn quantile_thresholds(values: &[f64], n: usize) -> Vec<f64> {
    let mut positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() || n == 0 {
        return vec![1.0];
    }
    positive.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let q = i as f64 / (n + 1) as f64;
        let rank = ((q * positive.len() as f64).ceil() as usize).max(1) - 1;
        out.push(positive[rank.min(positive.len() - 1)]);
    }
    out.dedup_by(|a, b| a == b);
    out
}

/// One (image, class) evaluation pair.
#[derive(Debug, Clone)]
pub struct EvalPair<'a> {
    pub image_id: String,
    pub class_label: String,
    pub heatmap: &'a Heatmap,
    pub gt: &'a BoundaryMap,
}

/// Per-class AP and maximal F-score.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class_label: String,
    pub average_precision: f64,
    pub max_f_score: f64,
    pub image_count: usize,
}

/// Dataset-level results: one row per class plus the class means.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTable {
    pub per_class: Vec<ClassMetrics>,
    pub mean_average_precision: f64,
    pub mean_max_f_score: f64,
}

/// Dataset evaluation with class pooling: per class, tp/fp/fn are summed
/// across that class's images at each threshold before the PR curve is
/// formed; AP and MF are then averaged over classes.
pub fn evaluate_dataset(
    pairs: &[EvalPair<'_>],
    radius: f64,
    thresholds: &ThresholdPolicy,
) -> Result<EvalTable> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "evaluate_dataset needs at least one (image, class) pair".into(),
        ));
    }
    // stable class order: first appearance
    let mut class_order: Vec<String> = Vec::new();
    for pair in pairs {
        if !class_order.contains(&pair.class_label) {
            class_order.push(pair.class_label.clone());
        }
    }

    let mut per_class = Vec::with_capacity(class_order.len());
    for class in &class_order {
        let members: Vec<&EvalPair<'_>> =
            pairs.iter().filter(|p| &p.class_label == class).collect();
        let thresholds = match thresholds {
            ThresholdPolicy::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidArgument(
                        "threshold list must be non-empty".into(),
                    ));
                }
                list.clone()
            }
            ThresholdPolicy::Quantiles(n) => {
                let pooled: Vec<f64> = members
                    .iter()
                    .flat_map(|p| p.heatmap.values().iter().copied())
                    .collect();
                quantile_thresholds(&pooled, *n)
            }
        };

        let mut pooled: Vec<(usize, usize, usize)> = vec![(0, 0, 0); thresholds.len()];
        for pair in &members {
            let curve = pr_curve(pair.heatmap, pair.gt, radius, &thresholds)?;
            for (acc, point) in pooled.iter_mut().zip(&curve.points) {
                acc.0 += point.tp;
                acc.1 += point.fp;
                acc.2 += point.fn_count;
            }
        }
        let curve = PrCurve {
            points: thresholds
                .iter()
                .zip(&pooled)
                .map(|(&t, &(tp, fp, fn_count))| pr_point(t, tp, fp, fn_count))
                .collect(),
        };
        per_class.push(ClassMetrics {
            class_label: class.clone(),
            average_precision: average_precision(&curve),
            max_f_score: max_fscore(&curve),
            image_count: members.len(),
        });
    }

    let n = per_class.len() as f64;
    let mean_ap = per_class.iter().map(|c| c.average_precision).sum::<f64>() / n;
    let mean_mf = per_class.iter().map(|c| c.max_f_score).sum::<f64>() / n;
    Ok(EvalTable {
        per_class,
        mean_average_precision: mean_ap,
        mean_max_f_score: mean_mf,
    })
}
