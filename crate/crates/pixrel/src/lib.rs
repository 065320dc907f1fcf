//! Pixel-wise attribution for feed-forward image classifiers, with
//! boundary-detection scoring and perturbation analysis.
//!
//! The crate is organized around a two-step pipeline: run a whole-image
//! classifier forward, then walk its computation backward to assign each
//! input pixel a class-specific score. Those scores can be evaluated as
//! semantic-boundary predictions (average precision, maximal F-score with
//! neighborhood-tolerant matching) or probed directly with Monte-Carlo
//! perturbation of chosen pixel sets.
//!
//! - [`network`] — dense/conv/pool/ReLU/flatten inference with full
//!   activation recording and exact input gradients.
//! - [`attribution`] — gradient, deconvolution, and layer-wise relevance
//!   propagation (ε and αβ rules) backward passes, plus subpixel
//!   aggregation into heatmaps.
//! - [`boundary`] — tolerant boundary matching, PR curves, AP/MF, and
//!   dataset-level pooling.
//! - [`perturbation`] — expected prediction decline when pixel sets are
//!   randomized, and ground-truth versus method comparisons.
//! - [`io`] — model files, portable pixmaps, heatmap CSVs, synthetic
//!   fixture generation, and TSV reports.
//! - [`cli`] — the `pixrel` command-line pipeline built from the above.
//!
//! Everything is double precision, deterministic under explicit seeds, and
//! safe to run concurrently: traces and models are immutable after
//! construction, and all random draws come from indexed streams.
//!
//! See the crate's `examples/` directory for one runnable walkthrough per
//! capability.

pub mod attribution;
pub mod boundary;
pub mod cli;
pub mod error;
pub mod io;
pub mod network;
pub mod perturbation;
pub mod resize;
pub mod rng;
pub mod tensor;

pub use attribution::{
    aggregate_subpixels, attribute, attribute_with_trace, rectify, AggregationMode,
    AttributionMethod, DeconvRelu, Heatmap, MethodSpec, RelevanceMap,
};
pub use boundary::{
    average_precision, evaluate_dataset, match_counts, max_fscore, pr_curve, thicken, BoundaryMap,
    EvalPair, EvalTable, PrCurve, PrPoint, ThresholdPolicy,
};
pub use error::{Error, Result};
pub use network::{
    forward, input_gradient, validate_model, ActivationTrace, LayerShape, LayerSpec, NetworkModel,
};
pub use perturbation::{
    expected_decline, gt_vs_method_study, perturb_once, top_k_pixels, PerturbationDistribution,
    PerturbationResult, PerturbationSpec, PixelSet, StudyCase, StudyTable,
};
pub use tensor::Tensor;
