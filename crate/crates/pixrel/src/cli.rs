//! The `pixrel` command-line pipeline.
//!
//! Five subcommands compose the library: `attribute` writes heatmaps,
//! `evaluate` scores them against boundary ground truth, `perturb` runs the
//! decline study, `synth` generates fixture trees, and `info` prints a model
//! summary. Every artifact-producing command also writes a `manifest.txt`
//! recording the model hash, the seed, and every parameter, so outputs are
//! reproducible byte for byte.
//!
//! Ground truth follows the naming convention
//! `<image stem>.gt.<class>.pgm` next to the images or under `--gt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::attribution::{
    aggregate_subpixels, attribute_with_trace, rectify, AggregationMode, AttributionMethod,
    DeconvRelu, Heatmap, MethodSpec,
};
use crate::boundary::{
    evaluate_dataset, BoundaryMap, EvalPair, ThresholdPolicy, DEFAULT_MATCH_RADIUS,
    DEFAULT_THRESHOLD_COUNT,
};
use crate::error::{Error, Result};
use crate::io::fixture::{generate_fixture, ClassShape, FixtureSpec, ShapeKind};
use crate::io::model::load_model;
use crate::io::pnm::{load_boundary_gt, load_image, render_heatmap_csv, render_heatmap_pgm};
use crate::io::report::{render_eval_table, render_study_table};
use crate::network::{forward, validate_model, NetworkModel};
use crate::perturbation::{
    gt_vs_method_study, PerturbationDistribution, PerturbationSpec, StudyCase,
};
use crate::resize::{resize_bilinear, resize_nearest};
use crate::rng::RNG_ALGORITHM;
use crate::tensor::Tensor;

#[derive(Debug, Parser)]
#[command(
    name = "pixrel",
    version,
    about = "Pixel-wise attribution, boundary scoring, and perturbation analysis for image classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute attribution heatmaps for images (P5 render + exact CSV).
    Attribute(AttributeArgs),
    /// Score heatmaps as boundary predictions: per-class and mean AP/MF.
    Evaluate(EvaluateArgs),
    /// Expected-decline study: ground-truth pixels vs a method's top pixels.
    Perturb(PerturbArgs),
    /// Generate a synthetic fixture tree (images, ground truth, detector).
    Synth(SynthArgs),
    /// Print a model's shape chain and parameter counts.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Gradient,
    Deconv,
    LrpEps,
    LrpAb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggName {
    Sum,
    Negsum,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeconvReluName {
    Pass,
    Rectify,
}

/// Method selection shared by attribute/evaluate/perturb.
#[derive(Debug, Args)]
pub struct MethodOpts {
    /// Attribution method.
    #[arg(long, value_enum, default_value = "lrp-eps")]
    pub method: MethodName,
    /// Epsilon of the LRP ε-rule (0 gives the plain rule).
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Alpha of the LRP αβ-rule (needs alpha + beta = 1, alpha > 0).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Beta of the LRP αβ-rule (needs beta <= 0).
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// ReLU handling on the deconvolution backward path.
    #[arg(long, value_enum, default_value = "pass")]
    pub deconv_relu: DeconvReluName,
    /// Subpixel aggregation into the pixel heatmap.
    #[arg(long, value_enum, default_value = "sum")]
    pub agg: AggName,
    /// Set negative pixel scores to zero after aggregation.
    #[arg(long, default_value_t = false)]
    pub rectify: bool,
}

impl MethodOpts {
    /// Validates the parameter combination; runs before any work starts.
    pub fn resolve(&self) -> Result<MethodSpec> {
        let method = match self.method {
            MethodName::Gradient => AttributionMethod::Gradient,
            MethodName::Deconv => AttributionMethod::Deconvolution {
                relu: match self.deconv_relu {
                    DeconvReluName::Pass => DeconvRelu::PassThrough,
                    DeconvReluName::Rectify => DeconvRelu::Rectify,
                },
            },
            MethodName::LrpEps => AttributionMethod::lrp_epsilon(self.eps)?,
            MethodName::LrpAb => AttributionMethod::lrp_alpha_beta(self.alpha, self.beta)?,
        };
        let aggregation = match self.agg {
            AggName::Sum => AggregationMode::SumChannels,
            AggName::Negsum => AggregationMode::NegativeSum,
            AggName::L2 => AggregationMode::L2Norm,
        };
        Ok(MethodSpec::new(method.tag(), method, aggregation))
    }

    fn manifest_lines(&self, out: &mut String) {
        let _ = writeln!(out, "method {}", tag_of(self.method));
        match self.method {
            MethodName::LrpEps => {
                let _ = writeln!(out, "eps {}", self.eps);
            }
            MethodName::LrpAb => {
                let _ = writeln!(out, "alpha {}", self.alpha);
                let _ = writeln!(out, "beta {}", self.beta);
            }
            MethodName::Deconv => {
                let _ = writeln!(
                    out,
                    "deconv-relu {}",
                    match self.deconv_relu {
                        DeconvReluName::Pass => "pass",
                        DeconvReluName::Rectify => "rectify",
                    }
                );
            }
            MethodName::Gradient => {}
        }
        let _ = writeln!(
            out,
            "agg {}",
            match self.agg {
                AggName::Sum => "sum",
                AggName::Negsum => "negsum",
                AggName::L2 => "l2",
            }
        );
        let _ = writeln!(out, "rectify {}", self.rectify);
    }
}

fn tag_of(name: MethodName) -> &'static str {
    match name {
        MethodName::Gradient => "gradient",
        MethodName::Deconv => "deconv",
        MethodName::LrpEps => "lrp-eps",
        MethodName::LrpAb => "lrp-ab",
    }
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Image files or directories of .ppm images.
    #[arg(long, required = true, num_args = 1..)]
    pub images: Vec<PathBuf>,
    /// Class selection: a class label, or "predicted" for all classes with
    /// f_c(x) >= tau.
    #[arg(long, default_value = "predicted")]
    pub class: String,
    /// Score threshold for predicted-class selection.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    pub method: MethodOpts,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed recorded in the manifest (attribution itself is deterministic).
    #[arg(long, env = "PIXREL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub images: Vec<PathBuf>,
    /// Directory holding `<image stem>.gt.<class>.pgm` maps (defaults to
    /// each image's own directory).
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Class selection: a label, "predicted", or omitted to evaluate every
    /// class that has ground truth for an image.
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    pub method: MethodOpts,
    /// Neighborhood radius for tolerant matching.
    #[arg(long, default_value_t = DEFAULT_MATCH_RADIUS)]
    pub radius: f64,
    /// Number of quantile thresholds swept per class.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_COUNT)]
    pub num_thresholds: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "PIXREL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub images: Vec<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Class selection: a label, "predicted", or omitted for gt-present
    /// classes.
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    pub method: MethodOpts,
    /// Perturbation distribution: "uniform01" or "fixed:<value>".
    #[arg(long, default_value = "uniform01")]
    pub dist: String,
    /// Perturbation repetitions per pixel set.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "PIXREL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Image side length.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    /// Classes as `name`, or `name:kind` with kind square|disc|triangle
    /// (a bare name that is itself a kind uses that kind).
    #[arg(long, default_value = "square")]
    pub classes: String,
    /// Images per class.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Shape-free background images.
    #[arg(long, default_value_t = 2)]
    pub negatives: usize,
    /// Uniform noise amplitude in [0, 0.4].
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "PIXREL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub model: PathBuf,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("pixrel: {err}");
            1
        }
    }
}

/// Runs a parsed command. Exit code 0 (Ok) means every requested output was
/// produced.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Attribute(args) => cmd_attribute(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Perturb(args) => cmd_perturb(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Info(args) => cmd_info(&args),
    }
}

/// Expands files/directories into a sorted list of .ppm image paths.
fn list_images(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut images = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "ppm"))
                .collect();
            found.sort();
            images.extend(found);
        } else {
            images.push(input.clone());
        }
    }
    if images.is_empty() {
        return Err(Error::InvalidArgument("no input images found".into()));
    }
    Ok(images)
}

fn image_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

/// Loads an image and resizes it (bilinear) to the model input if needed.
fn load_model_input(model: &NetworkModel, path: &Path) -> Result<Tensor> {
    let tensor = load_image(path)?;
    let (c, h, w) = model.input_shape;
    if tensor.shape() == [c, h, w] {
        return Ok(tensor);
    }
    if tensor.shape()[0] != c {
        return Err(Error::ShapeMismatch {
            layer: 0,
            expected: format!("{c} channels"),
            found: format!("{} channels in {}", tensor.shape()[0], path.display()),
        });
    }
    resize_bilinear(&tensor, h, w)
}

/// The ground-truth path convention for an (image, class) pair.
fn gt_path_for(gt_dir: Option<&Path>, image_path: &Path, class: &str) -> PathBuf {
    let dir = gt_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| image_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    dir.join(format!("{}.gt.{class}.pgm", image_stem(image_path)))
}

/// Resolves which classes to attribute for one image.
fn select_classes(
    model: &NetworkModel,
    scores: &[f64],
    selection: &str,
    tau: f64,
) -> Result<Vec<usize>> {
    if selection == "predicted" {
        Ok((0..model.class_count())
            .filter(|&c| scores[c] >= tau)
            .collect())
    } else {
        let index = model.class_index(selection).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "class {selection:?} is not one of the model's classes ({})",
                model.class_names.join(", ")
            ))
        })?;
        Ok(vec![index])
    }
}

fn manifest_header(command: &str, model_path: &Path, seed: u64) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "pixrel-manifest 1");
    let _ = writeln!(out, "command {command}");
    let _ = writeln!(out, "model {}", model_path.display());
    let _ = writeln!(out, "model-sha256 {}", sha256_hex(model_path)?);
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "rng {RNG_ALGORITHM}");
    Ok(out)
}

fn cmd_attribute(args: &AttributeArgs) -> Result<()> {
    let spec = args.method.resolve()?;
    let model = load_model(&args.model)?;
    if args.class != "predicted" && model.class_index(&args.class).is_none() {
        return Err(Error::InvalidArgument(format!(
            "class {:?} is not one of the model's classes ({})",
            args.class,
            model.class_names.join(", ")
        )));
    }
    let images = list_images(&args.images)?;
    fs::create_dir_all(&args.out)?;

    struct ImageOutput {
        stem: String,
        files: Vec<(String, Vec<u8>)>,
        no_classes: bool,
    }

    let outputs: Result<Vec<ImageOutput>> = images
        .par_iter()
        .map(|path| {
            let stem = image_stem(path);
            let input = load_model_input(&model, path)?;
            let (scores, trace) = forward(&model, &input)?;
            let classes = select_classes(&model, &scores, &args.class, args.tau)?;
            let mut files = Vec::new();
            for class_index in &classes {
                let map = attribute_with_trace(&model, &trace, *class_index, spec.method)?;
                let mut heat = aggregate_subpixels(&map, spec.aggregation);
                if args.method.rectify {
                    heat = rectify(&heat);
                }
                let base = format!(
                    "{stem}.{}.{}",
                    model.class_names[*class_index],
                    spec.method.tag()
                );
                files.push((format!("{base}.pgm"), render_heatmap_pgm(&heat)));
                files.push((
                    format!("{base}.csv"),
                    render_heatmap_csv(&heat).into_bytes(),
                ));
            }
            Ok(ImageOutput {
                stem,
                files,
                no_classes: classes.is_empty(),
            })
        })
        .collect();
    let outputs = outputs?;

    let mut manifest = manifest_header("attribute", &args.model, args.seed)?;
    let _ = writeln!(manifest, "class {}", args.class);
    let _ = writeln!(manifest, "tau {}", args.tau);
    args.method.manifest_lines(&mut manifest);
    for output in &outputs {
        if output.no_classes {
            let _ = writeln!(manifest, "note {}: no classes above threshold", output.stem);
        }
        for (name, bytes) in &output.files {
            fs::write(args.out.join(name), bytes)?;
            let _ = writeln!(manifest, "output {name}");
        }
    }
    fs::write(args.out.join("manifest.txt"), manifest)?;
    Ok(())
}

/// Builds the (image, class, heatmap, gt) sets shared by evaluate and
/// perturb: per image, the requested classes with their ground-truth maps.
struct DatasetCase {
    image_id: String,
    class_label: String,
    class_index: usize,
    input: Tensor,
    gt: BoundaryMap,
}

fn collect_cases(
    model: &NetworkModel,
    images: &[PathBuf],
    gt_dir: Option<&Path>,
    class: Option<&str>,
    tau: f64,
) -> Result<Vec<DatasetCase>> {
    let (_, in_h, in_w) = model.input_shape;
    let mut cases = Vec::new();
    for path in images {
        let stem = image_stem(path);
        let input = load_model_input(model, path)?;

        let class_indices: Vec<usize> = match class {
            Some("predicted") => {
                let (scores, _) = forward(model, &input)?;
                (0..model.class_count())
                    .filter(|&c| scores[c] >= tau)
                    .collect()
            }
            Some(label) => vec![model.class_index(label).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "class {label:?} is not one of the model's classes ({})",
                    model.class_names.join(", ")
                ))
            })?],
            // gt-present classes
            None => (0..model.class_count())
                .filter(|&c| gt_path_for(gt_dir, path, &model.class_names[c]).exists())
                .collect(),
        };

        for class_index in class_indices {
            let label = model.class_names[class_index].clone();
            let gt_path = gt_path_for(gt_dir, path, &label);
            if !gt_path.exists() {
                return Err(Error::MissingGroundTruth {
                    image: stem.clone(),
                    class: label,
                });
            }
            let mut gt = load_boundary_gt(&gt_path, label.clone())?;
            if gt.rows() != in_h || gt.cols() != in_w {
                gt = resize_nearest(&gt, in_h, in_w);
            }
            cases.push(DatasetCase {
                image_id: stem.clone(),
                class_label: label,
                class_index,
                input: input.clone(),
                gt,
            });
        }
    }
    if cases.is_empty() {
        return Err(Error::InvalidArgument(
            "no (image, class) pairs with ground truth to process".into(),
        ));
    }
    Ok(cases)
}

fn heatmap_for_case(
    model: &NetworkModel,
    spec: &MethodSpec,
    rectify_flag: bool,
    case: &DatasetCase,
) -> Result<Heatmap> {
    let (_, trace) = forward(model, &case.input)?;
    let map = attribute_with_trace(model, &trace, case.class_index, spec.method)?;
    let mut heat = aggregate_subpixels(&map, spec.aggregation);
    if rectify_flag {
        heat = rectify(&heat);
    }
    Ok(heat)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let spec = args.method.resolve()?;
    let model = load_model(&args.model)?;
    let images = list_images(&args.images)?;
    let cases = collect_cases(
        &model,
        &images,
        args.gt.as_deref(),
        args.class.as_deref(),
        args.tau,
    )?;

    let heatmaps: Result<Vec<Heatmap>> = cases
        .par_iter()
        .map(|case| heatmap_for_case(&model, &spec, args.method.rectify, case))
        .collect();
    let heatmaps = heatmaps?;

    let pairs: Vec<EvalPair<'_>> = cases
        .iter()
        .zip(&heatmaps)
        .map(|(case, heatmap)| EvalPair {
            image_id: case.image_id.clone(),
            class_label: case.class_label.clone(),
            heatmap,
            gt: &case.gt,
        })
        .collect();
    let table = evaluate_dataset(
        &pairs,
        args.radius,
        &ThresholdPolicy::Quantiles(args.num_thresholds),
    )?;

    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("evaluation.tsv"),
        render_eval_table(spec.method.tag(), &table),
    )?;

    let mut manifest = manifest_header("evaluate", &args.model, args.seed)?;
    let _ = writeln!(manifest, "class {}", args.class.as_deref().unwrap_or("gt-present"));
    let _ = writeln!(manifest, "tau {}", args.tau);
    args.method.manifest_lines(&mut manifest);
    let _ = writeln!(manifest, "radius {}", args.radius);
    let _ = writeln!(manifest, "num-thresholds {}", args.num_thresholds);
    let _ = writeln!(manifest, "cases {}", pairs.len());
    let _ = writeln!(manifest, "output evaluation.tsv");
    fs::write(args.out.join("manifest.txt"), manifest)?;
    Ok(())
}

fn parse_distribution(token: &str) -> Result<PerturbationDistribution> {
    if token == "uniform01" {
        return Ok(PerturbationDistribution::Uniform01);
    }
    if let Some(value) = token.strip_prefix("fixed:") {
        let v: f64 = value.parse().map_err(|_| {
            Error::InvalidArgument(format!("bad fixed distribution value {value:?}"))
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "fixed distribution value must be in [0, 1], got {v}"
            )));
        }
        return Ok(PerturbationDistribution::FixedValue(vec![v]));
    }
    Err(Error::InvalidArgument(format!(
        "distribution must be \"uniform01\" or \"fixed:<value>\", got {token:?}"
    )))
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let spec = args.method.resolve()?;
    let distribution = parse_distribution(&args.dist)?;
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be >= 1".into()));
    }
    let model = load_model(&args.model)?;
    let images = list_images(&args.images)?;
    let cases = collect_cases(
        &model,
        &images,
        args.gt.as_deref(),
        args.class.as_deref(),
        args.tau,
    )?;

    let study_cases: Vec<StudyCase<'_>> = cases
        .iter()
        .map(|case| StudyCase {
            image_id: case.image_id.clone(),
            class_label: case.class_label.clone(),
            image: &case.input,
            gt: &case.gt,
        })
        .collect();
    let perturbation = PerturbationSpec {
        distribution,
        repetitions: args.reps,
        seed: args.seed,
    };
    let table = gt_vs_method_study(&model, &study_cases, std::slice::from_ref(&spec), &perturbation)?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("study.tsv"), render_study_table(&table))?;

    let mut manifest = manifest_header("perturb", &args.model, args.seed)?;
    let _ = writeln!(manifest, "class {}", args.class.as_deref().unwrap_or("gt-present"));
    let _ = writeln!(manifest, "tau {}", args.tau);
    args.method.manifest_lines(&mut manifest);
    let _ = writeln!(manifest, "dist {}", args.dist);
    let _ = writeln!(manifest, "reps {}", args.reps);
    let _ = writeln!(manifest, "cases {}", table.case_count);
    let _ = writeln!(manifest, "output study.tsv");
    fs::write(args.out.join("manifest.txt"), manifest)?;
    Ok(())
}

fn parse_classes(token: &str) -> Result<Vec<ClassShape>> {
    let mut classes = Vec::new();
    for part in token.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, kind) = match part.split_once(':') {
            Some((name, kind_token)) => {
                let kind = ShapeKind::parse(kind_token).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown shape kind {kind_token:?} (square|disc|triangle)"
                    ))
                })?;
                (name.to_string(), kind)
            }
            None => {
                let kind = ShapeKind::parse(part).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "class {part:?} is not a shape kind; use name:kind"
                    ))
                })?;
                (part.to_string(), kind)
            }
        };
        classes.push(ClassShape { name, kind });
    }
    if classes.is_empty() {
        return Err(Error::InvalidArgument("no classes given".into()));
    }
    Ok(classes)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = FixtureSpec {
        image_size: args.size,
        classes: parse_classes(&args.classes)?,
        images_per_class: args.count,
        negatives: args.negatives,
        noise: args.noise,
        seed: args.seed,
    };
    let summary = generate_fixture(&spec, &args.out)?;
    println!(
        "fixture: {} images, {} classes, model {}",
        summary.images.len(),
        summary.class_names.len(),
        summary.model_path.display()
    );
    Ok(())
}

fn cmd_info(args: &InfoArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let chain = validate_model(&model)?;
    println!("model {}", args.model.display());
    println!("sha256 {}", sha256_hex(&args.model)?);
    println!("input {}", chain[0]);
    println!("classes {}", model.class_names.join(" "));
    for (index, layer) in model.layers.iter().enumerate() {
        println!(
            "layer {index} {} -> {} (params {})",
            layer.kind_name(),
            chain[index + 1],
            layer.parameter_count()
        );
    }
    println!("parameters {}", model.parameter_count());
    Ok(())
}
