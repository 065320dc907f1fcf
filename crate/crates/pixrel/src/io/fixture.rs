//! Synthetic fixture generation: filled-shape images, per-class boundary
//! ground truth, and a hand-constructed detector model that scores
//! shape-present images above shape-free ones.
//!
//! Images are RGB with a bright filled shape on a dark background plus
//! bounded uniform noise. Ground truth marks the shape outline (shape cells
//! with a 4-neighbor outside the shape). The detector is a brightness-window
//! scorer: two thresholded 4x4 averaging filters, ReLU, an overlapping max
//! pool, and an all-ones dense readout whose bias is placed midway between
//! the strongest shape-free and the weakest shape-bearing response of the
//! emitted set. Everything is deterministic in the fixture seed; a self-test
//! verifies the score ordering before the tree is considered valid.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::io::model::save_model;
use crate::io::pnm::{save_boundary_gt, save_image};
use crate::network::{forward, LayerSpec, NetworkModel};
use crate::rng::seeded_rng;
use crate::tensor::Tensor;

/// Background and fill intensities of fixture images.
const BACKGROUND: f64 = 0.15;
const FILL: f64 = 0.85;

/// Detector constants. The conv filters average a window's weighted channel
/// mix; the biases threshold that average well above any noisy background.
const CHANNEL_MIX: [f64; 3] = [0.5, 0.3, 0.2];
const DETECTOR_KERNEL: usize = 4;
const DETECTOR_BIASES: [f64; 2] = [-0.60, -0.72];
const POOL_WINDOW: usize = 8;
const POOL_STRIDE: usize = 3;

/// Margin kept between any shape and the image border.
const SHAPE_MARGIN: usize = 2;

/// The filled-shape kinds a fixture class can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Square,
    Disc,
    Triangle,
}

impl ShapeKind {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "square" => Some(ShapeKind::Square),
            "disc" => Some(ShapeKind::Disc),
            "triangle" => Some(ShapeKind::Triangle),
            _ => None,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Disc => "disc",
            ShapeKind::Triangle => "triangle",
        }
    }
}

/// One fixture class: a label and the shape drawn for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassShape {
    pub name: String,
    pub kind: ShapeKind,
}

/// Everything that determines a fixture tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    /// Images are `image_size x image_size`.
    pub image_size: usize,
    pub classes: Vec<ClassShape>,
    pub images_per_class: usize,
    /// Shape-free background images (no ground truth).
    pub negatives: usize,
    /// Uniform noise amplitude added per subpixel, in [0, 0.4].
    pub noise: f64,
    pub seed: u64,
}

impl FixtureSpec {
    fn validate(&self) -> Result<()> {
        if self.image_size < 12 {
            return Err(Error::InvalidArgument(
                "fixture image size must be at least 12".into(),
            ));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidArgument(
                "fixture needs at least one class".into(),
            ));
        }
        if self.images_per_class == 0 {
            return Err(Error::InvalidArgument(
                "fixture needs at least one image per class".into(),
            ));
        }
        if !(0.0..=0.4).contains(&self.noise) {
            return Err(Error::InvalidArgument(format!(
                "fixture noise must be in [0, 0.4], got {}",
                self.noise
            )));
        }
        for class in &self.classes {
            if class.name.is_empty() || class.name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "class name {:?} must be non-empty and whitespace-free",
                    class.name
                )));
            }
        }
        Ok(())
    }
}

/// One emitted image with its optional class and ground-truth file.
#[derive(Debug, Clone)]
pub struct FixtureImage {
    pub id: String,
    pub image_path: PathBuf,
    pub class: Option<String>,
    pub gt_path: Option<PathBuf>,
}

/// What [`generate_fixture`] wrote, with the detector threshold it chose.
#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub model_path: PathBuf,
    pub manifest_path: PathBuf,
    pub images: Vec<FixtureImage>,
    pub class_names: Vec<String>,
    pub detector_threshold: f64,
}

/// A filled-shape placement within an image.
#[derive(Debug, Clone, Copy)]
struct Placement {
    kind: ShapeKind,
    row0: usize,
    col0: usize,
    size: usize,
}

/// Cells covered by the filled shape.
fn shape_mask(size: usize, placement: Placement) -> Vec<bool> {
    let mut mask = vec![false; size * size];
    let Placement {
        kind,
        row0,
        col0,
        size: s,
    } = placement;
    match kind {
        ShapeKind::Square => {
            for r in row0..row0 + s {
                for c in col0..col0 + s {
                    mask[r * size + c] = true;
                }
            }
        }
        ShapeKind::Disc => {
            // `s` is the diameter; the center sits on the half-grid
            let radius = s as f64 / 2.0;
            let cy = row0 as f64 + radius - 0.5;
            let cx = col0 as f64 + radius - 0.5;
            for r in row0..row0 + s {
                for c in col0..col0 + s {
                    let dr = r as f64 - cy;
                    let dc = c as f64 - cx;
                    if dr * dr + dc * dc <= radius * radius {
                        mask[r * size + c] = true;
                    }
                }
            }
        }
        ShapeKind::Triangle => {
            for r in row0..row0 + s {
                for c in col0..col0 + s {
                    if (r - row0) + (c - col0) < s {
                        mask[r * size + c] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Shape cells with at least one 4-neighbor outside the shape.
pub(crate) fn outline_of(mask: &[bool], size: usize) -> Vec<bool> {
    let mut outline = vec![false; size * size];
    for r in 0..size {
        for c in 0..size {
            if !mask[r * size + c] {
                continue;
            }
            let outside = (r == 0 || !mask[(r - 1) * size + c])
                || (r + 1 >= size || !mask[(r + 1) * size + c])
                || (c == 0 || !mask[r * size + c - 1])
                || (c + 1 >= size || !mask[r * size + c + 1]);
            if outside {
                outline[r * size + c] = true;
            }
        }
    }
    outline
}

/// Renders the image tensor for a placement (or background only), quantized
/// to the 8-bit values that will land on disk.
fn render_image<R: Rng>(
    size: usize,
    placement: Option<Placement>,
    noise: f64,
    rng: &mut R,
) -> Tensor {
    let mask = placement.map(|p| shape_mask(size, p));
    let mut data = vec![0.0; 3 * size * size];
    for i in 0..size * size {
        let base = match &mask {
            Some(m) if m[i] => FILL,
            _ => BACKGROUND,
        };
        for c in 0..3 {
            let jitter = if noise > 0.0 {
                rng.random::<f64>() * 2.0 * noise - noise
            } else {
                0.0
            };
            let v = (base + jitter).clamp(0.0, 1.0);
            // quantize exactly as the P6 writer will
            data[c * size * size + i] = (v * 255.0).round() / 255.0;
        }
    }
    Tensor::new(vec![3, size, size], data).expect("rendered values are finite")
}

fn draw_placement<R: Rng>(size: usize, kind: ShapeKind, rng: &mut R) -> Placement {
    let lo = (size / 3).max(4);
    let hi = (size / 2).max(lo);
    let s = rng.random_range(lo..=hi);
    let max_origin = size - s - SHAPE_MARGIN;
    let row0 = rng.random_range(SHAPE_MARGIN..=max_origin);
    let col0 = rng.random_range(SHAPE_MARGIN..=max_origin);
    Placement {
        kind,
        row0,
        col0,
        size: s,
    }
}

/// Builds the detector stack for `size`-pixel images with `classes` outputs
/// and the given dense bias.
fn detector_model(size: usize, class_names: Vec<String>, dense_bias: f64) -> NetworkModel {
    let taps = DETECTOR_KERNEL * DETECTOR_KERNEL;
    let mut filters = Vec::with_capacity(DETECTOR_BIASES.len() * 3 * taps);
    for _ in DETECTOR_BIASES {
        for mix in CHANNEL_MIX {
            filters.extend(std::iter::repeat_n(mix / taps as f64, taps));
        }
    }
    let conv_h = size - DETECTOR_KERNEL + 1;
    let pooled = (conv_h - POOL_WINDOW) / POOL_STRIDE + 1;
    let dense_in = DETECTOR_BIASES.len() * pooled * pooled;
    let class_count = class_names.len();
    NetworkModel {
        input_shape: (3, size, size),
        layers: vec![
            LayerSpec::Conv2D {
                out_channels: DETECTOR_BIASES.len(),
                in_channels: 3,
                kernel: (DETECTOR_KERNEL, DETECTOR_KERNEL),
                stride: (1, 1),
                padding: (0, 0),
                filters,
                bias: DETECTOR_BIASES.to_vec(),
            },
            LayerSpec::ReLU,
            LayerSpec::MaxPool2D {
                window: (POOL_WINDOW, POOL_WINDOW),
                stride: (POOL_STRIDE, POOL_STRIDE),
            },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                out_features: class_count,
                in_features: dense_in,
                weights: vec![1.0; class_count * dense_in],
                bias: vec![dense_bias; class_count],
            },
        ],
        class_names,
    }
}

/// Generates the fixture tree: images, per-class ground truth, the detector
/// model, and a manifest. Deterministic in `spec.seed`; identical specs
/// produce byte-identical trees.
pub fn generate_fixture(spec: &FixtureSpec, out_dir: &Path) -> Result<FixtureSummary> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut rng = seeded_rng(spec.seed);
    let size = spec.image_size;

    struct Pending {
        id: String,
        tensor: Tensor,
        class: Option<String>,
        outline: Option<Vec<bool>>,
    }

    let mut pending = Vec::new();
    for class in &spec.classes {
        for index in 0..spec.images_per_class {
            let placement = draw_placement(size, class.kind, &mut rng);
            let tensor = render_image(size, Some(placement), spec.noise, &mut rng);
            let outline = outline_of(&shape_mask(size, placement), size);
            pending.push(Pending {
                id: format!("{}_{index:03}", class.name),
                tensor,
                class: Some(class.name.clone()),
                outline: Some(outline),
            });
        }
    }
    for index in 0..spec.negatives {
        let tensor = render_image(size, None, spec.noise, &mut rng);
        pending.push(Pending {
            id: format!("none_{index:03}"),
            tensor,
            class: None,
            outline: None,
        });
    }

    // place the dense bias midway between the strongest shape-free response
    // and the weakest shape-bearing response
    let class_names: Vec<String> = spec.classes.iter().map(|c| c.name.clone()).collect();
    let probe = detector_model(size, class_names.clone(), 0.0);
    let mut min_present = f64::INFINITY;
    let mut max_absent: f64 = 0.0;
    for item in &pending {
        let (scores, _) = forward(&probe, &item.tensor)?;
        if item.class.is_some() {
            min_present = min_present.min(scores[0]);
        } else {
            max_absent = max_absent.max(scores[0]);
        }
    }
    if max_absent >= min_present {
        return Err(Error::FixtureSelfTest(format!(
            "weakest shape response {min_present} does not exceed strongest background response {max_absent}"
        )));
    }
    let threshold = (max_absent + min_present) / 2.0;
    let model = detector_model(size, class_names.clone(), -threshold);

    // self-test on the final model: present scores above absent, and signs
    // split at zero so predicted-class selection works out of the box
    for item in &pending {
        let (scores, _) = forward(&model, &item.tensor)?;
        let ok = if item.class.is_some() {
            scores[0] > 0.0
        } else {
            scores[0] < 0.0
        };
        if !ok {
            return Err(Error::FixtureSelfTest(format!(
                "image {} scored {} on the wrong side of zero",
                item.id, scores[0]
            )));
        }
    }

    let model_path = out_dir.join("model.pxm");
    save_model(&model, &model_path)?;

    let mut images = Vec::with_capacity(pending.len());
    for item in &pending {
        let image_path = out_dir.join(format!("{}.ppm", item.id));
        save_image(&item.tensor, &image_path)?;
        let gt_path = match (&item.class, &item.outline) {
            (Some(class), Some(outline)) => {
                let path = out_dir.join(format!("{}.gt.{class}.pgm", item.id));
                let map = BoundaryMap::new(size, size, outline.clone(), class.clone())?;
                save_boundary_gt(&map, &path)?;
                Some(path)
            }
            _ => None,
        };
        images.push(FixtureImage {
            id: item.id.clone(),
            image_path,
            class: item.class.clone(),
            gt_path,
        });
    }

    let mut manifest = String::new();
    let _ = writeln!(manifest, "pixrel-fixture 1");
    let _ = writeln!(manifest, "seed {}", spec.seed);
    let _ = writeln!(manifest, "image-size {size}");
    let _ = writeln!(manifest, "noise {:.6}", spec.noise);
    let _ = writeln!(manifest, "images-per-class {}", spec.images_per_class);
    let _ = writeln!(manifest, "negatives {}", spec.negatives);
    for class in &spec.classes {
        let _ = writeln!(manifest, "class {} {}", class.name, class.kind.tag());
    }
    let _ = writeln!(manifest, "detector-threshold {threshold:.17e}");
    let _ = writeln!(manifest, "model model.pxm");
    for image in &images {
        let _ = writeln!(
            manifest,
            "image {}.ppm class={}",
            image.id,
            image.class.as_deref().unwrap_or("-")
        );
    }
    let manifest_path = out_dir.join("fixture.manifest");
    fs::write(&manifest_path, manifest)?;

    Ok(FixtureSummary {
        model_path,
        manifest_path,
        images,
        class_names,
        detector_threshold: threshold,
    })
}
