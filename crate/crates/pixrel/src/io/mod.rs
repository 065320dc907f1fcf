//! Bit-exact persistence: model files, portable pixmaps, heatmap CSVs,
//! fixture trees, and report tables.

pub mod fixture;
pub mod model;
pub mod pnm;
pub mod report;

pub use fixture::{generate_fixture, ClassShape, FixtureImage, FixtureSpec, FixtureSummary, ShapeKind};
pub use model::{load_model, save_model, save_model_with, WeightEncoding};
pub use pnm::{
    load_boundary_gt, load_heatmap_csv, load_image, save_boundary_gt, save_heatmap, save_image,
    HeatmapFormat,
};
pub use report::{render_eval_table, render_study_table, MEAN_ROW_LABEL};
