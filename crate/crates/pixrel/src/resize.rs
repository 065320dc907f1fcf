//! Resampling to the network's input resolution.
//!
//! Images are resized bilinearly; binary boundary maps use nearest-neighbor
//! so they stay binary.

use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Bilinear resize of a `channels x height x width` tensor (half-pixel
/// centers, edge clamped).
pub fn resize_bilinear(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let shape = image.shape();
    if shape.len() != 3 {
        return Err(Error::InvalidArgument(
            "resize expects a channels x height x width tensor".into(),
        ));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(
            "resize target must be positive".into(),
        ));
    }
    let (channels, in_h, in_w) = (shape[0], shape[1], shape[2]);
    let scale_h = in_h as f64 / out_h as f64;
    let scale_w = in_w as f64 / out_w as f64;
    let mut out = vec![0.0; channels * out_h * out_w];
    for c in 0..channels {
        for r in 0..out_h {
            let src_r = ((r as f64 + 0.5) * scale_h - 0.5).clamp(0.0, (in_h - 1) as f64);
            let r0 = src_r.floor() as usize;
            let r1 = (r0 + 1).min(in_h - 1);
            let fr = src_r - r0 as f64;
            for col in 0..out_w {
                let src_c = ((col as f64 + 0.5) * scale_w - 0.5).clamp(0.0, (in_w - 1) as f64);
                let c0 = src_c.floor() as usize;
                let c1 = (c0 + 1).min(in_w - 1);
                let fc = src_c - c0 as f64;
                let v00 = image.at3(c, r0, c0);
                let v01 = image.at3(c, r0, c1);
                let v10 = image.at3(c, r1, c0);
                let v11 = image.at3(c, r1, c1);
                let top = v00 + (v01 - v00) * fc;
                let bottom = v10 + (v11 - v10) * fc;
                out[(c * out_h + r) * out_w + col] = top + (bottom - top) * fr;
            }
        }
    }
    Ok(Tensor::new(vec![channels, out_h, out_w], out).expect("resized values stay finite"))
}

/// Nearest-neighbor resize of a binary boundary map (half-pixel centers).
pub fn resize_nearest(map: &BoundaryMap, out_h: usize, out_w: usize) -> BoundaryMap {
    assert!(out_h > 0 && out_w > 0, "resize target must be positive");
    let (in_h, in_w) = (map.rows(), map.cols());
    let scale_h = in_h as f64 / out_h as f64;
    let scale_w = in_w as f64 / out_w as f64;
    let mut mask = vec![false; out_h * out_w];
    for (i, cell) in mask.iter_mut().enumerate() {
        let (r, c) = (i / out_w, i % out_w);
        let src_r = (((r as f64 + 0.5) * scale_h).floor() as usize).min(in_h - 1);
        let src_c = (((c as f64 + 0.5) * scale_w).floor() as usize).min(in_w - 1);
        *cell = map.get(src_r, src_c);
    }
    BoundaryMap::new(out_h, out_w, mask, map.label.clone())
        .expect("mask length matches target dimensions")
}
