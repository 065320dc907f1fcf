//! Binary portable pixmaps (P6) and graymaps (P5), plus full-precision CSV
//! persistence for heatmaps.
//!
//! Conventions:
//! - images are P6 with maxval 255; bytes map to reals as `v / 255`;
//! - heatmaps render to P5 by min-max normalization (a constant map renders
//!   as mid-gray 128), or round-trip exactly through CSV;
//! - ground-truth boundary maps are P5 where any nonzero byte is a boundary
//!   pixel.

use std::fs;
use std::path::Path;

use crate::attribution::Heatmap;
use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Byte-level pixmap with 1 (P5) or 3 (P6) channels.
struct RawPnm {
    channels: usize,
    width: usize,
    height: usize,
    bytes: Vec<u8>,
}

fn parse_pnm(data: &[u8], context: &str) -> Result<RawPnm> {
    let mut pos = 0usize;

    let magic = take_token(data, &mut pos, context)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => {
            return Err(Error::parse(
                context,
                "offset 0",
                format!("expected P5 or P6 magic, found {other:?}"),
            ))
        }
    };
    let width = parse_dim(data, &mut pos, context, "width")?;
    let height = parse_dim(data, &mut pos, context, "height")?;
    let maxval = parse_dim(data, &mut pos, context, "maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval as u32));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(Error::parse(
            context,
            format!("offset {pos}"),
            "missing whitespace before raster",
        ));
    }
    pos += 1;

    let expected = width * height * channels;
    let raster = &data[pos..];
    if raster.len() < expected {
        return Err(Error::parse(
            context,
            format!("offset {}", data.len()),
            format!(
                "raster truncated: expected {expected} bytes, found {}",
                raster.len()
            ),
        ));
    }
    Ok(RawPnm {
        channels,
        width,
        height,
        bytes: raster[..expected].to_vec(),
    })
}

/// Reads the next whitespace-delimited token, skipping `#` comments.
fn take_token(data: &[u8], pos: &mut usize, context: &str) -> Result<String> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(
            context,
            format!("offset {start}"),
            "unexpected end of header",
        ));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

fn parse_dim(data: &[u8], pos: &mut usize, context: &str, what: &str) -> Result<usize> {
    let token = take_token(data, pos, context)?;
    let value: usize = token.parse().map_err(|_| {
        Error::parse(
            context,
            format!("offset {}", *pos),
            format!("invalid {what} {token:?}"),
        )
    })?;
    if what != "maxval" && value == 0 {
        return Err(Error::parse(
            context,
            format!("offset {}", *pos),
            format!("{what} must be positive"),
        ));
    }
    Ok(value)
}

/// Loads a P6 (RGB) or P5 (grayscale) image as a `channels x height x width`
/// tensor with values in [0, 1].
pub fn load_image(path: &Path) -> Result<Tensor> {
    let data = fs::read(path)?;
    let raw = parse_pnm(&data, &path.display().to_string())?;
    let mut out = vec![0.0; raw.channels * raw.height * raw.width];
    let plane = raw.height * raw.width;
    for (i, px) in raw.bytes.chunks_exact(raw.channels).enumerate() {
        for (c, &b) in px.iter().enumerate() {
            out[c * plane + i] = f64::from(b) / 255.0;
        }
    }
    Tensor::new(vec![raw.channels, raw.height, raw.width], out)
}

/// Writes a `channels x height x width` tensor with values in [0, 1] as P6
/// (3 channels) or P5 (1 channel). Values are rounded to the nearest byte.
pub fn save_image(image: &Tensor, path: &Path) -> Result<()> {
    let shape = image.shape();
    if shape.len() != 3 || (shape[0] != 1 && shape[0] != 3) {
        return Err(Error::InvalidArgument(
            "save_image expects a 1- or 3-channel image tensor".into(),
        ));
    }
    let (channels, height, width) = (shape[0], shape[1], shape[2]);
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    let plane = height * width;
    for i in 0..plane {
        for c in 0..channels {
            let v = image.data()[c * plane + i];
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// The P5/CSV choice for heatmap persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    /// 8-bit grayscale render after min-max normalization.
    PortableGraymap,
    /// Full-precision text, exact round-trip.
    Csv,
}

/// The P5 render of a heatmap: min-max normalization onto 0..=255, with a
/// constant map rendering as all-128.
pub fn render_heatmap_pgm(heatmap: &Heatmap) -> Vec<u8> {
    let (min, max) = heatmap
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    let mut out = format!("P5\n{} {}\n255\n", heatmap.cols(), heatmap.rows()).into_bytes();
    for &v in heatmap.values() {
        let byte = if range == 0.0 {
            128
        } else {
            ((v - min) / range * 255.0).round() as u8
        };
        out.push(byte);
    }
    out
}

/// The CSV serialization of a heatmap: a `rows,cols` header line followed by
/// row-major values at 17 significant digits, which round-trips `f64`
/// exactly.
pub fn render_heatmap_csv(heatmap: &Heatmap) -> String {
    let mut out = String::new();
    out.push_str(&format!("{},{}\n", heatmap.rows(), heatmap.cols()));
    for r in 0..heatmap.rows() {
        let row: Vec<String> = (0..heatmap.cols())
            .map(|c| format!("{:.16e}", heatmap.at(r, c)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Renders or serializes a heatmap; see [`render_heatmap_pgm`] and
/// [`render_heatmap_csv`] for the two layouts.
pub fn save_heatmap(heatmap: &Heatmap, path: &Path, format: HeatmapFormat) -> Result<()> {
    match format {
        HeatmapFormat::PortableGraymap => fs::write(path, render_heatmap_pgm(heatmap))?,
        HeatmapFormat::Csv => fs::write(path, render_heatmap_csv(heatmap))?,
    }
    Ok(())
}

/// Reads a heatmap from the CSV layout written by [`save_heatmap`].
pub fn load_heatmap_csv(path: &Path, class_index: usize) -> Result<Heatmap> {
    let text = fs::read_to_string(path)?;
    let context = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&context, "line 1", "empty file"))?;
    let mut dims = header.split(',');
    let rows: usize = dims
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::parse(&context, "line 1", "bad rows field"))?;
    let cols: usize = dims
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::parse(&context, "line 1", "bad cols field"))?;
    let mut values = Vec::with_capacity(rows * cols);
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        for token in line.split(',') {
            let v: f64 = token.trim().parse().map_err(|_| {
                Error::parse(
                    &context,
                    format!("line {}", index + 1),
                    format!("bad value {token:?}"),
                )
            })?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(Error::parse(
            &context,
            "end of file",
            format!("expected {} values, found {}", rows * cols, values.len()),
        ));
    }
    Heatmap::new(rows, cols, values, class_index)
}

/// Loads a P5 map as ground truth: any nonzero byte is a boundary pixel.
pub fn load_boundary_gt(path: &Path, label: impl Into<String>) -> Result<BoundaryMap> {
    let data = fs::read(path)?;
    let raw = parse_pnm(&data, &path.display().to_string())?;
    if raw.channels != 1 {
        return Err(Error::parse(
            path.display().to_string(),
            "header",
            "ground-truth maps must be P5 graymaps",
        ));
    }
    BoundaryMap::new(
        raw.height,
        raw.width,
        raw.bytes.iter().map(|&b| b != 0).collect(),
        label,
    )
}

/// Writes a boundary map as a P5 graymap with 0/255 values.
pub fn save_boundary_gt(map: &BoundaryMap, path: &Path) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", map.cols(), map.rows()).into_bytes();
    out.extend(map.mask().iter().map(|&b| if b { 255u8 } else { 0u8 }));
    fs::write(path, out)?;
    Ok(())
}
