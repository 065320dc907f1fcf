//! Model persistence: a line-oriented text manifest plus raw little-endian
//! `f64` weights, either inline (base64) or in a sidecar binary file.
//!
//! Manifest grammar (one declaration per line, `#` starts a comment):
//!
//! ```text
//! pixrel-model 1
//! input <channels> <height> <width>
//! classes <name> [<name> ...]
//! layer dense <out> <in>
//! layer conv2d <out_ch> <in_ch> <kh> <kw> <stride_h> <stride_w> <pad_h> <pad_w>
//! layer maxpool <win_h> <win_w> <stride_h> <stride_w>
//! layer relu
//! layer flatten
//! weights inline <byte_count> <base64>
//! weights sidecar <file_name> <byte_count>
//! ```
//!
//! Weight bytes hold each parametric layer's values in declaration order:
//! dense layers store the row-major `out x in` matrix then the bias vector;
//! convolutions store the row-major `out_ch x in_ch x kh x kw` filter block
//! then the bias vector. Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

use crate::error::{Error, Result};
use crate::network::{validate_model, LayerSpec, NetworkModel};

const MAGIC: &str = "pixrel-model";
const VERSION: u32 = 1;

/// Where `save_model_with` puts the weight bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightEncoding {
    /// Base64 inside the manifest; single self-contained file.
    #[default]
    Inline,
    /// Raw binary next to the manifest, named `<manifest stem>.weights`.
    Sidecar,
}

fn weight_values(model: &NetworkModel) -> Vec<f64> {
    let mut values = Vec::new();
    for layer in &model.layers {
        match layer {
            LayerSpec::Dense { weights, bias, .. } => {
                values.extend_from_slice(weights);
                values.extend_from_slice(bias);
            }
            LayerSpec::Conv2D { filters, bias, .. } => {
                values.extend_from_slice(filters);
                values.extend_from_slice(bias);
            }
            _ => {}
        }
    }
    values
}

fn encode_f64(values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn decode_f64(bytes: &[u8], context: &str) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::parse(
            context,
            format!("offset {}", bytes.len()),
            format!("weight blob length {} is not a multiple of 8", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
        .collect())
}

/// Saves the model with inline weights.
pub fn save_model(model: &NetworkModel, path: &Path) -> Result<()> {
    save_model_with(model, path, WeightEncoding::Inline)
}

/// Saves the model; see [`WeightEncoding`] for the weight placement choice.
pub fn save_model_with(
    model: &NetworkModel,
    path: &Path,
    encoding: WeightEncoding,
) -> Result<()> {
    validate_model(model)?;
    for name in &model.class_names {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "class name {name:?} must be non-empty and whitespace-free"
            )));
        }
    }
    let mut text = String::new();
    text.push_str(&format!("{MAGIC} {VERSION}\n"));
    text.push_str(&format!(
        "input {} {} {}\n",
        model.input_shape.0, model.input_shape.1, model.input_shape.2
    ));
    text.push_str(&format!("classes {}\n", model.class_names.join(" ")));
    for layer in &model.layers {
        match layer {
            LayerSpec::Dense {
                out_features,
                in_features,
                ..
            } => text.push_str(&format!("layer dense {out_features} {in_features}\n")),
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                ..
            } => text.push_str(&format!(
                "layer conv2d {out_channels} {in_channels} {} {} {} {} {} {}\n",
                kernel.0, kernel.1, stride.0, stride.1, padding.0, padding.1
            )),
            LayerSpec::MaxPool2D { window, stride } => text.push_str(&format!(
                "layer maxpool {} {} {} {}\n",
                window.0, window.1, stride.0, stride.1
            )),
            LayerSpec::ReLU => text.push_str("layer relu\n"),
            LayerSpec::Flatten => text.push_str("layer flatten\n"),
        }
    }
    let bytes = encode_f64(&weight_values(model));
    match encoding {
        WeightEncoding::Inline => {
            text.push_str(&format!(
                "weights inline {} {}\n",
                bytes.len(),
                BASE64.encode(&bytes)
            ));
        }
        WeightEncoding::Sidecar => {
            let sidecar_name = format!(
                "{}.weights",
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "model".into())
            );
            let sidecar_path = path.with_file_name(&sidecar_name);
            fs::write(&sidecar_path, &bytes)?;
            text.push_str(&format!("weights sidecar {sidecar_name} {}\n", bytes.len()));
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Loads and validates a model; round-trips [`save_model`] bit-exactly.
pub fn load_model(path: &Path) -> Result<NetworkModel> {
    let context = path.display().to_string();
    let text = fs::read_to_string(path)?;

    let mut input_shape: Option<(usize, usize, usize)> = None;
    let mut class_names: Option<Vec<String>> = None;
    let mut layer_protos: Vec<LayerSpec> = Vec::new();
    let mut weight_bytes: Option<Vec<u8>> = None;
    let mut version_seen = false;

    for (line_index, raw_line) in text.lines().enumerate() {
        let here = format!("line {}", line_index + 1);
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().expect("non-empty line has a first token");

        if !version_seen {
            if keyword != MAGIC {
                return Err(Error::parse(
                    &context,
                    here,
                    format!("expected {MAGIC:?} header, found {keyword:?}"),
                ));
            }
            let version: u32 = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(&context, &here, "missing format version"))?;
            if version != VERSION {
                return Err(Error::UnsupportedVersion(format!(
                    "format version {version} (this build reads version {VERSION})"
                )));
            }
            version_seen = true;
            continue;
        }

        match keyword {
            "input" => {
                let mut next = |what: &str| -> Result<usize> {
                    tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::parse(&context, &here, format!("bad {what}")))
                };
                input_shape = Some((next("channels")?, next("height")?, next("width")?));
            }
            "classes" => {
                let names: Vec<String> = tokens.map(str::to_owned).collect();
                if names.is_empty() {
                    return Err(Error::parse(&context, here, "classes line names none"));
                }
                class_names = Some(names);
            }
            "layer" => {
                let kind = tokens
                    .next()
                    .ok_or_else(|| Error::parse(&context, &here, "layer line without a kind"))?;
                let mut next = |what: &str| -> Result<usize> {
                    tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::parse(&context, &here, format!("bad {what}")))
                };
                let layer = match kind {
                    "dense" => {
                        let out = next("out features")?;
                        let inp = next("in features")?;
                        LayerSpec::Dense {
                            out_features: out,
                            in_features: inp,
                            weights: Vec::new(),
                            bias: Vec::new(),
                        }
                    }
                    "conv2d" => LayerSpec::Conv2D {
                        out_channels: next("out channels")?,
                        in_channels: next("in channels")?,
                        kernel: (next("kernel height")?, next("kernel width")?),
                        stride: (next("stride height")?, next("stride width")?),
                        padding: (next("pad height")?, next("pad width")?),
                        filters: Vec::new(),
                        bias: Vec::new(),
                    },
                    "maxpool" => LayerSpec::MaxPool2D {
                        window: (next("window height")?, next("window width")?),
                        stride: (next("stride height")?, next("stride width")?),
                    },
                    "relu" => LayerSpec::ReLU,
                    "flatten" => LayerSpec::Flatten,
                    other => {
                        return Err(Error::UnsupportedVersion(format!(
                            "unknown layer kind {other:?}"
                        )))
                    }
                };
                layer_protos.push(layer);
            }
            "weights" => {
                let mode = tokens
                    .next()
                    .ok_or_else(|| Error::parse(&context, &here, "weights line without a mode"))?;
                let bytes = match mode {
                    "inline" => {
                        let declared: usize = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::parse(&context, &here, "bad byte count"))?;
                        let blob = tokens
                            .next()
                            .ok_or_else(|| Error::parse(&context, &here, "missing base64 blob"))?;
                        let bytes = BASE64.decode(blob).map_err(|e| {
                            Error::parse(&context, &here, format!("bad base64: {e}"))
                        })?;
                        if bytes.len() != declared {
                            return Err(Error::parse(
                                &context,
                                &here,
                                format!(
                                    "weight blob is {} bytes but declares {declared}",
                                    bytes.len()
                                ),
                            ));
                        }
                        bytes
                    }
                    "sidecar" => {
                        let name = tokens
                            .next()
                            .ok_or_else(|| Error::parse(&context, &here, "missing sidecar name"))?;
                        let declared: usize = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::parse(&context, &here, "bad byte count"))?;
                        let sidecar_path = path.with_file_name(name);
                        let bytes = fs::read(&sidecar_path)?;
                        if bytes.len() != declared {
                            return Err(Error::parse(
                                sidecar_path.display().to_string(),
                                format!("offset {}", bytes.len()),
                                format!(
                                    "sidecar is {} bytes but manifest declares {declared}",
                                    bytes.len()
                                ),
                            ));
                        }
                        bytes
                    }
                    other => {
                        return Err(Error::UnsupportedVersion(format!(
                            "unknown weights mode {other:?}"
                        )))
                    }
                };
                weight_bytes = Some(bytes);
            }
            other => {
                return Err(Error::parse(
                    &context,
                    here,
                    format!("unknown declaration {other:?}"),
                ));
            }
        }
    }

    let input_shape =
        input_shape.ok_or_else(|| Error::parse(&context, "end of file", "missing input line"))?;
    let class_names = class_names
        .ok_or_else(|| Error::parse(&context, "end of file", "missing classes line"))?;
    let weight_bytes = weight_bytes
        .ok_or_else(|| Error::parse(&context, "end of file", "missing weights line"))?;

    let values = decode_f64(&weight_bytes, &context)?;
    let needed: usize = layer_protos.iter().map(proto_parameter_count).sum();
    if values.len() != needed {
        return Err(Error::parse(
            &context,
            format!("offset {}", weight_bytes.len()),
            format!(
                "weight blob holds {} values but the layers need {needed}",
                values.len()
            ),
        ));
    }

    let mut cursor = 0usize;
    let mut layers = Vec::with_capacity(layer_protos.len());
    for proto in layer_protos {
        let take = proto_parameter_count(&proto);
        let slice = &values[cursor..cursor + take];
        cursor += take;
        layers.push(match proto {
            LayerSpec::Dense {
                out_features,
                in_features,
                ..
            } => {
                let split = out_features * in_features;
                LayerSpec::Dense {
                    out_features,
                    in_features,
                    weights: slice[..split].to_vec(),
                    bias: slice[split..].to_vec(),
                }
            }
            LayerSpec::Conv2D {
                out_channels,
                in_channels,
                kernel,
                stride,
                padding,
                ..
            } => {
                let split = out_channels * in_channels * kernel.0 * kernel.1;
                LayerSpec::Conv2D {
                    out_channels,
                    in_channels,
                    kernel,
                    stride,
                    padding,
                    filters: slice[..split].to_vec(),
                    bias: slice[split..].to_vec(),
                }
            }
            passthrough => passthrough,
        });
    }

    let model = NetworkModel {
        input_shape,
        layers,
        class_names,
    };
    validate_model(&model)?;
    Ok(model)
}

/// Parameter count a manifest layer declaration implies.
fn proto_parameter_count(layer: &LayerSpec) -> usize {
    match layer {
        LayerSpec::Dense {
            out_features,
            in_features,
            ..
        } => out_features * in_features + out_features,
        LayerSpec::Conv2D {
            out_channels,
            in_channels,
            kernel,
            ..
        } => out_channels * in_channels * kernel.0 * kernel.1 + out_channels,
        _ => 0,
    }
}
