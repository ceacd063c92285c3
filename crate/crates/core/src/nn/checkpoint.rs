//! Checkpoint format: a magic line, one line of JSON header, then the
//! parameters as little-endian `f32` in declared layer order (weights then
//! bias for every conv/dense layer).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CnnModel, Conv2d, Dense, Layer, LayerSpec, Standardization};
use super::TensorShape;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "SXAI-CHECKPOINT 1";

#[derive(Serialize, Deserialize)]
struct Header {
    input: TensorShape,
    classes: Vec<String>,
    layers: Vec<LayerSpec>,
    standardization: Standardization,
    seed: u64,
    blob_bytes: usize,
}

pub fn checkpoint_bytes(model: &CnnModel) -> Vec<u8> {
    let params = model.parameters();
    let count: usize = params.iter().map(|p| p.len()).sum();
    let header = Header {
        input: model.input_shape(),
        classes: model.classes().to_vec(),
        layers: model.architecture().layers,
        standardization: model.standardization().clone(),
        seed: model.seed(),
        blob_bytes: count * 4,
    };
    let mut out = Vec::with_capacity(count * 4 + 512);
    out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(
        serde_json::to_string(&header)
            .expect("header serializes")
            .as_bytes(),
    );
    out.push(b'\n');
    for p in params {
        for &v in p {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(model: &CnnModel, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, &checkpoint_bytes(model))
}

pub fn load_checkpoint(path: &Path) -> Result<CnnModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes).map_err(|msg| Error::io(path, msg))
}

pub(crate) fn parse_checkpoint(bytes: &[u8]) -> std::result::Result<CnnModel, String> {
    let magic_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("not a checkpoint: missing magic line")?;
    if &bytes[..magic_end] != CHECKPOINT_MAGIC.as_bytes() {
        return Err("not a checkpoint: bad magic".into());
    }
    let rest = &bytes[magic_end + 1..];
    let header_end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("truncated checkpoint header")?;
    let header: Header = serde_json::from_slice(&rest[..header_end])
        .map_err(|e| format!("corrupt checkpoint header: {e}"))?;
    let blob = &rest[header_end + 1..];
    if blob.len() != header.blob_bytes {
        return Err(format!(
            "checkpoint blob is {} bytes, header declares {}",
            blob.len(),
            header.blob_bytes
        ));
    }
    let mut floats = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let mut take = |n: usize| -> std::result::Result<Vec<f64>, String> {
        let v: Vec<f64> = floats.by_ref().take(n).collect();
        if v.len() == n {
            Ok(v)
        } else {
            Err("checkpoint blob shorter than the declared layers".into())
        }
    };
    let mut layers = Vec::with_capacity(header.layers.len());
    for spec in &header.layers {
        layers.push(match *spec {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
            } => Layer::Conv(Conv2d {
                in_c: in_channels,
                out_c: out_channels,
                k: kernel,
                weight: take(out_channels * in_channels * kernel * kernel)?,
                bias: take(out_channels)?,
            }),
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::MaxPool => Layer::MaxPool,
            LayerSpec::Gap => Layer::Gap,
            LayerSpec::Dense { inputs, outputs } => Layer::Dense(Dense {
                inputs,
                outputs,
                weight: take(inputs * outputs)?,
                bias: take(outputs)?,
            }),
        });
    }
    if floats.next().is_some() {
        return Err("checkpoint blob longer than the declared layers".into());
    }
    CnnModel::from_parts(
        header.input,
        header.classes,
        layers,
        header.standardization,
        header.seed,
    )
    .map_err(|e| e.to_string())
}
