//! Files: PNG images and label maps, TOML records, hashes and run manifests.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Image, TensorShape};

/// Writes through a sibling temp file and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::io(path, e))?;
    write_atomic(path, text.as_bytes())
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(BufWriter::new(&mut out), width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut w = enc.write_header().map_err(|e| Error::io("<png>", e))?;
        w.write_image_data(data)
            .map_err(|e| Error::io("<png>", e))?;
    }
    Ok(out)
}

/// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
pub fn png_bytes(image: &Image) -> Result<Vec<u8>> {
    let s = image.shape();
    if s.channels != 3 {
        return Err(Error::shape(format!(
            "PNG export needs 3 channels, got {}",
            s.channels
        )));
    }
    let mut data = Vec::with_capacity(s.len());
    for p in 0..s.plane() {
        for c in 0..3 {
            data.push((image.channel(c)[p].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    encode_png(
        s.width,
        s.height,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &data,
    )
}

pub fn write_png(path: &Path, image: &Image) -> Result<()> {
    write_atomic(path, &png_bytes(image)?)
}

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    sixteen: bool,
    data: Vec<u8>,
}

fn decode_png(path: &Path) -> Result<Decoded> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::io(path, e))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::io(path, "image too large"))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    buf.truncate(info.buffer_size());
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::io(path, "unexpanded palette image")),
    };
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        sixteen: info.bit_depth == png::BitDepth::Sixteen,
        data: buf,
    })
}

/// Reads a PNG as RGB in [0, 1]. Gray is replicated and alpha dropped.
pub fn read_png(path: &Path) -> Result<Image> {
    let d = decode_png(path)?;
    let shape = TensorShape::rgb(d.height, d.width)?;
    let mut img = Image::zeros(shape);
    let sample = |i: usize| -> f64 {
        if d.sixteen {
            u16::from_be_bytes([d.data[2 * i], d.data[2 * i + 1]]) as f64 / 65535.0
        } else {
            d.data[i] as f64 / 255.0
        }
    };
    for p in 0..shape.plane() {
        let base = p * d.channels;
        let px: Vec<f64> = if d.channels < 3 {
            vec![sample(base); 3]
        } else {
            (0..3).map(|c| sample(base + c)).collect()
        };
        img.set_pixel(p, &px);
    }
    Ok(img)
}

/// Nearest-neighbor resize: output pixel `(y, x)` reads source
/// `(floor((y + 0.5) * H / h), floor((x + 0.5) * W / w))`.
pub fn resize_nearest(image: &Image, height: usize, width: usize) -> Result<Image> {
    let s = image.shape();
    if (s.height, s.width) == (height, width) {
        return Ok(image.clone());
    }
    let out_shape = TensorShape::new(s.channels, height, width)?;
    let mut out = Image::zeros(out_shape);
    for y in 0..height {
        let sy = (((y as f64 + 0.5) * s.height as f64 / height as f64) as usize).min(s.height - 1);
        for x in 0..width {
            let sx = (((x as f64 + 0.5) * s.width as f64 / width as f64) as usize).min(s.width - 1);
            for c in 0..s.channels {
                out.set(c, y, x, image.get(c, sy, sx));
            }
        }
    }
    Ok(out)
}

/// Reads a PNG and resizes it to `height x width`.
pub fn load_image(path: &Path, height: usize, width: usize) -> Result<Image> {
    resize_nearest(&read_png(path)?, height, width)
}

/// Label map as a 16-bit grayscale PNG.
pub fn write_label_map(path: &Path, labels: &[u32], height: usize, width: usize) -> Result<()> {
    if labels.len() != height * width {
        return Err(Error::shape(format!(
            "{} labels for a {height}x{width} map",
            labels.len()
        )));
    }
    let mut data = Vec::with_capacity(2 * labels.len());
    for &l in labels {
        let v = u16::try_from(l)
            .map_err(|_| Error::param(format!("label {l} does not fit 16 bits")))?;
        data.extend_from_slice(&v.to_be_bytes());
    }
    let bytes = encode_png(
        width,
        height,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )?;
    write_atomic(path, &bytes)
}

/// Returns `(height, width, labels)`.
pub fn read_label_map(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let d = decode_png(path)?;
    if d.channels != 1 {
        return Err(Error::io(path, "label map must be single-channel"));
    }
    let labels = if d.sixteen {
        d.data
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
            .collect()
    } else {
        d.data.iter().map(|&b| b as u32).collect()
    };
    Ok((d.height, d.width, labels))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one command run. Everything except `created_unix` is a
/// function of config, seeds and inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub schema_version: u32,
    pub config_sha256: String,
    pub seeds: std::collections::BTreeMap<String, u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub created_unix: u64,
}

impl Manifest {
    /// Hashes of every file under `root` named in `paths` (relative to root).
    pub fn hash_files(root: &Path, paths: &[PathBuf]) -> Result<Vec<FileHash>> {
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            let full = root.join(p);
            out.push(FileHash {
                path: p.to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(&full)?,
            });
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }
}
