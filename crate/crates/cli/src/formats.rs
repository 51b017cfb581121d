//! On-disk formats.
//!
//! Images and data volumes are CSV files (one grid row per line, channels
//! interleaved, 17 significant digits) with a JSON sidecar of the same stem
//! describing the shape and, for data, the acquisition geometry.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use potts_core::admm::LabelMap;
use potts_core::operators::{KernelKind, RadonGeometry, SphericalGeometry};
use potts_core::{DataShape, DataVolume, Image, ImageShape};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The operator that produced a data volume, with its full geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Radon(RadonGeometry),
    Spherical(SphericalGeometry),
    Blur { kernel: KernelKind },
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSidecar {
    pub image_shape: ImageShape,
    pub data_shape: DataShape,
    pub geometry: Geometry,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_grid(path: &Path, values: &[f64], cols: usize) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 24);
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn read_grid(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("{}:{}: bad number", path.display(), i + 1))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => bail!("{}:{}: expected {c} columns, got {}", path.display(), i + 1, row.len()),
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    Ok((values, rows, cols.unwrap_or(0)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes `stem.csv` and its shape sidecar `stem.json`.
pub fn write_image_csv(path: &Path, image: &Image) -> Result<()> {
    write_grid(path, image.data(), image.width() * image.channels())?;
    write_json(&sidecar_path(path), &image.shape())
}

/// Reads an image from CSV (with sidecar) or from a PNG/PGM/PPM file, which
/// is scaled to `[0, 1]`.
pub fn read_image(path: &Path) -> Result<Image> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "csv" {
        let side = sidecar_path(path);
        if !side.exists() {
            bail!("missing shape sidecar {}", side.display());
        }
        let shape: ImageShape = read_json(&side)?;
        let (values, rows, cols) = read_grid(path)?;
        if rows != shape.height || cols != shape.width * shape.channels {
            bail!("{} holds {rows}x{cols} values, sidecar says {shape:?}", path.display());
        }
        return Ok(Image::from_vec(shape, values)?);
    }
    let decoded = image::open(path).with_context(|| format!("decoding {}", path.display()))?;
    let (channels, raw): (usize, Vec<u8>) = match decoded.color().channel_count() {
        1 | 2 => (1, decoded.to_luma8().into_raw()),
        _ => (3, decoded.to_rgb8().into_raw()),
    };
    let shape = ImageShape::new(decoded.width() as usize, decoded.height() as usize, channels);
    Ok(Image::from_vec(shape, raw.iter().map(|&b| b as f64 / 255.0).collect())?)
}

pub fn write_data(path: &Path, data: &DataVolume, sidecar: &DataSidecar) -> Result<()> {
    let shape = data.shape();
    write_grid(path, data.data(), shape.cols * shape.channels)?;
    write_json(&sidecar_path(path), sidecar)
}

pub fn read_data(path: &Path) -> Result<(DataVolume, DataSidecar)> {
    let side = sidecar_path(path);
    if !side.exists() {
        bail!("missing geometry sidecar {}", side.display());
    }
    let sidecar: DataSidecar = read_json(&side)?;
    let (values, rows, cols) = read_grid(path)?;
    let shape = sidecar.data_shape;
    if rows != shape.rows || cols != shape.cols * shape.channels {
        bail!("{} holds {rows}x{cols} values, sidecar says {shape:?}", path.display());
    }
    Ok((DataVolume::from_vec(shape, values)?, sidecar))
}

/// Min-max scaled 8-bit rendering (gray for one channel, RGB for three).
pub fn write_png(path: &Path, image: &Image) -> Result<()> {
    let (lo, hi) = image.value_range();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let (w, h) = (image.width() as u32, image.height() as u32);
    let color = match image.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        c => bail!("cannot render a {c}-channel image"),
    };
    image::save_buffer(path, &bytes, w, h, color).with_context(|| format!("writing {}", path.display()))
}

/// Fixed color of label `l`; label 0 is black.
pub fn palette(l: usize) -> [u8; 3] {
    if l == 0 {
        return [0, 0, 0];
    }
    let x = (l as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    [(x >> 56) as u8 | 0x20, (x >> 40) as u8 | 0x20, (x >> 24) as u8 | 0x20]
}

pub fn write_labels_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let bytes: Vec<u8> = labels.labels().iter().flat_map(|&l| palette(l)).collect();
    image::save_buffer(
        path,
        &bytes,
        labels.width() as u32,
        labels.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .with_context(|| format!("writing {}", path.display()))
}

pub fn write_labels_csv(path: &Path, labels: &LabelMap) -> Result<()> {
    let mut out = String::new();
    for row in labels.labels().chunks(labels.width()) {
        let line: Vec<String> = row.iter().map(usize::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Raw label grid from CSV, as `(labels, width, height)`.
pub fn read_labels_csv(path: &Path) -> Result<(Vec<usize>, usize, usize)> {
    let (values, rows, cols) = read_grid(path)?;
    let labels = values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("{}: label {v} is not a nonnegative integer", path.display())
            }
        })
        .collect::<Result<_>>()?;
    Ok((labels, cols, rows))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_values(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    sha256_hex(&bytes)
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).with_context(|| format!("reading {}", path.display()))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_losslessly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, f64::MIN_POSITIVE] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn palette_is_stable_and_distinct() {
        assert_eq!(palette(0), [0, 0, 0]);
        let colors: std::collections::HashSet<_> = (0..64).map(palette).collect();
        assert_eq!(colors.len(), 64);
        assert_eq!(palette(7), palette(7));
    }
}
