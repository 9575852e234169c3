//! File formats: 8-bit PNG rasters, JSON documents, loss CSV and corpus
//! directories.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ColorType, ImageEncoder};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LayoutMaps, Raster};
use crate::synth::{CorpusSpec, Sample};

pub const EDGE_SUFFIX: &str = ".edge.png";
pub const CORNER_SUFFIX: &str = ".corner.png";
pub const LAYOUT_SUFFIX: &str = ".layout.json";
pub const CORNERS_SUFFIX: &str = ".corners.json";
pub const MANIFEST: &str = "manifest.json";

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

/// Writes a 1- or 3-channel raster as 8-bit PNG (`v ↦ round(255·v)`).
pub fn write_png(path: &Path, raster: &Raster) -> Result<()> {
    let color = match raster.channels() {
        1 => ColorType::L8,
        3 => ColorType::Rgb8,
        _ => return Err(Error::shape("1 or 3 channels", raster.shape_string())),
    };
    let bytes: Vec<u8> = raster.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    ensure_parent(path)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PngEncoder::new_with_quality(BufWriter::new(file), CompressionType::Default, FilterType::Adaptive)
        .write_image(&bytes, raster.width() as u32, raster.height() as u32, color.into())
        .map_err(|e| Error::parse(path, e))
}

/// Reads a PNG as a raster with `channels` channels (1 = luma, 3 = RGB).
pub fn read_png(path: &Path, channels: usize) -> Result<Raster> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::parse(path, other),
    })?;
    let (w, h, bytes) = match channels {
        1 => {
            let g = img.to_luma8();
            (g.width(), g.height(), g.into_raw())
        }
        3 => {
            let c = img.to_rgb8();
            (c.width(), c.height(), c.into_raw())
        }
        _ => return Err(Error::shape("1 or 3 channels", channels)),
    };
    let data = bytes.into_iter().map(|b| b as f64 / 255.0).collect();
    Raster::from_data(w as usize, h as usize, channels, data).map_err(|e| Error::parse(path, e))
}

/// `dir/0003.edge.png` and `dir/0003` both name the map pair `dir/0003`.
pub fn map_prefix(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [EDGE_SUFFIX, CORNER_SUFFIX, LAYOUT_SUFFIX, CORNERS_SUFFIX] {
        if let Some(stem) = s.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn read_maps(prefix: &Path) -> Result<LayoutMaps> {
    let prefix = map_prefix(prefix);
    let edge_path = with_suffix(&prefix, EDGE_SUFFIX);
    let edge = read_png(&edge_path, 3)?;
    let corner = read_png(&with_suffix(&prefix, CORNER_SUFFIX), 1)?;
    LayoutMaps::new(edge, corner).map_err(|e| Error::parse(edge_path, e))
}

pub fn write_maps(prefix: &Path, maps: &LayoutMaps) -> Result<()> {
    write_png(&with_suffix(prefix, EDGE_SUFFIX), &maps.edge)?;
    write_png(&with_suffix(prefix, CORNER_SUFFIX), &maps.corner)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct LossRow {
    iteration: usize,
    loss: f64,
}

/// Loss curve as CSV with header `iteration,loss`.
pub fn write_loss_csv(path: &Path, losses: &[f64]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for (iteration, &loss) in losses.iter().enumerate() {
        w.serialize(LossRow { iteration, loss }).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        iteration: usize,
        loss: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    r.deserialize::<Row>()
        .map(|row| row.map(|r| r.loss).map_err(|e| Error::parse(path, e)))
        .collect()
}

/// One corpus entry; file names are relative to the corpus directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub edge: String,
    pub corner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corners: Option<String>,
}

impl ManifestEntry {
    pub fn maps_only(id: &str) -> Self {
        ManifestEntry {
            id: id.to_string(),
            edge: format!("{id}{EDGE_SUFFIX}"),
            corner: format!("{id}{CORNER_SUFFIX}"),
            layout: None,
            corners: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<CorpusSpec>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }
}

pub fn is_corpus(path: &Path) -> bool {
    path.is_dir() && path.join(MANIFEST).is_file()
}

pub fn entry_id(index: usize) -> String {
    format!("{index:04}")
}

/// Writes every sample as `NNNN.{edge,corner}.png`, `NNNN.layout.json`,
/// `NNNN.corners.json`, then the manifest.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec, samples: &[Sample]) -> Result<Manifest> {
    use rayon::prelude::*;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let id = entry_id(i);
            let prefix = dir.join(&id);
            write_maps(&prefix, &s.maps)?;
            write_json(&with_suffix(&prefix, LAYOUT_SUFFIX), &s.layout)?;
            write_json(&with_suffix(&prefix, CORNERS_SUFFIX), &s.annotation)?;
            Ok(ManifestEntry {
                layout: Some(format!("{id}{LAYOUT_SUFFIX}")),
                corners: Some(format!("{id}{CORNERS_SUFFIX}")),
                ..ManifestEntry::maps_only(&id)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        spec: Some(spec.clone()),
        entries,
    };
    manifest.write(dir)?;
    Ok(manifest)
}
