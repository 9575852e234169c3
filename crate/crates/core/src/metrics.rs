//! Layout evaluation: volumetric and floor-area IoU, corner error and pixel
//! (region classification) error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{CornerAnnotation, CornerColumn, RoomLayout};
use crate::polygon::{self, Pt};
use crate::raster::{Raster, BLUE, GREEN};

/// Area of `a ∩ b` for simple polygons of either orientation.
pub fn polygon_intersection_area(a: &[Pt], b: &[Pt]) -> Result<f64> {
    polygon::intersection_area(a, b)
}

fn ratio(inter: f64, union: f64) -> f64 {
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Identical floors intersect in exactly their area; clipping would only add
/// round-off.
fn floor_intersection(pred: &RoomLayout, gt: &RoomLayout) -> Result<f64> {
    if pred.floor_polygon() == gt.floor_polygon() {
        return Ok(pred.floor_area());
    }
    polygon_intersection_area(pred.floor_polygon(), gt.floor_polygon())
}

/// Floor-polygon intersection over union.
pub fn iou_2d(pred: &RoomLayout, gt: &RoomLayout) -> Result<f64> {
    let inter = floor_intersection(pred, gt)?;
    Ok(ratio(inter, pred.floor_area() + gt.floor_area() - inter))
}

/// Volume intersection over union of the two room prisms.
///
/// Each prism spans `[floor_y, ceiling_y]` in the shared camera frame, so
/// layouts with the same camera height overlap over `min(H_pred, H_gt)`.
pub fn iou_3d(pred: &RoomLayout, gt: &RoomLayout) -> Result<f64> {
    let area = floor_intersection(pred, gt)?;
    let overlap = (pred.ceiling_y().min(gt.ceiling_y()) - pred.floor_y().max(gt.floor_y())).max(0.0);
    let inter = area * overlap;
    Ok(ratio(inter, pred.volume() + gt.volume() - inter))
}

fn wrapped_dx(a: f64, b: f64, width: f64) -> f64 {
    let d = (a - b).rem_euclid(width);
    d.min(width - d)
}

fn column_distance(p: &CornerColumn, g: &CornerColumn, width: f64) -> f64 {
    let dx = wrapped_dx(p.u, g.u, width);
    dx.hypot(p.v_ceiling - g.v_ceiling) + dx.hypot(p.v_floor - g.v_floor)
}

/// Corner error over explicit lists, in percent of the image diagonal.
///
/// The prediction is matched to the ground truth by the cyclic shift (in
/// either direction) with the smallest total distance; the error is the mean
/// Euclidean distance over all ceiling and floor points. Horizontal distances
/// wrap around the panorama seam.
pub fn corner_error_columns(
    pred: &[CornerColumn],
    gt: &[CornerColumn],
    width: usize,
    height: usize,
) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::CornerCountMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let n = gt.len();
    if n == 0 {
        return Ok(0.0);
    }
    let w = width as f64;
    let mut best = f64::INFINITY;
    for reverse in [false, true] {
        for shift in 0..n {
            let total: f64 = (0..n)
                .map(|i| {
                    let j = if reverse { (shift + n - i) % n } else { (shift + i) % n };
                    column_distance(&pred[j], &gt[i], w)
                })
                .sum();
            best = best.min(total);
        }
    }
    let diag = w.hypot(height as f64);
    Ok(best / (2 * n) as f64 / diag * 100.0)
}

pub fn corner_error(pred: &CornerAnnotation, gt: &CornerAnnotation) -> Result<f64> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::shape(
            format!("{}x{}", gt.width, gt.height),
            format!("{}x{}", pred.width, pred.height),
        ));
    }
    corner_error_columns(&pred.corners, &gt.corners, gt.width, gt.height)
}

/// Region label of a panorama pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Region {
    Ceiling = 0,
    Wall = 1,
    Floor = 2,
}

/// Per-pixel ceiling/wall/floor segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRaster {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Region>,
}

impl ClassRaster {
    pub fn uniform(width: usize, height: usize, region: Region) -> Self {
        ClassRaster {
            width,
            height,
            labels: vec![region; width * height],
        }
    }

    /// Pixels whose center lies above `ceiling[c]` are ceiling, below
    /// `floor[c]` floor, the rest wall. Boundaries are in pixel rows.
    pub fn from_boundaries(width: usize, height: usize, ceiling: &[f64], floor: &[f64]) -> Result<Self> {
        if ceiling.len() != width || floor.len() != width {
            return Err(Error::shape(
                format!("{width} boundary columns"),
                format!("{} and {}", ceiling.len(), floor.len()),
            ));
        }
        let mut labels = vec![Region::Wall; width * height];
        for r in 0..height {
            let y = r as f64 + 0.5;
            for c in 0..width {
                labels[r * width + c] = if y < ceiling[c] {
                    Region::Ceiling
                } else if y > floor[c] {
                    Region::Floor
                } else {
                    Region::Wall
                };
            }
        }
        Ok(ClassRaster {
            width,
            height,
            labels,
        })
    }

    /// Segmentation induced by an edge map: per column, the ceiling boundary
    /// is the intensity-weighted mean row of the green channel and the floor
    /// boundary that of the blue channel. Columns with no boundary pixels take
    /// values interpolated from their neighbours (circularly).
    pub fn from_edge_map(edge: &Raster) -> Result<Self> {
        if edge.channels() != 3 {
            return Err(Error::shape("3-channel edge map", edge.shape_string()));
        }
        let (w, h) = (edge.width(), edge.height());
        let ceiling = fill_gaps(&column_centroids(edge, GREEN), 0.0);
        let floor = fill_gaps(&column_centroids(edge, BLUE), h as f64);
        Self::from_boundaries(w, h, &ceiling, &floor)
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region).count()
    }
}

fn column_centroids(edge: &Raster, ch: usize) -> Vec<Option<f64>> {
    (0..edge.width())
        .map(|c| {
            let (mut s, mut sw) = (0.0, 0.0);
            for r in 0..edge.height() {
                let v = edge.get(c, r, ch);
                s += v * (r as f64 + 0.5);
                sw += v;
            }
            (sw > 1e-6).then(|| s / sw)
        })
        .collect()
}

fn fill_gaps(cols: &[Option<f64>], fallback: f64) -> Vec<f64> {
    let n = cols.len();
    let known: Vec<usize> = (0..n).filter(|&i| cols[i].is_some()).collect();
    if known.is_empty() {
        return vec![fallback; n];
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        if let Some(v) = cols[i] {
            out[i] = v;
            continue;
        }
        let next = known.iter().copied().find(|&k| k > i).unwrap_or(known[0]);
        let prev = known.iter().rev().copied().find(|&k| k < i).unwrap_or(*known.last().unwrap());
        let span = (next + n - prev) % n;
        let t = if span == 0 {
            0.0
        } else {
            ((i + n - prev) % n) as f64 / span as f64
        };
        let (a, b) = (cols[prev].unwrap(), cols[next].unwrap());
        out[i] = a + t * (b - a);
    }
    out
}

/// Percentage of pixels whose region labels differ.
pub fn pixel_error(pred: &ClassRaster, gt: &ClassRaster) -> Result<f64> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::shape(
            format!("{}x{}", gt.width, gt.height),
            format!("{}x{}", pred.width, pred.height),
        ));
    }
    let n = gt.labels.len();
    if n == 0 {
        return Ok(0.0);
    }
    let wrong = pred.labels.iter().zip(&gt.labels).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / n as f64 * 100.0)
}

/// Scores of one prediction against its ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou3d: f64,
    pub iou2d: f64,
    /// `None` when the corner counts differ.
    pub ce_pct: Option<f64>,
    pub pe_pct: f64,
}

/// Everything needed to score one side of a comparison.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub layout: &'a RoomLayout,
    pub corners: &'a CornerAnnotation,
    pub classes: &'a ClassRaster,
}

impl MetricsReport {
    pub fn compute(pred: Scored<'_>, gt: Scored<'_>) -> Result<Self> {
        let ce_pct = match corner_error(pred.corners, gt.corners) {
            Ok(v) => Some(v),
            Err(Error::CornerCountMismatch { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricsReport {
            iou3d: iou_3d(pred.layout, gt.layout)?,
            iou2d: iou_2d(pred.layout, gt.layout)?,
            ce_pct,
            pe_pct: pixel_error(pred.classes, gt.classes)?,
        })
    }
}
