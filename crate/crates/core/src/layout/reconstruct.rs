use super::projection::pixel_to_spherical;
use super::{CornerAnnotation, CornerColumn, RoomLayout};
use crate::error::{Error, Result};
use crate::polygon::Pt;
use crate::postproc::{binarize, connected_components, Connectivity};
use crate::raster::{LayoutMaps, Raster};

struct Blob {
    u: f64,
    v: f64,
}

/// Centroids of the above-threshold components, weighted by how far each
/// pixel exceeds the threshold so the result varies smoothly with the map.
fn blob_centroids(corner: &Raster, threshold: f64) -> Vec<Blob> {
    let w = corner.width();
    let set = connected_components(&binarize(corner, threshold), Connectivity::Eight, true);
    let n = set.len();
    let mut reference = vec![usize::MAX; n];
    let mut sums = vec![(0.0f64, 0.0f64, 0.0f64); n];
    for r in 0..corner.height() {
        for c in 0..w {
            let l = set.label_at(c, r);
            if l == 0 {
                continue;
            }
            let k = (l - 1) as usize;
            if reference[k] == usize::MAX {
                reference[k] = c;
            }
            let x = set.unwrap_column(c, reference[k], true) as f64 + 0.5;
            let wt = corner.get(c, r, 0) - threshold;
            let s = &mut sums[k];
            s.0 += wt * x;
            s.1 += wt * (r as f64 + 0.5);
            s.2 += wt;
        }
    }
    set.components
        .iter()
        .zip(sums)
        .map(|(comp, (sx, sy, sw))| {
            if sw > 0.0 {
                Blob {
                    u: (sx / sw).rem_euclid(w as f64),
                    v: sy / sw,
                }
            } else {
                Blob {
                    u: comp.centroid[0],
                    v: comp.centroid[1],
                }
            }
        })
        .collect()
}

fn circular_gap(a: f64, b: f64, width: f64) -> f64 {
    let d = (a - b).rem_euclid(width);
    d.min(width - d)
}

/// Finds corner blobs, splits them at the horizon row into ceiling and floor
/// corners, and pairs each ceiling corner with the floor corner in the same
/// column (within `pair_tolerance` pixels).
pub fn extract_corners(corner: &Raster, threshold: f64, pair_tolerance: f64) -> Result<CornerAnnotation> {
    let (w, h) = (corner.width(), corner.height());
    let horizon = h as f64 / 2.0;
    let blobs = blob_centroids(corner, threshold);
    let (ceil, floor): (Vec<&Blob>, Vec<&Blob>) = blobs.iter().partition(|b| b.v < horizon);
    let found = ceil.len().min(floor.len());
    if found < 4 {
        return Err(Error::TooFewCorners { found });
    }
    let mut used = vec![false; floor.len()];
    let mut columns = Vec::with_capacity(ceil.len());
    for c in &ceil {
        let best = floor
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, f)| (i, circular_gap(c.u, f.u, w as f64)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, gap)) if gap <= pair_tolerance => {
                used[i] = true;
                let f = floor[i];
                // Circular mean of the two column estimates.
                let d = (f.u - c.u + w as f64 / 2.0).rem_euclid(w as f64) - w as f64 / 2.0;
                let u = (c.u + d / 2.0).rem_euclid(w as f64);
                columns.push(CornerColumn {
                    u,
                    v_ceiling: c.v,
                    v_floor: f.v,
                });
            }
            _ => {
                return Err(Error::UnpairedCorner {
                    u: c.u,
                    tolerance: pair_tolerance,
                })
            }
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::UnpairedCorner {
            u: floor[i].u,
            tolerance: pair_tolerance,
        });
    }
    CornerAnnotation::new(w, h, columns)
}

/// Lifts corner columns to a floor plan with the given camera height.
///
/// Each floor corner gives a depth `d = h / tan(−φ_floor)`; the ceiling height
/// is `h + d·tan(φ_ceiling)` averaged over columns.
pub fn annotation_to_layout(ann: &CornerAnnotation, camera_height: f64) -> Result<RoomLayout> {
    if ann.len() < 4 {
        return Err(Error::TooFewCorners { found: ann.len() });
    }
    let mut poly = Vec::with_capacity(ann.len());
    let mut heights = 0.0;
    for c in &ann.corners {
        let f = pixel_to_spherical(c.u, c.v_floor, ann.width, ann.height);
        let top = pixel_to_spherical(c.u, c.v_ceiling, ann.width, ann.height);
        if f.latitude >= 0.0 || top.latitude <= 0.0 {
            return Err(Error::InvalidLayout(format!(
                "corner column at u={:.1} does not straddle the horizon",
                c.u
            )));
        }
        let d = camera_height / (-f.latitude).tan();
        poly.push(Pt::new(d * f.longitude.sin(), d * f.longitude.cos()));
        heights += camera_height + d * top.latitude.tan();
    }
    let ceiling = heights / ann.len() as f64;
    RoomLayout::new(poly, camera_height, ceiling, false)
}

/// Reconstructs a room from its corner map (blob threshold 0.5, pairing
/// tolerance 10 px at 1024 px width).
pub fn maps_to_layout(maps: &LayoutMaps, camera_height: f64) -> Result<RoomLayout> {
    let tol = 10.0 * maps.width() as f64 / 1024.0;
    let ann = extract_corners(&maps.corner, 0.5, tol)?;
    annotation_to_layout(&ann, camera_height)
}
