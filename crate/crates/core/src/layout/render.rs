use std::f64::consts::PI;

use nalgebra::Vector3;

use super::projection::{pixel, project};
use super::RoomLayout;
use crate::error::Result;
use crate::raster::{LayoutMaps, Raster, BLUE, GREEN, RED};

/// Stroke and blob sizes in pixels of the target raster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    pub edge_thickness: f64,
    pub corner_sigma: f64,
}

impl RenderStyle {
    /// 5 px strokes and σ = 18.75 px blobs at 1024 px width, scaled linearly.
    pub fn for_width(width: usize) -> Self {
        let s = width as f64 / 1024.0;
        RenderStyle {
            edge_thickness: 5.0 * s,
            corner_sigma: 18.75 * s,
        }
    }
}

fn stamp_disc(r: &mut Raster, ch: usize, u: f64, v: f64, radius: f64) {
    let (w, h) = (r.width() as isize, r.height() as isize);
    let r2 = radius * radius;
    let c0 = (u - radius).floor() as isize - 1;
    let c1 = (u + radius).ceil() as isize + 1;
    let r0 = ((v - radius).floor() as isize - 1).max(0);
    let r1 = ((v + radius).ceil() as isize + 1).min(h - 1);
    for row in r0..=r1 {
        let dy = row as f64 + 0.5 - v;
        for col in c0..=c1 {
            let dx = col as f64 + 0.5 - u;
            if dx * dx + dy * dy < r2 {
                r.set(col.rem_euclid(w) as usize, row as usize, ch, 1.0);
            }
        }
    }
}

/// Draws the projection of a 3-D segment by dense sampling.
fn stroke_segment(r: &mut Raster, ch: usize, a: &Vector3<f64>, b: &Vector3<f64>, radius: f64) -> Result<()> {
    let w = r.width();
    // Horizontal distance from the camera axis bounds the angular speed.
    let (ax, az, bx, bz) = (a.x, a.z, b.x, b.z);
    let (ex, ez) = (bx - ax, bz - az);
    let len2 = ex * ex + ez * ez;
    let t = if len2 > 0.0 {
        (-(ax * ex + az * ez) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dmin = ((ax + t * ex).powi(2) + (az + t * ez).powi(2)).sqrt().max(1e-3);
    let len = (b - a).norm();
    let px_per_rad = w as f64 / (2.0 * PI);
    let n = ((len / dmin * px_per_rad * 3.0).ceil() as usize).max(2) + 1;
    for i in 0..=n {
        let p = a + (b - a) * (i as f64 / n as f64);
        let [u, v] = pixel(&project(&p)?, w, r.height());
        stamp_disc(r, ch, u, v, radius);
    }
    Ok(())
}

fn stamp_gaussian(r: &mut Raster, u: f64, v: f64, sigma: f64) {
    let (w, h) = (r.width() as isize, r.height() as isize);
    let reach = 4.0 * sigma;
    let c0 = (u - reach).floor() as isize;
    let c1 = (u + reach).ceil() as isize;
    let r0 = ((v - reach).floor() as isize).max(0);
    let r1 = ((v + reach).ceil() as isize).min(h - 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for row in r0..=r1 {
        let dy = row as f64 + 0.5 - v;
        for col in c0..=c1 {
            let dx = col as f64 + 0.5 - u;
            let g = (-(dx * dx + dy * dy) * inv).exp();
            r.set_max(col.rem_euclid(w) as usize, row as usize, 0, g);
        }
    }
}

/// Renders the RGB edge map and grayscale corner map of a layout.
///
/// Walls are assumed fully visible from the camera (star-shaped rooms); no
/// occlusion test is performed.
pub fn render_maps(layout: &RoomLayout, width: usize, height: usize, style: RenderStyle) -> Result<LayoutMaps> {
    let mut edge = Raster::zeros(width, height, 3);
    let mut corner = Raster::zeros(width, height, 1);
    let radius = style.edge_thickness / 2.0;
    let n = layout.corner_count();
    for i in 0..n {
        let j = (i + 1) % n;
        let (f0, f1) = (layout.floor_corner(i), layout.floor_corner(j));
        let (c0, c1) = (layout.ceiling_corner(i), layout.ceiling_corner(j));
        stroke_segment(&mut edge, GREEN, &c0, &c1, radius)?;
        stroke_segment(&mut edge, BLUE, &f0, &f1, radius)?;
        stroke_segment(&mut edge, RED, &f0, &c0, radius)?;
    }
    for i in 0..n {
        for p in [layout.floor_corner(i), layout.ceiling_corner(i)] {
            let [u, v] = pixel(&project(&p)?, width, height);
            stamp_gaussian(&mut corner, u, v, style.corner_sigma);
        }
    }
    LayoutMaps::new(edge, corner)
}

/// Maps of [`RoomLayout::canonical`] with the default style for `width`.
pub fn reference_layout(width: usize, height: usize) -> LayoutMaps {
    render_maps(&RoomLayout::canonical(), width, height, RenderStyle::for_width(width))
        .expect("canonical room renders")
}
