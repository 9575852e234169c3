//! Random cuboid and Manhattan rooms with rendered maps and exact corner
//! annotations.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{pixel, project, render_maps, CornerAnnotation, RenderStyle, RoomLayout};
use crate::polygon::Pt;
use crate::raster::LayoutMaps;

/// Farthest floor corner allowed, in meters. Beyond this a one-pixel
/// latitude error moves the recovered corner by more than ~20 cm.
pub const MAX_CORNER_DISTANCE: f64 = 6.5;
/// Minimum distance between any two corner blob centers at 1024 px width.
/// Blobs above the 0.5 level have a radius of about 22 px.
pub const MIN_BLOB_SEPARATION: f64 = 48.0;
/// Minimum horizontal gap between distinct corner columns at 1024 px width.
pub const MIN_COLUMN_GAP: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RoomKind {
    Cuboid,
    /// Rectilinear rooms with an even corner count in `min_corners..=max_corners`.
    Manhattan { min_corners: usize, max_corners: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub count: usize,
    pub seed: u64,
    pub kind: RoomKind,
    /// Extent along `x` (bounding box for Manhattan rooms), meters.
    pub width_range: [f64; 2],
    /// Extent along `z`, meters.
    pub depth_range: [f64; 2],
    pub ceiling_range: [f64; 2],
    /// Half-size of the square of camera offsets around a cuboid's center.
    pub camera_jitter: f64,
    /// Minimum camera distance to any wall.
    pub wall_clearance: f64,
    pub camera_height: f64,
    pub resolution: [usize; 2],
    /// Rejection-sampling budget per room.
    pub max_attempts: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            count: 10,
            seed: 0,
            kind: RoomKind::Cuboid,
            width_range: [2.0, 8.0],
            depth_range: [2.0, 8.0],
            ceiling_range: [2.4, 3.5],
            camera_jitter: 0.5,
            wall_clearance: 0.5,
            camera_height: crate::layout::DEFAULT_CAMERA_HEIGHT,
            resolution: [1024, 512],
            max_attempts: 500,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, r) in [
            ("width_range", self.width_range),
            ("depth_range", self.depth_range),
            ("ceiling_range", self.ceiling_range),
        ] {
            if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
                return bad(format!("{name} must be a non-empty positive interval, got {r:?}"));
            }
        }
        if !(self.camera_height > 0.0 && self.ceiling_range[0] > self.camera_height) {
            return bad("ceiling_range must lie above camera_height".into());
        }
        if !(self.camera_jitter >= 0.0 && self.wall_clearance >= 0.0) {
            return bad("camera_jitter and wall_clearance must be non-negative".into());
        }
        if 2.0 * self.wall_clearance >= self.width_range[0].min(self.depth_range[0]) {
            return bad("wall_clearance leaves no room for the camera".into());
        }
        if let RoomKind::Manhattan { min_corners, max_corners } = self.kind {
            if min_corners < 4 || min_corners > max_corners || max_corners > 10 {
                return bad(format!("corner range {min_corners}..={max_corners} must lie in 4..=10"));
            }
            if (min_corners..=max_corners).all(|n| n % 2 == 1) {
                return bad("corner range contains no even count".into());
            }
        }
        let [w, h] = self.resolution;
        if w < 16 || h < 8 || w % 2 != 0 || h % 2 != 0 {
            return bad(format!("resolution {w}x{h} must be even and at least 16x8"));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        Ok(())
    }
}

/// One generated room.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub layout: RoomLayout,
    pub maps: LayoutMaps,
    pub annotation: CornerAnnotation,
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

fn cuboid_candidate(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<RoomLayout> {
    let w = uniform(rng, spec.width_range);
    let d = uniform(rng, spec.depth_range);
    let ceiling = uniform(rng, spec.ceiling_range);
    let jx = spec.camera_jitter.min(w / 2.0 - spec.wall_clearance);
    let jz = spec.camera_jitter.min(d / 2.0 - spec.wall_clearance);
    let off = [uniform(rng, [-jx, jx]), uniform(rng, [-jz, jz])];
    RoomLayout::cuboid(w, d, ceiling, spec.camera_height, off)
}

/// Rectangle with notches cut at `k` of its corners. Each notch replaces a
/// corner by three vertices. The camera is drawn from the kernel box (the
/// region seeing every wall) shrunk by the wall clearance.
fn manhattan_candidate(spec: &CorpusSpec, rng: &mut ChaCha8Rng, min: usize, max: usize) -> Result<RoomLayout> {
    let counts: Vec<usize> = (min..=max).filter(|n| n % 2 == 0).collect();
    let n = counts[rng.gen_range(0..counts.len())];
    let w = uniform(rng, spec.width_range);
    let d = uniform(rng, spec.depth_range);
    let ceiling = uniform(rng, spec.ceiling_range);
    let (x0, x1, z0, z1) = (-w / 2.0, w / 2.0, -d / 2.0, d / 2.0);
    let rect = [Pt::new(x0, z0), Pt::new(x1, z0), Pt::new(x1, z1), Pt::new(x0, z1)];
    let mut notched = [None; 4];
    for i in sample_indices(rng, 4, (n - 4) / 2).into_iter() {
        notched[i] = Some((rng.gen_range(0.2..0.4) * w, rng.gen_range(0.2..0.4) * d));
    }

    // Kernel box: every notch pushes the box off both of its sides.
    let (mut kx0, mut kx1, mut kz0, mut kz1) = (x0, x1, z0, z1);
    let mut poly = Vec::with_capacity(n);
    for i in 0..4 {
        let c = rect[i];
        let Some((a, b)) = notched[i] else {
            poly.push(c);
            continue;
        };
        if c.x < 0.0 {
            kx0 = kx0.max(x0 + a);
        } else {
            kx1 = kx1.min(x1 - a);
        }
        if c.y < 0.0 {
            kz0 = kz0.max(z0 + b);
        } else {
            kz1 = kz1.min(z1 - b);
        }
        let (p, q) = (rect[(i + 3) % 4], rect[(i + 1) % 4]);
        let sign = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
        let e1 = (c - p).map(sign);
        let e2 = (q - c).map(sign);
        let along = |e: nalgebra::Vector2<f64>| nalgebra::Vector2::new(e.x * a, e.y * b);
        let (l1, l2) = (along(e1), along(e2));
        poly.push(c - l1);
        poly.push(c - l1 + l2);
        poly.push(c + l2);
    }
    let m = spec.wall_clearance;
    if kx1 - kx0 <= 2.0 * m || kz1 - kz0 <= 2.0 * m {
        return Err(Error::InvalidLayout("notches leave no camera position".into()));
    }
    let cam = Pt::new(rng.gen_range(kx0 + m..kx1 - m), rng.gen_range(kz0 + m..kz1 - m));
    let poly = poly.into_iter().map(|p| Pt::from(p - cam)).collect();
    RoomLayout::new(poly, spec.camera_height, ceiling, true)
}

fn wrapped(a: f64, b: f64, w: f64) -> f64 {
    let d = (a - b).rem_euclid(w);
    d.min(w - d)
}

/// Rejects rooms whose corners would be too far to recover precisely or
/// whose corner blobs would merge in the rendered maps.
fn check_separable(layout: &RoomLayout, width: usize, height: usize) -> std::result::Result<(), String> {
    let far = layout
        .floor_polygon()
        .iter()
        .map(|p| p.coords.norm())
        .fold(0.0, f64::max);
    if far > MAX_CORNER_DISTANCE {
        return Err(format!("corner {far:.2} m from the camera"));
    }
    let scale = width as f64 / 1024.0;
    let mut blobs = Vec::new();
    let mut columns = Vec::new();
    for i in 0..layout.corner_count() {
        let f = pixel(&project(&layout.floor_corner(i)).map_err(|e| e.to_string())?, width, height);
        let c = pixel(&project(&layout.ceiling_corner(i)).map_err(|e| e.to_string())?, width, height);
        columns.push(f[0]);
        blobs.push(f);
        blobs.push(c);
    }
    let w = width as f64;
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            if wrapped(columns[i], columns[j], w) < MIN_COLUMN_GAP * scale {
                return Err("corner columns too close".into());
            }
        }
    }
    for i in 0..blobs.len() {
        for j in i + 1..blobs.len() {
            let dx = wrapped(blobs[i][0], blobs[j][0], w);
            let dy = blobs[i][1] - blobs[j][1];
            if dx.hypot(dy) < MIN_BLOB_SEPARATION * scale {
                return Err("corner blobs would merge".into());
            }
        }
    }
    Ok(())
}

/// Layout of room `index`; depends only on `(spec, index)`.
pub fn sample_layout(spec: &CorpusSpec, index: usize) -> Result<RoomLayout> {
    let mut rng = rng_for(spec.seed, index);
    let [w, h] = spec.resolution;
    let mut last = String::new();
    for _ in 0..spec.max_attempts {
        let candidate = match spec.kind {
            RoomKind::Cuboid => cuboid_candidate(spec, &mut rng),
            RoomKind::Manhattan { min_corners, max_corners } => {
                manhattan_candidate(spec, &mut rng, min_corners, max_corners)
            }
        };
        match candidate {
            Ok(layout) => match check_separable(&layout, w, h) {
                Ok(()) => return Ok(layout),
                Err(reason) => last = reason,
            },
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::SamplingFailed {
        attempts: spec.max_attempts,
        reason: last,
    })
}

/// Layouts only, without rendering.
pub fn generate_layouts(spec: &CorpusSpec) -> Result<Vec<RoomLayout>> {
    spec.validate()?;
    (0..spec.count).into_par_iter().map(|i| sample_layout(spec, i)).collect()
}

pub fn render_sample(layout: RoomLayout, width: usize, height: usize) -> Result<Sample> {
    let maps = render_maps(&layout, width, height, RenderStyle::for_width(width))?;
    let annotation = CornerAnnotation::from_layout(&layout, width, height)?;
    Ok(Sample {
        layout,
        maps,
        annotation,
    })
}

pub fn generate(spec: &CorpusSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let [w, h] = spec.resolution;
    (0..spec.count)
        .into_par_iter()
        .map(|i| render_sample(sample_layout(spec, i)?, w, h))
        .collect()
}
