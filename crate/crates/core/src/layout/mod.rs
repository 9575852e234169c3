//! Vector room layouts and their panoramic rendering/reconstruction.
//!
//! Frame: camera at the origin, `y` up, `z` forward, `x` right. The floor
//! polygon lives in the `(x, z)` plane; the floor is at `y = -camera_height`
//! and the ceiling at `y = ceiling_height - camera_height`.

mod obj;
mod projection;
mod reconstruct;
mod render;

pub use obj::{export_obj, write_obj, ObjMesh};
pub use projection::{direction, pixel, pixel_to_spherical, project, SphericalPoint};
pub use reconstruct::{annotation_to_layout, extract_corners, maps_to_layout};
pub use render::{reference_layout, render_maps, RenderStyle};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polygon::{self, Pt};

pub const DEFAULT_CAMERA_HEIGHT: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoomLayoutRepr", into = "RoomLayoutRepr")]
pub struct RoomLayout {
    floor_polygon: Vec<Pt>,
    camera_height: f64,
    ceiling_height: f64,
    manhattan: bool,
}

#[derive(Serialize, Deserialize)]
struct RoomLayoutRepr {
    floor_polygon: Vec<[f64; 2]>,
    #[serde(default = "default_camera_height")]
    camera_height: f64,
    ceiling_height: f64,
    #[serde(default)]
    manhattan: bool,
}

fn default_camera_height() -> f64 {
    DEFAULT_CAMERA_HEIGHT
}

impl TryFrom<RoomLayoutRepr> for RoomLayout {
    type Error = Error;

    fn try_from(r: RoomLayoutRepr) -> Result<Self> {
        let poly = r.floor_polygon.iter().map(|p| Pt::new(p[0], p[1])).collect();
        RoomLayout::new(poly, r.camera_height, r.ceiling_height, r.manhattan)
    }
}

impl From<RoomLayout> for RoomLayoutRepr {
    fn from(l: RoomLayout) -> Self {
        RoomLayoutRepr {
            floor_polygon: l.floor_polygon.iter().map(|p| [p.x, p.y]).collect(),
            camera_height: l.camera_height,
            ceiling_height: l.ceiling_height,
            manhattan: l.manhattan,
        }
    }
}

impl RoomLayout {
    /// Validates and stores the layout. The polygon is reordered to be
    /// counterclockwise in `(x, z)` if needed.
    pub fn new(
        floor_polygon: Vec<Pt>,
        camera_height: f64,
        ceiling_height: f64,
        manhattan: bool,
    ) -> Result<Self> {
        if floor_polygon.len() < 4 {
            return Err(Error::InvalidLayout(format!(
                "floor polygon needs at least 4 vertices, got {}",
                floor_polygon.len()
            )));
        }
        if floor_polygon.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidLayout("non-finite floor vertex".into()));
        }
        if !(camera_height > 0.0 && ceiling_height > camera_height) || !ceiling_height.is_finite() {
            return Err(Error::InvalidLayout(format!(
                "need ceiling_height > camera_height > 0, got {ceiling_height} and {camera_height}"
            )));
        }
        if !polygon::is_simple(&floor_polygon) {
            return Err(Error::InvalidLayout("floor polygon is not simple".into()));
        }
        let origin = Pt::origin();
        if !polygon::contains(&floor_polygon, &origin)
            || polygon::boundary_distance(&floor_polygon, &origin) <= 1e-9
        {
            return Err(Error::InvalidLayout(
                "camera must lie strictly inside the floor polygon".into(),
            ));
        }
        let floor_polygon = polygon::to_ccw(&floor_polygon);
        if manhattan && !is_rectilinear(&floor_polygon) {
            return Err(Error::InvalidLayout(
                "manhattan layout has a non axis-parallel edge".into(),
            ));
        }
        Ok(RoomLayout {
            floor_polygon,
            camera_height,
            ceiling_height,
            manhattan,
        })
    }

    /// Axis-aligned box room; `camera_offset` is the camera position relative
    /// to the room center.
    pub fn cuboid(
        width: f64,
        depth: f64,
        ceiling_height: f64,
        camera_height: f64,
        camera_offset: [f64; 2],
    ) -> Result<Self> {
        let (hw, hd) = (width / 2.0, depth / 2.0);
        let (ox, oz) = (camera_offset[0], camera_offset[1]);
        let poly = vec![
            Pt::new(-hw - ox, -hd - oz),
            Pt::new(hw - ox, -hd - oz),
            Pt::new(hw - ox, hd - oz),
            Pt::new(-hw - ox, hd - oz),
        ];
        RoomLayout::new(poly, camera_height, ceiling_height, true)
    }

    /// The fixed room whose rendering is warped by the fitter: 4 m × 4 m × 3 m,
    /// camera centered at 1.6 m, corners at azimuths ±45° and ±135°.
    pub fn canonical() -> Self {
        RoomLayout::cuboid(4.0, 4.0, 3.0, DEFAULT_CAMERA_HEIGHT, [0.0, 0.0])
            .expect("canonical room is valid")
    }

    pub fn floor_polygon(&self) -> &[Pt] {
        &self.floor_polygon
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    pub fn ceiling_height(&self) -> f64 {
        self.ceiling_height
    }

    pub fn is_manhattan(&self) -> bool {
        self.manhattan
    }

    pub fn corner_count(&self) -> usize {
        self.floor_polygon.len()
    }

    pub fn floor_area(&self) -> f64 {
        polygon::area(&self.floor_polygon)
    }

    pub fn volume(&self) -> f64 {
        self.floor_area() * self.ceiling_height
    }

    pub fn floor_y(&self) -> f64 {
        -self.camera_height
    }

    pub fn ceiling_y(&self) -> f64 {
        self.ceiling_height - self.camera_height
    }

    pub fn floor_corner(&self, i: usize) -> Vector3<f64> {
        let p = self.floor_polygon[i];
        Vector3::new(p.x, self.floor_y(), p.y)
    }

    pub fn ceiling_corner(&self, i: usize) -> Vector3<f64> {
        let p = self.floor_polygon[i];
        Vector3::new(p.x, self.ceiling_y(), p.y)
    }

    /// Same room seen from a camera rotated by `-angle` about `y`; every
    /// azimuth increases by `angle`.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let poly = self
            .floor_polygon
            .iter()
            .map(|p| Pt::new(p.x * c + p.y * s, -p.x * s + p.y * c))
            .collect();
        RoomLayout::new(poly, self.camera_height, self.ceiling_height, false)
    }

    /// Shifts the floor polygon by `(dx, dz)` in the camera frame.
    pub fn translated(&self, dx: f64, dz: f64) -> Result<Self> {
        let poly = self
            .floor_polygon
            .iter()
            .map(|p| Pt::new(p.x + dx, p.y + dz))
            .collect();
        RoomLayout::new(poly, self.camera_height, self.ceiling_height, self.manhattan)
    }
}

pub fn is_rectilinear(poly: &[Pt]) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let scale = (b - a).norm().max(1e-12);
        (a.x - b.x).abs() <= 1e-9 * scale.max(1.0) || (a.y - b.y).abs() <= 1e-9 * scale.max(1.0)
    })
}

/// One wall-wall corner column in panorama pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerColumn {
    pub u: f64,
    pub v_ceiling: f64,
    pub v_floor: f64,
}

/// Corner columns of one panorama, sorted by `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CornerAnnotationRepr", into = "CornerAnnotationRepr")]
pub struct CornerAnnotation {
    pub width: usize,
    pub height: usize,
    pub corners: Vec<CornerColumn>,
}

#[derive(Serialize, Deserialize)]
struct CornerAnnotationRepr {
    corners: Vec<[f64; 3]>,
    width: usize,
    height: usize,
}

impl TryFrom<CornerAnnotationRepr> for CornerAnnotation {
    type Error = Error;

    fn try_from(r: CornerAnnotationRepr) -> Result<Self> {
        let corners = r
            .corners
            .iter()
            .map(|c| CornerColumn {
                u: c[0],
                v_ceiling: c[1],
                v_floor: c[2],
            })
            .collect();
        CornerAnnotation::new(r.width, r.height, corners)
    }
}

impl From<CornerAnnotation> for CornerAnnotationRepr {
    fn from(a: CornerAnnotation) -> Self {
        CornerAnnotationRepr {
            corners: a.corners.iter().map(|c| [c.u, c.v_ceiling, c.v_floor]).collect(),
            width: a.width,
            height: a.height,
        }
    }
}

impl CornerAnnotation {
    /// Validates ranges and sorts the columns by `u`.
    pub fn new(width: usize, height: usize, mut corners: Vec<CornerColumn>) -> Result<Self> {
        for c in &corners {
            let ok = c.u.is_finite()
                && (0.0..width as f64).contains(&c.u)
                && c.v_ceiling >= 0.0
                && c.v_ceiling < c.v_floor
                && c.v_floor < height as f64;
            if !ok {
                return Err(Error::InvalidLayout(format!(
                    "corner column ({}, {}, {}) out of range for {width}x{height}",
                    c.u, c.v_ceiling, c.v_floor
                )));
            }
        }
        corners.sort_by(|a, b| a.u.total_cmp(&b.u));
        Ok(CornerAnnotation {
            width,
            height,
            corners,
        })
    }

    /// Exact projection of a layout's corners.
    pub fn from_layout(layout: &RoomLayout, width: usize, height: usize) -> Result<Self> {
        let corners = (0..layout.corner_count())
            .map(|i| {
                let f = pixel(&project(&layout.floor_corner(i))?, width, height);
                let c = pixel(&project(&layout.ceiling_corner(i))?, width, height);
                Ok(CornerColumn {
                    u: f[0],
                    v_ceiling: c[1],
                    v_floor: f[1],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CornerAnnotation::new(width, height, corners)
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}
