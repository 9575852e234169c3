use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::RoomLayout;
use crate::error::{Error, Result};
use crate::polygon;

/// Closed triangle mesh of a room prism; floor at `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Zero-based vertex indices, wound so normals face out of the room volume.
    pub triangles: Vec<[usize; 3]>,
}

impl ObjMesh {
    /// Floor vertices are `0..n`, ceiling vertices `n..2n`.
    pub fn from_layout(layout: &RoomLayout) -> Self {
        let poly = layout.floor_polygon();
        let n = poly.len();
        let h = layout.ceiling_height();
        let mut vertices = Vec::with_capacity(2 * n);
        vertices.extend(poly.iter().map(|p| Vector3::new(p.x, 0.0, p.y)));
        vertices.extend(poly.iter().map(|p| Vector3::new(p.x, h, p.y)));

        let mut triangles = Vec::with_capacity(4 * n - 4);
        // Polygon is CCW in (x, z), which gives floor triangles a -y normal.
        let caps = polygon::triangulate_indices(poly);
        for &[a, b, c] in &caps {
            triangles.push([a, b, c]);
        }
        for &[a, b, c] in &caps {
            triangles.push([n + a, n + c, n + b]);
        }
        for i in 0..n {
            let j = (i + 1) % n;
            triangles.push([i, n + i, n + j]);
            triangles.push([i, n + j, j]);
        }
        ObjMesh {
            vertices,
            triangles,
        }
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }
}

pub fn write_obj(mesh: &ObjMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh.to_obj_string()).map_err(|e| Error::io(path, e))
}

/// Writes the layout as an ASCII Wavefront OBJ of triangles.
pub fn export_obj(layout: &RoomLayout, path: &Path) -> Result<()> {
    write_obj(&ObjMesh::from_layout(layout), path)
}
