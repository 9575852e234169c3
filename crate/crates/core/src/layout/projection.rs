use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Longitude `θ ∈ [−π, π)` measured from `+z` toward `+x`; latitude
/// `φ ∈ [−π/2, π/2]`, positive up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub longitude: f64,
    pub latitude: f64,
}

/// `θ = atan2(x, z)`, `φ = asin(y / |p|)`.
pub fn project(p: &Vector3<f64>) -> Result<SphericalPoint> {
    let r = p.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::InvalidLayout(
            "cannot project the camera center".into(),
        ));
    }
    let mut longitude = p.x.atan2(p.z);
    if longitude >= PI {
        longitude -= 2.0 * PI;
    }
    let latitude = (p.y / r).clamp(-1.0, 1.0).asin();
    Ok(SphericalPoint {
        longitude,
        latitude,
    })
}

/// Continuous pixel position `(u, v)`; pixel `(c, r)` covers `[c, c+1) × [r, r+1)`.
pub fn pixel(s: &SphericalPoint, width: usize, height: usize) -> [f64; 2] {
    [
        (s.longitude + PI) / (2.0 * PI) * width as f64,
        (FRAC_PI_2 - s.latitude) / PI * height as f64,
    ]
}

pub fn pixel_to_spherical(u: f64, v: f64, width: usize, height: usize) -> SphericalPoint {
    SphericalPoint {
        longitude: u / width as f64 * 2.0 * PI - PI,
        latitude: FRAC_PI_2 - v / height as f64 * PI,
    }
}

/// Unit viewing ray.
pub fn direction(s: &SphericalPoint) -> Vector3<f64> {
    let (sl, cl) = s.latitude.sin_cos();
    let (st, ct) = s.longitude.sin_cos();
    Vector3::new(cl * st, sl, cl * ct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_axis_hits_image_center() {
        let s = project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((s.longitude, s.latitude), (0.0, 0.0));
        assert_eq!(pixel(&s, 1024, 512), [512.0, 256.0]);
    }

    #[test]
    fn straight_down_hits_bottom_row() {
        let s = project(&Vector3::new(0.0, -1.6, 0.0)).unwrap();
        assert!((s.latitude + FRAC_PI_2).abs() < 1e-15);
        assert!((pixel(&s, 1024, 512)[1] - 512.0).abs() < 1e-12);
    }

    #[test]
    fn cube_corner_latitude() {
        let s = project(&Vector3::new(1.0, -1.6, 1.0)).unwrap();
        let expect = (-1.6f64 / (1.0f64 + 2.56 + 1.0).sqrt()).asin();
        assert!((s.latitude - expect).abs() < 1e-15);
        assert!((s.longitude - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn origin_rejected() {
        assert!(project(&Vector3::zeros()).is_err());
    }

    #[test]
    fn backward_axis_is_left_edge() {
        let s = project(&Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(s.longitude, -PI);
        assert_eq!(pixel(&s, 1024, 512)[0], 0.0);
    }

    #[test]
    fn pixel_round_trip_onto_wall_plane() {
        // Wall plane z = 2.5: recover a point from its pixel by ray casting.
        for p in [
            Vector3::new(0.7, -1.6, 2.5),
            Vector3::new(-1.9, 1.2, 2.5),
            Vector3::new(3.1, 0.1, 2.5),
        ] {
            let [u, v] = pixel(&project(&p).unwrap(), 1024, 512);
            let d = direction(&pixel_to_spherical(u, v, 1024, 512));
            let hit = d * (2.5 / d.z);
            assert!((hit - p).norm() < 1e-6);
        }
    }
}
