//! Bilinear backward sampling through a [`SamplingGrid`] and its derivative
//! with respect to the sampling coordinates.
//!
//! Normalized coordinate `c` maps to continuous pixel position `c·size − ½`,
//! so pixel centers land on integers. Rows are clamped to `[0, height−1]`;
//! columns either wrap modulo the width (panorama seam) or read zero outside
//! the raster. At integer breakpoints the derivative is the right limit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::tps::SamplingGrid;

#[derive(Clone, Copy)]
struct Taps {
    x0: Option<usize>,
    x1: Option<usize>,
    y0: usize,
    y1: usize,
    fx: f64,
    fy: f64,
    /// False when the row coordinate is clamped, which zeroes its derivative.
    y_active: bool,
}

#[inline]
fn taps(cx: f64, cy: f64, width: usize, height: usize, wrap_x: bool) -> Taps {
    let px = cx * width as f64 - 0.5;
    let py = cy * height as f64 - 0.5;
    let hmax = (height - 1) as f64;

    let y_active = (0.0..hmax).contains(&py);
    let pyc = py.clamp(0.0, hmax);
    let y0 = (pyc.floor() as usize).min(height - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fy = pyc - y0 as f64;

    let (x0, x1, fx) = if wrap_x {
        let pw = px.rem_euclid(width as f64);
        let mut x0 = pw.floor() as usize;
        let mut fx = pw - x0 as f64;
        if x0 >= width {
            x0 = 0;
            fx = 0.0;
        }
        (Some(x0), Some((x0 + 1) % width), fx)
    } else {
        let f = px.floor();
        let fx = px - f;
        let inside = |i: f64| (i >= 0.0 && i < width as f64).then_some(i as usize);
        (inside(f), inside(f + 1.0), fx)
    };
    Taps {
        x0,
        x1,
        y0,
        y1,
        fx,
        fy,
        y_active,
    }
}

#[inline]
fn fetch(src: &Raster, x: Option<usize>, y: usize, ch: usize) -> f64 {
    x.map_or(0.0, |x| src.get(x, y, ch))
}

/// Samples `src` at every grid coordinate. Output has the grid's size and the
/// source's channel count; non-finite coordinates read 0.
pub fn sample_bilinear(src: &Raster, grid: &SamplingGrid, wrap_x: bool) -> Raster {
    let (w, h, nc) = (src.width(), src.height(), src.channels());
    let mut data = vec![0.0; grid.width * grid.height * nc];
    data.par_chunks_mut(grid.width * nc)
        .enumerate()
        .for_each(|(row, out)| {
            for col in 0..grid.width {
                let q = grid.coords[row * grid.width + col];
                if !q.x.is_finite() || !q.y.is_finite() {
                    continue;
                }
                let t = taps(q.x, q.y, w, h, wrap_x);
                for ch in 0..nc {
                    let v00 = fetch(src, t.x0, t.y0, ch);
                    let v10 = fetch(src, t.x1, t.y0, ch);
                    let v01 = fetch(src, t.x0, t.y1, ch);
                    let v11 = fetch(src, t.x1, t.y1, ch);
                    let top = v00 + t.fx * (v10 - v00);
                    let bot = v01 + t.fx * (v11 - v01);
                    out[col * nc + ch] = (top + t.fy * (bot - top)).clamp(0.0, 1.0);
                }
            }
        });
    Raster::from_data(grid.width, grid.height, nc, data)
        .expect("bilinear output is a convex combination of [0,1] values")
}

/// `∂(Σ upstream ⊙ sample_bilinear(src, grid)) / ∂coords`, in normalized units.
///
/// `upstream` is laid out like the sampled raster.
pub fn sample_gradient(
    src: &Raster,
    grid: &SamplingGrid,
    upstream: &[f64],
    wrap_x: bool,
) -> Result<Vec<[f64; 2]>> {
    let (w, h, nc) = (src.width(), src.height(), src.channels());
    let expected = grid.width * grid.height * nc;
    if upstream.len() != expected {
        return Err(Error::shape(format!("{expected} cotangent values"), upstream.len()));
    }
    let (sx, sy) = (w as f64, h as f64);
    let grads = grid
        .coords
        .par_iter()
        .enumerate()
        .map(|(p, q)| {
            if !q.x.is_finite() || !q.y.is_finite() {
                return [0.0, 0.0];
            }
            let t = taps(q.x, q.y, w, h, wrap_x);
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ch in 0..nc {
                let g = upstream[p * nc + ch];
                if g == 0.0 {
                    continue;
                }
                let v00 = fetch(src, t.x0, t.y0, ch);
                let v10 = fetch(src, t.x1, t.y0, ch);
                let v01 = fetch(src, t.x0, t.y1, ch);
                let v11 = fetch(src, t.x1, t.y1, ch);
                gx += g * ((1.0 - t.fy) * (v10 - v00) + t.fy * (v11 - v01));
                if t.y_active {
                    gy += g * ((1.0 - t.fx) * (v01 - v00) + t.fx * (v11 - v10));
                }
            }
            [gx * sx, gy * sy]
        })
        .collect();
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tps::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_raster(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> Raster {
        let data = (0..w * h * c).map(|_| rng.gen::<f64>()).collect();
        Raster::from_data(w, h, c, data).unwrap()
    }

    #[test]
    fn identity_grid_reproduces_source_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = random_raster(&mut rng, 4, 4, 3);
        let out = sample_bilinear(&src, &SamplingGrid::identity(4, 4), true);
        assert_eq!(out, src);
        let src = random_raster(&mut rng, 37, 13, 1);
        let out = sample_bilinear(&src, &SamplingGrid::identity(37, 13), false);
        for (a, b) in out.data().iter().zip(src.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_source_stays_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = Raster::filled(10, 6, 1, 0.37);
        let coords = (0..60)
            .map(|_| Point::new(rng.gen_range(-2.0..3.0), rng.gen_range(-0.5..1.5)))
            .collect();
        let grid = SamplingGrid { width: 10, height: 6, coords };
        let out = sample_bilinear(&src, &grid, true);
        assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-15));
        let up = vec![1.0; 60];
        let g = sample_gradient(&src, &grid, &up, true).unwrap();
        assert!(g.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn one_pixel_shift_wraps_at_seam() {
        let mut src = Raster::zeros(4, 4, 1);
        src.set(3, 1, 0, 1.0);
        // Output pixel (c, r) reads source column c - 1.
        let mut grid = SamplingGrid::identity(4, 4);
        for q in &mut grid.coords {
            q.x -= 0.25;
        }
        let out = sample_bilinear(&src, &grid, true);
        // Oracle: the white pixel moves from column 3 to column 0.
        let mut expect = Raster::zeros(4, 4, 1);
        expect.set(0, 1, 0, 1.0);
        assert_eq!(out, expect);
        let out = sample_bilinear(&src, &grid, false);
        assert_eq!(out.mass(), 0.0);
    }

    #[test]
    fn full_width_shift_is_invisible_with_wrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = random_raster(&mut rng, 16, 8, 3);
        let coords: Vec<Point> = (0..128)
            .map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let a = SamplingGrid { width: 16, height: 8, coords: coords.clone() };
        let b = SamplingGrid {
            width: 16,
            height: 8,
            coords: coords.iter().map(|q| Point::new(q.x + 1.0, q.y)).collect(),
        };
        let (oa, ob) = (sample_bilinear(&src, &a, true), sample_bilinear(&src, &b, true));
        for (x, y) in oa.data().iter().zip(ob.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_gradient_equals_slope() {
        let (w, h) = (32, 8);
        let data = (0..w * h).map(|p| (p % w) as f64 / w as f64).collect();
        let src = Raster::from_data(w, h, 1, data).unwrap();
        let grid = SamplingGrid {
            width: 2,
            height: 1,
            coords: vec![Point::new(0.3, 0.4), Point::new(0.61, 0.7)],
        };
        let g = sample_gradient(&src, &grid, &[1.0, 1.0], false).unwrap();
        for v in g {
            // d(value)/d(normalized x) = (1/w per pixel)·w pixels = 1.
            assert!((v[0] - 1.0).abs() < 1e-12);
            assert_eq!(v[1], 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for nc in [1, 3] {
            let src = random_raster(&mut rng, 16, 8, nc);
            let mut coords = Vec::new();
            while coords.len() < 100 {
                let q = Point::new(rng.gen_range(-0.2..1.2), rng.gen_range(0.1..0.9));
                let (px, py) = (q.x * 16.0 - 0.5, q.y * 8.0 - 0.5);
                // Stay away from bilinear breakpoints.
                let dist = |v: f64| (v - v.round()).abs();
                if dist(px) > 0.01 && dist(py) > 0.01 {
                    coords.push(q);
                }
            }
            let grid = SamplingGrid { width: 10, height: 10, coords };
            let up: Vec<f64> = (0..100 * nc).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = sample_gradient(&src, &grid, &up, true).unwrap();
            let loss = |gr: &SamplingGrid| -> f64 {
                sample_bilinear(&src, gr, true)
                    .data()
                    .iter()
                    .zip(&up)
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let step = 1e-4;
            for p in 0..100 {
                for d in 0..2 {
                    let mut plus = grid.clone();
                    plus.coords[p][d] += step;
                    let mut minus = grid.clone();
                    minus.coords[p][d] -= step;
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                    let rel = (fd - g[p][d]).abs() / g[p][d].abs().max(1e-2);
                    assert!(rel < 1e-4, "channel {nc} point {p} dim {d}: {fd} vs {}", g[p][d]);
                }
            }
        }
    }

    #[test]
    fn output_stays_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = random_raster(&mut rng, 9, 7, 3);
        let coords = (0..200)
            .map(|_| Point::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)))
            .collect();
        let grid = SamplingGrid { width: 20, height: 10, coords };
        for wrap in [true, false] {
            let out = sample_bilinear(&src, &grid, wrap);
            assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn cotangent_length_checked() {
        let src = Raster::zeros(4, 4, 1);
        let grid = SamplingGrid::identity(4, 4);
        assert!(sample_gradient(&src, &grid, &[0.0; 3], true).is_err());
    }
}
