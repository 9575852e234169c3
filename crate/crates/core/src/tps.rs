//! Thin-plate-spline transform over a square control lattice.
//!
//! All coordinates live in the normalized map square `[0,1]²`. The transform
//! is solved from the regularized system
//!
//! ```text
//! | K + k·I   P | | w |   | t |
//! | Pᵀ        0 | | a | = | 0 |
//! ```
//!
//! with `K_ij = U(|p_i - p_j|²)`, `U(r²) = r²·ln r²` and `P` rows `(1, x_i, y_i)`,
//! independently for the x and y outputs.
//!
//! Because the solution is linear in the targets, the map can also be written
//! as `T(q) = Σ φ_i(q)·t_i`; [`TpsBasis`] exposes the `φ_i` and is what the
//! fitter uses for gradients.

use nalgebra::{DMatrix, DVector, Matrix2x3, Point2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;

/// `U(r²) = r²·ln(r²)`, extended by its limit `0` at `r² = 0`.
pub fn tps_kernel(r_sq: f64) -> f64 {
    if r_sq <= 0.0 {
        0.0
    } else {
        r_sq * r_sq.ln()
    }
}

/// Square lattice of source control points with their current targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ControlGridRepr")]
pub struct ControlGrid {
    n_side: usize,
    source_points: Vec<Point>,
    target_points: Vec<Point>,
}

#[derive(Deserialize)]
struct ControlGridRepr {
    n_side: usize,
    #[serde(default)]
    source_points: Option<Vec<Point>>,
    target_points: Vec<Point>,
}

impl TryFrom<ControlGridRepr> for ControlGrid {
    type Error = Error;

    fn try_from(repr: ControlGridRepr) -> Result<Self> {
        let grid = ControlGrid::with_targets(repr.n_side, repr.target_points)?;
        if let Some(src) = repr.source_points {
            let matches = src.len() == grid.source_points.len()
                && src
                    .iter()
                    .zip(&grid.source_points)
                    .all(|(a, b)| (a - b).norm() <= 1e-9);
            if !matches {
                return Err(Error::InvalidGrid(
                    "source_points do not form the cell-centered lattice".into(),
                ));
            }
        }
        Ok(grid)
    }
}

impl ControlGrid {
    /// Cell-centered lattice: point `(i, j)` sits at `((j+½)/n, (i+½)/n)`,
    /// stored row-major.
    pub fn lattice(n_side: usize) -> Vec<Point> {
        let n = n_side as f64;
        (0..n_side)
            .flat_map(|i| {
                (0..n_side).map(move |j| Point::new((j as f64 + 0.5) / n, (i as f64 + 0.5) / n))
            })
            .collect()
    }

    /// Grid whose targets equal its sources.
    pub fn identity(n_side: usize) -> Result<Self> {
        Self::check_side(n_side)?;
        let src = Self::lattice(n_side);
        Ok(ControlGrid {
            n_side,
            target_points: src.clone(),
            source_points: src,
        })
    }

    pub fn with_targets(n_side: usize, target_points: Vec<Point>) -> Result<Self> {
        Self::check_side(n_side)?;
        if target_points.len() != n_side * n_side {
            return Err(Error::InvalidGrid(format!(
                "expected {} target points, got {}",
                n_side * n_side,
                target_points.len()
            )));
        }
        if target_points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidGrid("non-finite target point".into()));
        }
        Ok(ControlGrid {
            n_side,
            source_points: Self::lattice(n_side),
            target_points,
        })
    }

    fn check_side(n_side: usize) -> Result<()> {
        if n_side < 3 {
            return Err(Error::InvalidGrid(format!(
                "n_side must be at least 3, got {n_side}"
            )));
        }
        Ok(())
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn len(&self) -> usize {
        self.source_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_points.is_empty()
    }

    pub fn source_points(&self) -> &[Point] {
        &self.source_points
    }

    pub fn target_points(&self) -> &[Point] {
        &self.target_points
    }

    /// Replaces the targets, keeping the lattice.
    pub fn set_targets(&mut self, targets: Vec<Point>) -> Result<()> {
        *self = Self::with_targets(self.n_side, targets)?;
        Ok(())
    }
}

/// Solved transform: `T(q) = affine·(1, x, y)ᵀ + Σ wᵢ·U(|q - pᵢ|²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsCoefficients {
    /// Row `d` holds `(a₀, a₁, a₂)` of output dimension `d`.
    pub affine: Matrix2x3<f64>,
    /// One `(w_x, w_y)` pair per control point.
    pub weights: Vec<[f64; 2]>,
    pub smoothing: f64,
}

impl TpsCoefficients {
    /// Largest absolute radial weight.
    pub fn max_abs_weight(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Per-pixel source locations for backward warping.
///
/// `coords[row * width + col]` is the normalized location in the *reference*
/// raster sampled to produce output pixel `(col, row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    pub width: usize,
    pub height: usize,
    pub coords: Vec<Point>,
}

/// Normalized center of pixel `(col, row)`.
pub fn pixel_center(col: usize, row: usize, width: usize, height: usize) -> Point {
    Point::new(
        (col as f64 + 0.5) / width as f64,
        (row as f64 + 0.5) / height as f64,
    )
}

impl SamplingGrid {
    pub fn identity(width: usize, height: usize) -> Self {
        let coords = (0..height)
            .flat_map(|r| (0..width).map(move |c| pixel_center(c, r, width, height)))
            .collect();
        SamplingGrid {
            width,
            height,
            coords,
        }
    }

    pub fn pixel_centers(width: usize, height: usize) -> Vec<Point> {
        Self::identity(width, height).coords
    }
}

fn check_sources(sources: &[Point]) -> Result<()> {
    if sources.len() < 3 {
        return Err(Error::SingularSystem("fewer than 3 control points".into()));
    }
    for (i, a) in sources.iter().enumerate() {
        if sources[i + 1..].iter().any(|b| (a - b).norm() <= 1e-12) {
            return Err(Error::SingularSystem(format!(
                "duplicated control point ({}, {})",
                a.x, a.y
            )));
        }
    }
    let p0 = sources[0];
    let far = sources
        .iter()
        .max_by(|a, b| (*a - p0).norm().total_cmp(&(*b - p0).norm()))
        .copied()
        .unwrap_or(p0);
    let dir = far - p0;
    let scale = dir.norm();
    let spread = sources
        .iter()
        .map(|p| {
            let v = p - p0;
            (dir.x * v.y - dir.y * v.x).abs() / scale
        })
        .fold(0.0f64, f64::max);
    if spread <= 1e-12 * scale.max(1.0) {
        return Err(Error::SingularSystem("control points are collinear".into()));
    }
    Ok(())
}

fn system_matrix(sources: &[Point], smoothing: f64) -> DMatrix<f64> {
    let n = sources.len();
    let mut l = DMatrix::zeros(n + 3, n + 3);
    for i in 0..n {
        for j in 0..n {
            let k = tps_kernel((sources[i] - sources[j]).norm_squared());
            l[(i, j)] = if i == j { k + smoothing } else { k };
        }
        let row = [1.0, sources[i].x, sources[i].y];
        for (c, v) in row.iter().enumerate() {
            l[(i, n + c)] = *v;
            l[(n + c, i)] = *v;
        }
    }
    l
}

fn check_smoothing(smoothing: f64) -> Result<()> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "smoothing must be a finite non-negative number, got {smoothing}"
        )));
    }
    Ok(())
}

/// Solves the regularized system for arbitrary source/target pairs.
pub fn solve_points(sources: &[Point], targets: &[Point], smoothing: f64) -> Result<TpsCoefficients> {
    if sources.len() != targets.len() {
        return Err(Error::shape(
            format!("{} targets", sources.len()),
            format!("{} targets", targets.len()),
        ));
    }
    check_smoothing(smoothing)?;
    check_sources(sources)?;
    let n = sources.len();
    let lu = system_matrix(sources, smoothing).lu();
    let mut rhs = DMatrix::zeros(n + 3, 2);
    for (i, t) in targets.iter().enumerate() {
        rhs[(i, 0)] = t.x;
        rhs[(i, 1)] = t.y;
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("LU factorization failed".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    let weights = (0..n).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
    let mut affine = Matrix2x3::zeros();
    for d in 0..2 {
        for c in 0..3 {
            affine[(d, c)] = sol[(n + c, d)];
        }
    }
    Ok(TpsCoefficients {
        affine,
        weights,
        smoothing,
    })
}

pub fn solve_coefficients(grid: &ControlGrid, smoothing: f64) -> Result<TpsCoefficients> {
    solve_points(grid.source_points(), grid.target_points(), smoothing)
}

fn map_point(coef: &TpsCoefficients, sources: &[Point], q: &Point) -> Point {
    let a = &coef.affine;
    let mut x = a[(0, 0)] + a[(0, 1)] * q.x + a[(0, 2)] * q.y;
    let mut y = a[(1, 0)] + a[(1, 1)] * q.x + a[(1, 2)] * q.y;
    for (w, p) in coef.weights.iter().zip(sources) {
        let u = tps_kernel((q - p).norm_squared());
        x += w[0] * u;
        y += w[1] * u;
    }
    Point::new(x, y)
}

pub fn evaluate_map(coef: &TpsCoefficients, grid: &ControlGrid, points: &[Point]) -> Vec<Point> {
    points
        .iter()
        .map(|q| map_point(coef, grid.source_points(), q))
        .collect()
}

/// Evaluates the map at every pixel center of a `width × height` raster.
pub fn make_sampling_grid(
    coef: &TpsCoefficients,
    grid: &ControlGrid,
    width: usize,
    height: usize,
) -> SamplingGrid {
    let coords = (0..width * height)
        .into_par_iter()
        .map(|p| {
            let q = pixel_center(p % width, p / width, width, height);
            map_point(coef, grid.source_points(), &q)
        })
        .collect();
    SamplingGrid {
        width,
        height,
        coords,
    }
}

/// `wᵀ K w`, summed over both output dimensions.
pub fn bending_energy(coef: &TpsCoefficients, grid: &ControlGrid) -> f64 {
    let src = grid.source_points();
    let mut e = 0.0;
    for (i, wi) in coef.weights.iter().enumerate() {
        for (j, wj) in coef.weights.iter().enumerate() {
            let k = tps_kernel((src[i] - src[j]).norm_squared());
            e += k * (wi[0] * wj[0] + wi[1] * wj[1]);
        }
    }
    e
}

/// Target-independent part of the solve: `φ_i(q)` such that
/// `T(q) = Σ_i φ_i(q)·t_i` for any targets `t`.
#[derive(Debug, Clone)]
pub struct TpsBasis {
    sources: Vec<Point>,
    smoothing: f64,
    inverse: DMatrix<f64>,
}

impl TpsBasis {
    pub fn new(sources: &[Point], smoothing: f64) -> Result<Self> {
        check_smoothing(smoothing)?;
        check_sources(sources)?;
        let inverse = system_matrix(sources, smoothing)
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("system matrix is not invertible".into()))?;
        if inverse.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite inverse".into()));
        }
        Ok(TpsBasis {
            sources: sources.to_vec(),
            smoothing,
            inverse,
        })
    }

    pub fn for_grid(grid: &ControlGrid, smoothing: f64) -> Result<Self> {
        Self::new(grid.source_points(), smoothing)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// `φ(q)`, one entry per control point.
    pub fn weights_at(&self, q: &Point) -> Vec<f64> {
        let n = self.sources.len();
        let mut r = DVector::zeros(n + 3);
        for (i, p) in self.sources.iter().enumerate() {
            r[i] = tps_kernel((q - p).norm_squared());
        }
        r[n] = 1.0;
        r[n + 1] = q.x;
        r[n + 2] = q.y;
        // The system matrix is symmetric, so row φ(q)ᵀ = (L⁻¹ r)ᵀ.
        let phi = &self.inverse * r;
        phi.rows(0, n).iter().copied().collect()
    }

    /// Row `p` holds `φ(points[p])`.
    pub fn matrix(&self, points: &[Point]) -> DMatrix<f64> {
        let n = self.sources.len();
        let rows: Vec<Vec<f64>> = points.par_iter().map(|q| self.weights_at(q)).collect();
        DMatrix::from_fn(points.len(), n, |p, i| rows[p][i])
    }

    /// `T(q)` for the given targets via the basis expansion.
    pub fn apply(&self, targets: &[Point], q: &Point) -> Point {
        let phi = self.weights_at(q);
        let mut out = Point::origin();
        for (f, t) in phi.iter().zip(targets) {
            out.x += f * t.x;
            out.y += f * t.y;
        }
        out
    }
}

/// Derivative of mapped query points with respect to the control targets.
///
/// The x output depends only on target x coordinates and the y output only on
/// target y coordinates, with the same factor, so
/// `∂T_d(q_p)/∂t_{i,d} = basis[(p, i)]` and all cross terms are zero.
#[derive(Debug, Clone)]
pub struct TargetJacobian {
    pub basis: DMatrix<f64>,
}

impl TargetJacobian {
    /// `∂T_out(q_p) / ∂t_{i, d_in}`.
    pub fn entry(&self, query: usize, point: usize, out_dim: usize, in_dim: usize) -> f64 {
        if out_dim == in_dim {
            self.basis[(query, point)]
        } else {
            0.0
        }
    }
}

pub fn map_jacobian_wrt_targets(
    grid: &ControlGrid,
    smoothing: f64,
    query_points: &[Point],
) -> Result<TargetJacobian> {
    let basis = TpsBasis::for_grid(grid, smoothing)?;
    Ok(TargetJacobian {
        basis: basis.matrix(query_points),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jitter(grid: &ControlGrid, rng: &mut ChaCha8Rng, amp: f64) -> ControlGrid {
        let t = grid
            .source_points()
            .iter()
            .map(|p| Point::new(p.x + rng.gen_range(-amp..amp), p.y + rng.gen_range(-amp..amp)))
            .collect();
        ControlGrid::with_targets(grid.n_side(), t).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(tps_kernel(0.0), 0.0);
        assert_eq!(tps_kernel(1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((tps_kernel(e) - e).abs() < 1e-15);
    }

    #[test]
    fn lattice_is_regular() {
        for n in 3..=9 {
            let pts = ControlGrid::lattice(n);
            assert_eq!(pts.len(), n * n);
            let h = 1.0 / n as f64;
            for i in 0..n {
                for j in 0..n {
                    let p = pts[i * n + j];
                    assert!((p.x - (j as f64 + 0.5) * h).abs() < 1e-12);
                    assert!((p.y - (i as f64 + 0.5) * h).abs() < 1e-12);
                    if j + 1 < n {
                        assert!((pts[i * n + j + 1].x - p.x - h).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn small_grids_rejected() {
        assert!(matches!(ControlGrid::identity(2), Err(Error::InvalidGrid(_))));
        assert!(ControlGrid::with_targets(3, vec![Point::origin(); 8]).is_err());
    }

    #[test]
    fn identity_targets_give_identity_coefficients() {
        let grid = ControlGrid::identity(4).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        let expect = Matrix2x3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!((c.affine - expect).abs().max() < 1e-12);
        assert!(c.max_abs_weight() < 1e-12);
    }

    #[test]
    fn translation_is_purely_affine() {
        let grid = ControlGrid::identity(4).unwrap();
        let t = grid.source_points().iter().map(|p| Point::new(p.x + 0.1, p.y)).collect();
        let grid = ControlGrid::with_targets(4, t).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        assert!(c.max_abs_weight() < 1e-9);
        assert!((c.affine[(0, 0)] - 0.1).abs() < 1e-12);
        let out = evaluate_map(&c, &grid, &[Point::new(0.5, 0.5)]);
        assert!((out[0] - Point::new(0.6, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn single_displaced_point_is_interpolated() {
        let mut t = ControlGrid::lattice(4);
        t[5].x += 0.05;
        let grid = ControlGrid::with_targets(4, t.clone()).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        // Oracle: direct evaluation of A·(1,x,y) + Σ w U at each control point.
        for (p, target) in grid.source_points().iter().zip(&t) {
            let mut x = c.affine[(0, 0)] + c.affine[(0, 1)] * p.x + c.affine[(0, 2)] * p.y;
            let mut y = c.affine[(1, 0)] + c.affine[(1, 1)] * p.x + c.affine[(1, 2)] * p.y;
            for (w, s) in c.weights.iter().zip(grid.source_points()) {
                let d2 = (p.x - s.x).powi(2) + (p.y - s.y).powi(2);
                let u = if d2 == 0.0 { 0.0 } else { d2 * d2.ln() };
                x += w[0] * u;
                y += w[1] * u;
            }
            assert!((x - target.x).abs() < 1e-9 && (y - target.y).abs() < 1e-9);
        }
    }

    #[test]
    fn side_conditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..=6 {
            for &k in &[0.0, 1e-2, 1.0] {
                let g = jitter(&ControlGrid::identity(n).unwrap(), &mut rng, 0.05);
                let c = solve_coefficients(&g, k).unwrap();
                for d in 0..2 {
                    let norm: f64 = c.weights.iter().map(|w| w[d] * w[d]).sum::<f64>().sqrt();
                    let s0: f64 = c.weights.iter().map(|w| w[d]).sum();
                    let sx: f64 = c.weights.iter().zip(g.source_points()).map(|(w, p)| w[d] * p.x).sum();
                    let sy: f64 = c.weights.iter().zip(g.source_points()).map(|(w, p)| w[d] * p.y).sum();
                    for s in [s0, sx, sy] {
                        assert!(s.abs() <= 1e-8 * norm.max(1e-300), "{s} vs {norm}");
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_grid_matches_pointwise_evaluation() {
        let mut t = ControlGrid::lattice(4);
        t[5].x += 0.05;
        let grid = ControlGrid::with_targets(4, t).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        let sg = make_sampling_grid(&c, &grid, 16, 8);
        let pts = SamplingGrid::pixel_centers(16, 8);
        let direct = evaluate_map(&c, &grid, &pts);
        assert_eq!(sg.coords, direct);
    }

    #[test]
    fn sampling_grid_identity_and_translation() {
        let grid = ControlGrid::identity(4).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        let sg = make_sampling_grid(&c, &grid, 4, 2);
        for (a, b) in sg.coords.iter().zip(SamplingGrid::pixel_centers(4, 2)) {
            assert!((a - b).norm() < 1e-9);
        }
        let t = grid.source_points().iter().map(|p| Point::new(p.x + 0.1, p.y)).collect();
        let grid = ControlGrid::with_targets(4, t).unwrap();
        let c = solve_coefficients(&grid, 0.0).unwrap();
        let sg = make_sampling_grid(&c, &grid, 1024, 2);
        for (a, b) in sg.coords.iter().zip(SamplingGrid::pixel_centers(1024, 2)) {
            assert!((a.x - b.x - 0.1).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_interpolates_and_sums_to_one() {
        let grid = ControlGrid::identity(5).unwrap();
        let basis = TpsBasis::for_grid(&grid, 0.0).unwrap();
        for (j, p) in grid.source_points().iter().enumerate() {
            let phi = basis.weights_at(p);
            for (i, f) in phi.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((f - expect).abs() < 1e-9);
            }
        }
        for q in [Point::new(0.03, 0.9), Point::new(-0.2, 1.3), Point::new(0.51, 0.49)] {
            let s: f64 = basis.weights_at(&q).iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = jitter(&ControlGrid::identity(4).unwrap(), &mut rng, 0.04);
        let queries: Vec<Point> = (0..10)
            .map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let jac = map_jacobian_wrt_targets(&grid, 0.0, &queries).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            for d in 0..2 {
                let bump = |s: f64| {
                    let mut t = grid.target_points().to_vec();
                    t[i][d] += s;
                    let g = ControlGrid::with_targets(4, t).unwrap();
                    let c = solve_coefficients(&g, 0.0).unwrap();
                    evaluate_map(&c, &g, &queries)
                };
                let (plus, minus) = (bump(h), bump(-h));
                for q in 0..queries.len() {
                    for o in 0..2 {
                        let fd = (plus[q][o] - minus[q][o]) / (2.0 * h);
                        let an = jac.entry(q, i, o, d);
                        let rel = (fd - an).abs() / an.abs().max(1e-3);
                        worst = worst.max(rel);
                    }
                }
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn basis_reconstruction_matches_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &k in &[0.0, 0.1] {
            let grid = jitter(&ControlGrid::identity(6).unwrap(), &mut rng, 0.05);
            let c = solve_coefficients(&grid, k).unwrap();
            let basis = TpsBasis::for_grid(&grid, k).unwrap();
            for _ in 0..20 {
                let q = Point::new(rng.gen_range(-0.1..1.1), rng.gen_range(-0.1..1.1));
                let direct = evaluate_map(&c, &grid, &[q])[0];
                assert!((basis.apply(grid.target_points(), &q) - direct).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn duplicated_or_collinear_sources_are_singular() {
        let dup = vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(solve_points(&dup, &dup, 0.0), Err(Error::SingularSystem(_))));
        let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64 * 0.2, i as f64 * 0.1)).collect();
        assert!(matches!(solve_points(&line, &line, 0.0), Err(Error::SingularSystem(_))));
        assert!(TpsBasis::new(&line, 0.0).is_err());
    }

    #[test]
    fn deserialized_grid_is_validated() {
        let grid = ControlGrid::identity(3).unwrap();
        let json = serde_json::to_string(&grid).unwrap();
        let back: ControlGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, grid);
        let bad = r#"{"n_side":2,"target_points":[[0,0],[1,0],[0,1],[1,1]]}"#;
        assert!(serde_json::from_str::<ControlGrid>(bad).is_err());
    }
}
