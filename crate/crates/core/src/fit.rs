//! Direct optimization of TPS control targets so that the warped reference
//! maps match a target pair of maps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LayoutMaps, Raster};
use crate::tps::{make_sampling_grid, pixel_center, solve_points, ControlGrid, Point, SamplingGrid, TpsBasis};
use crate::warp::{sample_bilinear, sample_gradient};

/// The (alpha, beta) pairs of the loss-weight sweep.
pub const ALPHA_BETA_SWEEP: [(f64, f64); 5] = [(0.10, 0.90), (0.25, 0.75), (0.50, 0.50), (0.75, 0.25), (0.90, 0.10)];

const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Edge-map loss weight.
    pub alpha: f64,
    /// Corner-map loss weight.
    pub beta: f64,
    /// Huber threshold.
    pub delta: f64,
    pub steps: usize,
    pub step_size: f64,
    pub first_moment_decay: f64,
    pub second_moment_decay: f64,
    /// Decoupled decay applied to the control-point displacement.
    pub weight_decay: f64,
    pub n_side: usize,
    /// TPS regularizer `k`.
    pub smoothing: f64,
    /// Coarse-to-fine Gaussian blur schedule.
    pub pyramid: bool,
    pub pyramid_levels: usize,
    /// Blur σ of the finest level, in working-resolution pixels; each coarser
    /// level doubles it.
    pub pyramid_sigma: f64,
    /// Maps wider than this are box-downsampled for the optimization.
    pub work_width: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            alpha: 0.75,
            beta: 0.25,
            delta: 1.0,
            steps: 400,
            step_size: 1e-2,
            first_moment_decay: 0.9,
            second_moment_decay: 0.999,
            weight_decay: 1e-4,
            n_side: 4,
            smoothing: 0.0,
            pyramid: true,
            pyramid_levels: 3,
            pyramid_sigma: 2.0,
            work_width: 256,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta > 0.0) {
            return bad("alpha and beta must be non-negative with a positive sum");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.step_size > 0.0 && self.weight_decay >= 0.0) {
            return bad("step_size must be positive and weight_decay non-negative");
        }
        for d in [self.first_moment_decay, self.second_moment_decay] {
            if !(0.0..1.0).contains(&d) {
                return bad("moment decays must lie in [0, 1)");
            }
        }
        if self.n_side < 3 {
            return bad("n_side must be at least 3");
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return bad("smoothing must be a finite non-negative number");
        }
        if self.pyramid && (self.pyramid_levels == 0 || !(self.pyramid_sigma > 0.0)) {
            return bad("pyramid needs at least one level and a positive sigma");
        }
        if self.work_width < 8 {
            return bad("work_width must be at least 8");
        }
        Ok(())
    }

    /// Blur σ per level, coarsest first; a single unblurred level without
    /// the pyramid.
    pub fn level_sigmas(&self) -> Vec<f64> {
        if !self.pyramid {
            return vec![0.0];
        }
        (0..self.pyramid_levels)
            .rev()
            .map(|l| self.pyramid_sigma * f64::powi(2.0, l as i32))
            .collect()
    }
}

/// A loss value with its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Huber penalty of a single residual `e`.
pub fn huber(e: f64, delta: f64) -> f64 {
    let a = e.abs();
    if a <= delta {
        0.5 * e * e
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Elementwise Huber loss averaged over all values (pixels × channels).
pub fn huber_loss(pred: &Raster, gt: &Raster, delta: f64) -> Result<LossGrad> {
    if !pred.same_shape(gt) {
        return Err(Error::shape(gt.shape_string(), pred.shape_string()));
    }
    let scale = 1.0 / pred.data().len() as f64;
    let mut value = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(p, g)| {
            let e = p - g;
            value += huber(e, delta);
            e.clamp(-delta, delta) * scale
        })
        .collect();
    Ok(LossGrad {
        value: value * scale,
        grad,
    })
}

/// `alpha·L_edge + beta·L_corner`; gradients are already weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct OverallLoss {
    pub total: f64,
    pub edge: f64,
    pub corner: f64,
    pub grad_edge: Vec<f64>,
    pub grad_corner: Vec<f64>,
}

pub fn weighted_loss(alpha: f64, beta: f64, edge: f64, corner: f64) -> f64 {
    alpha * edge + beta * corner
}

pub fn overall_loss(pred: &LayoutMaps, gt: &LayoutMaps, alpha: f64, beta: f64, delta: f64) -> Result<OverallLoss> {
    let e = huber_loss(&pred.edge, &gt.edge, delta)?;
    let c = huber_loss(&pred.corner, &gt.corner, delta)?;
    Ok(OverallLoss {
        total: weighted_loss(alpha, beta, e.value, c.value),
        edge: e.value,
        corner: c.value,
        grad_edge: e.grad.into_iter().map(|g| alpha * g).collect(),
        grad_corner: c.grad.into_iter().map(|g| beta * g).collect(),
    })
}

/// Warps both maps of `reference` through the TPS of `grid` at the
/// reference's resolution.
///
/// The map is evaluated as `q + D(q)` where `D` interpolates the control
/// displacements, so a zero displacement reproduces the reference exactly.
pub fn warp_maps(reference: &LayoutMaps, grid: &ControlGrid, smoothing: f64) -> Result<LayoutMaps> {
    let (w, h) = (reference.width(), reference.height());
    let disp: Vec<Point> = grid
        .source_points()
        .iter()
        .zip(grid.target_points())
        .map(|(s, t)| Point::from(t - s))
        .collect();
    let coef = solve_points(grid.source_points(), &disp, smoothing)?;
    let mut sgrid = make_sampling_grid(&coef, grid, w, h);
    for (p, c) in sgrid.coords.iter_mut().enumerate() {
        *c += pixel_center(p % w, p / w, w, h).coords;
    }
    warp_maps_with(reference, &sgrid)
}

fn warp_maps_with(reference: &LayoutMaps, sgrid: &SamplingGrid) -> Result<LayoutMaps> {
    LayoutMaps::new(
        sample_bilinear(&reference.edge, sgrid, true),
        sample_bilinear(&reference.corner, sgrid, true),
    )
}

/// Loss of warping `reference` towards `target` as a function of the control
/// targets, with the basis matrix precomputed for the raster's pixel centers.
pub struct Objective {
    reference: LayoutMaps,
    target: LayoutMaps,
    sources: Vec<Point>,
    centers: Vec<Point>,
    basis: DMatrix<f64>,
    alpha: f64,
    beta: f64,
    delta: f64,
}

/// Loss value and its gradient with respect to each control target.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: Vec<[f64; 2]>,
}

impl Objective {
    pub fn new(
        reference: LayoutMaps,
        target: LayoutMaps,
        sources: &[Point],
        smoothing: f64,
        alpha: f64,
        beta: f64,
        delta: f64,
    ) -> Result<Self> {
        if !reference.same_shape(&target) {
            return Err(Error::shape(
                format!("{}x{}", reference.width(), reference.height()),
                format!("{}x{}", target.width(), target.height()),
            ));
        }
        let centers = SamplingGrid::pixel_centers(reference.width(), reference.height());
        let basis = TpsBasis::new(sources, smoothing)?.matrix(&centers);
        Ok(Objective {
            reference,
            target,
            sources: sources.to_vec(),
            centers,
            basis,
            alpha,
            beta,
            delta,
        })
    }

    /// Pixel centers plus the interpolated control displacements.
    pub fn sampling_grid(&self, targets: &[Point]) -> SamplingGrid {
        let n = targets.len();
        let dx = DVector::from_iterator(n, targets.iter().zip(&self.sources).map(|(t, s)| t.x - s.x));
        let dy = DVector::from_iterator(n, targets.iter().zip(&self.sources).map(|(t, s)| t.y - s.y));
        let (x, y) = (&self.basis * dx, &self.basis * dy);
        let coords = self
            .centers
            .iter()
            .zip(x.iter().zip(y.iter()))
            .map(|(c, (&x, &y))| Point::new(c.x + x, c.y + y))
            .collect();
        SamplingGrid {
            width: self.reference.width(),
            height: self.reference.height(),
            coords,
        }
    }

    pub fn loss(&self, targets: &[Point]) -> Result<f64> {
        let warped = warp_maps_with(&self.reference, &self.sampling_grid(targets))?;
        Ok(overall_loss(&warped, &self.target, self.alpha, self.beta, self.delta)?.total)
    }

    /// Chain rule: loss → warped pixels → sample coordinates → targets.
    pub fn evaluate(&self, targets: &[Point]) -> Result<Evaluation> {
        if targets.len() != self.basis.ncols() {
            return Err(Error::shape(format!("{} targets", self.basis.ncols()), targets.len()));
        }
        let sgrid = self.sampling_grid(targets);
        if sgrid.coords.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
            return Ok(Evaluation {
                loss: f64::NAN,
                grad: vec![[0.0; 2]; targets.len()],
            });
        }
        let warped = warp_maps_with(&self.reference, &sgrid)?;
        let l = overall_loss(&warped, &self.target, self.alpha, self.beta, self.delta)?;
        let ge = sample_gradient(&self.reference.edge, &sgrid, &l.grad_edge, true)?;
        let gc = sample_gradient(&self.reference.corner, &sgrid, &l.grad_corner, true)?;
        let p = ge.len();
        let gx = DVector::from_iterator(p, ge.iter().zip(&gc).map(|(a, b)| a[0] + b[0]));
        let gy = DVector::from_iterator(p, ge.iter().zip(&gc).map(|(a, b)| a[1] + b[1]));
        let (tx, ty) = (self.basis.tr_mul(&gx), self.basis.tr_mul(&gy));
        Ok(Evaluation {
            loss: l.total,
            grad: tx.iter().zip(ty.iter()).map(|(&x, &y)| [x, y]).collect(),
        })
    }
}

/// Result of [`fit_tps`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Loss before each update, at the working resolution and blur level of
    /// that step.
    pub losses: Vec<f64>,
    pub grid: ControlGrid,
    /// Reference warped at full resolution by the final grid.
    pub warped: LayoutMaps,
    /// Unblurred full-resolution loss of the identity warp.
    pub initial_loss: f64,
    /// Unblurred full-resolution loss of the final warp.
    pub final_loss: f64,
}

fn work_factor(width: usize, height: usize, work_width: usize) -> usize {
    let mut f = (width / work_width).max(1);
    while f > 1 && (width % f != 0 || height % f != 0) {
        f -= 1;
    }
    f
}

/// Optimizes control targets with Adam and decoupled weight decay on the
/// displacement from the lattice, starting from the identity warp.
///
/// With the pyramid enabled, the step budget is split evenly over the blur
/// levels (remainder to the finest); optimizer state carries across levels.
pub fn fit_tps(reference: &LayoutMaps, target: &LayoutMaps, cfg: &FitConfig) -> Result<FitTrace> {
    cfg.validate()?;
    if !reference.same_shape(target) {
        return Err(Error::shape(
            format!("{}x{}", reference.width(), reference.height()),
            format!("{}x{}", target.width(), target.height()),
        ));
    }
    let mut grid = ControlGrid::identity(cfg.n_side)?;
    let sources = grid.source_points().to_vec();
    let n = sources.len();

    let factor = work_factor(reference.width(), reference.height(), cfg.work_width);
    let ref_small = reference.downsample(factor)?;
    let tgt_small = target.downsample(factor)?;

    let sigmas = cfg.level_sigmas();
    let per_level = cfg.steps / sigmas.len();
    let mut budgets = vec![per_level; sigmas.len()];
    *budgets.last_mut().unwrap() += cfg.steps - per_level * sigmas.len();

    let mut t = sources.clone();
    let mut m = vec![[0.0; 2]; n];
    let mut v = vec![[0.0; 2]; n];
    let (b1, b2) = (cfg.first_moment_decay, cfg.second_moment_decay);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut step = 0usize;
    for (&sigma, &budget) in sigmas.iter().zip(&budgets) {
        if budget == 0 {
            continue;
        }
        let objective = Objective::new(
            ref_small.gaussian_blur(sigma),
            tgt_small.gaussian_blur(sigma),
            &sources,
            cfg.smoothing,
            cfg.alpha,
            cfg.beta,
            cfg.delta,
        )?;
        for _ in 0..budget {
            let eval = objective.evaluate(&t)?;
            if !eval.loss.is_finite() || eval.grad.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { iteration: step });
            }
            losses.push(eval.loss);
            step += 1;
            let c1 = 1.0 - b1.powi(step as i32);
            let c2 = 1.0 - b2.powi(step as i32);
            for i in 0..n {
                for d in 0..2 {
                    let g = eval.grad[i][d];
                    m[i][d] = b1 * m[i][d] + (1.0 - b1) * g;
                    v[i][d] = b2 * v[i][d] + (1.0 - b2) * g * g;
                    let update = (m[i][d] / c1) / ((v[i][d] / c2).sqrt() + ADAM_EPSILON);
                    let decay = cfg.weight_decay * (t[i][d] - sources[i][d]);
                    t[i][d] -= cfg.step_size * (update + decay);
                }
            }
            if t.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(Error::Diverged { iteration: step });
            }
        }
    }

    grid.set_targets(t)?;
    let warped = warp_maps(reference, &grid, cfg.smoothing)?;
    let initial_loss = overall_loss(reference, target, cfg.alpha, cfg.beta, cfg.delta)?.total;
    let final_loss = overall_loss(&warped, target, cfg.alpha, cfg.beta, cfg.delta)?.total;
    if !final_loss.is_finite() {
        return Err(Error::Diverged { iteration: step });
    }
    Ok(FitTrace {
        losses,
        grid,
        warped,
        initial_loss,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{render_maps, RenderStyle, RoomLayout};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn px(v: f64) -> Raster {
        Raster::from_data(1, 1, 1, vec![v]).unwrap()
    }

    #[test]
    fn huber_unit_values() {
        let zero = px(0.0);
        assert_eq!(huber_loss(&zero, &zero, 1.0).unwrap().value, 0.0);
        let l = huber_loss(&px(0.5), &zero, 1.0).unwrap();
        assert_eq!(l.value, 0.125);
        assert_eq!(l.grad, vec![0.5]);
        // Linear branch needs |e| > δ; values live in [0,1], so shrink δ.
        let l = huber_loss(&px(1.0), &zero, 0.5).unwrap();
        assert_eq!(l.value, 0.5 * (1.0 - 0.25));
        assert_eq!(l.grad, vec![0.5]);
        assert!(matches!(
            huber_loss(&px(0.0), &Raster::zeros(2, 1, 1), 1.0),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn huber_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..24).map(|_| rng.gen_range(0.05..0.95)).collect();
        let b: Vec<f64> = (0..24).map(|_| rng.gen_range(0.0..1.0)).collect();
        let gt = Raster::from_data(4, 2, 3, b).unwrap();
        for delta in [1.0, 0.2] {
            let l = huber_loss(&Raster::from_data(4, 2, 3, a.clone()).unwrap(), &gt, delta).unwrap();
            for i in 0..24 {
                let h = 1e-6;
                let mut up = a.clone();
                up[i] += h;
                let mut dn = a.clone();
                dn[i] -= h;
                let f = |d: Vec<f64>| huber_loss(&Raster::from_data(4, 2, 3, d).unwrap(), &gt, delta).unwrap().value;
                let fd = (f(up) - f(dn)) / (2.0 * h);
                assert!((fd - l.grad[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn overall_weighting() {
        assert_eq!(weighted_loss(0.75, 0.25, 0.4, 0.8), 0.5);
        let maps = |e: f64, c: f64| {
            LayoutMaps::new(Raster::filled(2, 2, 3, e), Raster::filled(2, 2, 1, c)).unwrap()
        };
        let gt = maps(0.0, 0.0);
        let pred = maps(0.5, 0.8);
        let l = overall_loss(&pred, &gt, 0.75, 0.25, 1.0).unwrap();
        // ½·0.25 per edge value and ½·0.64 per corner value.
        assert_eq!(l.edge, 0.125);
        assert!((l.corner - 0.32).abs() < 1e-15);
        assert_eq!(l.total, 0.75 * l.edge + 0.25 * l.corner);

        let only_corner = overall_loss(&pred, &gt, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(only_corner.total, huber_loss(&pred.corner, &gt.corner, 1.0).unwrap().value);
        assert!(only_corner.grad_edge.iter().all(|&g| g == 0.0));
    }

    fn small_maps(room: &RoomLayout) -> LayoutMaps {
        render_maps(room, 128, 64, RenderStyle::for_width(512)).unwrap().gaussian_blur(1.5)
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let reference = small_maps(&RoomLayout::canonical());
        let cfg = FitConfig {
            steps: 12,
            ..FitConfig::default()
        };
        let trace = fit_tps(&reference, &reference, &cfg).unwrap();
        assert_eq!(trace.losses.len(), 12);
        assert!(trace.losses.iter().all(|&l| l == 0.0));
        assert_eq!(trace.grid.target_points(), trace.grid.source_points());
        assert_eq!(trace.final_loss, 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        let reference = small_maps(&RoomLayout::canonical());
        for cfg in [
            FitConfig { alpha: 0.0, beta: 0.0, ..FitConfig::default() },
            FitConfig { delta: 0.0, ..FitConfig::default() },
            FitConfig { n_side: 2, ..FitConfig::default() },
            FitConfig { step_size: -1.0, ..FitConfig::default() },
        ] {
            assert!(matches!(fit_tps(&reference, &reference, &cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn non_finite_step_is_reported_as_divergence() {
        let reference = small_maps(&RoomLayout::canonical());
        let target = small_maps(&RoomLayout::cuboid(5.0, 3.0, 2.8, 1.6, [0.3, 0.1]).unwrap());
        let cfg = FitConfig {
            step_size: f64::MAX,
            steps: 5,
            pyramid: false,
            ..FitConfig::default()
        };
        assert!(matches!(
            fit_tps(&reference, &target, &cfg),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn objective_matches_direct_warp() {
        let reference = small_maps(&RoomLayout::canonical());
        let target = small_maps(&RoomLayout::cuboid(5.0, 3.0, 2.8, 1.6, [0.3, 0.1]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut grid = ControlGrid::identity(4).unwrap();
        let t: Vec<Point> = grid
            .source_points()
            .iter()
            .map(|p| Point::new(p.x + rng.gen_range(-0.03..0.03), p.y + rng.gen_range(-0.03..0.03)))
            .collect();
        grid.set_targets(t.clone()).unwrap();
        let obj = Objective::new(reference.clone(), target.clone(), grid.source_points(), 0.0, 0.75, 0.25, 1.0).unwrap();
        let direct = warp_maps(&reference, &grid, 0.0).unwrap();
        let expect = overall_loss(&direct, &target, 0.75, 0.25, 1.0).unwrap().total;
        assert!((obj.loss(&t).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn level_schedule() {
        let cfg = FitConfig::default();
        assert_eq!(cfg.level_sigmas(), vec![8.0, 4.0, 2.0]);
        let off = FitConfig { pyramid: false, ..cfg };
        assert_eq!(off.level_sigmas(), vec![0.0]);
        assert_eq!(work_factor(1024, 512, 256), 4);
        assert_eq!(work_factor(200, 100, 256), 1);
        assert_eq!(work_factor(300, 150, 100), 3);
    }
}
