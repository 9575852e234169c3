use proptest::prelude::*;
use tpslayout::tps::{
    bending_energy, evaluate_map, make_sampling_grid, solve_coefficients, ControlGrid, Point, TpsBasis,
};

fn grid_strategy() -> impl Strategy<Value = ControlGrid> {
    (3usize..=9).prop_flat_map(|n| {
        prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1), n * n).prop_map(move |d| {
            let targets = ControlGrid::lattice(n)
                .iter()
                .zip(&d)
                .map(|(p, (dx, dy))| Point::new(p.x + dx, p.y + dy))
                .collect();
            ControlGrid::with_targets(n, targets).unwrap()
        })
    })
}

fn query_points() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y)| Point::new(x, y)), 1..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolates_targets_exactly(grid in grid_strategy()) {
        let coef = solve_coefficients(&grid, 0.0).unwrap();
        let mapped = evaluate_map(&coef, &grid, grid.source_points());
        for (m, t) in mapped.iter().zip(grid.target_points()) {
            prop_assert!((m - t).norm() < 1e-9, "{m} vs {t}");
        }
    }

    #[test]
    fn affine_targets_have_no_radial_part(
        n in 3usize..=9,
        a in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform2(-1.0f64..1.0),
        k in prop::sample::select(vec![0.0, 1e-3, 0.1, 10.0]),
    ) {
        let targets: Vec<Point> = ControlGrid::lattice(n)
            .iter()
            .map(|p| Point::new(a[0] * p.x + a[1] * p.y + b[0], a[2] * p.x + a[3] * p.y + b[1]))
            .collect();
        let scale = targets.iter().fold(1e-3f64, |m, t| m.max(t.x.abs()).max(t.y.abs()));
        let grid = ControlGrid::with_targets(n, targets).unwrap();
        let coef = solve_coefficients(&grid, k).unwrap();
        prop_assert!(coef.max_abs_weight() < 1e-8 * scale, "{}", coef.max_abs_weight());
    }

    #[test]
    fn side_conditions_after_every_solve(grid in grid_strategy(), k in 0.0f64..5.0) {
        let coef = solve_coefficients(&grid, k).unwrap();
        for d in 0..2 {
            let (mut s0, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for (w, p) in coef.weights.iter().zip(grid.source_points()) {
                s0 += w[d];
                sx += w[d] * p.x;
                sy += w[d] * p.y;
            }
            let scale = coef.max_abs_weight().max(1.0);
            prop_assert!(s0.abs() < 1e-9 * scale && sx.abs() < 1e-9 * scale && sy.abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn basis_is_a_partition_of_unity(n in 3usize..=9, k in 0.0f64..1.0, qs in query_points()) {
        let basis = TpsBasis::new(&ControlGrid::lattice(n), k).unwrap();
        let sources = ControlGrid::lattice(n);
        for q in &qs {
            let phi = basis.weights_at(q);
            let sum: f64 = phi.iter().sum();
            let (mut x, mut y) = (0.0, 0.0);
            for (f, p) in phi.iter().zip(&sources) {
                x += f * p.x;
                y += f * p.y;
            }
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!((x - q.x).abs() < 1e-9 && (y - q.y).abs() < 1e-9);
        }
    }

    #[test]
    fn bending_energy_falls_with_smoothing(grid in grid_strategy()) {
        let energies: Vec<f64> = [0.0, 1e-3, 1e-1, 10.0]
            .iter()
            .map(|&k| bending_energy(&solve_coefficients(&grid, k).unwrap(), &grid))
            .collect();
        for pair in energies.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-12, "{energies:?}");
        }
    }

    #[test]
    fn map_is_linear_in_targets(
        n in 3usize..=6,
        d1 in prop::collection::vec(-0.2f64..0.2, 162),
        d2 in prop::collection::vec(-0.2f64..0.2, 162),
        qs in query_points(),
    ) {
        let src = ControlGrid::lattice(n);
        let m = src.len();
        let t1: Vec<Point> = (0..m).map(|i| Point::new(src[i].x + d1[2 * i], src[i].y + d1[2 * i + 1])).collect();
        let t2: Vec<Point> = (0..m).map(|i| Point::new(d2[2 * i], d2[2 * i + 1])).collect();
        let sum: Vec<Point> = t1.iter().zip(&t2).map(|(a, b)| Point::new(a.x + b.x, a.y + b.y)).collect();
        let eval = |t: &[Point]| {
            let g = ControlGrid::with_targets(n, t.to_vec()).unwrap();
            evaluate_map(&solve_coefficients(&g, 0.0).unwrap(), &g, &qs)
        };
        let (a, b, c) = (eval(&sum), eval(&t1), eval(&t2));
        for i in 0..qs.len() {
            prop_assert!(((a[i] - b[i]) - c[i].coords).norm() < 1e-9);
        }
    }

    #[test]
    fn solve_and_grid_are_deterministic(grid in grid_strategy()) {
        let c1 = solve_coefficients(&grid, 0.01).unwrap();
        let c2 = solve_coefficients(&grid, 0.01).unwrap();
        prop_assert_eq!(&c1, &c2);
        prop_assert_eq!(make_sampling_grid(&c1, &grid, 24, 12), make_sampling_grid(&c2, &grid, 24, 12));
    }
}
