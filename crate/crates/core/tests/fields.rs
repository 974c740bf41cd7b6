use std::f64::consts::PI;

use bps_vortex::fields::{
    integrate, laplacian_plane, laplacian_torus, mean, norm_sup, poisson_solve_zero_mean,
    DirichletSolver,
};
use bps_vortex::{Error, Grid, PlaneGrid, ScalarField, TorusGrid};
use proptest::prelude::*;

fn torus(lx: f64, ly: f64, nx: usize, ny: usize) -> Grid {
    TorusGrid::new(lx, ly, nx, ny).unwrap().into()
}

/// Random trigonometric polynomial with at most `modes` modes per axis.
fn trig_field(
    grid: Grid,
    lx: f64,
    ly: f64,
    coeffs: &[(i32, i32, f64, f64)],
) -> (ScalarField, ScalarField) {
    let value = |x: f64, y: f64| {
        coeffs
            .iter()
            .map(|&(p, q, a, b)| {
                let phase = 2.0 * PI * (p as f64 * x / lx + q as f64 * y / ly);
                a * phase.cos() + b * phase.sin()
            })
            .sum::<f64>()
    };
    let laplacian = |x: f64, y: f64| {
        coeffs
            .iter()
            .map(|&(p, q, a, b)| {
                let k2 = (2.0 * PI * p as f64 / lx).powi(2) + (2.0 * PI * q as f64 / ly).powi(2);
                let phase = 2.0 * PI * (p as f64 * x / lx + q as f64 * y / ly);
                -k2 * (a * phase.cos() + b * phase.sin())
            })
            .sum::<f64>()
    };
    (
        ScalarField::from_fn(grid, value),
        ScalarField::from_fn(grid, laplacian),
    )
}

fn coeffs() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-5i32..=5, -5i32..=5, -1.0f64..1.0, -1.0f64..1.0), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_laplacian_is_exact_on_resolved_modes(
        c in coeffs(), lx in 2.0f64..8.0, ly in 2.0f64..8.0,
    ) {
        let grid = torus(lx, ly, 32, 24);
        let (u, lap) = trig_field(grid, lx, ly, &c);
        let got = laplacian_torus(&u);
        let scale = 1.0 + norm_sup(&lap);
        for (a, b) in got.values().iter().zip(lap.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn poisson_inverts_the_laplacian_on_zero_mean_fields(
        c in coeffs(), lx in 2.0f64..8.0, ly in 2.0f64..8.0, shift in -3.0f64..3.0,
    ) {
        let grid = torus(lx, ly, 32, 24);
        let (u, lap) = trig_field(grid, lx, ly, &c);
        let u0 = u.map(|x| x - mean(&u));
        let solved = poisson_solve_zero_mean(&lap).unwrap();
        prop_assert!(mean(&solved).abs() <= 1e-12 * (1.0 + norm_sup(&u0)));
        for (a, b) in solved.values().iter().zip(u0.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + norm_sup(&u0)));
        }
        let shifted = solved.map(|x| x + shift);
        let relap = laplacian_torus(&shifted);
        for (a, b) in relap.values().iter().zip(lap.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + norm_sup(&lap)));
        }
    }

    #[test]
    fn integral_of_a_laplacian_vanishes(c in coeffs()) {
        let grid = torus(5.0, 4.0, 40, 40);
        let (u, _) = trig_field(grid, 5.0, 4.0, &c);
        prop_assert!(integrate(&laplacian_torus(&u)).abs() <= 1e-9 * (1.0 + norm_sup(&u)));
    }

    #[test]
    fn dirichlet_solver_inverts_the_shifted_plane_operator(seed in 0u64..1000, sigma in 0.0f64..5.0) {
        let pg = PlaneGrid::new(3.0, 21).unwrap();
        let grid: Grid = pg.into();
        let solver = DirichletSolver::new(pg);
        let x = ScalarField::from_fn(grid, |x, y| {
            let s = seed as f64 * 0.01;
            (x * (1.0 + s)).sin() * (y - s).cos() + 0.1 * x * y
        });
        let rhs = solver.solve_shifted(x.values(), 1.0, sigma);
        let back = ScalarField::new(grid, rhs).unwrap();
        let lap = laplacian_plane(&back, 0.0);
        for k in 0..pg.len() {
            if !pg.is_boundary(k) {
                let applied = sigma * back.values()[k] - lap.values()[k];
                prop_assert!((applied - x.values()[k]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn nonzero_mean_right_hand_side_is_rejected() {
    let grid = torus(5.0, 4.0, 16, 16);
    let rhs = ScalarField::from_fn(grid, |x, _| 1.0 + 0.1 * (2.0 * PI * x / 5.0).sin());
    assert!(matches!(
        poisson_solve_zero_mean(&rhs),
        Err(Error::NonZeroMeanRhs { .. })
    ));
}

#[test]
fn plane_laplacian_matches_a_quadratic() {
    let grid: Grid = PlaneGrid::new(2.0, 41).unwrap().into();
    let u = ScalarField::from_fn(grid, |x, y| x * x + 3.0 * y * y);
    let boundary_value = 0.0;
    let lap = laplacian_plane(&u, boundary_value);
    let pg = *grid.as_plane().unwrap();
    for k in 0..pg.len() {
        let (i, j) = (k % pg.n, k / pg.n);
        if i > 1 && j > 1 && i < pg.n - 2 && j < pg.n - 2 {
            assert!((lap.values()[k] - 8.0).abs() < 1e-10);
        }
    }
}

#[test]
fn grids_reject_bad_shapes() {
    assert!(TorusGrid::new(0.0, 1.0, 8, 8).is_err());
    assert!(TorusGrid::new(1.0, 1.0, 7, 8).is_err());
    assert!(TorusGrid::new(1.0, 1.0, 8, 6).is_err());
    assert!(PlaneGrid::new(-1.0, 9).is_err());
    let grid = torus(1.0, 1.0, 8, 8);
    assert!(matches!(
        ScalarField::new(grid, vec![0.0; 10]),
        Err(Error::LengthMismatch {
            expected: 64,
            actual: 10
        })
    ));
    assert!(matches!(
        ScalarField::new(grid, vec![f64::NAN; 64]),
        Err(Error::NonFinite { index: 0 })
    ));
}
