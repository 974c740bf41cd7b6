//! Seeded random smooth states, for initial guesses and property checks.

use std::f64::consts::PI;

use rand::{Rng, RngExt};

use crate::energy::{Problem, StatePair};
use crate::fields::{Grid, ScalarField};

/// Highest mode index per axis in a random smooth field.
const MODES: usize = 3;

/// Random low-mode trigonometric field with sup norm at most `amplitude`.
///
/// On the torus the field is periodic; on the plane it is a sine series that
/// vanishes on the boundary ring.
pub fn random_smooth_field<R: Rng>(grid: Grid, rng: &mut R, amplitude: f64) -> ScalarField {
    let mut terms = Vec::new();
    let mut total = 0.0;
    for kx in 0..=MODES {
        for ky in 0..=MODES {
            let weight = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
            let coeff = weight * rng.random_range(-1.0..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            total += coeff.abs();
            terms.push((kx as f64, ky as f64, coeff, phase));
        }
    }
    let scale = if total > 0.0 { amplitude / total } else { 0.0 };
    match grid {
        Grid::Torus(g) => ScalarField::from_fn(grid, |x, y| {
            terms
                .iter()
                .map(|&(kx, ky, c, ph)| c * (2.0 * PI * (kx * x / g.lx + ky * y / g.ly) + ph).cos())
                .sum::<f64>()
                * scale
        }),
        Grid::Plane(g) => {
            let r = g.half_width;
            ScalarField::from_fn(grid, |x, y| {
                let (sx, sy) = ((x + r) / (2.0 * r), (y + r) / (2.0 * r));
                terms
                    .iter()
                    .map(|&(kx, ky, c, _)| {
                        c * (PI * (kx + 1.0) * sx).sin() * (PI * (ky + 1.0) * sy).sin()
                    })
                    .sum::<f64>()
                    * scale
            })
        }
    }
}

/// Random smooth state respecting the plane boundary data of `problem`.
pub fn random_state<R: Rng>(problem: &Problem, rng: &mut R, amplitude: f64) -> StatePair {
    let mut s = problem.initial_state();
    let du = random_smooth_field(problem.grid(), rng, amplitude);
    let df = random_smooth_field(problem.grid(), rng, amplitude);
    for (x, d) in s.u.values_mut().iter_mut().zip(du.values()) {
        *x += d;
    }
    for (x, d) in s.f.values_mut().iter_mut().zip(df.values()) {
        *x += d;
    }
    problem.impose_boundary(&mut s);
    s
}

/// Random smooth direction, zero on the plane boundary ring.
pub fn random_direction<R: Rng>(problem: &Problem, rng: &mut R) -> StatePair {
    StatePair {
        u: random_smooth_field(problem.grid(), rng, 1.0),
        f: random_smooth_field(problem.grid(), rng, 1.0),
    }
}
