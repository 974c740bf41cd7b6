//! Checks on computed solutions and reconstruction of the physical fields.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{Geometry, Problem, StatePair};
use crate::error::{Error, Result};
use crate::fields::field::sup_abs;
use crate::fields::{Grid, ScalarField};
use crate::sampling::random_state;
use crate::setup::ModelTag;
use crate::variational::{solve, SolverSettings};

/// Slack allowed above 1 in the pointwise bounds at default resolution.
pub const BOUND_EPSILON: f64 = 0.05;

/// Number of radial bins a decay fit needs.
pub const MIN_DECAY_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `[u-equation, f-equation]`, weighted L2 over free nodes.
    pub l2: [f64; 2],
    pub sup: [f64; 2],
}

impl ResidualReport {
    pub fn max_sup(&self) -> f64 {
        self.sup[0].max(self.sup[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `int e^{v}` and `int e^{u}` over the cell.
    pub integrals: [f64; 2],
    /// `(C1, C2)` or `(alpha1, alpha2)`.
    pub targets: [f64; 2],
    pub relative_errors: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub flux_a: f64,
    pub flux_b: f64,
    /// Quantized values `2 pi m` and `2 pi (m + n)`; exact on the torus, approached on the plane.
    pub expected_a: f64,
    pub expected_b: f64,
}

impl FluxReport {
    /// Relative deviations from the quantized values (absolute when the target is zero).
    pub fn errors(&self) -> [f64; 2] {
        let rel = |x: f64, t: f64| {
            if t == 0.0 {
                x.abs()
            } else {
                (x - t).abs() / t.abs()
            }
        };
        [
            rel(self.flux_a, self.expected_a),
            rel(self.flux_b, self.expected_b),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `max e^u - 1`.
    pub exp_u_excess: f64,
    /// `max e^v - 1`.
    pub exp_v_excess: f64,
    /// `max (2 e^u) - (max e^v + 1)`.
    pub intermediate_excess: f64,
    pub epsilon: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeFit {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `lambda1 / lambda` and `lambda2 / (2 lambda)`.
    pub ratios: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Minus the slope of `ln(u^2 + v^2)` against `r`.
    pub rate_fields: f64,
    /// Minus the slope of `ln(|grad u|^2 + |grad v|^2)` against `r`.
    pub rate_gradients: f64,
    pub r_window: [f64; 2],
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub residual: ResidualReport,
    pub constraints: Option<ConstraintReport>,
    pub flux: FluxReport,
    pub bounds: BoundReport,
    pub lagrange: Option<LagrangeFit>,
    pub decay: Option<DecayFit>,
    pub decay_error: Option<String>,
    pub uniqueness_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalFields {
    pub kappa: ScalarField,
    pub phi_abs: ScalarField,
    pub a12: ScalarField,
    pub b12: ScalarField,
    /// Largest deviation of `a12`, `b12` from `-Lap u / 2` and
    /// `-(Lap u + Lap v) / 2` outside the core disks and the boundary ring.
    pub crosscheck: [f64; 2],
}

/// `e^u` and `e^v` of the physical fields, evaluated through the closed-form backgrounds.
fn exponentials(problem: &Problem, state: &StatePair) -> (Vec<f64>, Vec<f64>) {
    let bg = problem.background();
    let (g, f) = (state.u.values(), state.f.values());
    let eu: Vec<f64> = (0..g.len())
        .map(|k| bg.exp_u0.values()[k] * g[k].exp())
        .collect();
    let ev: Vec<f64> = (0..g.len())
        .map(|k| bg.exp_v0.values()[k] * (f[k] - g[k]).exp())
        .collect();
    (eu, ev)
}

/// `u = ln kappa^2` and `v = ln |phi|^2` (log backgrounds floored at the cores).
pub fn physical_logs(problem: &Problem, state: &StatePair) -> (ScalarField, ScalarField) {
    let bg = problem.background();
    let u = state.u.zip_map(&bg.u0, |g, u0| g + u0);
    let w = state.f.zip_map(&state.u, |f, g| f - g);
    let v = w.zip_map(&bg.v0, |w, v0| w + v0);
    (u, v)
}

fn weighted_stats(problem: &Problem, r: &[f64]) -> (f64, f64) {
    let ops = problem.operators();
    let l2 = ops.measure_sum(r.len(), |k| r[k] * r[k]).sqrt();
    let sup = (0..r.len())
        .filter(|&k| ops.is_free(k))
        .fold(0.0_f64, |m, k| m.max(r[k].abs()));
    (l2, sup)
}

/// Residuals of the two Euler-Lagrange equations, assembled directly from
/// the equations rather than from the energy gradient.
pub fn pde_residual(problem: &Problem, state: &StatePair) -> ResidualReport {
    let ops = problem.operators();
    let bg = problem.background();
    let lambda = problem.params().lambda;
    let cfg = problem.config();
    let (eu, ev) = exponentials(problem, state);
    let lap_g = ops.laplacian(state.u.values());
    let lap_f = ops.laplacian(state.f.values());
    let len = eu.len();
    let model = problem.variant().model;
    let m = if model == ModelTag::Base { 0 } else { cfg.m() };
    let (src_g, src_f): (Vec<f64>, Vec<f64>) = match problem.grid() {
        Grid::Torus(tg) => {
            let area = tg.area();
            (
                vec![4.0 * PI * m as f64 / area; len],
                vec![4.0 * PI * (m + cfg.n()) as f64 / area; len],
            )
        }
        Grid::Plane(_) => {
            let (h1, h2) = (bg.h1.values(), bg.h2.values());
            match model {
                ModelTag::Base => (vec![0.0; len], h2.to_vec()),
                ModelTag::Extended => (h1.to_vec(), (0..len).map(|k| h1[k] + h2[k]).collect()),
            }
        }
    };
    let mut r1 = vec![0.0; len];
    let mut r2 = vec![0.0; len];
    for k in (0..len).filter(|&k| ops.is_free(k)) {
        r1[k] = lap_g[k] - lambda * (2.0 * eu[k] - ev[k] - 1.0) - src_g[k];
        r2[k] = lap_f[k] - 2.0 * lambda * (ev[k] - 1.0) - src_f[k];
    }
    let (l1, s1) = weighted_stats(problem, &r1);
    let (l2, s2) = weighted_stats(problem, &r2);
    ResidualReport {
        l2: [l1, l2],
        sup: [s1, s2],
    }
}

/// Integrals of `e^v` and `e^u` against their torus targets.
pub fn constraint_report(problem: &Problem, state: &StatePair) -> Option<ConstraintReport> {
    let report = problem.threshold()?;
    let (eu, ev) = exponentials(problem, state);
    let ops = problem.operators();
    let integrals = [
        ops.measure_sum(ev.len(), |k| ev[k]),
        ops.measure_sum(eu.len(), |k| eu[k]),
    ];
    let targets = [report.first, report.second];
    let relative_errors = [
        (integrals[0] - targets[0]).abs() / targets[0].abs(),
        (integrals[1] - targets[1]).abs() / targets[1].abs(),
    ];
    Some(ConstraintReport {
        integrals,
        targets,
        relative_errors,
    })
}

/// `int a12` and `int b12` from the algebraic field strengths
/// `a12 = -(lambda/2)(2 kappa^2 - |phi|^2 - 1)` and `b12 = -lambda (|phi|^2 - 1)`.
pub fn flux_report(problem: &Problem, state: &StatePair) -> FluxReport {
    let lambda = problem.params().lambda;
    let (eu, ev) = exponentials(problem, state);
    let ops = problem.operators();
    let flux_a = -0.5 * lambda * ops.measure_sum(eu.len(), |k| 2.0 * eu[k] - ev[k] - 1.0);
    let flux_b = -lambda * ops.measure_sum(ev.len(), |k| ev[k] - 1.0);
    let cfg = problem.config();
    let m = if problem.variant().model == ModelTag::Base {
        0
    } else {
        cfg.m()
    };
    FluxReport {
        flux_a,
        flux_b,
        expected_a: 2.0 * PI * m as f64,
        expected_b: 2.0 * PI * (m + cfg.n()) as f64,
    }
}

pub fn pointwise_bounds(problem: &Problem, state: &StatePair) -> BoundReport {
    let (eu, ev) = exponentials(problem, state);
    let max_u = eu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_v = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp_u_excess = max_u - 1.0;
    let exp_v_excess = max_v - 1.0;
    let intermediate_excess = 2.0 * max_u - (max_v + 1.0);
    BoundReport {
        exp_u_excess,
        exp_v_excess,
        intermediate_excess,
        epsilon: BOUND_EPSILON,
        violated: exp_u_excess > BOUND_EPSILON
            || exp_v_excess > BOUND_EPSILON
            || intermediate_excess > BOUND_EPSILON,
    }
}

/// Least-squares fit of the multipliers in
/// `Lap u = -lambda - l1 e^v + l2 e^u` and `Lap f = -2 lambda + 2 l1 e^v + 4 pi n / |O|`.
pub fn verify_lagrange_multipliers(problem: &Problem, state: &StatePair) -> Result<LagrangeFit> {
    let v = problem.variant();
    let Grid::Torus(tg) = problem.grid() else {
        return Err(Error::Unsupported(
            "multiplier fit is defined on the torus".into(),
        ));
    };
    if v.model != ModelTag::Base {
        return Err(Error::Unsupported(
            "multiplier fit is defined for the base model".into(),
        ));
    }
    let lambda = problem.params().lambda;
    let ops = problem.operators();
    let (eu, ev) = exponentials(problem, state);
    let lap_u = ops.laplacian(state.u.values());
    let lap_f = ops.laplacian(state.f.values());
    let source = 4.0 * PI * problem.config().n() as f64 / tg.area();
    let len = eu.len();
    // Rows (-e^v, e^u | lap_u + lambda) and (2 e^v, 0 | lap_f + 2 lambda - source).
    let s11 = ops.measure_sum(len, |k| ev[k] * ev[k] + 4.0 * ev[k] * ev[k]);
    let s12 = ops.measure_sum(len, |k| -ev[k] * eu[k]);
    let s22 = ops.measure_sum(len, |k| eu[k] * eu[k]);
    let b1 = ops.measure_sum(len, |k| {
        -ev[k] * (lap_u[k] + lambda) + 2.0 * ev[k] * (lap_f[k] + 2.0 * lambda - source)
    });
    let b2 = ops.measure_sum(len, |k| eu[k] * (lap_u[k] + lambda));
    let det = s11 * s22 - s12 * s12;
    let lambda1 = (b1 * s22 - b2 * s12) / det;
    let lambda2 = (s11 * b2 - s12 * b1) / det;
    Ok(LagrangeFit {
        lambda1,
        lambda2,
        ratios: [lambda1 / lambda, lambda2 / (2.0 * lambda)],
    })
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Inner edge of the default fitting annulus: beyond every zero by `3 / sqrt(lambda)`.
pub fn default_decay_r_min(problem: &Problem) -> f64 {
    let cfg = problem.config();
    let reach = cfg
        .phi_zeros
        .iter()
        .chain(&cfg.kappa_zeros)
        .map(|p| p[0].hypot(p[1]))
        .fold(0.0, f64::max);
    reach + 3.0 / problem.params().lambda.sqrt()
}

/// Angular averages of `u^2 + v^2` and `|grad u|^2 + |grad v|^2` in radial
/// bins one grid spacing wide, from the origin to `r_max`.
pub fn radial_profile(problem: &Problem, state: &StatePair, r_max: f64) -> Result<Vec<[f64; 3]>> {
    let Grid::Plane(pg) = problem.grid() else {
        return Err(Error::Unsupported(
            "radial profiles are defined on the plane".into(),
        ));
    };
    let (u, v) = physical_logs(problem, state);
    let (u, v) = (u.values(), v.values());
    let h = pg.spacing();
    let n = pg.n;
    let bins = (r_max / h).floor() as usize;
    let mut acc = vec![(0.0, 0.0, 0usize); bins];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = pg.index(i, j);
            let (x, y) = pg.node(k);
            let r = x.hypot(y);
            let b = (r / h).floor() as usize;
            if b >= bins {
                continue;
            }
            let gx = |f: &[f64]| (f[k + 1] - f[k - 1]) / (2.0 * h);
            let gy = |f: &[f64]| (f[k + n] - f[k - n]) / (2.0 * h);
            let grad2 = gx(u).powi(2) + gy(u).powi(2) + gx(v).powi(2) + gy(v).powi(2);
            let e = &mut acc[b];
            e.0 += u[k] * u[k] + v[k] * v[k];
            e.1 += grad2;
            e.2 += 1;
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .filter(|(_, e)| e.2 > 0)
        .map(|(b, e)| [(b as f64 + 0.5) * h, e.0 / e.2 as f64, e.1 / e.2 as f64])
        .collect())
}

/// Decay rates over `[r_min, r_max]`; defaults `r_min` from
/// [`default_decay_r_min`] and `r_max = 0.6 R`. `r_max` is capped at `0.8 R`.
pub fn decay_fit(
    problem: &Problem,
    state: &StatePair,
    r_min: Option<f64>,
    r_max: Option<f64>,
) -> Result<DecayFit> {
    let Grid::Plane(pg) = problem.grid() else {
        return Err(Error::Unsupported(
            "decay fits are defined on the plane".into(),
        ));
    };
    let r_min = r_min.unwrap_or_else(|| default_decay_r_min(problem));
    let r_max = r_max
        .unwrap_or(0.6 * pg.half_width)
        .min(0.8 * pg.half_width);
    let profile = radial_profile(problem, state, r_max)?;
    let window: Vec<&[f64; 3]> = profile
        .iter()
        .filter(|p| p[0] >= r_min && p[0] <= r_max && p[1] > 0.0 && p[2] > 0.0)
        .collect();
    if window.len() < MIN_DECAY_BINS {
        return Err(Error::AnnulusTooThin { bins: window.len() });
    }
    let rs: Vec<f64> = window.iter().map(|p| p[0]).collect();
    let lf: Vec<f64> = window.iter().map(|p| p[1].ln()).collect();
    let lg: Vec<f64> = window.iter().map(|p| p[2].ln()).collect();
    Ok(DecayFit {
        rate_fields: -linear_slope(&rs, &lf),
        rate_gradients: -linear_slope(&rs, &lg),
        r_window: [r_min, r_max],
        bins: window.len(),
    })
}

/// `kappa`, `|phi|` and the field strengths, with a derivative cross-check of
/// the field strengths outside disks of radius `3 sqrt(tau)` around every zero.
pub fn reconstruct_physical(problem: &Problem, state: &StatePair) -> PhysicalFields {
    let bg = problem.background();
    let lambda = problem.params().lambda;
    let grid = problem.grid();
    let (eu, ev) = exponentials(problem, state);
    let kappa = ScalarField::from_vec(grid, eu.iter().map(|e| e.sqrt()).collect());
    let phi_abs = ScalarField::from_vec(
        grid,
        (0..eu.len())
            .map(|k| {
                bg.exp_v0.values()[k].sqrt()
                    * (0.5 * (state.f.values()[k] - state.u.values()[k])).exp()
            })
            .collect(),
    );
    let a12 = ScalarField::from_vec(
        grid,
        (0..eu.len())
            .map(|k| -0.5 * lambda * (2.0 * eu[k] - ev[k] - 1.0))
            .collect(),
    );
    let b12 = ScalarField::from_vec(grid, ev.iter().map(|e| -lambda * (e - 1.0)).collect());

    let ops = problem.operators();
    let (u, v) = physical_logs(problem, state);
    let lap_u = ops.laplacian(u.values());
    let lap_v = ops.laplacian(v.values());
    let cfg = problem.config();
    let core = 3.0 * problem.params().tau.sqrt();
    let far_from_cores = |k: usize| {
        let (x, y) = grid.node(k);
        cfg.phi_zeros.iter().chain(&cfg.kappa_zeros).all(|p| {
            let (mut dx, mut dy) = (x - p[0], y - p[1]);
            if let Grid::Torus(tg) = grid {
                dx -= tg.lx * (dx / tg.lx).round();
                dy -= tg.ly * (dy / tg.ly).round();
            }
            dx.hypot(dy) > core
        })
    };
    let mut crosscheck = [0.0_f64; 2];
    for k in (0..eu.len()).filter(|&k| ops.is_free(k) && far_from_cores(k)) {
        crosscheck[0] = crosscheck[0].max((a12.values()[k] + 0.5 * lap_u[k]).abs());
        crosscheck[1] = crosscheck[1].max((b12.values()[k] + 0.5 * (lap_u[k] + lap_v[k])).abs());
    }
    PhysicalFields {
        kappa,
        phi_abs,
        a12,
        b12,
        crosscheck,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub spread: f64,
    /// `sup |solution|` of the first solve.
    pub solution_sup: f64,
    pub iterations: Vec<usize>,
}

/// Solves from `seeds` random smooth initial states and returns the largest
/// pairwise sup-norm distance between the results.
pub fn uniqueness_probe(
    problem: &Problem,
    settings: &SolverSettings,
    seeds: usize,
    base_seed: u64,
    amplitude: f64,
) -> Result<UniquenessReport> {
    let mut states: Vec<StatePair> = Vec::with_capacity(seeds);
    let mut iterations = Vec::with_capacity(seeds);
    for s in 0..seeds as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(s));
        let init = random_state(problem, &mut rng, amplitude);
        let sol = solve(problem, settings, Some(&init))?;
        iterations.push(sol.iterations);
        states.push(sol.state);
    }
    let mut spread = 0.0_f64;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            spread = spread.max(states[i].sup_distance(&states[j]));
        }
    }
    Ok(UniquenessReport {
        spread,
        solution_sup: states.first().map_or(0.0, |s| s.sup_norm()),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DiagnosticsOptions {
    pub decay_r_min: Option<f64>,
    pub decay_r_max: Option<f64>,
}

/// Every check applicable to the variant of `problem`.
pub fn diagnose(
    problem: &Problem,
    state: &StatePair,
    options: &DiagnosticsOptions,
) -> DiagnosticsReport {
    let variant = problem.variant();
    let (decay, decay_error) = if variant.geometry == Geometry::Plane {
        match decay_fit(problem, state, options.decay_r_min, options.decay_r_max) {
            Ok(d) => (Some(d), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    DiagnosticsReport {
        residual: pde_residual(problem, state),
        constraints: constraint_report(problem, state),
        flux: flux_report(problem, state),
        bounds: pointwise_bounds(problem, state),
        lagrange: verify_lagrange_multipliers(problem, state).ok(),
        decay,
        decay_error,
        uniqueness_spread: None,
    }
}

/// Sup norm of the energy gradient, for comparison with [`pde_residual`].
pub fn gradient_sup(problem: &Problem, state: &StatePair) -> Result<f64> {
    Ok(sup_abs(&problem.gradient(state)?.to_flat()))
}
