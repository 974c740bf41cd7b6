//! Fixed-point continuation for the base model on the torus.
//!
//! The unknowns are a zero-mean pair `(u', w')` with `v' = t v0 + w'`. The map
//! `T` inverts the Laplacian on normalized exponentials,
//!
//! ```text
//! A = C2 e^{u'} / int e^{u'},   B = C1 e^{v'} / int e^{v'}
//! Lap U' = lambda (2A - B - 1)
//! Lap W' = lambda (-2A + 3B - 1) + 4 pi n / |O|
//! ```
//!
//! and the homotopy `(u', w') = t T(u', w')` is followed from small `t` to
//! `t = 1` by damped Picard iteration. At `t = 1` the means are restored from
//! the constraint constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{Geometry, Problem, StatePair};
use crate::error::{Error, Result};
use crate::fields::field::{sup_abs, sup_diff};
use crate::fields::summation::pairwise_sum_by;
use crate::fields::{Operators, ScalarField, SpectralWorkspace};
use crate::setup::{ModelTag, ThresholdReport};
use crate::variational::Solution;

/// Largest admissible mean of a right-hand side before inversion, relative to its size.
const PROJECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroMeanPair {
    pub u_prime: ScalarField,
    pub w_prime: ScalarField,
}

impl ZeroMeanPair {
    pub fn zeros(problem: &Problem) -> Self {
        Self {
            u_prime: ScalarField::zeros(problem.grid()),
            w_prime: ScalarField::zeros(problem.grid()),
        }
    }

    fn sup_distance(&self, other: &Self) -> f64 {
        sup_diff(self.u_prime.values(), other.u_prime.values())
            .max(sup_diff(self.w_prime.values(), other.w_prime.values()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationSchedule {
    pub t_values: Vec<f64>,
    /// Initial relaxation factor; halved whenever a step would raise the residual.
    pub omega: f64,
    pub intermediate_tol: f64,
    pub final_tol: f64,
    pub max_iters_per_stage: usize,
    pub max_refinements: usize,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self::uniform(10)
    }
}

impl ContinuationSchedule {
    pub fn uniform(steps: usize) -> Self {
        let steps = steps.max(1);
        Self {
            t_values: (1..=steps).map(|k| k as f64 / steps as f64).collect(),
            omega: 0.5,
            intermediate_tol: 1e-8,
            final_tol: 1e-11,
            max_iters_per_stage: 5000,
            max_refinements: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.t_values;
        let increasing = t.windows(2).all(|w| w[0] < w[1]);
        let ok = !t.is_empty()
            && t[0] > 0.0
            && *t.last().unwrap() == 1.0
            && increasing
            && self.omega > 0.0
            && self.omega <= 1.0
            && self.intermediate_tol > 0.0
            && self.final_tol > 0.0
            && self.max_iters_per_stage > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid continuation schedule {self:?}"
            )))
        }
    }
}

/// Record of one continuation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub t: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Fixed-point residual `sup |x - t T(x)|` after every accepted step, starting at the warm start.
    pub residuals: Vec<f64>,
    pub final_omega: f64,
    /// Largest `||grad u'|| + ||grad w'||` over the accepted iterates.
    pub x_norm_max: f64,
    /// Maxima of the normalized densities `A` and `B` at the converged iterate.
    pub max_a: f64,
    pub max_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRun {
    pub solution: Solution,
    pub pair: ZeroMeanPair,
    pub stages: Vec<StageLog>,
    pub refinements: usize,
    /// Recovered means of `u` and `v` at `t = 1`.
    pub u_mean: f64,
    pub v_mean: f64,
}

impl FixedPointRun {
    /// Largest `||grad u'|| + ||grad w'||` over the whole continuation.
    pub fn x_norm_ceiling(&self) -> f64 {
        self.stages.iter().map(|s| s.x_norm_max).fold(0.0, f64::max)
    }
}

struct Context<'a> {
    ws: &'a SpectralWorkspace,
    v0: &'a [f64],
    lambda: f64,
    source: f64,
    c1: f64,
    c2: f64,
    cell: f64,
}

/// `C e^{x} / int e^{x}`, evaluated with a max shift, together with `ln int e^{x}`.
fn normalized(values: &[f64], constant: f64, cell: f64) -> (Vec<f64>, f64) {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = values.iter().map(|v| (v - top).exp()).collect();
    let integral = cell * pairwise_sum_by(e.len(), |k| e[k]);
    let scale = constant / integral;
    (e.iter().map(|x| x * scale).collect(), top + integral.ln())
}

impl Context<'_> {
    fn new<'a>(problem: &'a Problem, report: &ThresholdReport) -> Result<Context<'a>> {
        let ws = match problem.operators() {
            Operators::Torus(ws) => ws,
            Operators::Plane(..) => unreachable!("checked by the caller"),
        };
        let grid = ws.grid();
        Ok(Context {
            ws,
            v0: problem.background().v0.values(),
            lambda: problem.params().lambda,
            source: 4.0 * PI * problem.config().n() as f64 / grid.area(),
            c1: report.c1(),
            c2: report.c2(),
            cell: grid.dx() * grid.dy(),
        })
    }

    fn densities(&self, pair: &ZeroMeanPair, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (a, _) = normalized(pair.u_prime.values(), self.c2, self.cell);
        let vp: Vec<f64> = self
            .v0
            .iter()
            .zip(pair.w_prime.values())
            .map(|(v0, w)| t * v0 + w)
            .collect();
        let (b, _) = normalized(&vp, self.c1, self.cell);
        (a, b)
    }

    fn invert(&self, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
        let len = rhs.len() as f64;
        let mean = pairwise_sum_by(rhs.len(), |k| rhs[k]) / len;
        let rms = (pairwise_sum_by(rhs.len(), |k| rhs[k] * rhs[k]) / len).sqrt();
        let tol = PROJECTION_TOL * rms.max(self.lambda);
        if mean.abs() > tol {
            return Err(Error::NonZeroMeanRhs { mean, tol });
        }
        rhs.iter_mut().for_each(|r| *r -= mean);
        Ok(self.ws.invert_laplacian_unchecked(&rhs))
    }

    fn apply(&self, pair: &ZeroMeanPair, t: f64) -> Result<ZeroMeanPair> {
        let (a, b) = self.densities(pair, t);
        let lam = self.lambda;
        let ru = (0..a.len())
            .map(|k| lam * (2.0 * a[k] - b[k] - 1.0))
            .collect();
        let rw = (0..a.len())
            .map(|k| lam * (-2.0 * a[k] + 3.0 * b[k] - 1.0) + self.source)
            .collect();
        let grid = *pair.u_prime.grid();
        Ok(ZeroMeanPair {
            u_prime: ScalarField::from_vec(grid, self.invert(ru)?),
            w_prime: ScalarField::from_vec(grid, self.invert(rw)?),
        })
    }

    fn x_norm(&self, pair: &ZeroMeanPair) -> f64 {
        let d = |v: &[f64]| {
            let lap = self.ws.laplacian_values(v);
            (-self.cell * pairwise_sum_by(v.len(), |k| v[k] * lap[k]))
                .max(0.0)
                .sqrt()
        };
        d(pair.u_prime.values()) + d(pair.w_prime.values())
    }
}

fn require_torus_base(problem: &Problem) -> Result<ThresholdReport> {
    let v = problem.variant();
    if v.geometry != Geometry::Torus || v.model != ModelTag::Base {
        return Err(Error::Unsupported(
            "fixed-point continuation is implemented for the base model on the torus".into(),
        ));
    }
    let report = problem
        .threshold()
        .expect("torus problems have a threshold");
    if !report.solvable {
        return Err(Error::ThresholdViolated(Box::new(report)));
    }
    Ok(report)
}

/// One application of `T` at homotopy parameter `t` (the output is not scaled by `t`).
pub fn apply_t(problem: &Problem, pair: &ZeroMeanPair, t: f64) -> Result<ZeroMeanPair> {
    let report = require_torus_base(problem)?;
    Context::new(problem, &report)?.apply(pair, t)
}

fn scaled_map(ctx: &Context<'_>, x: &ZeroMeanPair, t: f64) -> Result<ZeroMeanPair> {
    let tx = ctx.apply(x, t)?;
    Ok(ZeroMeanPair {
        u_prime: tx.u_prime.map(|v| t * v),
        w_prime: tx.w_prime.map(|v| t * v),
    })
}

fn mix(x: &ZeroMeanPair, y: &ZeroMeanPair, omega: f64) -> ZeroMeanPair {
    let blend =
        |a: &ScalarField, b: &ScalarField| a.zip_map(b, |p, q| (1.0 - omega) * p + omega * q);
    ZeroMeanPair {
        u_prime: blend(&x.u_prime, &y.u_prime),
        w_prime: blend(&x.w_prime, &y.w_prime),
    }
}

/// Damped Picard iteration for `x = t T(x)` from `start`.
fn run_stage(
    ctx: &Context<'_>,
    start: &ZeroMeanPair,
    t: f64,
    tol: f64,
    omega0: f64,
    max_iters: usize,
) -> Result<(ZeroMeanPair, StageLog)> {
    let mut x = start.clone();
    let mut tx = scaled_map(ctx, &x, t)?;
    let mut residual = x.sup_distance(&tx);
    let mut omega = omega0;
    let mut log = StageLog {
        t,
        iterations: 0,
        converged: false,
        residuals: vec![residual],
        final_omega: omega,
        x_norm_max: ctx.x_norm(&x),
        max_a: 0.0,
        max_b: 0.0,
    };
    while residual > tol && log.iterations < max_iters {
        log.iterations += 1;
        let candidate = mix(&x, &tx, omega);
        let candidate_tx = scaled_map(ctx, &candidate, t)?;
        let candidate_residual = candidate.sup_distance(&candidate_tx);
        if candidate_residual > residual {
            omega *= 0.5;
            if omega < 1e-6 {
                break;
            }
            continue;
        }
        x = candidate;
        tx = candidate_tx;
        residual = candidate_residual;
        log.residuals.push(residual);
        log.x_norm_max = log.x_norm_max.max(ctx.x_norm(&x));
    }
    log.converged = residual <= tol;
    log.final_omega = omega;
    let (a, b) = ctx.densities(&x, t);
    log.max_a = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log.max_b = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((x, log))
}

/// Follows the homotopy over `schedule` and returns the full state at `t = 1`.
///
/// A stage that exhausts its iterations triggers insertion of the midpoint
/// between it and the previous parameter, at most `max_refinements` times.
pub fn continuation_solve(
    problem: &Problem,
    schedule: &ContinuationSchedule,
) -> Result<FixedPointRun> {
    schedule.validate()?;
    let report = require_torus_base(problem)?;
    let ctx = Context::new(problem, &report)?;

    let mut pending: Vec<f64> = schedule.t_values.iter().rev().copied().collect();
    let mut x = ZeroMeanPair::zeros(problem);
    let mut previous_t = 0.0;
    let mut stages = Vec::new();
    let mut refinements = 0;
    while let Some(t) = pending.pop() {
        let tol = if t == 1.0 {
            schedule.final_tol
        } else {
            schedule.intermediate_tol
        };
        let (next, log) = run_stage(
            &ctx,
            &x,
            t,
            tol,
            schedule.omega,
            schedule.max_iters_per_stage,
        )?;
        let converged = log.converged;
        stages.push(log);
        if converged {
            x = next;
            previous_t = t;
            continue;
        }
        if refinements < schedule.max_refinements {
            refinements += 1;
            pending.push(t);
            pending.push(0.5 * (previous_t + t));
            continue;
        }
        let run = finish(problem, &ctx, next, stages, refinements, false)?;
        let residual = run.stages.last().and_then(|s| s.residuals.last()).copied();
        return Err(Error::NotConverged {
            reason: format!(
                "fixed-point stage t = {t} stalled at residual {:e}",
                residual.unwrap_or(f64::NAN)
            ),
            best: Box::new(run.solution),
        });
    }
    finish(problem, &ctx, x, stages, refinements, true)
}

fn finish(
    problem: &Problem,
    ctx: &Context<'_>,
    pair: ZeroMeanPair,
    stages: Vec<StageLog>,
    refinements: usize,
    converged: bool,
) -> Result<FixedPointRun> {
    let (_, ln_int_u) = normalized(pair.u_prime.values(), 1.0, ctx.cell);
    let vp: Vec<f64> = ctx
        .v0
        .iter()
        .zip(pair.w_prime.values())
        .map(|(v0, w)| v0 + w)
        .collect();
    let (_, ln_int_v) = normalized(&vp, 1.0, ctx.cell);
    let u_mean = ctx.c2.ln() - ln_int_u;
    let v_mean = ctx.c1.ln() - ln_int_v;
    let u = pair.u_prime.map(|x| x + u_mean);
    let f = u.zip_map(&pair.w_prime, |u, w| u + w + v_mean);
    let state = StatePair { u, f };
    let energy = problem.energy(&state)?;
    let gradient = problem.gradient(&state)?;
    let iterations = stages.iter().map(|s| s.iterations).sum();
    let solution = Solution {
        state,
        iterations,
        grad_history: vec![sup_abs(&gradient.to_flat())],
        energy_history: vec![energy.total],
        converged,
        cg_iterations: 0,
        stage_iterations: stages.iter().map(|s| s.iterations).collect(),
    };
    Ok(FixedPointRun {
        solution,
        pair,
        stages,
        refinements,
        u_mean,
        v_mean,
    })
}
