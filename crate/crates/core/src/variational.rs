//! Damped Newton minimization of the convex functionals.
//!
//! Newton directions come from preconditioned conjugate gradients on the
//! Hessian; step lengths from Armijo backtracking on the energy.

use serde::{Deserialize, Serialize};

use crate::energy::{Hessian, Problem, StatePair};
use crate::error::{Error, Result};
use crate::fields::field::sup_abs;
use crate::fields::Grid;
use crate::setup::{ModelTag, PhysicalParams, VortexConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol_grad_sup: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Relative residual target of the inner conjugate-gradient solves.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_grad_sup: 1e-9,
            max_iters: 100,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            max_backtracks: 60,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_grad_sup > 0.0
            && self.max_iters > 0
            && self.armijo_c > 0.0
            && self.armijo_c < 0.5
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.cg_tol > 0.0
            && self.cg_max_iters > 0
            && self.max_backtracks > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid solver settings {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub state: StatePair,
    pub iterations: usize,
    /// Sup norm of the gradient at every visited iterate, starting with the initial state.
    pub grad_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub converged: bool,
    pub cg_iterations: usize,
    /// Newton iterations per continuation stage; empty for a single solve.
    #[serde(default)]
    pub stage_iterations: Vec<usize>,
}

impl Solution {
    pub fn final_gradient_sup(&self) -> f64 {
        self.grad_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_energy(&self) -> f64 {
        self.energy_history.last().copied().unwrap_or(f64::NAN)
    }
}

fn not_converged(reason: String, solution: Solution) -> Error {
    Error::NotConverged {
        reason,
        best: Box::new(solution),
    }
}

/// Block-diagonal preconditioner `(s_g - c Lap)^{-1}`, `(s_f - c/2 Lap)^{-1}`.
fn precondition(problem: &Problem, r: &[f64], shifts: (f64, f64)) -> Vec<f64> {
    let n = r.len() / 2;
    let (c, _) = problem.coefficients();
    let ops = problem.operators();
    let mut z = ops.solve_shifted(&r[..n], c, shifts.0);
    z.extend(ops.solve_shifted(&r[n..], 0.5 * c, shifts.1));
    z
}

/// Preconditioned conjugate gradients for `H x = b` in the energy pairing.
fn pcg(
    problem: &Problem,
    hessian: &Hessian<'_>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> (Vec<f64>, usize) {
    let (sg, sf) = hessian.diagonal_shifts();
    let floor = 1e-8 * problem.coefficients().1;
    let shifts = (sg.max(floor), sf.max(floor));
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let b_norm = problem.dot_flat(b, b).sqrt();
    if b_norm == 0.0 {
        return (x, 0);
    }
    let mut z = precondition(problem, &r, shifts);
    let mut p = z.clone();
    let mut rz = problem.dot_flat(&r, &z);
    for it in 0..max_iters {
        if problem.dot_flat(&r, &r).sqrt() <= rel_tol * b_norm {
            return (x, it);
        }
        let hp = hessian.apply(&p);
        let php = problem.dot_flat(&p, &hp);
        if php.is_nan() || php <= 0.0 {
            return (x, it);
        }
        let alpha = rz / php;
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * hp[k];
        }
        z = precondition(problem, &r, shifts);
        let rz_next = problem.dot_flat(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..p.len() {
            p[k] = z[k] + beta * p[k];
        }
    }
    (x, max_iters)
}

/// Minimizes the functional of `problem` from `init` (default: zero interior).
///
/// Torus variants outside the existence region are refused before iterating.
pub fn solve(
    problem: &Problem,
    settings: &SolverSettings,
    init: Option<&StatePair>,
) -> Result<Solution> {
    settings.validate()?;
    if let Some(report) = problem.threshold() {
        if !report.solvable {
            return Err(Error::ThresholdViolated(Box::new(report)));
        }
    }
    let grid = problem.grid();
    let mut state = match init {
        Some(s) => {
            if s.u.len() != grid.len() || s.f.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    actual: s.u.len().min(s.f.len()),
                });
            }
            s.clone()
        }
        None => problem.initial_state(),
    };
    problem.impose_boundary(&mut state);
    let n = grid.len();
    let mut x = state.to_flat();

    let mut solution = Solution {
        state,
        iterations: 0,
        grad_history: Vec::new(),
        energy_history: Vec::new(),
        converged: false,
        cg_iterations: 0,
        stage_iterations: Vec::new(),
    };
    let bail = |reason: String, x: &[f64], mut sol: Solution| {
        sol.state = StatePair::from_flat(grid, x);
        not_converged(reason, sol)
    };

    let mut energy = match problem.energy_flat(&x[..n], &x[n..]) {
        Ok(e) => e,
        Err(e) => return Err(bail(format!("initial state: {e}"), &x, solution)),
    };
    let mut grad = problem.gradient_flat(&x[..n], &x[n..])?;
    let mut gsup = sup_abs(&grad);
    solution.energy_history.push(energy.total);
    solution.grad_history.push(gsup);

    loop {
        if gsup <= settings.tol_grad_sup {
            solution.converged = true;
            solution.state = StatePair::from_flat(grid, &x);
            return Ok(solution);
        }
        if solution.iterations >= settings.max_iters {
            let reason = format!(
                "{} Newton iterations, gradient sup {gsup:e}",
                solution.iterations
            );
            return Err(bail(reason, &x, solution));
        }

        let hessian = problem.hessian_flat(&x[..n], &x[n..])?;
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let eta = settings.cg_tol.max(gsup.min(1e-2));
        let (mut dir, cg_its) = pcg(problem, &hessian, &rhs, eta, settings.cg_max_iters);
        solution.cg_iterations += cg_its;
        let mut slope = problem.dot_flat(&grad, &dir);
        if slope.is_nan() || slope >= 0.0 {
            dir = rhs;
            slope = problem.dot_flat(&grad, &dir);
        }

        let scale =
            energy.gradient_part.abs() + energy.exponential_part.abs() + energy.linear_part.abs();
        let slack = 64.0 * f64::EPSILON * scale;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            if let Ok(e) = problem.energy_flat(&trial[..n], &trial[n..]) {
                if e.total <= energy.total + settings.armijo_c * alpha * slope {
                    let g = problem.gradient_flat(&trial[..n], &trial[n..])?;
                    accepted = Some((trial, e, g));
                    break;
                }
                // Energy flat to rounding and a smaller gradient.
                if e.total <= energy.total + slack {
                    let g = problem.gradient_flat(&trial[..n], &trial[n..])?;
                    if sup_abs(&g) < gsup {
                        accepted = Some((trial, e, g));
                        break;
                    }
                }
            }
            alpha *= settings.backtrack_factor;
        }
        let Some((trial, e, g)) = accepted else {
            let reason = format!("line search failed at gradient sup {gsup:e}");
            return Err(bail(reason, &x, solution));
        };
        x = trial;
        energy = e;
        grad = g;
        gsup = sup_abs(&grad);
        solution.iterations += 1;
        solution.energy_history.push(energy.total);
        solution.grad_history.push(gsup);
    }
}

/// Builds the problem and solves it from the zero state.
pub fn solve_config(
    model: ModelTag,
    cfg: &VortexConfig,
    grid: Grid,
    params: PhysicalParams,
    settings: &SolverSettings,
) -> Result<(Problem, Solution)> {
    let problem = Problem::new(model, cfg.clone(), grid, params)?;
    let solution = solve(&problem, settings, None)?;
    Ok((problem, solution))
}

/// Solves with `1, 2, ..., n` zeros of `phi`, warm-starting each stage from
/// the previous one. The zeros of `kappa` are present from the first stage.
pub fn continuation_in_vortices(
    model: ModelTag,
    cfg: &VortexConfig,
    grid: Grid,
    params: PhysicalParams,
    settings: &SolverSettings,
) -> Result<(Problem, Solution)> {
    let n = cfg.n();
    if n <= 1 {
        let (problem, mut solution) = solve_config(model, cfg, grid, params, settings)?;
        solution.stage_iterations = vec![solution.iterations];
        return Ok((problem, solution));
    }
    let mut stages = Vec::with_capacity(n);
    let mut warm: Option<StatePair> = None;
    for k in 1..=n {
        let stage_cfg = VortexConfig::new(cfg.phi_zeros[..k].to_vec(), cfg.kappa_zeros.clone());
        let problem = Problem::new(model, stage_cfg, grid, params)?;
        let mut solution = solve(&problem, settings, warm.as_ref())?;
        stages.push(solution.iterations);
        if k == n {
            solution.stage_iterations = stages;
            return Ok((problem, solution));
        }
        warm = Some(solution.state);
    }
    unreachable!("the loop returns at the last stage")
}
