//! Batch command surface: `check`, `solve`, `sweep` and `compare`.

pub mod config;
pub mod dump;
pub mod report;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    diagnose, pde_residual, physical_logs, radial_profile, reconstruct_physical, uniqueness_probe,
    DiagnosticsOptions,
};
use crate::energy::{Problem, StatePair};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::fixedpoint::{continuation_solve, ContinuationSchedule, FixedPointRun};
use crate::setup::{threshold, ModelTag, Point, ThresholdReport};
use crate::variational::{continuation_in_vortices, solve, Solution};
use config::{Method, Mode, RunConfig, SweepParam};
use dump::{dump_fields_binary, dump_fields_csv, write_csv, write_radial_profile, FieldSet};
use report::{Artifacts, MethodSummary, Outcome, RunReport, Status, SweepRow, Timings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Check,
    Solve,
    Sweep,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub exit_code: i32,
}

/// A finished computation before any artifact is written.
pub struct Evaluation {
    pub report: RunReport,
    /// The problem and the state used for diagnostics and field dumps.
    pub solved: Option<(Problem, StatePair)>,
}

struct Draft {
    report: RunReport,
    started: Instant,
    solved: Option<(Problem, StatePair)>,
}

impl Draft {
    fn new(command: Command, cfg: &RunConfig) -> Self {
        Self {
            report: RunReport {
                schema_version: report::SCHEMA_VERSION,
                artifact_version: env!("CARGO_PKG_VERSION").into(),
                config_hash: cfg.hash(),
                command: command.name().into(),
                config: cfg.clone(),
                outcome: Outcome {
                    status: Status::Ok,
                    exit_code: 0,
                    message: None,
                },
                threshold: None,
                solvable: true,
                methods: Vec::new(),
                diagnostics: None,
                cross_method_sup_diff: None,
                uniqueness: None,
                sweep: None,
                artifacts: Artifacts {
                    report: cfg.output.report_path.clone(),
                    fields_csv: None,
                    fields_binary: None,
                    radial_profile: None,
                    sweep_boundary: None,
                },
                timings: Timings::default(),
            },
            started: Instant::now(),
            solved: None,
        }
    }

    fn set_status(&mut self, status: Status, message: Option<String>) {
        self.report.outcome = Outcome {
            status,
            exit_code: status.exit_code(),
            message,
        };
    }

    /// Worst status wins: error, then non-convergence, then threshold.
    fn raise(&mut self, status: Status, message: String) {
        let rank = |s: Status| match s {
            Status::Ok => 0,
            Status::ThresholdViolated => 1,
            Status::NotConverged => 2,
            Status::Error => 3,
        };
        if rank(status) > rank(self.report.outcome.status) {
            self.set_status(status, Some(message));
        }
    }
}

/// Runs `command` without touching the filesystem.
///
/// Numerical outcomes are recorded in the report status; `Err` means the
/// configuration itself is invalid.
pub fn evaluate(command: Command, cfg: &RunConfig) -> Result<Evaluation> {
    cfg.validate()?;
    let mut draft = Draft::new(command, cfg);
    let result = match command {
        Command::Check => run_check(cfg, &mut draft),
        Command::Solve => run_solve(cfg, cfg.solver.method, &mut draft),
        Command::Compare => run_solve(cfg, Method::Both, &mut draft),
        Command::Sweep => run_sweep(cfg, &mut draft),
    };
    if let Err(e) = result {
        draft.raise(Status::Error, e.to_string());
    }
    draft.report.timings.total_seconds = draft.started.elapsed().as_secs_f64();
    Ok(Evaluation {
        report: draft.report,
        solved: draft.solved,
    })
}

/// Runs `command` and writes the report and artifacts under `out_dir`.
///
/// `Err` is returned for an invalid configuration or when the report itself
/// cannot be written; artifact failures are recorded in the report.
pub fn run(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let started = Instant::now();
    let Evaluation { report, solved } = evaluate(command, cfg)?;
    let mut draft = Draft {
        report,
        started,
        solved: None,
    };
    let written = match &solved {
        Some((problem, state)) => write_fields(cfg, problem, state, out_dir, &mut draft),
        None => Ok(()),
    }
    .and_then(|_| write_sweep_boundary(cfg, out_dir, &mut draft));
    if let Err(e) = written {
        draft.raise(Status::Error, e.to_string());
    }
    draft.report.timings.total_seconds = draft.started.elapsed().as_secs_f64();
    let path = out_dir.join(&cfg.output.report_path);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, serde_json::to_vec_pretty(&draft.report)?)?;
    let exit_code = draft.report.outcome.exit_code;
    Ok(RunOutput {
        report: draft.report,
        exit_code,
    })
}

fn torus_threshold(cfg: &RunConfig, grid: &Grid) -> Result<Option<ThresholdReport>> {
    let params = cfg.params(grid)?;
    Ok(grid
        .as_torus()
        .map(|tg| crate::setup::check_existence(cfg.model, &cfg.vortices(), tg, &params)))
}

fn run_check(cfg: &RunConfig, draft: &mut Draft) -> Result<()> {
    let grid = cfg.grid()?;
    let report = torus_threshold(cfg, &grid)?;
    draft.report.solvable = report.as_ref().is_none_or(|r| r.solvable);
    if !draft.report.solvable {
        let margin = report.as_ref().map_or(0.0, |r| r.margin);
        draft.raise(
            Status::ThresholdViolated,
            format!("no solution exists (margin {margin})"),
        );
    }
    draft.report.threshold = report;
    Ok(())
}

fn newton_summary(problem: &Problem, sol: &Solution, error: Option<String>) -> MethodSummary {
    MethodSummary {
        method: "newton".into(),
        converged: sol.converged,
        iterations: sol.iterations,
        stage_iterations: sol.stage_iterations.clone(),
        gradient_sup: sol.final_gradient_sup(),
        residual_sup: pde_residual(problem, &sol.state).max_sup(),
        energy: sol.final_energy(),
        x_norm_ceiling: None,
        refinements: None,
        error,
    }
}

fn fixedpoint_summary(problem: &Problem, run: &FixedPointRun) -> MethodSummary {
    let sol = &run.solution;
    MethodSummary {
        method: "fixedpoint".into(),
        converged: sol.converged,
        iterations: sol.iterations,
        stage_iterations: sol.stage_iterations.clone(),
        gradient_sup: sol.final_gradient_sup(),
        residual_sup: pde_residual(problem, &sol.state).max_sup(),
        energy: sol.final_energy(),
        x_norm_ceiling: Some(run.x_norm_ceiling()),
        refinements: Some(run.refinements),
        error: None,
    }
}

/// Newton solve (optionally continued in the vortex number) of the configured problem.
fn newton_solve(cfg: &RunConfig, grid: Grid, problem: &Problem) -> Result<Solution> {
    let settings = cfg.settings();
    if cfg.solver.vortex_continuation {
        let params = cfg.params(&grid)?;
        continuation_in_vortices(cfg.model, &cfg.vortices(), grid, params, &settings)
            .map(|(_, s)| s)
    } else {
        solve(problem, &settings, None)
    }
}

fn run_solve(cfg: &RunConfig, method: Method, draft: &mut Draft) -> Result<()> {
    let grid = cfg.grid()?;
    if method != Method::Newton && (cfg.mode != Mode::Torus || cfg.model != ModelTag::Base) {
        return Err(Error::Unsupported(
            "fixed-point continuation requires mode = torus and model = base".into(),
        ));
    }
    let report = torus_threshold(cfg, &grid)?;
    draft.report.solvable = report.as_ref().is_none_or(|r| r.solvable);
    draft.report.threshold = report.clone();
    if let Some(r) = report.filter(|r| !r.solvable) {
        draft.raise(
            Status::ThresholdViolated,
            format!("no solution exists (margin {})", r.margin),
        );
        return Ok(());
    }
    let problem = Problem::new(cfg.model, cfg.vortices(), grid, cfg.params(&grid)?)?;

    let mut newton_state = None;
    if matches!(method, Method::Newton | Method::Both) {
        let t0 = Instant::now();
        let outcome = newton_solve(cfg, grid, &problem);
        draft
            .report
            .timings
            .methods
            .push(("newton".into(), t0.elapsed().as_secs_f64()));
        match outcome {
            Ok(sol) => {
                draft
                    .report
                    .methods
                    .push(newton_summary(&problem, &sol, None));
                newton_state = Some(sol.state);
            }
            Err(Error::NotConverged { reason, best }) => {
                draft
                    .report
                    .methods
                    .push(newton_summary(&problem, &best, Some(reason.clone())));
                draft.raise(Status::NotConverged, reason);
                newton_state = Some(best.state);
            }
            Err(e) => return Err(e),
        }
    }
    let mut fixed_state = None;
    if matches!(method, Method::Fixedpoint | Method::Both) {
        let t0 = Instant::now();
        let schedule = ContinuationSchedule {
            final_tol: cfg.solver.tol.min(1e-11),
            ..ContinuationSchedule::uniform(cfg.solver.continuation_steps)
        };
        let outcome = continuation_solve(&problem, &schedule);
        draft
            .report
            .timings
            .methods
            .push(("fixedpoint".into(), t0.elapsed().as_secs_f64()));
        match outcome {
            Ok(run) => {
                draft
                    .report
                    .methods
                    .push(fixedpoint_summary(&problem, &run));
                fixed_state = Some(run.solution.state);
            }
            Err(Error::NotConverged { reason, best }) => {
                let mut summary = newton_summary(&problem, &best, Some(reason.clone()));
                summary.method = "fixedpoint".into();
                draft.report.methods.push(summary);
                draft.raise(Status::NotConverged, reason);
                fixed_state = Some(best.state);
            }
            Err(e) => return Err(e),
        }
    }
    if let (Some(a), Some(b)) = (&newton_state, &fixed_state) {
        draft.report.cross_method_sup_diff = Some(a.sup_distance(b));
    }
    let Some(state) = newton_state.or(fixed_state) else {
        return Ok(());
    };

    let mut diagnostics = diagnose(&problem, &state, &DiagnosticsOptions::default());
    if cfg.solver.uniqueness_seeds > 1 {
        let u = uniqueness_probe(
            &problem,
            &cfg.settings(),
            cfg.solver.uniqueness_seeds,
            cfg.solver.seed,
            1.0,
        )?;
        diagnostics.uniqueness_spread = Some(u.spread);
        draft.report.uniqueness = Some(u);
    }
    draft.report.diagnostics = Some(diagnostics);
    draft.solved = Some((problem, state));
    Ok(())
}

fn write_fields(
    cfg: &RunConfig,
    problem: &Problem,
    state: &StatePair,
    out_dir: &Path,
    draft: &mut Draft,
) -> Result<()> {
    let physical = reconstruct_physical(problem, state);
    let (u, v) = physical_logs(problem, state);
    let fields = FieldSet {
        grid: problem.grid(),
        u: &u,
        v: &v,
        physical: &physical,
    };
    let out = &cfg.output;
    dump_fields_csv(&fields, &out_dir.join(&out.fields_path))?;
    draft.report.artifacts.fields_csv = Some(out.fields_path.clone());
    if out.binary {
        let name = Path::new(&out.fields_path).with_extension("bin");
        dump_fields_binary(&fields, &out_dir.join(&name), &draft.report.config_hash)?;
        draft.report.artifacts.fields_binary = Some(name.to_string_lossy().into_owned());
    }
    if let Grid::Plane(pg) = problem.grid() {
        let profile = radial_profile(problem, state, pg.half_width)?;
        let name = Path::new(&out.plots_path).join("radial_profile.csv");
        write_radial_profile(&profile, &out_dir.join(&name))?;
        draft.report.artifacts.radial_profile = Some(name.to_string_lossy().into_owned());
    }
    Ok(())
}

/// Zeros beyond those listed are placed on a deterministic spiral around the domain centre.
fn extend_points(listed: &[Point], count: usize, grid: &Grid) -> Vec<Point> {
    let (centre, scale) = match grid {
        Grid::Torus(tg) => ([0.5 * tg.lx, 0.5 * tg.ly], 0.35 * tg.lx.min(tg.ly)),
        Grid::Plane(pg) => ([0.0, 0.0], 0.35 * pg.half_width),
    };
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|k| {
            listed.get(k).copied().unwrap_or_else(|| {
                let r = scale * ((k as f64 + 0.5) / (count as f64 + 0.5)).sqrt();
                let a = golden * k as f64;
                [centre[0] + r * a.cos(), centre[1] + r * a.sin()]
            })
        })
        .collect()
}

/// `lambda |O|` strictly above both analytic lines, with the same rounding
/// allowance as the existence test.
fn analytic_solvable(model: ModelTag, lambda: f64, area: f64, n: usize, m: usize) -> bool {
    let m = if model == ModelTag::Base { 0 } else { m };
    let la = lambda * area;
    let first = 2.0 * PI * (m + n) as f64;
    let second = PI * (3 * m + n) as f64;
    let above = |line: f64| la - line > 16.0 * f64::EPSILON * la.max(line);
    above(first) && (m == 0 || above(second))
}

fn sweep_point(
    cfg: &RunConfig,
    index: usize,
    assignment: &[(SweepParam, f64)],
) -> Result<SweepRow> {
    let mut point = cfg.clone();
    point.sweep = None;
    let mut n = cfg.phi_zeros.len();
    let mut m = cfg.kappa_zeros.len();
    for &(param, value) in assignment {
        match param {
            SweepParam::Lambda => point.lambda = value,
            SweepParam::Tau => point.tau = Some(value),
            SweepParam::N => n = value as usize,
            SweepParam::M => m = value as usize,
            SweepParam::Resolution => match cfg.mode {
                Mode::Torus => {
                    let nx = cfg.grid.nx.unwrap_or(8);
                    let ny = cfg.grid.ny.unwrap_or(8);
                    let new_nx = value as usize;
                    let new_ny =
                        ((ny as f64 * value / nx as f64 / 2.0).round() as usize * 2).max(8);
                    point.grid.nx = Some(new_nx);
                    point.grid.ny = Some(new_ny);
                }
                Mode::Plane => point.grid.n = Some(value as usize),
            },
        }
    }
    let grid = point.grid()?;
    point.phi_zeros = extend_points(&cfg.phi_zeros, n, &grid);
    point.kappa_zeros = extend_points(&cfg.kappa_zeros, m, &grid);
    point.validate()?;
    let params = point.params(&grid)?;
    let threshold = grid
        .as_torus()
        .map(|tg| threshold(point.model, point.lambda, tg.area(), n, m));
    let solvable = threshold.as_ref().is_none_or(|t| t.solvable);
    let solve_summary = if cfg.sweep.as_ref().is_some_and(|s| s.solve) && solvable {
        let problem = Problem::new(point.model, point.vortices(), grid, params)?;
        Some(match solve(&problem, &point.settings(), None) {
            Ok(sol) => newton_summary(&problem, &sol, None),
            Err(Error::NotConverged { reason, best }) => {
                newton_summary(&problem, &best, Some(reason))
            }
            Err(e) => return Err(e),
        })
    } else {
        None
    };
    let resolution = match grid {
        Grid::Torus(tg) => [tg.nx, tg.ny],
        Grid::Plane(pg) => [pg.n, pg.n],
    };
    Ok(SweepRow {
        index,
        lambda: point.lambda,
        area: grid.area(),
        n,
        m,
        tau: params.tau,
        resolution,
        analytic_solvable: match grid {
            Grid::Torus(tg) => analytic_solvable(point.model, point.lambda, tg.area(), n, m),
            Grid::Plane(_) => true,
        },
        threshold,
        solve: solve_summary,
    })
}

fn run_sweep(cfg: &RunConfig, draft: &mut Draft) -> Result<()> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Validation(vec!["the sweep command needs a sweep section".into()]))?;
    let mut assignments: Vec<Vec<(SweepParam, f64)>> = vec![Vec::new()];
    for axis in &sweep.axes {
        assignments = assignments
            .into_iter()
            .flat_map(|prefix| {
                axis.points().into_iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((axis.param, v));
                    next
                })
            })
            .collect();
    }
    let rows: Vec<SweepRow> = assignments
        .par_iter()
        .enumerate()
        .map(|(i, a)| sweep_point(cfg, i, a))
        .collect::<Result<_>>()?;

    if let Some(r) = rows
        .iter()
        .find(|r| r.solve.as_ref().is_some_and(|s| !s.converged))
    {
        draft.raise(
            Status::NotConverged,
            format!("sweep point {} did not converge", r.index),
        );
    }
    draft.report.sweep = Some(rows);
    Ok(())
}

fn write_sweep_boundary(cfg: &RunConfig, out_dir: &Path, draft: &mut Draft) -> Result<()> {
    let Some(rows) = &draft.report.sweep else {
        return Ok(());
    };
    let header = [
        "index",
        "lambda",
        "area",
        "n",
        "m",
        "tau",
        "resolution",
        "lambda_area",
        "line_total",
        "line_kappa",
        "first",
        "second",
        "margin",
        "solvable",
        "analytic_solvable",
    ];
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let t = r.threshold.as_ref();
            let num = |f: Option<f64>| f.map_or(String::new(), |v| v.to_string());
            vec![
                r.index.to_string(),
                r.lambda.to_string(),
                r.area.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                r.tau.to_string(),
                format!("{}x{}", r.resolution[0], r.resolution[1]),
                (r.lambda * r.area).to_string(),
                (2.0 * PI * (r.m + r.n) as f64).to_string(),
                (PI * (3 * r.m + r.n) as f64).to_string(),
                num(t.map(|t| t.first)),
                num(t.map(|t| t.second)),
                num(t.map(|t| t.margin)),
                t.is_none_or(|t| t.solvable).to_string(),
                r.analytic_solvable.to_string(),
            ]
        })
        .collect();
    let name = Path::new(&cfg.output.plots_path).join("sweep_boundary.csv");
    write_csv(&header, &csv_rows, &out_dir.join(&name))?;
    draft.report.artifacts.sweep_boundary = Some(name.to_string_lossy().into_owned());

    Ok(())
}

/// Reads the config file, applies overrides and runs; returns the process exit code.
pub fn main_with(
    config_path: &Path,
    command: Command,
    overrides: &[String],
    out_dir: &Path,
) -> i32 {
    let run_it = || -> Result<RunOutput> {
        let text = fs::read_to_string(config_path)?;
        let cfg = config::parse_config_with(&text, overrides)?;
        run(command, &cfg, out_dir)
    };
    match run_it() {
        Ok(out) => {
            if let Some(msg) = &out.report.outcome.message {
                eprintln!("{}: {msg}", command.name());
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
