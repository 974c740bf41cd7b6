//! Acceptance criteria 1 to 13. Each test prints one `PASS`/`FAIL` line and
//! then asserts the same condition.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bps_vortex::cli::config::parse_config;
use bps_vortex::cli::{evaluate, run, Command};
use bps_vortex::diagnostics::{
    constraint_report, decay_fit, flux_report, pde_residual, pointwise_bounds, uniqueness_probe,
    verify_lagrange_multipliers,
};
use bps_vortex::fixedpoint::{continuation_solve, ContinuationSchedule};
use bps_vortex::sampling::{random_direction, random_state};
use bps_vortex::setup::threshold;
use bps_vortex::{solve, ModelTag, Problem, SolverSettings, StatePair, Variant};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn within(started: Instant, limit_secs: u64) -> bool {
    started.elapsed() <= Duration::from_secs(limit_secs)
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn settings() -> SolverSettings {
    SolverSettings::default()
}

fn cell_config(lambda: f64, n: usize, res: usize) -> String {
    let zeros: Vec<String> = CELL_ZEROS[..n]
        .iter()
        .map(|p| format!("[{}, {}]", p[0], p[1]))
        .collect();
    format!(
        r#"{{"mode": "torus", "lambda": {lambda:?}, "domain": {{"Lx": 5.0, "Ly": 4.0}},
            "grid": {{"nx": {res}, "ny": {res}}}, "phi_zeros": [{}],
            "output": {{"binary": true}}}}"#,
        zeros.join(", ")
    )
}

#[test]
fn criterion_01_threshold_sharpness() {
    let started = Instant::now();
    let area = 20.0;
    let critical = 2.0 * PI * 2.0 / area;
    let mut misclassified = Vec::new();
    let mut worst_residual = 0.0_f64;
    let mut unconverged = Vec::new();
    for step in 0..=10 {
        let factor = 0.5 + 0.1 * step as f64;
        let lambda = factor * critical;
        let cfg = parse_config(&cell_config(lambda, 2, 128)).unwrap();
        let report = evaluate(Command::Check, &cfg).unwrap().report;
        let expected_unsolvable = step <= 5;
        if report.solvable == expected_unsolvable {
            misclassified.push(format!("{factor:.1}"));
        }
        if step >= 6 {
            let problem = cell_problem(ModelTag::Base, lambda, 2, 0, 128);
            match solve(&problem, &settings(), None) {
                Ok(sol) => {
                    worst_residual =
                        worst_residual.max(pde_residual(&problem, &sol.state).max_sup())
                }
                Err(e) => unconverged.push(format!("{factor:.1}: {e}")),
            }
        }
    }
    let pass = misclassified.is_empty()
        && unconverged.is_empty()
        && worst_residual <= 1e-8
        && within(started, 60);
    verdict(
        1,
        pass,
        &format!(
            "misclassified {misclassified:?}, unconverged {unconverged:?}, worst sup residual {worst_residual:.2e}, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_extended_threshold() {
    let started = Instant::now();
    let area = 50.0;
    let mut errors = Vec::new();
    let mut second_only = 0;
    for (n, m) in [(2usize, 1usize), (1, 3)] {
        for step in 0..=400 {
            let la = 2.0 * PI + step as f64 * 0.025 * PI;
            let lambda = la / area;
            let r = threshold(ModelTag::Extended, lambda, area, n, m);
            let first = 2.0 * PI * ((m + n) as f64) < la;
            let second = PI * ((3 * m + n) as f64) < la;
            let exact = |line: f64| (la - line).abs() < 1e-9;
            if exact(2.0 * PI * (m + n) as f64) || exact(PI * (3 * m + n) as f64) {
                continue;
            }
            if r.first_holds != first || r.second_holds != second || r.solvable != (first && second)
            {
                errors.push(format!("n={n} m={m} lambda|O|={la:.4}"));
            }
            if first && !second {
                second_only += 1;
                if r.solvable {
                    errors.push(format!("second-only violation accepted at {la:.4}"));
                }
            }
        }
    }
    let pass = errors.is_empty() && second_only > 0 && started.elapsed() <= Duration::from_secs(1);
    verdict(
        2,
        pass,
        &format!(
            "{} mismatches, {second_only} configurations violating only the second inequality (all with m > n), {:.3} s",
            errors.len(),
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "{errors:?}");
}

#[test]
fn criterion_03_constraint_identities() {
    let started = Instant::now();
    let problem = cell_problem(ModelTag::Base, 1.0, 2, 0, 128);
    let sol = solve(&problem, &settings(), None).unwrap();
    let c = constraint_report(&problem, &sol.state).unwrap();
    let c1 = 20.0 - 4.0 * PI;
    let c2 = (c1 + 20.0) / 2.0;
    let errs = [
        (c.integrals[0] - c1).abs() / c1,
        (c.integrals[1] - c2).abs() / c2,
    ];
    let pass = errs[0] <= 1e-6 && errs[1] <= 1e-6 && within(started, 10);
    verdict(
        3,
        pass,
        &format!(
            "relative errors {:.2e} (C1) and {:.2e} (C2), {:.1} s",
            errs[0],
            errs[1],
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_flux_quantization() {
    let started = Instant::now();
    let base = cell_problem(ModelTag::Base, 1.0, 2, 0, 128);
    let sb = solve(&base, &settings(), None).unwrap();
    let fb = flux_report(&base, &sb.state);
    let ext = cell_problem(ModelTag::Extended, 1.0, 2, 1, 128);
    let se = solve(&ext, &settings(), None).unwrap();
    let fe = flux_report(&ext, &se.state);
    let base_b = (fb.flux_b - 4.0 * PI).abs() / (4.0 * PI);
    let base_a = fb.flux_a.abs() / (4.0 * PI);
    let ext_a = (fe.flux_a - 2.0 * PI).abs() / (2.0 * PI);
    let ext_b = (fe.flux_b - 6.0 * PI).abs() / (6.0 * PI);
    let worst = base_b.max(base_a).max(ext_a).max(ext_b);
    let pass = worst <= 1e-6 && within(started, 30);
    verdict(
        4,
        pass,
        &format!(
            "base flux_b {:.9} flux_a {:.1e}; extended flux_a {:.9} flux_b {:.9}; worst relative {worst:.2e}, {:.1} s",
            fb.flux_b,
            fb.flux_a,
            fe.flux_a,
            fe.flux_b,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_cross_method_equivalence() {
    let started = Instant::now();
    let mut diffs = Vec::new();
    for n in 1..=3 {
        let problem = cell_problem(ModelTag::Base, 1.0, n, 0, 128);
        let newton = solve(&problem, &settings(), None).unwrap();
        let fixed = continuation_solve(&problem, &ContinuationSchedule::default()).unwrap();
        diffs.push(newton.state.sup_distance(&fixed.solution.state));
    }
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    let pass = worst <= 1e-6 && within(started, 120);
    verdict(
        5,
        pass,
        &format!(
            "sup differences {}, {:.1} s",
            sci(&diffs),
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_uniqueness_probe() {
    let started = Instant::now();
    let torus = cell_problem(ModelTag::Base, 1.0, 1, 0, 64);
    let plane = plane_problem(ModelTag::Base, 1.0, &[[0.3, -0.2]], &[], 8.0, 129);
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, problem) in [("torus", &torus), ("plane", &plane)] {
        let u = uniqueness_probe(problem, &settings(), 3, 17, 1.0).unwrap();
        let bound = 1e-8 * (1.0 + u.solution_sup);
        pass &= u.spread <= bound;
        lines.push(format!(
            "{name} spread {:.2e} (bound {bound:.2e})",
            u.spread
        ));
    }
    pass &= within(started, 120);
    verdict(
        6,
        pass,
        &format!(
            "{}, {:.1} s",
            lines.join("; "),
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

fn variant_problems() -> Vec<(Variant, Problem)> {
    let torus_base = cell_problem(ModelTag::Base, 1.0, 2, 0, 32);
    let torus_ext = cell_problem(ModelTag::Extended, 1.5, 2, 1, 32);
    let plane_base = plane_problem(
        ModelTag::Base,
        1.0,
        &[[0.4, 0.0], [-0.5, 0.6]],
        &[],
        5.0,
        33,
    );
    let plane_ext = plane_problem(
        ModelTag::Extended,
        1.0,
        &[[0.4, 0.0]],
        &[[-0.5, 0.6]],
        5.0,
        33,
    );
    [torus_base, torus_ext, plane_base, plane_ext]
        .into_iter()
        .map(|p| (p.variant(), p))
        .collect()
}

fn offset(problem: &Problem, x: &StatePair, d: &StatePair, h: f64) -> StatePair {
    let u =
        x.u.values()
            .iter()
            .zip(d.u.values())
            .map(|(a, b)| a + h * b)
            .collect();
    let f =
        x.f.values()
            .iter()
            .zip(d.f.values())
            .map(|(a, b)| a + h * b)
            .collect();
    let grid = problem.grid();
    StatePair::new(
        bps_vortex::ScalarField::new(grid, u).unwrap(),
        bps_vortex::ScalarField::new(grid, f).unwrap(),
    )
    .unwrap()
}

fn flat(s: &StatePair) -> Vec<f64> {
    s.u.values().iter().chain(s.f.values()).copied().collect()
}

#[test]
fn criterion_07_gradient_and_hessian() {
    let started = Instant::now();
    let h = 1e-5;
    let (mut worst_grad, mut worst_hess) = (0.0_f64, 0.0_f64);
    for (i, (_, problem)) in variant_problems().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + i as u64);
        for _ in 0..10 {
            let x = random_state(problem, &mut rng, 0.5);
            let d = random_direction(problem, &mut rng);
            let e = |s: &StatePair| problem.energy(s).unwrap().total;
            let fd = (e(&offset(problem, &x, &d, h)) - e(&offset(problem, &x, &d, -h))) / (2.0 * h);
            let analytic = problem.pairing(&problem.gradient(&x).unwrap(), &d);
            worst_grad = worst_grad.max(rel(fd, analytic));

            let gp = flat(&problem.gradient(&offset(problem, &x, &d, h)).unwrap());
            let gm = flat(&problem.gradient(&offset(problem, &x, &d, -h)).unwrap());
            let hd = flat(&problem.hessian_apply(&x, &d).unwrap());
            let (mut num, mut den) = (0.0_f64, 0.0_f64);
            for k in 0..hd.len() {
                let fdk = (gp[k] - gm[k]) / (2.0 * h);
                num = num.max((fdk - hd[k]).abs());
                den = den.max(hd[k].abs());
            }
            worst_hess = worst_hess.max(num / den);
        }
    }
    let pass = worst_grad <= 1e-6 && worst_hess <= 1e-4 && within(started, 30);
    verdict(
        7,
        pass,
        &format!(
            "worst directional-derivative error {worst_grad:.2e}, worst Hessian error {worst_hess:.2e}, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_convexity() {
    let started = Instant::now();
    let mut min_quadratic = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for (i, (_, problem)) in variant_problems().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + i as u64);
        let x = random_state(problem, &mut rng, 0.5);
        for _ in 0..100 {
            let d = random_direction(problem, &mut rng);
            let q = problem.pairing(&d, &problem.hessian_apply(&x, &d).unwrap());
            min_quadratic = min_quadratic.min(q / problem.pairing(&d, &d));
        }
        for _ in 0..100 {
            let a = random_state(problem, &mut rng, 0.5);
            let b = random_state(problem, &mut rng, 0.5);
            let diff = offset(problem, &b, &a, -1.0);
            let mid = offset(problem, &a, &diff, 0.5);
            let e = |s: &StatePair| problem.energy(s).unwrap().total;
            min_gap = min_gap.min(0.5 * (e(&a) + e(&b)) - e(&mid));
        }
    }
    let pass = min_quadratic > 0.0 && min_gap > 0.0 && within(started, 30);
    verdict(
        8,
        pass,
        &format!(
            "smallest Rayleigh quotient {min_quadratic:.3e}, smallest midpoint gap {min_gap:.3e}, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_decay_rates() {
    let started = Instant::now();
    let problem = plane_problem(ModelTag::Base, 4.0, &[[0.0, 0.0]], &[], 12.0, 384);
    let sol = solve(&problem, &settings(), None).unwrap();
    let fit = decay_fit(&problem, &sol.state, None, None).unwrap();
    let prediction = 2.0 * 4.0_f64.sqrt();
    let pass = fit.rate_fields >= (0.9_f64 * 4.0).sqrt()
        && (fit.rate_fields - prediction).abs() <= 0.15 * prediction
        && fit.rate_gradients >= (2.0_f64 * 0.9 * 4.0).sqrt()
        && within(started, 180);
    verdict(
        9,
        pass,
        &format!(
            "field rate {:.3} (prediction {prediction}), gradient rate {:.3}, window {:.2?} over {} bins, {:.1} s",
            fit.rate_fields,
            fit.rate_gradients,
            fit.r_window,
            fit.bins,
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_maximum_principle() {
    let started = Instant::now();
    let mut excess = Vec::new();
    for res in [64, 128, 256] {
        let problem = cell_problem(ModelTag::Base, 1.0, 2, 0, res);
        let sol = solve(&problem, &settings(), None).unwrap();
        let b = pointwise_bounds(&problem, &sol.state);
        excess.push(b.exp_u_excess.max(b.exp_v_excess));
    }
    let positive: Vec<f64> = excess.iter().map(|e| e.max(0.0)).collect();
    let pass = excess[1] <= 0.05
        && positive[2] <= positive[1]
        && positive[1] <= positive[0]
        && within(started, 60);
    verdict(
        10,
        pass,
        &format!(
            "max(e^u, e^v) - 1 at 64/128/256: {}, {:.1} s",
            sci(&excess),
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_lagrange_multipliers() {
    let started = Instant::now();
    let problem = cell_problem(ModelTag::Base, 1.0, 2, 0, 128);
    let sol = solve(&problem, &settings(), None).unwrap();
    let fit = verify_lagrange_multipliers(&problem, &sol.state).unwrap();
    let errs = [(fit.ratios[0] - 1.0).abs(), (fit.ratios[1] - 1.0).abs()];
    let pass = errs[0] <= 1e-4 && errs[1] <= 1e-4 && within(started, 5);
    verdict(
        11,
        pass,
        &format!(
            "lambda1 = {:.10}, lambda2 = {:.10}, errors {:.2e} / {:.2e}, {:.1} s",
            fit.lambda1,
            fit.lambda2,
            errs[0],
            errs[1],
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_12_reduction_consistency() {
    let started = Instant::now();
    let pairs = [
        (
            cell_problem(ModelTag::Base, 1.0, 2, 0, 64),
            cell_problem(ModelTag::Extended, 1.0, 2, 0, 64),
        ),
        (
            plane_problem(
                ModelTag::Base,
                1.0,
                &[[0.5, 0.0], [-0.5, 0.2]],
                &[],
                8.0,
                129,
            ),
            plane_problem(
                ModelTag::Extended,
                1.0,
                &[[0.5, 0.0], [-0.5, 0.2]],
                &[],
                8.0,
                129,
            ),
        ),
    ];
    let mut diffs = Vec::new();
    for (base, ext) in &pairs {
        let a = solve(base, &settings(), None).unwrap();
        let b = solve(ext, &settings(), None).unwrap();
        diffs.push(a.state.sup_distance(&b.state));
    }
    let pass = diffs.iter().all(|d| *d <= 1e-10) && within(started, 30);
    verdict(
        12,
        pass,
        &format!(
            "sup differences torus {:.2e}, plane {:.2e}, {:.1} s",
            diffs[0],
            diffs[1],
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_13_determinism() {
    let started = Instant::now();
    let cfg = parse_config(&cell_config(1.0, 2, 128)).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outputs: Vec<_> = dirs
        .iter()
        .map(|d| run(Command::Solve, &cfg, d.path()).unwrap())
        .collect();
    let same_report =
        outputs[0].report.deterministic_json() == outputs[1].report.deterministic_json();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("fields.bin")).unwrap();
    let same_fields = read(&dirs[0]) == read(&dirs[1]);
    let pass = same_report && same_fields && outputs[0].exit_code == 0 && within(started, 10);
    verdict(
        13,
        pass,
        &format!(
            "report identical: {same_report}, binary fields identical: {same_fields}, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}
