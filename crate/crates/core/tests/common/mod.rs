#![allow(dead_code)]

use std::io::Write;

use bps_vortex::setup::Point;
use bps_vortex::{Grid, ModelTag, PhysicalParams, PlaneGrid, Problem, TorusGrid, VortexConfig};

/// Zeros of `phi` spread over a 5 x 4 cell.
pub const CELL_ZEROS: [Point; 3] = [[1.5, 2.0], [3.5, 2.0], [2.5, 1.0]];
pub const CELL_KAPPA_ZEROS: [Point; 2] = [[2.5, 3.0], [4.2, 0.8]];

pub fn torus(nx: usize, ny: usize) -> Grid {
    TorusGrid::new(5.0, 4.0, nx, ny).unwrap().into()
}

pub fn plane(half_width: f64, n: usize) -> Grid {
    PlaneGrid::new(half_width, n).unwrap().into()
}

/// Problem on the `5 x 4` cell (area 20) with default `tau`.
pub fn cell_problem(model: ModelTag, lambda: f64, n: usize, m: usize, res: usize) -> Problem {
    let grid = torus(res, res);
    let tau = bps_vortex::setup::default_torus_tau(grid.as_torus().unwrap());
    let cfg = VortexConfig::new(CELL_ZEROS[..n].to_vec(), CELL_KAPPA_ZEROS[..m].to_vec());
    Problem::new(model, cfg, grid, PhysicalParams::new(lambda, tau).unwrap()).unwrap()
}

pub fn plane_problem(
    model: ModelTag,
    lambda: f64,
    phi: &[Point],
    kappa: &[Point],
    r: f64,
    n: usize,
) -> Problem {
    let cfg = VortexConfig::new(phi.to_vec(), kappa.to_vec());
    let params = PhysicalParams::new(lambda, bps_vortex::setup::DEFAULT_PLANE_TAU).unwrap();
    Problem::new(model, cfg, plane(r, n), params).unwrap()
}

/// One line straight to stdout, bypassing the test harness capture.
pub fn verdict(criterion: u32, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion:>2}: {word}  {detail}\n");
    let out = std::io::stdout();
    let mut lock = out.lock();
    let _ = lock.write_all(line.as_bytes());
    let _ = lock.flush();
}

pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
