//! Vortex configurations, existence thresholds and background data.
//!
//! The background functions absorb the point sources so that the remaining
//! unknowns are smooth. On the plane they are in closed form; on the torus the
//! point sources are replaced by periodized bumps of cell integral `4 pi` each.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, PlaneGrid, ScalarField, SpectralWorkspace, TorusGrid};

/// Floor applied to stored log-backgrounds on the plane (`exp` underflows below it).
pub const LOG_FLOOR: f64 = -700.0;

/// Image cells summed on each side when periodizing a bump.
const IMAGE_RADIUS: i32 = 2;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub lambda: f64,
    pub tau: f64,
}

impl PhysicalParams {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(Self { lambda, tau })
    }
}

/// Default core scale on the torus: three grid spacings, squared.
pub fn default_torus_tau(grid: &TorusGrid) -> f64 {
    (3.0 * grid.dx().max(grid.dy())).powi(2)
}

/// Default core scale on the plane.
pub const DEFAULT_PLANE_TAU: f64 = 1.0;

/// Prescribed zeros of `phi` (`phi_zeros`) and of `kappa` (`kappa_zeros`).
/// Repeated points encode multiplicity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexConfig {
    pub phi_zeros: Vec<Point>,
    #[serde(default)]
    pub kappa_zeros: Vec<Point>,
}

impl VortexConfig {
    pub fn new(phi_zeros: Vec<Point>, kappa_zeros: Vec<Point>) -> Self {
        Self {
            phi_zeros,
            kappa_zeros,
        }
    }

    pub fn base(phi_zeros: Vec<Point>) -> Self {
        Self::new(phi_zeros, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.phi_zeros.len()
    }

    pub fn m(&self) -> usize {
        self.kappa_zeros.len()
    }

    pub fn validate_in(&self, grid: &Grid) -> Result<()> {
        for (index, p) in self.phi_zeros.iter().chain(&self.kappa_zeros).enumerate() {
            if !grid.contains(*p) {
                return Err(Error::PointOutsideDomain {
                    index,
                    x: p[0],
                    y: p[1],
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Base,
    Extended,
}

/// Outcome of the torus existence test.
///
/// `first`/`second` are `(C1, C2)` for the base model and `(alpha1, alpha2)`
/// for the extended one. Values within a few ulps of zero are snapped to
/// exactly zero so the strict inequality is decided consistently at the
/// threshold itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub model: ModelTag,
    pub lambda: f64,
    pub area: f64,
    pub n: usize,
    pub m: usize,
    pub first: f64,
    pub second: f64,
    pub first_holds: bool,
    pub second_holds: bool,
    pub solvable: bool,
    pub margin: f64,
}

impl ThresholdReport {
    pub fn c1(&self) -> f64 {
        self.first
    }
    pub fn c2(&self) -> f64 {
        self.second
    }
    pub fn alpha1(&self) -> f64 {
        self.first
    }
    pub fn alpha2(&self) -> f64 {
        self.second
    }
}

fn snap(value: f64, scale: f64) -> f64 {
    if value.abs() <= 16.0 * f64::EPSILON * scale {
        0.0
    } else {
        value
    }
}

/// Existence test on a cell of area `area`.
///
/// Base: `C1 = |O| - 2 pi n / lambda`, `C2 = (C1 + |O|) / 2`.
/// Extended: `alpha1 = |O| - 2 pi (m + n) / lambda`,
/// `alpha2 = (alpha1 + |O| - 4 pi m / lambda) / 2`.
pub fn threshold(model: ModelTag, lambda: f64, area: f64, n: usize, m: usize) -> ThresholdReport {
    let m = if model == ModelTag::Base { 0 } else { m };
    let flux = 2.0 * PI * (m + n) as f64 / lambda;
    let first = snap(area - flux, area.max(flux));
    let kappa = 4.0 * PI * m as f64 / lambda;
    let second = snap(
        (first + area - kappa) / 2.0,
        (first.abs() + area).max(kappa),
    );
    let (first_holds, second_holds) = (first > 0.0, second > 0.0);
    ThresholdReport {
        model,
        lambda,
        area,
        n,
        m,
        first,
        second,
        first_holds,
        second_holds,
        solvable: first_holds && second_holds,
        margin: first.min(second),
    }
}

pub fn check_existence(
    model: ModelTag,
    cfg: &VortexConfig,
    grid: &TorusGrid,
    params: &PhysicalParams,
) -> ThresholdReport {
    threshold(model, params.lambda, grid.area(), cfg.n(), cfg.m())
}

/// Smooth data that removes the point sources.
///
/// `exp_v0`/`v0` belong to the zeros of `phi`, `exp_u0`/`u0` to the zeros of
/// `kappa` (identically 1 and 0 when there are none). `h1` is the source
/// density of the `kappa` zeros, `h` = `h2` that of the `phi` zeros; on the
/// torus these are the normalized regularized sources.
#[derive(Debug, Clone)]
pub struct Background {
    pub exp_v0: ScalarField,
    pub exp_u0: ScalarField,
    pub v0: ScalarField,
    pub u0: ScalarField,
    pub h: ScalarField,
    pub h1: ScalarField,
    pub h2: ScalarField,
    /// Torus: regularized `phi` source minus its mean, i.e. the Laplacian of `v0`.
    /// Plane: `-h` (the smooth part of the Laplacian of `v0`).
    pub neutralized_source: ScalarField,
}

struct ClosedForm {
    exp: ScalarField,
    log: ScalarField,
    density: ScalarField,
}

fn plane_closed_form(grid: &PlaneGrid, points: &[Point], tau: f64) -> ClosedForm {
    let g = Grid::Plane(*grid);
    let mut exp = Vec::with_capacity(grid.len());
    let mut log = Vec::with_capacity(grid.len());
    let mut density = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (x, y) = grid.node(k);
        let (mut e, mut l, mut d) = (1.0, 0.0, 0.0);
        for p in points {
            let r2 = (x - p[0]).powi(2) + (y - p[1]).powi(2);
            let factor = r2 / (r2 + tau);
            e *= factor;
            l += factor.ln();
            d += 4.0 * tau / (tau + r2).powi(2);
        }
        exp.push(e);
        log.push(l.max(LOG_FLOOR));
        density.push(d);
    }
    ClosedForm {
        exp: ScalarField::from_vec(g, exp),
        log: ScalarField::from_vec(g, log),
        density: ScalarField::from_vec(g, density),
    }
}

/// Closed-form backgrounds on the truncated plane.
pub fn build_background_plane(
    cfg: &VortexConfig,
    grid: &PlaneGrid,
    params: &PhysicalParams,
) -> Result<Background> {
    cfg.validate_in(&Grid::Plane(*grid))?;
    let phi = plane_closed_form(grid, &cfg.phi_zeros, params.tau);
    let kappa = plane_closed_form(grid, &cfg.kappa_zeros, params.tau);
    Ok(Background {
        neutralized_source: phi.density.map(|v| -v),
        h2: phi.density.clone(),
        h: phi.density,
        h1: kappa.density,
        exp_v0: phi.exp,
        v0: phi.log,
        exp_u0: kappa.exp,
        u0: kappa.log,
    })
}

/// Periodized bump `4 tau / (tau + r^2)^2` centred at `p`, summed over the
/// nearest `5 x 5` image cells around the minimum-image displacement.
pub fn periodized_bump(grid: &TorusGrid, p: Point, tau: f64) -> Vec<f64> {
    let (lx, ly) = (grid.lx, grid.ly);
    (0..grid.len())
        .map(|k| {
            let (x, y) = grid.node(k);
            let dx = x - p[0] - lx * ((x - p[0]) / lx).round();
            let dy = y - p[1] - ly * ((y - p[1]) / ly).round();
            let mut acc = 0.0;
            for a in -IMAGE_RADIUS..=IMAGE_RADIUS {
                for b in -IMAGE_RADIUS..=IMAGE_RADIUS {
                    let r2 = (dx + a as f64 * lx).powi(2) + (dy + b as f64 * ly).powi(2);
                    acc += 4.0 * tau / (tau + r2).powi(2);
                }
            }
            acc
        })
        .collect()
}

/// Sum of per-point bumps, each rescaled to discrete cell integral exactly `4 pi`.
pub fn regularized_source(grid: &TorusGrid, points: &[Point], tau: f64) -> ScalarField {
    let cell = grid.dx() * grid.dy();
    let mut total = vec![0.0; grid.len()];
    for p in points {
        let bump = periodized_bump(grid, *p, tau);
        let scale = 4.0 * PI / (cell * crate::fields::summation::pairwise_sum(&bump));
        for (t, b) in total.iter_mut().zip(&bump) {
            *t += scale * b;
        }
    }
    ScalarField::from_vec(Grid::Torus(*grid), total)
}

/// Zero-mean solution of `Laplacian v0 = -4 pi n / |O| + regularized source`.
fn torus_potential(
    ws: &SpectralWorkspace,
    points: &[Point],
    tau: f64,
) -> Result<(ScalarField, ScalarField, ScalarField)> {
    let grid = ws.grid();
    let source = regularized_source(grid, points, tau);
    let mean = crate::fields::mean(&source);
    let neutral = source.map(|v| v - mean);
    let potential = ws.poisson_solve_zero_mean(&neutral)?;
    Ok((source, neutral, potential))
}

/// Backgrounds on the doubly periodic cell, with `mean(v0) = mean(u0) = 0`.
pub fn build_background_torus(
    cfg: &VortexConfig,
    grid: &TorusGrid,
    params: &PhysicalParams,
) -> Result<Background> {
    build_background_torus_with(&SpectralWorkspace::new(*grid), cfg, params)
}

pub fn build_background_torus_with(
    ws: &SpectralWorkspace,
    cfg: &VortexConfig,
    params: &PhysicalParams,
) -> Result<Background> {
    cfg.validate_in(&Grid::Torus(*ws.grid()))?;
    let (h, neutral, v0) = torus_potential(ws, &cfg.phi_zeros, params.tau)?;
    let (h1, _, u0) = torus_potential(ws, &cfg.kappa_zeros, params.tau)?;
    Ok(Background {
        exp_v0: v0.map(f64::exp),
        exp_u0: u0.map(f64::exp),
        h2: h.clone(),
        h,
        h1,
        v0,
        u0,
        neutralized_source: neutral,
    })
}

pub fn build_background(
    cfg: &VortexConfig,
    grid: &Grid,
    params: &PhysicalParams,
) -> Result<Background> {
    match grid {
        Grid::Torus(g) => build_background_torus(cfg, g, params),
        Grid::Plane(g) => build_background_plane(cfg, g, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate, mean, norm_l2, norm_sup};

    #[test]
    fn base_threshold_example() {
        let r = threshold(ModelTag::Base, 1.0, 20.0, 2, 0);
        assert!((r.c1() - (20.0 - 4.0 * PI)).abs() < 1e-12);
        assert!((r.c1() - 7.4336).abs() < 1e-4);
        assert!((r.c2() - 13.7168).abs() < 1e-4);
        assert!(r.solvable);
    }

    #[test]
    fn no_vortices_is_always_solvable() {
        for lambda in [1e-3, 0.5, 7.0] {
            let r = threshold(ModelTag::Base, lambda, 3.0, 0, 0);
            assert_eq!((r.c1(), r.c2()), (3.0, 3.0));
            assert!(r.solvable);
        }
    }

    #[test]
    fn threshold_is_strict() {
        let g = TorusGrid::new(2.0 * PI, 1.0, 8, 8).unwrap();
        let params = PhysicalParams::new(1.0, 0.1).unwrap();
        let r = check_existence(
            ModelTag::Base,
            &VortexConfig::base(vec![[1.0, 0.5]]),
            &g,
            &params,
        );
        assert_eq!(r.c1(), 0.0);
        assert_eq!(r.margin, 0.0);
        assert!(!r.solvable);
    }

    #[test]
    fn extended_threshold_example() {
        let r = threshold(ModelTag::Extended, 1.0, 50.0, 2, 1);
        assert!((r.alpha1() - (50.0 - 6.0 * PI)).abs() < 1e-12);
        assert!((r.alpha1() - 31.1504).abs() < 1e-4);
        assert!((r.alpha2() - 34.2920).abs() < 1e-4);
        assert!(r.solvable);
    }

    #[test]
    fn extended_reduces_to_base_without_kappa_zeros() {
        for (lambda, area, n) in [(1.0, 20.0, 2), (0.3, 7.0, 5), (2.0, 1.0, 0)] {
            let b = threshold(ModelTag::Base, lambda, area, n, 0);
            let e = threshold(ModelTag::Extended, lambda, area, n, 0);
            assert_eq!(
                (b.first, b.second, b.solvable),
                (e.first, e.second, e.solvable)
            );
        }
    }

    #[test]
    fn extended_second_inequality_alone_can_fail() {
        // lambda |O| = 9 pi with m = 3, n = 1: 2 pi (m + n) = 8 pi < 9 pi <= pi (3m + n) = 10 pi
        let r = threshold(ModelTag::Extended, 1.0, 9.0 * PI, 1, 3);
        assert!(r.first_holds);
        assert!(!r.second_holds);
        assert!(!r.solvable);
    }

    #[test]
    fn plane_background_single_vortex() {
        let pg = PlaneGrid::new(4.0, 41).unwrap();
        let params = PhysicalParams::new(1.0, 1.0).unwrap();
        let cfg = VortexConfig::base(vec![[0.0, 0.0]]);
        let bg = build_background_plane(&cfg, &pg, &params).unwrap();
        let centre = pg.index(20, 20);
        assert_eq!(bg.exp_v0.values()[centre], 0.0);
        assert_eq!(bg.v0.values()[centre], LOG_FLOOR);
        // |x| = 1 at node (25, 20)
        assert!((bg.exp_v0.values()[pg.index(25, 20)] - 0.5).abs() < 1e-14);
        assert!(bg
            .exp_v0
            .values()
            .iter()
            .enumerate()
            .all(|(k, &e)| k == centre || e > 0.0));
    }

    #[test]
    fn plane_background_without_vortices() {
        let pg = PlaneGrid::new(4.0, 17).unwrap();
        let params = PhysicalParams::new(1.0, 1.0).unwrap();
        let bg = build_background_plane(&VortexConfig::default(), &pg, &params).unwrap();
        assert!(bg.exp_v0.values().iter().all(|&v| v == 1.0));
        assert!(bg.h.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_source_density_integrates_to_4pi_per_vortex() {
        let (r, tau) = (20.0, 1.0);
        let pg = PlaneGrid::new(r, 801).unwrap();
        let params = PhysicalParams::new(1.0, tau).unwrap();
        let cfg = VortexConfig::base(vec![[0.5, -1.0], [-2.0, 1.5]]);
        let bg = build_background_plane(&cfg, &pg, &params).unwrap();
        let n = 2.0;
        // Radial integral of 4 tau / (tau + r^2)^2 outside the disk of radius R is
        // 4 pi tau / (tau + R^2); the square contains the disk.
        let bound = 4.0 * PI * n * tau / (r * r);
        let err = (integrate(&bg.h) - 4.0 * PI * n).abs();
        assert!(err <= bound, "err {err} bound {bound}");
    }

    #[test]
    fn plane_rejects_outside_points() {
        let pg = PlaneGrid::new(1.0, 17).unwrap();
        let params = PhysicalParams::new(1.0, 1.0).unwrap();
        let cfg = VortexConfig::new(vec![[0.0, 0.0]], vec![[1.5, 0.0]]);
        assert!(matches!(
            build_background_plane(&cfg, &pg, &params),
            Err(Error::PointOutsideDomain { index: 1, .. })
        ));
    }

    #[test]
    fn torus_background_without_vortices() {
        let g = TorusGrid::new(3.0, 3.0, 16, 16).unwrap();
        let params = PhysicalParams::new(1.0, default_torus_tau(&g)).unwrap();
        let bg = build_background_torus(&VortexConfig::default(), &g, &params).unwrap();
        assert!(bg.v0.values().iter().all(|&v| v == 0.0));
        assert!(bg.exp_v0.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn torus_source_has_exact_cell_integral() {
        let g = TorusGrid::new(4.0, 5.0, 64, 64).unwrap();
        let tau = default_torus_tau(&g);
        let src = regularized_source(&g, &[[1.0, 2.0]], tau);
        assert!((integrate(&src) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn torus_background_solves_its_poisson_problem() {
        let g = TorusGrid::new(4.0, 5.0, 64, 64).unwrap();
        let params = PhysicalParams::new(1.0, default_torus_tau(&g)).unwrap();
        let cfg = VortexConfig::base(vec![[1.0, 2.0], [3.1, 4.4]]);
        let ws = SpectralWorkspace::new(g);
        let bg = build_background_torus_with(&ws, &cfg, &params).unwrap();
        let n = cfg.n() as f64;
        let residual = ws
            .laplacian(&bg.v0)
            .zip_map(&bg.h, |lap, src| lap + 4.0 * PI * n / g.area() - src);
        let rel = norm_l2(&residual) / norm_l2(&bg.h);
        assert!(rel <= 1e-10, "relative residual {rel}");
        assert!(mean(&bg.v0).abs() <= 1e-12 * norm_sup(&bg.v0).max(1.0));
        assert!(mean(&bg.neutralized_source).abs() <= 1e-12 * norm_sup(&bg.neutralized_source));
    }

    #[test]
    fn torus_weight_is_small_at_vortex_cores() {
        let g = TorusGrid::square(20.0, 128).unwrap();
        let params = PhysicalParams::new(1.0, default_torus_tau(&g)).unwrap();
        let p = [g.dx() * 40.0, g.dy() * 64.0];
        let bg = build_background_torus(&VortexConfig::base(vec![p]), &g, &params).unwrap();
        let at_core = bg.exp_v0.values()[g.index(40, 64)];
        let ratio = at_core / bg.exp_v0.max();
        assert!(ratio < 1e-2, "ratio {ratio}");
        assert!(bg.exp_v0.min() > 0.0);
    }

    #[test]
    fn threshold_monotone_in_vortex_count() {
        for lambda in [0.2, 0.7, 1.3] {
            for m in 0..4 {
                let mut was_solvable = true;
                for n in 0..12 {
                    let r = threshold(ModelTag::Extended, lambda, 20.0, n, m);
                    assert!(!(r.solvable && !was_solvable));
                    was_solvable = r.solvable;
                }
            }
        }
    }
}
