//! Convex action functionals, their gradients and Hessian-vector products.
//!
//! All four variants share the form
//!
//! ```text
//! E(g, f) = c [ D(g)/2 + D(f)/4 ]
//!         + sum_k w_k [ a (2 e^{u0} e^g + e^{v0} e^{f-g}) + lin_g g + lin_f f + const ]
//! ```
//!
//! where `D` is the discrete Dirichlet energy and `w_k` the energy measure.
//! The torus functionals use `c = 1, a = lambda`; the plane ones are divided by
//! `lambda`. Gradients are taken with respect to the weighted pairing
//! `<x, y> = sum_k w_k x_k y_k`, so `<gradient(s), d>` is the directional
//! derivative of `E` along `d`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, Operators, ScalarField};
use crate::setup::{
    build_background_plane, build_background_torus_with, threshold, Background, ModelTag,
    PhysicalParams, ThresholdReport, VortexConfig,
};

/// Largest exponent argument accepted before a state is declared divergent.
pub const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Torus,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub geometry: Geometry,
    pub model: ModelTag,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::new(Geometry::Torus, ModelTag::Base),
        Variant::new(Geometry::Torus, ModelTag::Extended),
        Variant::new(Geometry::Plane, ModelTag::Base),
        Variant::new(Geometry::Plane, ModelTag::Extended),
    ];

    pub const fn new(geometry: Geometry, model: ModelTag) -> Self {
        Self { geometry, model }
    }
}

/// Unknowns of a variant: `(u, f)` in the base model, `(g, f)` in the extended one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub u: ScalarField,
    pub f: ScalarField,
}

impl StatePair {
    pub fn new(u: ScalarField, f: ScalarField) -> Result<Self> {
        if u.len() != f.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: f.len(),
            });
        }
        Ok(Self { u, f })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: ScalarField::zeros(grid),
            f: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub(crate) fn from_flat(grid: Grid, flat: &[f64]) -> Self {
        let n = grid.len();
        Self {
            u: ScalarField::from_vec(grid, flat[..n].to_vec()),
            f: ScalarField::from_vec(grid, flat[n..].to_vec()),
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.u.len());
        v.extend_from_slice(self.u.values());
        v.extend_from_slice(self.f.values());
        v
    }

    /// Largest absolute nodal difference over both components.
    pub fn sup_distance(&self, other: &StatePair) -> f64 {
        crate::fields::field::sup_diff(self.u.values(), other.u.values()).max(
            crate::fields::field::sup_diff(self.f.values(), other.f.values()),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        crate::fields::norm_sup(&self.u).max(crate::fields::norm_sup(&self.f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub gradient_part: f64,
    pub exponential_part: f64,
    pub linear_part: f64,
}

/// One variant on one grid, with its background and functional coefficients.
#[derive(Debug)]
pub struct Problem {
    variant: Variant,
    ops: Operators,
    background: Background,
    cfg: VortexConfig,
    params: PhysicalParams,
    c: f64,
    a: f64,
    lin_g: Vec<f64>,
    lin_f: Vec<f64>,
    constant: Vec<f64>,
    /// Plane only: Dirichlet data for `(g, f)` on the boundary ring.
    lift: Option<(Vec<f64>, Vec<f64>)>,
}

impl Problem {
    pub fn new(
        model: ModelTag,
        cfg: VortexConfig,
        grid: Grid,
        params: PhysicalParams,
    ) -> Result<Self> {
        if model == ModelTag::Base && !cfg.kappa_zeros.is_empty() {
            return Err(Error::InvalidParameter(
                "the base model takes no kappa zeros".into(),
            ));
        }
        let ops = Operators::new(grid);
        let background = match (&ops, grid) {
            (Operators::Torus(ws), _) => build_background_torus_with(ws, &cfg, &params)?,
            (Operators::Plane(..), Grid::Plane(pg)) => build_background_plane(&cfg, &pg, &params)?,
            _ => unreachable!("operators are built from the grid"),
        };
        let len = grid.len();
        let lambda = params.lambda;
        let n = cfg.n();
        let m = if model == ModelTag::Base { 0 } else { cfg.m() };
        let bg = &background;

        let (variant, c, a, lin_g, lin_f, constant, lift) = match grid {
            Grid::Torus(tg) => {
                let area = tg.area();
                let kappa_flux = 4.0 * PI * m as f64 / area;
                let total_flux = 2.0 * PI * (m + n) as f64 / area;
                (
                    Variant::new(Geometry::Torus, model),
                    1.0,
                    lambda,
                    vec![kappa_flux - lambda; len],
                    vec![total_flux - lambda; len],
                    vec![0.0; len],
                    None,
                )
            }
            Grid::Plane(pg) => {
                let h1 = bg.h1.values();
                let h2 = bg.h2.values();
                let ev0 = bg.exp_v0.values();
                let eu0 = bg.exp_u0.values();
                let lin_g = match model {
                    ModelTag::Base => vec![-1.0; len],
                    ModelTag::Extended => h1.iter().map(|h| h / lambda - 1.0).collect(),
                };
                let lin_f = (0..len)
                    .map(|k| match model {
                        ModelTag::Base => h2[k] / (2.0 * lambda) - 1.0,
                        ModelTag::Extended => (h1[k] + h2[k]) / (2.0 * lambda) - 1.0,
                    })
                    .collect();
                let constant = (0..len).map(|k| -2.0 * eu0[k] - ev0[k]).collect();
                // Boundary data realizing u = 0 and v = 0 on the outer ring.
                let (u0, v0) = (bg.u0.values(), bg.v0.values());
                let mut lg = vec![0.0; len];
                let mut lf = vec![0.0; len];
                for k in (0..len).filter(|&k| pg.is_boundary(k)) {
                    lg[k] = -u0[k];
                    lf[k] = -u0[k] - v0[k];
                }
                (
                    Variant::new(Geometry::Plane, model),
                    1.0 / lambda,
                    1.0,
                    lin_g,
                    lin_f,
                    constant,
                    Some((lg, lf)),
                )
            }
        };
        Ok(Self {
            variant,
            ops,
            background,
            cfg,
            params,
            c,
            a,
            lin_g,
            lin_f,
            constant,
            lift,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn grid(&self) -> Grid {
        self.ops.grid()
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn config(&self) -> &VortexConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Existence test for torus variants; `None` on the plane, where every
    /// configuration is solvable.
    pub fn threshold(&self) -> Option<ThresholdReport> {
        match self.grid() {
            Grid::Torus(tg) => Some(threshold(
                self.variant.model,
                self.params.lambda,
                tg.area(),
                self.cfg.n(),
                self.cfg.m(),
            )),
            Grid::Plane(_) => None,
        }
    }

    /// Number of nodes carrying unknowns.
    pub fn free_len(&self) -> usize {
        (0..self.ops.len()).filter(|&k| self.ops.is_free(k)).count()
    }

    /// Zero interior with the plane boundary data in place.
    pub fn initial_state(&self) -> StatePair {
        let mut s = StatePair::zeros(self.grid());
        self.impose_boundary(&mut s);
        s
    }

    /// Overwrites the plane boundary ring of `state` with the Dirichlet data.
    pub fn impose_boundary(&self, state: &mut StatePair) {
        if let Some((lg, lf)) = &self.lift {
            for k in (0..lg.len()).filter(|&k| !self.ops.is_free(k)) {
                state.u.values_mut()[k] = lg[k];
                state.f.values_mut()[k] = lf[k];
            }
        }
    }

    pub(crate) fn coefficients(&self) -> (f64, f64) {
        (self.c, self.a)
    }

    fn check(&self, state: &StatePair) -> Result<()> {
        let n = self.ops.len();
        if state.u.len() != n || state.f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: state.u.len().min(state.f.len()),
            });
        }
        Ok(())
    }

    /// `(2 a e^{u0+g}, a e^{v0+f-g})` at every node.
    fn exponentials(&self, g: &[f64], f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let eu0 = self.background.exp_u0.values();
        let ev0 = self.background.exp_v0.values();
        let mut two_eu = Vec::with_capacity(g.len());
        let mut ev = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let d = f[k] - g[k];
            let worst = g[k].max(d);
            if worst.is_nan() || worst > EXP_GUARD {
                return Err(Error::Overflow { argument: worst });
            }
            two_eu.push(2.0 * self.a * eu0[k] * g[k].exp());
            ev.push(self.a * ev0[k] * d.exp());
        }
        Ok((two_eu, ev))
    }

    pub fn energy(&self, state: &StatePair) -> Result<EnergyBreakdown> {
        self.check(state)?;
        self.energy_flat(state.u.values(), state.f.values())
    }

    pub(crate) fn energy_flat(&self, g: &[f64], f: &[f64]) -> Result<EnergyBreakdown> {
        let (two_eu, ev) = self.exponentials(g, f)?;
        let gradient_part =
            self.c * (0.5 * self.ops.dirichlet_energy(g) + 0.25 * self.ops.dirichlet_energy(f));
        let exponential_part = self.ops.measure_sum(g.len(), |k| two_eu[k] + ev[k]);
        let linear_part = self.ops.measure_sum(g.len(), |k| {
            self.lin_g[k] * g[k] + self.lin_f[k] * f[k] + self.constant[k]
        });
        Ok(EnergyBreakdown {
            total: gradient_part + exponential_part + linear_part,
            gradient_part,
            exponential_part,
            linear_part,
        })
    }

    /// First variation with respect to the energy measure. Plane boundary entries are zero.
    pub fn gradient(&self, state: &StatePair) -> Result<StatePair> {
        self.check(state)?;
        let flat = self.gradient_flat(state.u.values(), state.f.values())?;
        Ok(StatePair::from_flat(self.grid(), &flat))
    }

    pub(crate) fn gradient_flat(&self, g: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        let (two_eu, ev) = self.exponentials(g, f)?;
        let lap_g = self.ops.laplacian(g);
        let lap_f = self.ops.laplacian(f);
        let n = g.len();
        let mut out = vec![0.0; 2 * n];
        for k in (0..n).filter(|&k| self.ops.is_free(k)) {
            out[k] = -self.c * lap_g[k] + two_eu[k] - ev[k] + self.lin_g[k];
            out[n + k] = -0.5 * self.c * lap_f[k] + ev[k] + self.lin_f[k];
        }
        Ok(out)
    }

    pub fn hessian_at(&self, state: &StatePair) -> Result<Hessian<'_>> {
        self.check(state)?;
        self.hessian_flat(state.u.values(), state.f.values())
    }

    pub(crate) fn hessian_flat(&self, g: &[f64], f: &[f64]) -> Result<Hessian<'_>> {
        let (two_eu, ev) = self.exponentials(g, f)?;
        Ok(Hessian {
            problem: self,
            two_eu,
            ev,
        })
    }

    pub fn hessian_apply(&self, state: &StatePair, direction: &StatePair) -> Result<StatePair> {
        self.check(direction)?;
        let h = self.hessian_at(state)?;
        Ok(StatePair::from_flat(
            self.grid(),
            &h.apply(&direction.to_flat()),
        ))
    }

    /// Weighted pairing of two flattened pairs.
    pub(crate) fn dot_flat(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.ops.len();
        self.ops.dot(&a[..n], &b[..n]) + self.ops.dot(&a[n..], &b[n..])
    }

    /// Weighted pairing of two state pairs.
    pub fn pairing(&self, a: &StatePair, b: &StatePair) -> f64 {
        self.ops.dot(a.u.values(), b.u.values()) + self.ops.dot(a.f.values(), b.f.values())
    }
}

/// Second variation frozen at one state.
#[derive(Debug)]
pub struct Hessian<'a> {
    problem: &'a Problem,
    two_eu: Vec<f64>,
    ev: Vec<f64>,
}

impl Hessian<'_> {
    /// `H d` for a flattened direction `[d_g, d_f]`; plane boundary entries of
    /// `d` are treated as zero.
    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let n = p.ops.len();
        let mut dg = d[..n].to_vec();
        let mut df = d[n..].to_vec();
        for k in (0..n).filter(|&k| !p.ops.is_free(k)) {
            dg[k] = 0.0;
            df[k] = 0.0;
        }
        let lap_g = p.ops.laplacian(&dg);
        let lap_f = p.ops.laplacian(&df);
        let mut out = vec![0.0; 2 * n];
        for k in (0..n).filter(|&k| p.ops.is_free(k)) {
            let coupling = self.ev[k] * (dg[k] - df[k]);
            out[k] = -p.c * lap_g[k] + self.two_eu[k] * dg[k] + coupling;
            out[n + k] = -0.5 * p.c * lap_f[k] - coupling;
        }
        out
    }

    /// Mean multiplication coefficients of the two diagonal blocks over free nodes.
    pub(crate) fn diagonal_shifts(&self) -> (f64, f64) {
        let p = self.problem;
        let free = p.free_len().max(1) as f64;
        let n = p.ops.len();
        let (mut sg, mut sf) = (0.0, 0.0);
        for k in (0..n).filter(|&k| p.ops.is_free(k)) {
            sg += self.two_eu[k] + self.ev[k];
            sf += self.ev[k];
        }
        (sg / free, sf / free)
    }
}
