//! Run configuration: JSON parsing, dotted overrides and validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{Grid, PlaneGrid, TorusGrid};
use crate::setup::{
    default_torus_tau, ModelTag, PhysicalParams, Point, VortexConfig, DEFAULT_PLANE_TAU,
};
use crate::variational::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Torus,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Newton,
    Fixedpoint,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(rename = "Lx", default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(rename = "Ly", default, skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub method: Method,
    pub tol: f64,
    pub max_iters: usize,
    pub continuation_steps: usize,
    pub seed: u64,
    /// Solve with `1, ..., n` vortices in turn (Newton only).
    pub vortex_continuation: bool,
    /// Random initializations for the uniqueness probe; `0` or `1` disables it.
    pub uniqueness_seeds: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: Method::Newton,
            tol: 1e-9,
            max_iters: 100,
            continuation_steps: 10,
            seed: 0,
            vortex_continuation: false,
            uniqueness_seeds: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub report_path: String,
    pub fields_path: String,
    pub plots_path: String,
    /// Also write the fields as raw little-endian doubles with a JSON sidecar.
    pub binary: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            report_path: "report.json".into(),
            fields_path: "fields.csv".into(),
            plots_path: "plots".into(),
            binary: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    N,
    M,
    Tau,
    Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

impl SweepAxis {
    /// Explicit values, or `count` evenly spaced points from `start` to `stop` inclusive.
    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        match &self.range {
            Some(r) if r.count == 1 => vec![r.start],
            Some(r) => (0..r.count)
                .map(|k| r.start + (r.stop - r.start) * k as f64 / (r.count - 1) as f64)
                .collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    /// Solve every solvable point, not only classify it.
    #[serde(default)]
    pub solve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_model")]
    pub model: ModelTag,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub domain: DomainSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub phi_zeros: Vec<Point>,
    #[serde(default)]
    pub kappa_zeros: Vec<Point>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_model() -> ModelTag {
    ModelTag::Base
}

impl RunConfig {
    /// The grid; only meaningful on a validated config.
    pub fn grid(&self) -> Result<Grid> {
        match self.mode {
            Mode::Torus => {
                let (lx, ly) = (
                    self.domain.lx.unwrap_or(f64::NAN),
                    self.domain.ly.unwrap_or(f64::NAN),
                );
                let (nx, ny) = (self.grid.nx.unwrap_or(0), self.grid.ny.unwrap_or(0));
                Ok(TorusGrid::new(lx, ly, nx, ny)?.into())
            }
            Mode::Plane => {
                let r = self.domain.r.unwrap_or(f64::NAN);
                Ok(PlaneGrid::new(r, self.grid.n.unwrap_or(0))?.into())
            }
        }
    }

    /// `tau` as configured, else the default for the geometry.
    pub fn effective_tau(&self, grid: &Grid) -> f64 {
        self.tau.unwrap_or(match grid {
            Grid::Torus(tg) => default_torus_tau(tg),
            Grid::Plane(_) => DEFAULT_PLANE_TAU,
        })
    }

    pub fn params(&self, grid: &Grid) -> Result<PhysicalParams> {
        PhysicalParams::new(self.lambda, self.effective_tau(grid))
    }

    pub fn vortices(&self) -> VortexConfig {
        VortexConfig::new(self.phi_zeros.clone(), self.kappa_zeros.clone())
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol_grad_sup: self.solver.tol,
            max_iters: self.solver.max_iters,
            ..SolverSettings::default()
        }
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configs serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Every violated precondition, or `Ok` when there are none.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            errs.push(format!("lambda must be positive, got {}", self.lambda));
        }
        if let Some(t) = self.tau {
            if !(t.is_finite() && t > 0.0) {
                errs.push(format!("tau must be positive, got {t}"));
            }
        }
        let positive = |v: Option<f64>| v.is_some_and(|x| x.is_finite() && x > 0.0);
        match self.mode {
            Mode::Torus => {
                if !positive(self.domain.lx) || !positive(self.domain.ly) {
                    errs.push("domain.Lx and domain.Ly must be positive for a torus".into());
                }
                if self.domain.r.is_some() {
                    errs.push("domain.R applies to the plane only".into());
                }
                for (name, v) in [("nx", self.grid.nx), ("ny", self.grid.ny)] {
                    match v {
                        Some(n) if n >= 8 && n % 2 == 0 => {}
                        _ => errs.push(format!("grid.{name} must be an even integer >= 8")),
                    }
                }
                if self.grid.n.is_some() {
                    errs.push("grid.n applies to the plane only".into());
                }
            }
            Mode::Plane => {
                if !positive(self.domain.r) {
                    errs.push("domain.R must be positive for the plane".into());
                }
                if self.domain.lx.is_some() || self.domain.ly.is_some() {
                    errs.push("domain.Lx/Ly apply to the torus only".into());
                }
                if !self.grid.n.is_some_and(|n| n >= 16) {
                    errs.push("grid.n must be an integer >= 16".into());
                }
                if self.grid.nx.is_some() || self.grid.ny.is_some() {
                    errs.push("grid.nx/ny apply to the torus only".into());
                }
            }
        }
        if self.model == ModelTag::Base && !self.kappa_zeros.is_empty() {
            errs.push("kappa_zeros require model = extended".into());
        }
        if let Ok(grid) = self.grid() {
            for (name, pts) in [
                ("phi_zeros", &self.phi_zeros),
                ("kappa_zeros", &self.kappa_zeros),
            ] {
                for (i, p) in pts.iter().enumerate() {
                    if !grid.contains(*p) {
                        errs.push(format!(
                            "{name}[{i}] = ({}, {}) lies outside the domain",
                            p[0], p[1]
                        ));
                    }
                }
            }
        }
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) {
            errs.push(format!("solver.tol must be positive, got {}", s.tol));
        }
        if s.max_iters == 0 {
            errs.push("solver.max_iters must be positive".into());
        }
        if s.continuation_steps == 0 {
            errs.push("solver.continuation_steps must be positive".into());
        }
        if s.method != Method::Newton && (self.mode != Mode::Torus || self.model != ModelTag::Base)
        {
            errs.push(
                "solver.method fixedpoint/both requires mode = torus and model = base".into(),
            );
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() || sweep.axes.len() > 2 {
                errs.push("sweep.axes must list one or two axes".into());
            }
            for (i, axis) in sweep.axes.iter().enumerate() {
                if axis.values.is_some() == axis.range.is_some() {
                    errs.push(format!(
                        "sweep.axes[{i}] needs exactly one of values or range"
                    ));
                }
                let pts = axis.points();
                if pts.is_empty() {
                    errs.push(format!("sweep.axes[{i}] has no points"));
                }
                let integral = matches!(axis.param, SweepParam::N | SweepParam::M);
                for v in pts {
                    let bad = !v.is_finite()
                        || match axis.param {
                            SweepParam::N | SweepParam::M => v < 0.0 || v.fract() != 0.0,
                            _ => v <= 0.0,
                        };
                    if bad {
                        let kind = if integral {
                            "a non-negative integer"
                        } else {
                            "positive"
                        };
                        errs.push(format!("sweep.axes[{i}] value {v} must be {kind}"));
                    }
                }
                if axis.param == SweepParam::M && self.model == ModelTag::Base {
                    errs.push(format!(
                        "sweep.axes[{i}] sweeps m, which requires model = extended"
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Sets `path` (dot-separated; numeric segments index arrays) in `doc` to `value`.
fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        node = match node {
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| {
                    Error::Parse(format!("override {path}: '{seg}' is not an array index"))
                })?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| {
                    Error::Parse(format!("override {path}: index {i} out of range ({len})"))
                })?
            }
            Value::Object(map) => {
                if last {
                    map.insert((*seg).to_string(), value);
                    return Ok(());
                }
                map.entry((*seg).to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            _ => {
                return Err(Error::Parse(format!(
                    "override {path}: '{seg}' is not inside an object"
                )))
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    Ok(())
}

/// Applies `key=value` overrides; the value is read as JSON when it parses, else as a string.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override '{o}' is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(doc, key.trim(), value)?;
    }
    Ok(())
}

fn parse_value(doc: Value) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    if overrides.is_empty() {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        return Ok(cfg);
    }
    let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    parse_value(doc)
}
