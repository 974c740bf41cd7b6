//! Run report written by every command.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::diagnostics::{DiagnosticsReport, UniquenessReport};
use crate::setup::ThresholdReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ThresholdViolated,
    NotConverged,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Error => 1,
            Status::ThresholdViolated => 2,
            Status::NotConverged => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: Status,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub stage_iterations: Vec<usize>,
    pub gradient_sup: f64,
    pub residual_sup: f64,
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_norm_ceiling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub lambda: f64,
    pub area: f64,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub resolution: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdReport>,
    /// Solvability from the inequalities `2 pi (m + n) < lambda |O|` and `pi (3m + n) < lambda |O|`.
    pub analytic_solvable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub report: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields_binary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_boundary: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub methods: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub artifact_version: String,
    pub config_hash: String,
    pub command: String,
    pub config: RunConfig,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdReport>,
    /// The plane admits solutions for every configuration.
    pub solvable: bool,
    #[serde(default)]
    pub methods: Vec<MethodSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_method_sup_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    pub artifacts: Artifacts,
    /// Wall-clock data; the only part of a report that varies between identical runs.
    pub timings: Timings,
}

impl RunReport {
    /// The report as JSON with timings removed, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        serde_json::to_string(&copy).expect("reports serialize")
    }
}
