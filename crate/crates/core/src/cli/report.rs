//! JSON report documents.

use serde::Serialize;

use crate::apps::NodeInvestment;
use crate::gpsolve::{SolveOptions, Status};
use crate::synth::Certificate;
use crate::sysmodel::NormReport;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slack {
    pub label: String,
    pub value: f64,
    /// `1 − value`; positive means satisfied.
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_variables: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_constraints: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// One solve: status, solution and its independent oracle evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    pub theta: Vec<NamedValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub auxiliary: Vec<NamedValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub slacks: Vec<Slack>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<NormReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robust_abscissa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

impl SolveRecord {
    pub fn empty(status: &str) -> Self {
        Self {
            status: status.into(),
            level: None,
            objective: None,
            cost: None,
            theta: Vec::new(),
            auxiliary: Vec::new(),
            slacks: Vec::new(),
            oracle: None,
            robust_abscissa: None,
            certificate: None,
            diagnostics: Diagnostics::default(),
        }
    }

    /// 0 Optimal or evaluated, 2 Infeasible, 3 invalid input, 4 numeric trouble.
    pub fn exit_code(&self) -> i32 {
        if !self.diagnostics.errors.is_empty() && self.status != "InvalidInput" {
            return 4;
        }
        match self.status.as_str() {
            "Optimal" | "Evaluated" => 0,
            "Infeasible" => 2,
            "InvalidInput" => 3,
            _ => 4,
        }
    }
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "Optimal",
        Status::Infeasible => "Infeasible",
        Status::MaxIters => "MaxIters",
        Status::NumericFailure => "NumericFailure",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementInfo {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub minimize_level: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub gamma: f64,
    #[serde(flatten)]
    pub record: SolveRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirement: Option<RequirementInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_options: Option<SolveOptions>,
    pub seed: u64,
    #[serde(flatten)]
    pub result: SolveRecord,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<SweepRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub investments: Vec<NodeInvestment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_norm: Option<f64>,
    /// Canonical text of the problem that was solved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64, result: SolveRecord) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            requirement: None,
            solver_options: None,
            seed,
            result,
            records: Vec::new(),
            investments: Vec::new(),
            spectral_norm: None,
            problem: None,
        }
    }

    /// Worst exit code over the main result and every sweep record.
    pub fn exit_code(&self) -> i32 {
        let codes = std::iter::once(self.result.exit_code())
            .chain(self.records.iter().map(|r| r.record.exit_code()));
        codes
            .max_by_key(|&c| match c {
                0 => 0,
                2 => 1,
                4 => 2,
                _ => 3,
            })
            .unwrap_or(0)
    }
}
