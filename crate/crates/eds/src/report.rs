//! Machine-readable verification reports. Field names are a stable contract
//! (`verdict`, `certificates[].multipliers`, `constraints[].exponent`,
//! `violations[].triple`): golden tests diff the serialized output.

use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Failed,
    Ambiguous,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Failed => 1,
            Verdict::Ambiguous => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub name: String,
    /// rendered multiplier forms, one per system generator
    pub multipliers: Vec<String>,
    pub residual: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub exponent: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub triple: [String; 3],
    pub residual: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericSummary {
    pub trials: u32,
    pub seed: u64,
    pub tol: f64,
    pub worst_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub command: String,
    pub system: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub certificates: Vec<CertificateReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub constraints: Vec<ConstraintReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<ViolationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, system: &str, verdict: Verdict) -> Self {
        Report {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            system: system.to_string(),
            verdict,
            seed: None,
            certificates: Vec::new(),
            constraints: Vec::new(),
            violations: Vec::new(),
            residuals: Vec::new(),
            numeric: None,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}
