//! The machine-readable run report.
//!
//! One JSON document per run, schema `hsect-report/1`. Every numeric table
//! carries its tolerance and a status; "measured" rows are observations
//! that never affect the exit code. Reports are byte-stable for identical
//! inputs and seed — wall-clock goes to stderr, never into the document.

use harmonic_sections::flow::FlowOutcome;
use harmonic_sections::report::CheckReport;
use harmonic_sections::sections::{CConvention, SectionReport};
use harmonic_sections::stochastic::ExperimentReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA: &str = "hsect-report/1";

/// pass/fail drive the exit code; warn and measured never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
    Measured,
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub status: Status,
    #[serde(flatten)]
    pub report: CheckReport,
}

#[derive(Debug, Serialize)]
pub struct SectionRow {
    pub name: String,
    pub status: Status,
    pub report: SectionReport,
}

#[derive(Debug, Serialize)]
pub struct ExperimentRow {
    /// Resolved section name; the flattened report repeats the component
    /// expressions under its own `section` key.
    pub name: String,
    pub status: Status,
    #[serde(flatten)]
    pub report: ExperimentReport,
}

#[derive(Debug, Serialize)]
pub struct FlowRow {
    pub status: Status,
    pub monotone: bool,
    pub mode1_amplitude: f64,
    pub mode1_rate: f64,
    pub outcome: FlowOutcome,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub geometry: String,
    pub input_digest: String,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<SectionRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub experiments: Vec<ExperimentRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowRow>,
    /// Bracket-sign reading under which the decomposition identity was
    /// judged, when sections were classified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<CConvention>,
    pub exit_code: u8,
}

impl RunReport {
    pub fn new(command: &'static str, geometry: String, digest_payload: &str, tolerance: f64) -> RunReport {
        RunReport {
            schema: REPORT_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            geometry,
            input_digest: digest(digest_payload),
            tolerance,
            samples: None,
            seed: None,
            paths: None,
            dt: None,
            horizon: None,
            checks: Vec::new(),
            sections: Vec::new(),
            experiments: Vec::new(),
            flow: None,
            convention: None,
            exit_code: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn digest(payload: &str) -> String {
    let hash = Sha256::digest(payload.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}
