//! Shared report structures. Every verification produces a serializable
//! record carrying the tolerance it was judged at, the residuals it
//! measured, and where the worst sample sat, so downstream consumers (CLI,
//! test suites) never re-derive pass/fail logic.

use serde::{Deserialize, Serialize};

/// Options shared by the structural checks.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub tolerance: f64,
    pub samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tolerance: 1e-8,
            samples: crate::geometry::DEFAULT_SAMPLES,
        }
    }
}

/// One named residual family within a check (e.g. one of the three
/// conditions of a composite check), with its extremes over the sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualPart {
    pub name: String,
    pub max: f64,
    pub min: f64,
    pub worst_point: Vec<f64>,
}

impl ResidualPart {
    pub fn new(name: &str) -> ResidualPart {
        ResidualPart {
            name: name.to_string(),
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
            worst_point: Vec::new(),
        }
    }

    pub fn record(&mut self, value: f64, point: &[f64]) {
        if value > self.max {
            self.max = value;
            self.worst_point = point.to_vec();
        }
        if value < self.min {
            self.min = value;
        }
    }

    /// Merge two accumulators (order-independent max/min reduction).
    pub fn merge(mut self, other: ResidualPart) -> ResidualPart {
        debug_assert_eq!(self.name, other.name);
        if other.max > self.max {
            self.max = other.max;
            self.worst_point = other.worst_point;
        }
        if other.min < self.min {
            self.min = other.min;
        }
        self
    }
}

/// Outcome of one structural check over a sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub tolerance: f64,
    pub samples: usize,
    pub max_residual: f64,
    pub parts: Vec<ResidualPart>,
    pub passed: bool,
}

impl CheckReport {
    pub fn from_parts(
        check: &str,
        opts: &CheckOptions,
        parts: Vec<ResidualPart>,
    ) -> CheckReport {
        let max_residual = parts.iter().map(|p| p.max).fold(0.0, f64::max);
        CheckReport {
            check: check.to_string(),
            tolerance: opts.tolerance,
            samples: opts.samples,
            max_residual,
            parts,
            passed: max_residual <= opts.tolerance,
        }
    }

    pub fn part(&self, name: &str) -> Option<&ResidualPart> {
        self.parts.iter().find(|p| p.name == name)
    }
}
