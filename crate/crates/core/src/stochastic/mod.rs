//! Second-order stochastic calculus at desk scale: simulated Brownian
//! motion on a chart, second-order increments and pushforwards, integrals
//! of second-order forms, and Monte-Carlo experiments that probe the
//! transfer identities between a section's full and vertical data along
//! diffusions.
//!
//! Quadratic-variation increments are recorded as the compensator
//! `g^{ij}dt` rather than realized products of Gaussian increments, so
//! identities defined through `d[X,X]` hold at machine precision per path
//! and Monte-Carlo error is confined to the genuinely statistical
//! quantities.

mod brownian;
mod experiments;
mod rng;

pub use brownian::{
    brownian_paths, integrate_second_order_form, ito_integral, quadratic_integral,
    second_order_pushforward, PushedStep,
};
pub use experiments::{
    pathwise_form_transfer_experiment, tension_transfer_experiment, vertical_form,
    ExperimentReport,
};
pub use rng::PathStream;

use crate::expr::{CompiledExpr, ExprError, ScalarExpr};
use crate::geometry::{Chart, GeomError, Point};
use crate::sections::SectError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Sect(#[from] SectError),
    #[error("invalid horizon: T = {horizon}, dt = {dt} (need dt > 0, T >= 0, T an integer multiple of dt)")]
    InvalidHorizon { horizon: f64, dt: f64 },
    #[error("form is not vertical: max |theta(H_i)| over samples is {max:.3e}")]
    NonVerticalForm { max: f64 },
    #[error("start point {point:?} lies outside the chart domain")]
    StartOutsideDomain { point: Vec<f64> },
    #[error("second-order coefficients must be symmetric; entries ({i},{j}) and ({j},{i}) differ")]
    AsymmetricCoefficients { i: usize, j: usize },
}

impl From<ExprError> for StochError {
    fn from(e: ExprError) -> StochError {
        StochError::Geom(GeomError::Expr(e))
    }
}

impl From<crate::submersion::SubError> for StochError {
    fn from(e: crate::submersion::SubError) -> StochError {
        StochError::Sect(SectError::Sub(e))
    }
}

/// Why a path ended before the requested horizon, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "step")]
pub enum PathFlag {
    /// Ran to the horizon.
    Clean,
    /// The proposed state left the chart domain at this step; the path is
    /// truncated just before it.
    Boundary(usize),
    /// The metric could not be inverted or factored at this step.
    Singular(usize),
}

/// A simulated path with its first-order and quadratic-variation
/// increments. `times` and `states` have one more entry than `dx` and
/// `qv`; all states lie inside the chart domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathIncrementSeries {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    /// dx[k][i]: increment of X^i over step k.
    pub dx: Vec<Vec<f64>>,
    /// qv[k][i][j]: quadratic-variation increment over step k, the
    /// compensator g^{ij}(X_k) dt. Symmetric positive semidefinite.
    pub qv: Vec<Vec<Vec<f64>>>,
    pub flag: PathFlag,
}

impl PathIncrementSeries {
    pub fn steps(&self) -> usize {
        self.dx.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn final_state(&self) -> &Point {
        self.states.last().expect("paths always hold the start state")
    }

    pub fn is_clean(&self) -> bool {
        self.flag == PathFlag::Clean
    }
}

/// Compensated accumulator for order-independent sums.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    s: f64,
    c: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.s
    }
}

/// First-order form: coefficient expressions `theta_i` over a chart.
#[derive(Debug, Clone)]
pub struct FirstOrderForm {
    chart: Chart,
    comps: Vec<ScalarExpr>,
    compiled: Vec<CompiledExpr>,
}

impl FirstOrderForm {
    pub fn new(chart: &Chart, comps: Vec<ScalarExpr>) -> Result<FirstOrderForm, StochError> {
        if comps.len() != chart.dim() {
            return Err(StochError::Geom(GeomError::DimensionMismatch {
                expected: chart.dim(),
                got: comps.len(),
            }));
        }
        let compiled = comps
            .iter()
            .map(|e| chart.compile(e))
            .collect::<Result<_, GeomError>>()?;
        Ok(FirstOrderForm {
            chart: chart.clone(),
            comps,
            compiled,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn source(&self) -> Vec<String> {
        self.comps.iter().map(|e| e.to_string()).collect()
    }

    pub fn eval_at(&self, p: &Point) -> Result<Vec<f64>, StochError> {
        self.compiled
            .iter()
            .map(|c| Ok(c.eval(p.coords())?))
            .collect()
    }
}

/// Second-order form `theta_i d²x^i + theta_ij dx^i·dx^j` with symmetric
/// second-order coefficients, enforced structurally at construction.
#[derive(Debug, Clone)]
pub struct SecondOrderForm {
    chart: Chart,
    first: Vec<ScalarExpr>,
    second: Vec<Vec<ScalarExpr>>,
    cfirst: Vec<CompiledExpr>,
    csecond: Vec<Vec<CompiledExpr>>,
}

impl SecondOrderForm {
    pub fn new(
        chart: &Chart,
        first: Vec<ScalarExpr>,
        second: Vec<Vec<ScalarExpr>>,
    ) -> Result<SecondOrderForm, StochError> {
        let n = chart.dim();
        if first.len() != n || second.len() != n || second.iter().any(|r| r.len() != n) {
            return Err(StochError::Geom(GeomError::DimensionMismatch {
                expected: n,
                got: first.len().max(second.len()),
            }));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if second[i][j] != second[j][i] {
                    return Err(StochError::AsymmetricCoefficients { i, j });
                }
            }
        }
        let cfirst = first
            .iter()
            .map(|e| chart.compile(e))
            .collect::<Result<_, GeomError>>()?;
        let csecond = second
            .iter()
            .map(|row| row.iter().map(|e| chart.compile(e)).collect())
            .collect::<Result<Vec<Vec<_>>, GeomError>>()?;
        Ok(SecondOrderForm {
            chart: chart.clone(),
            first,
            second,
            cfirst,
            csecond,
        })
    }

    /// Pure first-order form, vanishing second-order coefficients.
    pub fn first_order(chart: &Chart, first: Vec<ScalarExpr>) -> Result<SecondOrderForm, StochError> {
        let n = chart.dim();
        let zeros = vec![vec![ScalarExpr::Num(0.0); n]; n];
        SecondOrderForm::new(chart, first, zeros)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn first(&self) -> &[ScalarExpr] {
        &self.first
    }

    pub fn second(&self) -> &[Vec<ScalarExpr>] {
        &self.second
    }

    pub(crate) fn eval_first(&self, p: &Point) -> Result<Vec<f64>, StochError> {
        self.cfirst.iter().map(|c| Ok(c.eval(p.coords())?)).collect()
    }

    pub(crate) fn eval_second(&self, p: &Point) -> Result<Vec<Vec<f64>>, StochError> {
        self.csecond
            .iter()
            .map(|row| row.iter().map(|c| Ok(c.eval(p.coords())?)).collect())
            .collect()
    }
}

/// Symmetric bilinear field `b_ij` over a chart, for quadratic integrals.
#[derive(Debug, Clone)]
pub struct SymmetricBilinear {
    chart: Chart,
    mat: Vec<Vec<ScalarExpr>>,
    compiled: Vec<Vec<CompiledExpr>>,
}

impl SymmetricBilinear {
    pub fn new(chart: &Chart, mat: Vec<Vec<ScalarExpr>>) -> Result<SymmetricBilinear, StochError> {
        let n = chart.dim();
        if mat.len() != n || mat.iter().any(|r| r.len() != n) {
            return Err(StochError::Geom(GeomError::DimensionMismatch {
                expected: n,
                got: mat.len(),
            }));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if mat[i][j] != mat[j][i] {
                    return Err(StochError::AsymmetricCoefficients { i, j });
                }
            }
        }
        let compiled = mat
            .iter()
            .map(|row| row.iter().map(|e| chart.compile(e)).collect())
            .collect::<Result<Vec<Vec<_>>, GeomError>>()?;
        Ok(SymmetricBilinear {
            chart: chart.clone(),
            mat,
            compiled,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn mat(&self) -> &[Vec<ScalarExpr>] {
        &self.mat
    }

    pub(crate) fn eval_at(&self, p: &Point) -> Result<Vec<Vec<f64>>, StochError> {
        self.compiled
            .iter()
            .map(|row| row.iter().map(|c| Ok(c.eval(p.coords())?)).collect())
            .collect()
    }
}
