//! Monte-Carlo probes of the transfer identities: contracting a vertical
//! form with a section's full versus vertical data along simulated base
//! diffusions and reporting the per-path differences. These are
//! measurements, not assertions — a report states whether the equality
//! held pathwise at the given tolerance, and the difference series is kept
//! so distributional readings stay checkable.

use super::{FirstOrderForm, KahanSum, PathIncrementSeries, StochError};
use crate::geometry::GeomError;
use crate::sections::Section;
use crate::submersion::SubmersionSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerance for the verticality precondition on the contracted form.
const VERTICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub section: Vec<String>,
    pub form: Vec<String>,
    pub paths_requested: usize,
    /// Paths that ran to the horizon and entered the statistics.
    pub paths_used: usize,
    pub censored_fraction: f64,
    pub tolerance: f64,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    /// Per-clean-path difference lhs − rhs, in path order.
    pub differences: Vec<f64>,
    pub mean_difference: f64,
    pub std_error: f64,
    pub max_abs_difference: f64,
    /// The equality held along every clean path at the tolerance.
    pub pathwise_equal: bool,
}

/// The canonical vertical form dual to one fiber direction:
/// `θ^α = dy^α − h^α_i dx^i` on the total chart. It annihilates every
/// lifted horizontal field by construction.
pub fn vertical_form(space: &SubmersionSpace, alpha: usize) -> Result<FirstOrderForm, StochError> {
    let n = space.base_dim();
    let r = space.fiber_dim();
    if alpha >= r {
        return Err(StochError::Geom(GeomError::DimensionMismatch {
            expected: r,
            got: alpha,
        }));
    }
    let mut comps = Vec::with_capacity(n + r);
    for i in 0..n {
        comps.push(crate::expr::ScalarExpr::Neg(Box::new(
            space.lift_exprs()[alpha][i].clone(),
        )));
    }
    for a in 0..r {
        comps.push(crate::expr::ScalarExpr::Num(if a == alpha { 1.0 } else { 0.0 }));
    }
    FirstOrderForm::new(space.total_chart(), comps)
}

/// Check that a form on the total chart kills the lifted frame at sampled
/// points.
fn require_vertical(space: &SubmersionSpace, theta: &FirstOrderForm) -> Result<(), StochError> {
    if theta.chart() != space.total_chart() {
        return Err(StochError::Geom(GeomError::ChartMismatch));
    }
    let n = space.base_dim();
    let r = space.fiber_dim();
    let mut max = 0.0f64;
    for p in space.total_chart().sample_points(32) {
        let ctx = space.eval_at(&p)?;
        let tv = theta.eval_at(&p)?;
        for i in 0..n {
            let mut val = tv[i];
            for a in 0..r {
                val += tv[n + a] * ctx.lift[a][i];
            }
            max = max.max(val.abs());
        }
    }
    if max > VERTICALITY_TOL {
        return Err(StochError::NonVerticalForm { max });
    }
    Ok(())
}

fn check_paths(section: &Section, paths: &[PathIncrementSeries]) -> Result<(), StochError> {
    let n = section.space().base_dim();
    for p in paths {
        if p.dim() != n {
            return Err(StochError::Geom(GeomError::DimensionMismatch {
                expected: n,
                got: p.dim(),
            }));
        }
    }
    Ok(())
}

fn dot(theta: &[f64], v: &[f64]) -> f64 {
    theta.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn assemble_report(
    experiment: &str,
    section: &Section,
    theta: &FirstOrderForm,
    tolerance: f64,
    requested: usize,
    pairs: Vec<Option<(f64, f64)>>,
) -> ExperimentReport {
    let clean: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
    let used = clean.len();
    let mut lhs_sum = KahanSum::default();
    let mut rhs_sum = KahanSum::default();
    let mut differences = Vec::with_capacity(used);
    for &(l, r) in &clean {
        lhs_sum.add(l);
        rhs_sum.add(r);
        differences.push(l - r);
    }
    let denom = used.max(1) as f64;
    let lhs_mean = lhs_sum.value() / denom;
    let rhs_mean = rhs_sum.value() / denom;
    let mean_difference = lhs_mean - rhs_mean;
    let max_abs_difference = differences.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let std_error = if used > 1 {
        let var = differences
            .iter()
            .map(|d| (d - mean_difference).powi(2))
            .sum::<f64>()
            / (used - 1) as f64;
        (var / used as f64).sqrt()
    } else {
        0.0
    };
    ExperimentReport {
        experiment: experiment.to_string(),
        section: section.source(),
        form: theta.source(),
        paths_requested: requested,
        paths_used: used,
        censored_fraction: if requested == 0 {
            0.0
        } else {
            (requested - used) as f64 / requested as f64
        },
        tolerance,
        lhs_mean,
        rhs_mean,
        differences,
        mean_difference,
        std_error,
        max_abs_difference,
        pathwise_equal: max_abs_difference <= tolerance,
    }
}

/// Along each clean path, integrate the quadratic pullbacks
/// `θ(β(∂_i, ∂_j)) d[X^i,X^j]` and `θ(β^v(∂_i, ∂_j)) d[X^i,X^j]` and
/// compare: the transfer of second-order pushforward data through a
/// vertical form.
pub fn pathwise_form_transfer_experiment(
    section: &Section,
    theta: &FirstOrderForm,
    paths: &[PathIncrementSeries],
    tolerance: f64,
) -> Result<ExperimentReport, StochError> {
    require_vertical(section.space(), theta)?;
    check_paths(section, paths)?;
    let n = section.space().base_dim();
    let pairs = paths
        .par_iter()
        .map(|p| -> Result<Option<(f64, f64)>, StochError> {
            if !p.is_clean() {
                return Ok(None);
            }
            let mut lhs = KahanSum::default();
            let mut rhs = KahanSum::default();
            for k in 0..p.steps() {
                let pd = section.point_data(&p.states[k])?;
                let tv = theta.eval_at(&pd.ctx.point)?;
                for i in 0..n {
                    for j in 0..n {
                        let w = p.qv[k][i][j];
                        if w != 0.0 {
                            lhs.add(w * dot(&tv, &pd.beta(i, j)));
                            rhs.add(w * dot(&tv, &pd.vertical_integrand(section, i, j)));
                        }
                    }
                }
            }
            Ok(Some((lhs.value(), rhs.value())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(
        "pathwise-form-transfer",
        section,
        theta,
        tolerance,
        paths.len(),
        pairs,
    ))
}

/// Along each clean path, integrate `θ(τ_σ)` and `θ(τ_σ^v)` against time
/// and compare the two line integrals.
pub fn tension_transfer_experiment(
    section: &Section,
    theta: &FirstOrderForm,
    paths: &[PathIncrementSeries],
    tolerance: f64,
) -> Result<ExperimentReport, StochError> {
    require_vertical(section.space(), theta)?;
    check_paths(section, paths)?;
    let pairs = paths
        .par_iter()
        .map(|p| -> Result<Option<(f64, f64)>, StochError> {
            if !p.is_clean() {
                return Ok(None);
            }
            let mut lhs = KahanSum::default();
            let mut rhs = KahanSum::default();
            for k in 0..p.steps() {
                let x = &p.states[k];
                let dt = p.times[k + 1] - p.times[k];
                let (v, h) = section.tension(x)?;
                let full: Vec<f64> =
                    v.comps.iter().zip(&h.comps).map(|(a, b)| a + b).collect();
                let tau_v = section.tension_v(x)?;
                let tv = theta.eval_at(&v.at)?;
                lhs.add(dt * dot(&tv, &full));
                rhs.add(dt * dot(&tv, &tau_v.comps));
            }
            Ok(Some((lhs.value(), rhs.value())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(
        "tension-transfer",
        section,
        theta,
        tolerance,
        paths.len(),
        pairs,
    ))
}
