//! Euler-Maruyama Brownian motion on a chart and the second-order
//! integral operations taken along its paths.

use super::{
    FirstOrderForm, KahanSum, PathFlag, PathIncrementSeries, PathStream, SecondOrderForm,
    StochError, SymmetricBilinear,
};
use crate::expr::{Dual2, ScalarExpr};
use crate::geometry::{Chart, Connection, GeomError, Metric, Point};
use nalgebra::Cholesky;
use rayon::prelude::*;

/// Simulate `count` Brownian paths of the metric `g` started at `x0`,
/// discretized by Euler-Maruyama with the Levi-Civita Ito drift
/// `b^i = -½ g^{jk} Γ^i_{jk}` and diffusion factor the Cholesky factor of
/// `g^{-1}`. Quadratic-variation increments are the compensator
/// `g^{ij}(X_k) dt`. Path `p` draws its noise from the counter stream
/// keyed by `(seed, p)`, so results are independent of batching and
/// worker count. Paths that would leave the chart domain are stopped and
/// flagged, as are paths where the metric degenerates.
pub fn brownian_paths(
    metric: &Metric,
    x0: &Point,
    horizon: f64,
    dt: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PathIncrementSeries>, StochError> {
    let n = metric.chart().dim();
    if x0.dim() != n {
        return Err(StochError::Geom(GeomError::DimensionMismatch {
            expected: n,
            got: x0.dim(),
        }));
    }
    if !(dt > 0.0) || horizon < 0.0 {
        return Err(StochError::InvalidHorizon { horizon, dt });
    }
    let ratio = horizon / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(StochError::InvalidHorizon { horizon, dt });
    }
    let steps = steps as usize;
    if !metric.chart().contains(x0) {
        return Err(StochError::StartOutsideDomain {
            point: x0.coords().to_vec(),
        });
    }
    // Surface hard construction problems eagerly rather than flagging
    // every path.
    metric.inverse_at(x0)?;
    let conn = Connection::levi_civita(metric.clone());
    conn.at(x0)?;

    (0..count)
        .into_par_iter()
        .map(|p| Ok(simulate_one(metric, &conn, x0, steps, dt, seed, p as u64)))
        .collect()
}

fn simulate_one(
    metric: &Metric,
    conn: &Connection,
    x0: &Point,
    steps: usize,
    dt: f64,
    seed: u64,
    path: u64,
) -> PathIncrementSeries {
    let n = x0.dim();
    let stream = PathStream::new(seed, path);
    let sqrt_dt = dt.sqrt();
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut dx = Vec::with_capacity(steps);
    let mut qv = Vec::with_capacity(steps);
    states.push(x0.clone());
    times.push(0.0);
    let mut flag = PathFlag::Clean;
    let mut x = x0.clone();
    for k in 0..steps {
        let step_data = (|| -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
            let ginv = metric.inverse_at(&x).ok()?;
            let chol = Cholesky::new(ginv.clone())?;
            let gamma = conn.at(&x).ok()?;
            let mut incr = vec![0.0; n];
            for i in 0..n {
                let mut drift = 0.0;
                for j in 0..n {
                    for l in 0..n {
                        drift += ginv[(j, l)] * gamma.get(i, j, l);
                    }
                }
                incr[i] = -0.5 * drift * dt;
            }
            let noise: Vec<f64> = (0..n).map(|j| stream.normal(k as u64, j as u64)).collect();
            let l = chol.l();
            for i in 0..n {
                let mut diff = 0.0;
                for j in 0..=i {
                    diff += l[(i, j)] * noise[j];
                }
                incr[i] += diff * sqrt_dt;
            }
            let q: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| ginv[(i, j)] * dt).collect())
                .collect();
            Some((incr, q))
        })();
        let (incr, q) = match step_data {
            Some(d) => d,
            None => {
                flag = PathFlag::Singular(k);
                break;
            }
        };
        let next = Point(
            x.coords()
                .iter()
                .zip(&incr)
                .map(|(a, b)| a + b)
                .collect(),
        );
        if !metric.chart().contains(&next) {
            flag = PathFlag::Boundary(k);
            break;
        }
        dx.push(incr);
        qv.push(q);
        times.push((k + 1) as f64 * dt);
        states.push(next.clone());
        x = next;
    }
    PathIncrementSeries {
        times,
        states,
        dx,
        qv,
        flag,
    }
}

/// One step pushed through a smooth map given by component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct PushedStep {
    /// Image of the left point.
    pub y: Vec<f64>,
    /// `dY^a = ∂_i F^a dX^i + ½ ∂_ij F^a d[X^i,X^j]`.
    pub dy: Vec<f64>,
    /// `d[Y^a,Y^b] = ∂_i F^a ∂_j F^b d[X^i,X^j]`, kept symmetric.
    pub qv: Vec<Vec<f64>>,
}

/// Push one increment step through the map `f` (components over `chart`).
pub fn second_order_pushforward(
    chart: &Chart,
    f: &[ScalarExpr],
    x: &Point,
    dx: &[f64],
    qv: &[Vec<f64>],
) -> Result<PushedStep, StochError> {
    let n = chart.dim();
    let m = f.len();
    if x.dim() != n || dx.len() != n || qv.len() != n || qv.iter().any(|r| r.len() != n) {
        return Err(StochError::Geom(GeomError::DimensionMismatch {
            expected: n,
            got: dx.len(),
        }));
    }
    let compiled = f
        .iter()
        .map(|e| chart.compile(e))
        .collect::<Result<Vec<_>, GeomError>>()?;
    let seeds = chart.seed(x);
    let mut y = vec![0.0; m];
    let mut grad = vec![vec![0.0; n]; m];
    for (a, c) in compiled.iter().enumerate() {
        let r = c.eval(&seeds)?;
        y[a] = r.v;
        grad[a][..n].copy_from_slice(&r.d[..n]);
    }
    let mut hess = vec![vec![vec![0.0; n]; n]; m];
    for i in 0..n {
        for j in i..n {
            let args: Vec<Dual2> = x
                .coords()
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual2::seeded(v, k == i, k == j))
                .collect();
            for (a, c) in compiled.iter().enumerate() {
                let r = c.eval(&args)?;
                hess[a][i][j] = r.dij;
                hess[a][j][i] = r.dij;
            }
        }
    }
    let mut dy = vec![0.0; m];
    for a in 0..m {
        let mut acc = 0.0;
        for i in 0..n {
            acc += grad[a][i] * dx[i];
            for j in 0..n {
                acc += 0.5 * hess[a][i][j] * qv[i][j];
            }
        }
        dy[a] = acc;
    }
    let mut qv_y = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += grad[a][i] * grad[b][j] * qv[i][j];
                }
            }
            qv_y[a][b] = acc;
            qv_y[b][a] = acc;
        }
    }
    Ok(PushedStep { y, dy, qv: qv_y })
}

fn check_path_dim(dim: usize, path: &PathIncrementSeries) -> Result<(), StochError> {
    if path.dim() != dim {
        return Err(StochError::Geom(GeomError::DimensionMismatch {
            expected: dim,
            got: path.dim(),
        }));
    }
    Ok(())
}

/// Left-point integral of a second-order form along a path:
/// `Σ_k θ_i(X_k) dX^i_k + θ_ij(X_k) d[X^i,X^j]_k`.
pub fn integrate_second_order_form(
    form: &SecondOrderForm,
    path: &PathIncrementSeries,
) -> Result<f64, StochError> {
    check_path_dim(form.chart().dim(), path)?;
    let n = path.dim();
    let mut acc = KahanSum::default();
    for k in 0..path.steps() {
        let x = &path.states[k];
        let th1 = form.eval_first(x)?;
        let th2 = form.eval_second(x)?;
        for i in 0..n {
            acc.add(th1[i] * path.dx[k][i]);
            for j in 0..n {
                acc.add(th2[i][j] * path.qv[k][i][j]);
            }
        }
    }
    Ok(acc.value())
}

/// Quadratic integral `Σ_k b_ij(X_k) d[X^i,X^j]_k`. For Brownian paths
/// this equals the time integral of `tr_g b` exactly, because the
/// quadratic increments are the compensator.
pub fn quadratic_integral(
    b: &SymmetricBilinear,
    path: &PathIncrementSeries,
) -> Result<f64, StochError> {
    check_path_dim(b.chart().dim(), path)?;
    let n = path.dim();
    let mut acc = KahanSum::default();
    for k in 0..path.steps() {
        let bm = b.eval_at(&path.states[k])?;
        for i in 0..n {
            for j in 0..n {
                acc.add(bm[i][j] * path.qv[k][i][j]);
            }
        }
    }
    Ok(acc.value())
}

/// Ito integral of a first-order form against the connection:
/// `Σ_k θ_m(X_k)(dX^m_k + ½ Γ^m_ij(X_k) d[X^i,X^j]_k)`.
pub fn ito_integral(
    theta: &FirstOrderForm,
    conn: &Connection,
    path: &PathIncrementSeries,
) -> Result<f64, StochError> {
    check_path_dim(theta.chart().dim(), path)?;
    check_path_dim(conn.chart().dim(), path)?;
    let n = path.dim();
    let mut acc = KahanSum::default();
    for k in 0..path.steps() {
        let x = &path.states[k];
        let th = theta.eval_at(x)?;
        let gamma = conn.at(x)?;
        for m in 0..n {
            let mut corr = 0.0;
            for i in 0..n {
                for j in 0..n {
                    corr += gamma.get(m, i, j) * path.qv[k][i][j];
                }
            }
            acc.add(th[m] * (path.dx[k][m] + 0.5 * corr));
        }
    }
    Ok(acc.value())
}
