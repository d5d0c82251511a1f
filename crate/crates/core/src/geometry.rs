//! Chart-level Riemannian and affine geometry: metrics, symmetric
//! connections (Levi-Civita or user tables), covariant derivatives, Lie
//! brackets, and orthonormal frames. Everything is evaluated pointwise on a
//! single coordinate patch; invariants are checked at deterministic
//! quasi-random sample points of the chart domain.

use crate::expr::{CompiledExpr, Dual, ExprError, ScalarExpr, MAX_SEEDS};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric is not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("metric entry ({i},{j}) is not symmetric at {point:?} (deviation {deviation:e})")]
    NonSymmetricMetric {
        i: usize,
        j: usize,
        point: Vec<f64>,
        deviation: f64,
    },
    #[error(
        "connection coefficient ({k};{i},{j}) is not symmetric at {point:?} (deviation {deviation:e})"
    )]
    NonSymmetricConnection {
        k: usize,
        i: usize,
        j: usize,
        point: Vec<f64>,
        deviation: f64,
    },
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate charts do not match")]
    ChartMismatch,
    #[error("duplicate coordinate name `{name}`")]
    DuplicateCoordinate { name: String },
    #[error("coordinate name `{name}` is reserved by the expression language")]
    ReservedCoordinate { name: String },
    #[error("coordinate `{name}`: interval [{lo}, {hi}] is empty")]
    EmptyInterval { name: String, lo: f64, hi: f64 },
    #[error("chart has {dim} coordinates; at most {max} are supported")]
    TooManyCoordinates { dim: usize, max: usize },
}

/// Quasi-random sequence bases, one per coordinate slot.
const HALTON_BASES: [u64; MAX_SEEDS] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Fraction of each domain interval kept clear at both ends when sampling.
const SAMPLE_INSET: f64 = 0.05;

/// Default number of validation/sample points per chart.
pub const DEFAULT_SAMPLES: usize = 64;

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// A coordinate patch: ordered coordinate names plus a finite open box used
/// for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    domain: Vec<(f64, f64)>,
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new(names: &[&str], domain: &[(f64, f64)]) -> Result<Chart, GeomError> {
        if names.len() != domain.len() {
            return Err(GeomError::DimensionMismatch {
                expected: names.len(),
                got: domain.len(),
            });
        }
        if names.is_empty() || names.len() > MAX_SEEDS {
            return Err(GeomError::TooManyCoordinates {
                dim: names.len(),
                max: MAX_SEEDS,
            });
        }
        for (k, name) in names.iter().enumerate() {
            if !is_identifier(name)
                || *name == "pi"
                || crate::expr::parse(&format!("{name}(0)")).is_ok()
            {
                return Err(GeomError::ReservedCoordinate {
                    name: name.to_string(),
                });
            }
            if names[..k].contains(name) {
                return Err(GeomError::DuplicateCoordinate {
                    name: name.to_string(),
                });
            }
        }
        for (name, &(lo, hi)) in names.iter().zip(domain) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(GeomError::EmptyInterval {
                    name: name.to_string(),
                    lo,
                    hi,
                });
            }
        }
        Ok(Chart {
            names: names.iter().map(|s| s.to_string()).collect(),
            domain: domain.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Deterministic interior sample points: a Halton sequence mapped into
    /// the domain box, inset from the boundary.
    pub fn sample_points(&self, count: usize) -> Vec<Point> {
        (1..=count as u64)
            .map(|idx| {
                Point(
                    self.domain
                        .iter()
                        .enumerate()
                        .map(|(d, &(lo, hi))| {
                            let u = halton(idx, HALTON_BASES[d]);
                            lo + (hi - lo) * (SAMPLE_INSET + (1.0 - 2.0 * SAMPLE_INSET) * u)
                        })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.0.len() == self.dim()
            && p.0
                .iter()
                .zip(&self.domain)
                .all(|(&x, &(lo, hi))| x > lo && x < hi)
    }

    /// Compile an expression against this chart's coordinate names.
    pub fn compile(&self, expr: &ScalarExpr) -> Result<CompiledExpr, GeomError> {
        Ok(CompiledExpr::compile(expr, &self.names)?)
    }

    /// Dual arguments seeded one lane per coordinate.
    pub fn seed(&self, p: &Point) -> Vec<Dual> {
        p.0.iter()
            .enumerate()
            .map(|(lane, &v)| Dual::seeded(v, lane))
            .collect()
    }
}

/// A coordinate tuple.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: &[f64]) -> Point {
        Point(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// A tangent vector attached to a point, in coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub at: Point,
    pub comps: Vec<f64>,
}

/// First-order data of a vector field at a point: components and their
/// coordinate Jacobian `jac[c][a] = ∂_a F^c`.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub comps: Vec<f64>,
    pub jac: Vec<Vec<f64>>,
}

impl FieldJet {
    pub fn zero(dim: usize) -> FieldJet {
        FieldJet {
            comps: vec![0.0; dim],
            jac: vec![vec![0.0; dim]; dim],
        }
    }
}

/// Riemannian metric in chart components. Only the upper triangle is
/// stored; evaluation mirrors it, so computed matrices are symmetric
/// bit-for-bit. Symmetry of the supplied entries and positive definiteness
/// are checked at construction over the chart's sample points.
#[derive(Debug, Clone)]
pub struct Metric {
    chart: Chart,
    // Row-major upper triangle, index (i,j) with i <= j.
    entries: Vec<ScalarExpr>,
    compiled: Vec<CompiledExpr>,
}

fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < dim);
    // Offset of row i into the packed triangle, then the column.
    i * dim - i * (i + 1) / 2 + j
}

impl Metric {
    pub fn new(chart: Chart, g: Vec<Vec<ScalarExpr>>) -> Result<Metric, GeomError> {
        let n = chart.dim();
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(GeomError::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        // Symmetry of the supplied entries, checked as evaluated functions.
        let full: Vec<Vec<CompiledExpr>> = g
            .iter()
            .map(|row| row.iter().map(|e| chart.compile(e)).collect())
            .collect::<Result<_, _>>()?;
        for p in chart.sample_points(DEFAULT_SAMPLES) {
            for i in 0..n {
                for j in i + 1..n {
                    let a = full[i][j].eval(p.coords())?;
                    let b = full[j][i].eval(p.coords())?;
                    if (a - b).abs() > 1e-14 {
                        return Err(GeomError::NonSymmetricMetric {
                            i,
                            j,
                            point: p.0.clone(),
                            deviation: (a - b).abs(),
                        });
                    }
                }
            }
        }
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        let mut compiled = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(g[i][j].clone());
                compiled.push(chart.compile(&g[i][j])?);
            }
        }
        let metric = Metric {
            chart,
            entries,
            compiled,
        };
        for p in metric.chart.sample_points(DEFAULT_SAMPLES) {
            metric.cholesky_at(&p)?;
        }
        Ok(metric)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[upper_index(self.chart.dim(), i, j)]
    }

    /// The metric matrix at a point (exactly symmetric).
    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>, GeomError> {
        let n = self.chart.dim();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.compiled[upper_index(n, i, j)].eval(p.coords())?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Metric matrix plus its coordinate partials `dg[l]` at a point.
    pub fn jet(&self, p: &Point) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>), GeomError> {
        let n = self.chart.dim();
        let args = self.chart.seed(p);
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let v = self.compiled[upper_index(n, i, j)].eval(&args)?;
                g[(i, j)] = v.v;
                g[(j, i)] = v.v;
                for (l, dgl) in dg.iter_mut().enumerate() {
                    dgl[(i, j)] = v.d[l];
                    dgl[(j, i)] = v.d[l];
                }
            }
        }
        Ok((g, dg))
    }

    fn cholesky_at(&self, p: &Point) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, GeomError> {
        let g = self.eval(p)?;
        nalgebra::Cholesky::new(g).ok_or(GeomError::SingularMetric {
            point: p.0.clone(),
        })
    }

    /// Inverse metric at a point, mirrored to be exactly symmetric.
    pub fn inverse_at(&self, p: &Point) -> Result<DMatrix<f64>, GeomError> {
        let mut inv = self.cholesky_at(p)?.inverse();
        let n = inv.nrows();
        for i in 0..n {
            for j in i + 1..n {
                inv[(j, i)] = inv[(i, j)];
            }
        }
        Ok(inv)
    }

    pub fn inner(&self, p: &Point, u: &[f64], v: &[f64]) -> Result<f64, GeomError> {
        let g = self.eval(p)?;
        let mut acc = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                acc += g[(i, j)] * u[i] * v[j];
            }
        }
        Ok(acc)
    }

    pub fn norm(&self, p: &Point, u: &[f64]) -> Result<f64, GeomError> {
        Ok(self.inner(p, u, u)?.max(0.0).sqrt())
    }
}

/// Christoffel coefficients `Γ^k_ij` evaluated at one point.
#[derive(Debug, Clone)]
pub struct Christoffel {
    dim: usize,
    vals: Vec<f64>,
}

impl Christoffel {
    pub fn zero(dim: usize) -> Christoffel {
        Christoffel {
            dim,
            vals: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.vals[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.vals[(k * self.dim + i) * self.dim + j] = v;
    }

    /// Contraction `Γ(u, v)^k = Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            out[k] = acc;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    LeviCivitaDerived,
    UserSupplied,
}

#[derive(Debug, Clone)]
enum ConnKind {
    LeviCivita(Metric),
    // Upper triangle in (i,j) per k: index k * n(n+1)/2 + upper_index(i,j).
    Table {
        chart: Chart,
        compiled: Vec<CompiledExpr>,
    },
    /// A pointwise offset added to one coefficient slot (and its mirror),
    /// used to manufacture controlled violations of structural properties.
    Perturbed {
        base: Box<Connection>,
        k: usize,
        i: usize,
        j: usize,
        eps: f64,
    },
    /// Levi-Civita of a metric on the leading coordinates, extended by the
    /// flat connection on the remaining ones (no mixed coefficients).
    Product { base: Metric, total: Chart },
}

/// A symmetric affine connection on a chart.
#[derive(Debug, Clone)]
pub struct Connection {
    kind: ConnKind,
}

impl Connection {
    pub fn levi_civita(metric: Metric) -> Connection {
        Connection {
            kind: ConnKind::LeviCivita(metric),
        }
    }

    /// Build from a user-supplied coefficient table `gamma[k][i][j]`.
    /// Rejects tables that are not symmetric in (i,j) at the chart's sample
    /// points.
    pub fn from_table(chart: Chart, gamma: &[Vec<Vec<ScalarExpr>>]) -> Result<Connection, GeomError> {
        let n = chart.dim();
        if gamma.len() != n
            || gamma
                .iter()
                .any(|m| m.len() != n || m.iter().any(|row| row.len() != n))
        {
            return Err(GeomError::DimensionMismatch {
                expected: n,
                got: gamma.len(),
            });
        }
        let full: Vec<Vec<Vec<CompiledExpr>>> = gamma
            .iter()
            .map(|m| {
                m.iter()
                    .map(|row| row.iter().map(|e| chart.compile(e)).collect())
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        for p in chart.sample_points(DEFAULT_SAMPLES) {
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let a = full[k][i][j].eval(p.coords())?;
                        let b = full[k][j][i].eval(p.coords())?;
                        if (a - b).abs() > 1e-12 {
                            return Err(GeomError::NonSymmetricConnection {
                                k,
                                i,
                                j,
                                point: p.0.clone(),
                                deviation: (a - b).abs(),
                            });
                        }
                    }
                }
            }
        }
        let mut compiled = Vec::with_capacity(n * n * (n + 1) / 2);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    compiled.push(chart.compile(&gamma[k][i][j])?);
                }
            }
        }
        Ok(Connection {
            kind: ConnKind::Table { chart, compiled },
        })
    }

    /// The flat connection (all coefficients zero).
    pub fn flat(chart: Chart) -> Connection {
        let n = chart.dim();
        let zero = vec![vec![vec![ScalarExpr::Num(0.0); n]; n]; n];
        Connection::from_table(chart, &zero).expect("zero table is symmetric")
    }

    /// Levi-Civita connection of `base` on the first coordinates of `total`,
    /// extended by zero coefficients on the rest. The base chart's names
    /// must be a prefix of the total chart's.
    pub fn product(base: Metric, total: Chart) -> Result<Connection, GeomError> {
        let n = base.chart().dim();
        if n >= total.dim()
            || base.chart().names() != &total.names()[..n]
        {
            return Err(GeomError::ChartMismatch);
        }
        Ok(Connection {
            kind: ConnKind::Product { base, total },
        })
    }

    /// A copy with `eps` added to the coefficient `Γ^k_ij` (and `Γ^k_ji`).
    pub fn with_offset(&self, k: usize, i: usize, j: usize, eps: f64) -> Connection {
        Connection {
            kind: ConnKind::Perturbed {
                base: Box::new(self.clone()),
                k,
                i,
                j,
                eps,
            },
        }
    }

    pub fn chart(&self) -> &Chart {
        match &self.kind {
            ConnKind::LeviCivita(m) => m.chart(),
            ConnKind::Table { chart, .. } => chart,
            ConnKind::Perturbed { base, .. } => base.chart(),
            ConnKind::Product { total, .. } => total,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &self.kind {
            ConnKind::LeviCivita(_) => Provenance::LeviCivitaDerived,
            ConnKind::Table { .. } => Provenance::UserSupplied,
            ConnKind::Perturbed { base, .. } => base.provenance(),
            ConnKind::Product { .. } => Provenance::LeviCivitaDerived,
        }
    }

    /// All coefficients at a point; symmetric in (i,j) bit-for-bit.
    pub fn at(&self, p: &Point) -> Result<Christoffel, GeomError> {
        match &self.kind {
            ConnKind::LeviCivita(metric) => levi_civita_at(metric, p),
            ConnKind::Table { chart, compiled } => {
                let n = chart.dim();
                let stride = n * (n + 1) / 2;
                let mut out = Christoffel::zero(n);
                for k in 0..n {
                    for i in 0..n {
                        for j in i..n {
                            let v = compiled[k * stride + upper_index(n, i, j)].eval(p.coords())?;
                            out.set(k, i, j, v);
                            out.set(k, j, i, v);
                        }
                    }
                }
                Ok(out)
            }
            ConnKind::Perturbed { base, k, i, j, eps } => {
                let mut out = base.at(p)?;
                let v = out.get(*k, *i, *j) + eps;
                out.set(*k, *i, *j, v);
                if i != j {
                    out.set(*k, *j, *i, v);
                }
                Ok(out)
            }
            ConnKind::Product { base, total } => {
                let n = base.chart().dim();
                let bp = Point::new(&p.coords()[..n]);
                let bg = levi_civita_at(base, &bp)?;
                let mut out = Christoffel::zero(total.dim());
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            out.set(k, i, j, bg.get(k, i, j));
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

fn levi_civita_at(metric: &Metric, p: &Point) -> Result<Christoffel, GeomError> {
    let n = metric.chart().dim();
    let (_, dg) = metric.jet(p)?;
    let ginv = metric.inverse_at(p)?;
    let mut out = Christoffel::zero(n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let v = 0.5 * acc;
                out.set(k, i, j, v);
                out.set(k, j, i, v);
            }
        }
    }
    Ok(out)
}

/// A vector field in chart components.
#[derive(Debug, Clone)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<ScalarExpr>,
    compiled: Vec<CompiledExpr>,
}

impl VectorField {
    pub fn new(chart: Chart, comps: Vec<ScalarExpr>) -> Result<VectorField, GeomError> {
        if comps.len() != chart.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: chart.dim(),
                got: comps.len(),
            });
        }
        let compiled = comps
            .iter()
            .map(|e| chart.compile(e))
            .collect::<Result<_, _>>()?;
        Ok(VectorField {
            chart,
            comps,
            compiled,
        })
    }

    /// Constant-coefficient extension of a component tuple.
    pub fn constant(chart: Chart, comps: &[f64]) -> Result<VectorField, GeomError> {
        let exprs = comps.iter().map(|&v| ScalarExpr::Num(v)).collect();
        VectorField::new(chart, exprs)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn eval(&self, p: &Point) -> Result<Tangent, GeomError> {
        let comps = self
            .compiled
            .iter()
            .map(|c| c.eval(p.coords()))
            .collect::<Result<_, _>>()?;
        Ok(Tangent {
            at: p.clone(),
            comps,
        })
    }

    pub fn jet(&self, p: &Point) -> Result<FieldJet, GeomError> {
        let n = self.chart.dim();
        let args = self.chart.seed(p);
        let mut comps = vec![0.0; n];
        let mut jac = vec![vec![0.0; n]; n];
        for (c, compiled) in self.compiled.iter().enumerate() {
            let v = compiled.eval(&args)?;
            comps[c] = v.v;
            jac[c][..n].copy_from_slice(&v.d[..n]);
        }
        Ok(FieldJet { comps, jac })
    }
}

/// `(∇_X Y)(p)` for a connection's coefficients already evaluated at the
/// point: `dir^a ∂_a Y^k + Γ^k_ab dir^a Y^b`.
pub fn covariant_derivative_dir(gamma: &Christoffel, dir: &[f64], y: &FieldJet) -> Vec<f64> {
    let n = gamma.dim();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            acc += dir[a] * y.jac[k][a];
        }
        for a in 0..n {
            for b in 0..n {
                acc += gamma.get(k, a, b) * dir[a] * y.comps[b];
            }
        }
        out[k] = acc;
    }
    out
}

pub fn covariant_derivative(
    conn: &Connection,
    x: &VectorField,
    y: &VectorField,
    p: &Point,
) -> Result<Tangent, GeomError> {
    if x.chart() != conn.chart() || y.chart() != conn.chart() {
        return Err(GeomError::ChartMismatch);
    }
    let dir = x.eval(p)?.comps;
    let yjet = y.jet(p)?;
    let gamma = conn.at(p)?;
    Ok(Tangent {
        at: p.clone(),
        comps: covariant_derivative_dir(&gamma, &dir, &yjet),
    })
}

/// First-order commutator from jets: `[X,Y]^k = X^a ∂_a Y^k − Y^a ∂_a X^k`.
pub fn lie_bracket_jets(x: &FieldJet, y: &FieldJet) -> Vec<f64> {
    let n = x.comps.len();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            acc += x.comps[a] * y.jac[k][a] - y.comps[a] * x.jac[k][a];
        }
        out[k] = acc;
    }
    out
}

pub fn lie_bracket(
    x: &VectorField,
    y: &VectorField,
    p: &Point,
) -> Result<Tangent, GeomError> {
    if x.chart() != y.chart() {
        return Err(GeomError::ChartMismatch);
    }
    Ok(Tangent {
        at: p.clone(),
        comps: lie_bracket_jets(&x.jet(p)?, &y.jet(p)?),
    })
}

/// Gram–Schmidt on the coordinate frame in index order; the result is the
/// deterministic orthonormal frame used everywhere downstream.
pub fn orthonormal_frame(metric: &Metric, p: &Point) -> Result<Vec<Tangent>, GeomError> {
    let n = metric.chart().dim();
    let g = metric.eval(p)?;
    let inner = |u: &[f64], v: &[f64]| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * u[i] * v[j];
            }
        }
        acc
    };
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for e in &frame {
            let c = inner(&v, e);
            for (vk, ek) in v.iter_mut().zip(e) {
                *vk -= c * *ek;
            }
        }
        let n2 = inner(&v, &v);
        if !(n2 > 1e-300) || !n2.is_finite() {
            return Err(GeomError::SingularMetric {
                point: p.0.clone(),
            });
        }
        let s = 1.0 / n2.sqrt();
        for vk in v.iter_mut() {
            *vk *= s;
        }
        frame.push(v);
    }
    Ok(frame
        .into_iter()
        .map(|comps| Tangent {
            at: p.clone(),
            comps,
        })
        .collect())
}
