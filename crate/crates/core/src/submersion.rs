//! Submersions in adapted coordinates: the total space carries the base
//! coordinates first and fiber coordinates last, the horizontal distribution
//! is given by lift coefficients `h^α_i`, and the fundamental tensors T and
//! A measure how that distribution sits relative to the total connection.
//!
//! Everything here is pointwise: a [`PointContext`] caches the connection
//! coefficients and the lift jet at one point, and the tensor operations are
//! small contractions on top of it.

use crate::expr::{CompiledExpr, ExprError, ScalarExpr};
use crate::geometry::{
    covariant_derivative_dir, lie_bracket_jets, Chart, Christoffel, Connection, FieldJet,
    GeomError, Metric, Point, Tangent, VectorField,
};
use crate::report::{CheckOptions, CheckReport, ResidualPart};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("chart is not adapted: {why}")]
    NotAdapted { why: String },
    #[error("tangent is based at {expected:?} but the point projects to {got:?}")]
    BasePointMismatch { expected: Vec<f64>, got: Vec<f64> },
    #[error("fiber metric block is singular or ill-conditioned near {point:?}")]
    SingularFiberBlock { point: Vec<f64> },
    #[error("fiber dimension {dim} exceeds the closed-form inversion limit {max}")]
    FiberDimTooLarge { dim: usize, max: usize },
}

impl From<ExprError> for SubError {
    fn from(e: ExprError) -> SubError {
        SubError::Geom(GeomError::Expr(e))
    }
}

/// A submersion `(x, y) ↦ x` of one chart onto a prefix of its coordinates,
/// together with a horizontal distribution spanned by
/// `H_i = ∂_i + h^α_i ∂_{y^α}` and a symmetric connection on the total
/// space. The base carries its own metric (used for its Levi-Civita
/// connection and for traces downstream).
#[derive(Debug, Clone)]
pub struct SubmersionSpace {
    base_metric: Metric,
    base_conn: Connection,
    total: Chart,
    // lift[a][i] is the coefficient of ∂_{y^a} in the lift of ∂_i.
    lift_exprs: Vec<Vec<ScalarExpr>>,
    lift_compiled: Vec<Vec<CompiledExpr>>,
    conn: Connection,
}

/// Evaluated data at one total-space point: connection coefficients, lift
/// values, and lift first derivatives `lift_d[a][i][c] = ∂_c h^a_i`.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub point: Point,
    pub gamma: Christoffel,
    pub lift: Vec<Vec<f64>>,
    pub lift_d: Vec<Vec<Vec<f64>>>,
    n: usize,
    r: usize,
}

/// Vertical and horizontal projector matrices at a point, acting on
/// coordinate components by left multiplication.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub at: Point,
    pub h: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

fn enorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SubmersionSpace {
    pub fn new(
        base_metric: Metric,
        total: Chart,
        lift: Vec<Vec<ScalarExpr>>,
        conn: Connection,
    ) -> Result<SubmersionSpace, SubError> {
        let n = base_metric.chart().dim();
        let nr = total.dim();
        if nr <= n {
            return Err(SubError::NotAdapted {
                why: format!("total chart has dimension {nr}, base has {n}"),
            });
        }
        let r = nr - n;
        if base_metric.chart().names() != &total.names()[..n] {
            return Err(SubError::NotAdapted {
                why: "base coordinates are not a prefix of the total chart".into(),
            });
        }
        if base_metric.chart().domain() != &total.domain()[..n] {
            return Err(SubError::NotAdapted {
                why: "base domain differs from the leading total-chart intervals".into(),
            });
        }
        if conn.chart() != &total {
            return Err(SubError::NotAdapted {
                why: "connection lives on a different chart".into(),
            });
        }
        if lift.len() != r || lift.iter().any(|row| row.len() != n) {
            return Err(SubError::Geom(GeomError::DimensionMismatch {
                expected: r,
                got: lift.len(),
            }));
        }
        let lift_compiled = lift
            .iter()
            .map(|row| row.iter().map(|e| total.compile(e)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let base_conn = Connection::levi_civita(base_metric.clone());
        Ok(SubmersionSpace {
            base_metric,
            base_conn,
            total,
            lift_exprs: lift,
            lift_compiled,
            conn,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_metric.chart().dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.total.dim() - self.base_dim()
    }

    pub fn total_dim(&self) -> usize {
        self.total.dim()
    }

    pub fn base_metric(&self) -> &Metric {
        &self.base_metric
    }

    pub fn base_chart(&self) -> &Chart {
        self.base_metric.chart()
    }

    /// Levi-Civita connection of the base metric.
    pub fn base_connection(&self) -> &Connection {
        &self.base_conn
    }

    pub fn total_chart(&self) -> &Chart {
        &self.total
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn lift_exprs(&self) -> &[Vec<ScalarExpr>] {
        &self.lift_exprs
    }

    /// Same space with a different total connection (used to build
    /// deliberately broken variants).
    pub fn with_connection(&self, conn: Connection) -> Result<SubmersionSpace, SubError> {
        SubmersionSpace::new(
            self.base_metric.clone(),
            self.total.clone(),
            self.lift_exprs.clone(),
            conn,
        )
    }

    /// The submersion itself: truncation to the base coordinates.
    pub fn project_point(&self, p: &Point) -> Point {
        Point::new(&p.coords()[..self.base_dim()])
    }

    pub fn sample_points(&self, count: usize) -> Vec<Point> {
        self.total.sample_points(count)
    }

    /// Evaluate connection coefficients and the lift jet at `p`.
    pub fn eval_at(&self, p: &Point) -> Result<PointContext, SubError> {
        let n = self.base_dim();
        let r = self.fiber_dim();
        let nr = self.total_dim();
        if p.dim() != nr {
            return Err(SubError::Geom(GeomError::DimensionMismatch {
                expected: nr,
                got: p.dim(),
            }));
        }
        let gamma = self.conn.at(p)?;
        let args = self.total.seed(p);
        let mut lift = vec![vec![0.0; n]; r];
        let mut lift_d = vec![vec![vec![0.0; nr]; n]; r];
        for a in 0..r {
            for i in 0..n {
                let d = self.lift_compiled[a][i].eval(&args)?;
                lift[a][i] = d.v;
                lift_d[a][i][..nr].copy_from_slice(&d.d[..nr]);
            }
        }
        Ok(PointContext {
            point: p.clone(),
            gamma,
            lift,
            lift_d,
            n,
            r,
        })
    }

    /// Jet of the horizontal coordinate field `H_i = ∂_i + h^α_i ∂_{y^α}`.
    pub fn h_jet(&self, ctx: &PointContext, i: usize) -> FieldJet {
        let nr = ctx.n + ctx.r;
        let mut jet = FieldJet::zero(nr);
        jet.comps[i] = 1.0;
        for a in 0..ctx.r {
            jet.comps[ctx.n + a] = ctx.lift[a][i];
            jet.jac[ctx.n + a][..nr].copy_from_slice(&ctx.lift_d[a][i][..nr]);
        }
        jet
    }

    /// Jet of the vertical coordinate field `∂_{y^a}` (constant).
    pub fn v_jet(&self, ctx: &PointContext, a: usize) -> FieldJet {
        let nr = ctx.n + ctx.r;
        let mut jet = FieldJet::zero(nr);
        jet.comps[ctx.n + a] = 1.0;
        jet
    }

    /// Split a tangent vector into (horizontal, vertical) components.
    pub fn project(&self, ctx: &PointContext, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nr = ctx.n + ctx.r;
        let mut hu = vec![0.0; nr];
        let mut vu = vec![0.0; nr];
        hu[..ctx.n].copy_from_slice(&u[..ctx.n]);
        for a in 0..ctx.r {
            let mut acc = 0.0;
            for i in 0..ctx.n {
                acc += ctx.lift[a][i] * u[i];
            }
            hu[ctx.n + a] = acc;
            vu[ctx.n + a] = u[ctx.n + a] - acc;
        }
        (hu, vu)
    }

    /// Split a field jet into (horizontal, vertical) jets. The horizontal
    /// part's fiber components are `h^a_i F^i`, differentiated by the
    /// product rule with the lift jet.
    pub fn project_field(&self, ctx: &PointContext, f: &FieldJet) -> (FieldJet, FieldJet) {
        let n = ctx.n;
        let nr = ctx.n + ctx.r;
        let mut hf = FieldJet::zero(nr);
        let mut vf = FieldJet::zero(nr);
        for i in 0..n {
            hf.comps[i] = f.comps[i];
            hf.jac[i][..nr].copy_from_slice(&f.jac[i][..nr]);
        }
        for a in 0..ctx.r {
            let row = n + a;
            let mut acc = 0.0;
            for i in 0..n {
                acc += ctx.lift[a][i] * f.comps[i];
            }
            hf.comps[row] = acc;
            vf.comps[row] = f.comps[row] - acc;
            for c in 0..nr {
                let mut d = 0.0;
                for i in 0..n {
                    d += ctx.lift_d[a][i][c] * f.comps[i] + ctx.lift[a][i] * f.jac[i][c];
                }
                hf.jac[row][c] = d;
                vf.jac[row][c] = f.jac[row][c] - d;
            }
        }
        (hf, vf)
    }

    pub fn projectors(&self, p: &Point) -> Result<ProjectorPair, SubError> {
        let ctx = self.eval_at(p)?;
        let n = ctx.n;
        let nr = ctx.n + ctx.r;
        let mut h = DMatrix::zeros(nr, nr);
        let mut v = DMatrix::zeros(nr, nr);
        for i in 0..n {
            h[(i, i)] = 1.0;
            for a in 0..ctx.r {
                h[(n + a, i)] = ctx.lift[a][i];
                v[(n + a, i)] = -ctx.lift[a][i];
            }
        }
        for a in 0..ctx.r {
            v[(n + a, n + a)] = 1.0;
        }
        Ok(ProjectorPair {
            at: p.clone(),
            h,
            v,
        })
    }

    /// Horizontal lift of a base tangent to `p`. The base point must equal
    /// the projection of `p` coordinate-by-coordinate.
    pub fn horizontal_lift(&self, xt: &Tangent, p: &Point) -> Result<Tangent, SubError> {
        let n = self.base_dim();
        if xt.at.coords() != &p.coords()[..n] {
            return Err(SubError::BasePointMismatch {
                expected: xt.at.coords().to_vec(),
                got: p.coords()[..n].to_vec(),
            });
        }
        if xt.comps.len() != n {
            return Err(SubError::Geom(GeomError::DimensionMismatch {
                expected: n,
                got: xt.comps.len(),
            }));
        }
        let ctx = self.eval_at(p)?;
        let mut comps = vec![0.0; self.total_dim()];
        comps[..n].copy_from_slice(&xt.comps);
        for a in 0..ctx.r {
            let mut acc = 0.0;
            for i in 0..n {
                acc += ctx.lift[a][i] * xt.comps[i];
            }
            comps[n + a] = acc;
        }
        Ok(Tangent {
            at: p.clone(),
            comps,
        })
    }

    /// `T_U V = h∇_{vU}vV + v∇_{vU}hV`, returned as the pair
    /// (horizontal part, vertical part).
    pub fn oneill_t_jets(
        &self,
        ctx: &PointContext,
        u: &[f64],
        vfield: &FieldJet,
    ) -> (Vec<f64>, Vec<f64>) {
        let (_, vu) = self.project(ctx, u);
        let (hf, vf) = self.project_field(ctx, vfield);
        let d_vv = covariant_derivative_dir(&ctx.gamma, &vu, &vf);
        let d_hv = covariant_derivative_dir(&ctx.gamma, &vu, &hf);
        let (h_part, _) = self.project(ctx, &d_vv);
        let (_, v_part) = self.project(ctx, &d_hv);
        (h_part, v_part)
    }

    /// `A_U V = v∇_{hU}hV + h∇_{hU}vV`, returned as the pair
    /// (horizontal part, vertical part).
    pub fn oneill_a_jets(
        &self,
        ctx: &PointContext,
        u: &[f64],
        vfield: &FieldJet,
    ) -> (Vec<f64>, Vec<f64>) {
        let (hu, _) = self.project(ctx, u);
        let (hf, vf) = self.project_field(ctx, vfield);
        let d_hh = covariant_derivative_dir(&ctx.gamma, &hu, &hf);
        let d_vv = covariant_derivative_dir(&ctx.gamma, &hu, &vf);
        let (_, v_part) = self.project(ctx, &d_hh);
        let (h_part, _) = self.project(ctx, &d_vv);
        (h_part, v_part)
    }

    pub fn oneill_t_parts(
        &self,
        u: &VectorField,
        v: &VectorField,
        p: &Point,
    ) -> Result<(Tangent, Tangent), SubError> {
        self.check_fields(u, v)?;
        let ctx = self.eval_at(p)?;
        let udir = u.eval(p)?.comps;
        let vjet = v.jet(p)?;
        let (h, vt) = self.oneill_t_jets(&ctx, &udir, &vjet);
        Ok(pair_to_tangents(p, h, vt))
    }

    pub fn oneill_t(
        &self,
        u: &VectorField,
        v: &VectorField,
        p: &Point,
    ) -> Result<Tangent, SubError> {
        let (h, vt) = self.oneill_t_parts(u, v, p)?;
        Ok(sum_tangents(h, vt))
    }

    pub fn oneill_a_parts(
        &self,
        u: &VectorField,
        v: &VectorField,
        p: &Point,
    ) -> Result<(Tangent, Tangent), SubError> {
        self.check_fields(u, v)?;
        let ctx = self.eval_at(p)?;
        let udir = u.eval(p)?.comps;
        let vjet = v.jet(p)?;
        let (h, vt) = self.oneill_a_jets(&ctx, &udir, &vjet);
        Ok(pair_to_tangents(p, h, vt))
    }

    pub fn oneill_a(
        &self,
        u: &VectorField,
        v: &VectorField,
        p: &Point,
    ) -> Result<Tangent, SubError> {
        let (h, vt) = self.oneill_a_parts(u, v, p)?;
        Ok(sum_tangents(h, vt))
    }

    fn check_fields(&self, u: &VectorField, v: &VectorField) -> Result<(), SubError> {
        if u.chart() != &self.total || v.chart() != &self.total {
            return Err(SubError::Geom(GeomError::ChartMismatch));
        }
        Ok(())
    }

    /// Does the total connection restrict to the base one along horizontal
    /// fields: residual `h∇_{H_i}H_j − H(∇^M_{∂_i}∂_j)` over samples.
    pub fn check_affine(&self, opts: &CheckOptions) -> Result<CheckReport, SubError> {
        let n = self.base_dim();
        let mut part = ResidualPart::new("h-cov of lifted frame minus lifted base derivative");
        for p in self.sample_points(opts.samples) {
            let ctx = self.eval_at(&p)?;
            let bg = self.base_conn.at(&self.project_point(&p))?;
            for i in 0..n {
                let hi = self.h_jet(&ctx, i).comps;
                for j in 0..n {
                    let hj = self.h_jet(&ctx, j);
                    let grad = covariant_derivative_dir(&ctx.gamma, &hi, &hj);
                    let (mut res, _) = self.project(&ctx, &grad);
                    // Lift of ∇^M_{∂_i}∂_j, subtracted component-wise.
                    let mut base_dir = vec![0.0; n];
                    for k in 0..n {
                        base_dir[k] = bg.get(k, i, j);
                    }
                    for (k, b) in base_dir.iter().enumerate() {
                        res[k] -= b;
                    }
                    for a in 0..ctx.r {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += ctx.lift[a][k] * base_dir[k];
                        }
                        res[n + a] -= acc;
                    }
                    part.record(enorm(&res), p.coords());
                }
            }
        }
        Ok(CheckReport::from_parts("affine", opts, vec![part]))
    }

    /// Antisymmetry of A on horizontal pairs:
    /// residual `A_{H_i}H_j + A_{H_j}H_i`.
    pub fn check_skew(&self, opts: &CheckOptions) -> Result<CheckReport, SubError> {
        let n = self.base_dim();
        let mut part = ResidualPart::new("symmetric part of A on lifted frame pairs");
        for p in self.sample_points(opts.samples) {
            let ctx = self.eval_at(&p)?;
            for i in 0..n {
                for j in i..n {
                    let hi = self.h_jet(&ctx, i);
                    let hj = self.h_jet(&ctx, j);
                    let (hij, vij) = self.oneill_a_jets(&ctx, &hi.comps, &hj);
                    let (hji, vji) = self.oneill_a_jets(&ctx, &hj.comps, &hi);
                    let sum: Vec<f64> = (0..self.total_dim())
                        .map(|c| hij[c] + vij[c] + hji[c] + vji[c])
                        .collect();
                    part.record(enorm(&sum), p.coords());
                }
            }
        }
        Ok(CheckReport::from_parts("skew", opts, vec![part]))
    }

    /// The three conditions for the stricter submersion class: vanishing
    /// fiber second fundamental form, vanishing A on mixed slots, and
    /// parallel horizontal fields along the fibers.
    pub fn check_blumenthal(&self, opts: &CheckOptions) -> Result<CheckReport, SubError> {
        let n = self.base_dim();
        let r = self.fiber_dim();
        let mut fiber2 = ResidualPart::new("fiber second fundamental form");
        let mut mixed = ResidualPart::new("A on mixed slots");
        let mut parallel = ResidualPart::new("fiber derivative of lifted frame");
        for p in self.sample_points(opts.samples) {
            let ctx = self.eval_at(&p)?;
            for a in 0..r {
                let va = self.v_jet(&ctx, a);
                for b in 0..r {
                    let vb = self.v_jet(&ctx, b);
                    // T_{∂_a}∂_b = h∇_{∂_a}∂_b for coordinate fiber fields.
                    let d = covariant_derivative_dir(&ctx.gamma, &va.comps, &vb);
                    let (h, _) = self.project(&ctx, &d);
                    fiber2.record(enorm(&h), p.coords());
                }
                for i in 0..n {
                    let hi = self.h_jet(&ctx, i);
                    // A_{H_i}∂_a = h∇_{H_i}∂_a.
                    let d = covariant_derivative_dir(&ctx.gamma, &hi.comps, &va);
                    let (h, _) = self.project(&ctx, &d);
                    mixed.record(enorm(&h), p.coords());
                    // h∇_{∂_a}H_i.
                    let d = covariant_derivative_dir(&ctx.gamma, &va.comps, &hi);
                    let (h, _) = self.project(&ctx, &d);
                    parallel.record(enorm(&h), p.coords());
                }
            }
        }
        Ok(CheckReport::from_parts(
            "blumenthal",
            opts,
            vec![fiber2, mixed, parallel],
        ))
    }

    /// Frobenius residual of the horizontal distribution:
    /// `v[H_i, H_j]` over frame pairs. Passing means integrable.
    pub fn check_horizontal_integrability(
        &self,
        opts: &CheckOptions,
    ) -> Result<CheckReport, SubError> {
        let n = self.base_dim();
        let mut part = ResidualPart::new("vertical part of lifted-frame brackets");
        for p in self.sample_points(opts.samples) {
            let ctx = self.eval_at(&p)?;
            for i in 0..n {
                for j in i + 1..n {
                    let hi = self.h_jet(&ctx, i);
                    let hj = self.h_jet(&ctx, j);
                    let br = lie_bracket_jets(&hi, &hj);
                    let (_, v) = self.project(&ctx, &br);
                    part.record(enorm(&v), p.coords());
                }
            }
        }
        Ok(CheckReport::from_parts("horizontal-integrability", opts, vec![part]))
    }

    /// Projector algebra measured as residuals: `v+h−Id`, idempotency,
    /// cross products, and the base components of `v`.
    pub fn check_projectors(&self, opts: &CheckOptions) -> Result<CheckReport, SubError> {
        let nr = self.total_dim();
        let n = self.base_dim();
        let id = DMatrix::<f64>::identity(nr, nr);
        let mut sum = ResidualPart::new("v + h minus identity");
        let mut idem = ResidualPart::new("idempotency");
        let mut cross = ResidualPart::new("v h and h v");
        let mut proj = ResidualPart::new("base rows of v");
        for p in self.sample_points(opts.samples) {
            let pair = self.projectors(&p)?;
            let m = &pair.v + &pair.h - &id;
            sum.record(m.abs().max(), p.coords());
            let m = &pair.v * &pair.v - &pair.v;
            let m2 = &pair.h * &pair.h - &pair.h;
            idem.record(m.abs().max().max(m2.abs().max()), p.coords());
            let m = &pair.v * &pair.h;
            let m2 = &pair.h * &pair.v;
            cross.record(m.abs().max().max(m2.abs().max()), p.coords());
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for c in 0..nr {
                    worst = worst.max(pair.v[(i, c)].abs());
                }
            }
            proj.record(worst, p.coords());
        }
        Ok(CheckReport::from_parts(
            "projectors",
            opts,
            vec![sum, idem, cross, proj],
        ))
    }
}

fn pair_to_tangents(p: &Point, h: Vec<f64>, v: Vec<f64>) -> (Tangent, Tangent) {
    (
        Tangent {
            at: p.clone(),
            comps: h,
        },
        Tangent {
            at: p.clone(),
            comps: v,
        },
    )
}

fn sum_tangents(a: Tangent, b: Tangent) -> Tangent {
    Tangent {
        at: a.at,
        comps: a
            .comps
            .iter()
            .zip(&b.comps)
            .map(|(x, y)| x + y)
            .collect(),
    }
}

const MAX_SYMBOLIC_FIBER_DIM: usize = 3;

fn sym_add(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Add(Box::new(a), Box::new(b))
}

fn sym_sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Sub(Box::new(a), Box::new(b))
}

fn sym_mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Mul(Box::new(a), Box::new(b))
}

fn sym_div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Div(Box::new(a), Box::new(b))
}

fn sym_neg(a: ScalarExpr) -> ScalarExpr {
    ScalarExpr::Neg(Box::new(a))
}

fn sym_det(m: &[Vec<ScalarExpr>]) -> ScalarExpr {
    match m.len() {
        // Determinant of the empty matrix: the 1×1 cofactor base case.
        0 => ScalarExpr::Num(1.0),
        1 => m[0][0].clone(),
        2 => sym_sub(
            sym_mul(m[0][0].clone(), m[1][1].clone()),
            sym_mul(m[0][1].clone(), m[1][0].clone()),
        ),
        _ => {
            let mut acc: Option<ScalarExpr> = None;
            for (c, top) in m[0].iter().enumerate() {
                let minor: Vec<Vec<ScalarExpr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != c)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = sym_mul(top.clone(), sym_det(&minor));
                acc = Some(match acc {
                    None => term,
                    Some(prev) if c % 2 == 0 => sym_add(prev, term),
                    Some(prev) => sym_sub(prev, term),
                });
            }
            acc.expect("nonempty matrix")
        }
    }
}

fn sym_minor(m: &[Vec<ScalarExpr>], row: usize, col: usize) -> Vec<Vec<ScalarExpr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// Lift coefficients that make the horizontal distribution the orthogonal
/// complement of the fibers under a total metric on an adapted chart:
/// `h^a_i = −(B^{-1})^{ab} g_{(n+b) i}` with `B` the fiber-fiber block.
/// The fiber block is inverted in closed form (supported up to 3 fiber
/// coordinates) and the result is validated numerically: the block
/// determinant must stay away from zero and the lifted frame must come out
/// orthogonal to the fibers at the chart's sample points.
pub fn horizontal_from_metric(
    total_metric: &Metric,
    base_dim: usize,
) -> Result<Vec<Vec<ScalarExpr>>, SubError> {
    let chart = total_metric.chart();
    let nr = chart.dim();
    if base_dim == 0 || base_dim >= nr {
        return Err(SubError::Geom(GeomError::DimensionMismatch {
            expected: nr,
            got: base_dim,
        }));
    }
    let n = base_dim;
    let r = nr - n;
    if r > MAX_SYMBOLIC_FIBER_DIM {
        return Err(SubError::FiberDimTooLarge {
            dim: r,
            max: MAX_SYMBOLIC_FIBER_DIM,
        });
    }
    let block: Vec<Vec<ScalarExpr>> = (0..r)
        .map(|a| (0..r).map(|b| total_metric.entry(n + a, n + b).clone()).collect())
        .collect();
    let det = sym_det(&block);
    let det_compiled = chart.compile(&det)?;
    for p in chart.sample_points(crate::geometry::DEFAULT_SAMPLES) {
        let d = det_compiled.eval(p.coords())?;
        if !(d.abs() > 1e-12) {
            return Err(SubError::SingularFiberBlock { point: p.0.clone() });
        }
    }
    // inv[a][b] = cofactor(b,a) / det.
    let mut inv = vec![vec![ScalarExpr::Num(0.0); r]; r];
    for a in 0..r {
        for b in 0..r {
            let cof = sym_det(&sym_minor(&block, b, a));
            let signed = if (a + b) % 2 == 0 { cof } else { sym_neg(cof) };
            inv[a][b] = sym_div(signed, det.clone());
        }
    }
    let mut lift = vec![vec![ScalarExpr::Num(0.0); n]; r];
    for a in 0..r {
        for i in 0..n {
            let mut acc: Option<ScalarExpr> = None;
            for b in 0..r {
                let term = sym_mul(inv[a][b].clone(), total_metric.entry(n + b, i).clone());
                acc = Some(match acc {
                    None => term,
                    Some(prev) => sym_add(prev, term),
                });
            }
            lift[a][i] = sym_neg(acc.expect("fiber dim is positive"));
        }
    }
    // The lifted frame must be orthogonal to every fiber direction.
    let compiled: Vec<Vec<CompiledExpr>> = lift
        .iter()
        .map(|row| row.iter().map(|e| chart.compile(e)).collect())
        .collect::<Result<_, _>>()?;
    for p in chart.sample_points(crate::geometry::DEFAULT_SAMPLES) {
        let g = total_metric.eval(&p)?;
        for i in 0..n {
            let mut hvec = vec![0.0; nr];
            hvec[i] = 1.0;
            for a in 0..r {
                hvec[n + a] = compiled[a][i].eval(p.coords())?;
            }
            for a in 0..r {
                let mut acc = 0.0;
                for c in 0..nr {
                    acc += g[(n + a, c)] * hvec[c];
                }
                if acc.abs() > 1e-12 {
                    return Err(SubError::SingularFiberBlock { point: p.0.clone() });
                }
            }
        }
    }
    Ok(lift)
}
