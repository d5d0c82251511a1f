//! Sections of a submersion and their harmonicity data: pushforwards, the
//! second fundamental form, tension fields split into vertical and
//! horizontal parts, the correction tensors that relate full-map and
//! section-level harmonicity, and the classification verdicts derived from
//! them.
//!
//! The vertical component of a section's pushforward is extended to a
//! global field `W_l(p) = ∂_l σ^α(π(p)) ∂_{y^α} − h^α_l(p) ∂_{y^α}` on the
//! total space; every derivative below is taken against that extension (and
//! the global lifted frame `H_l`), which keeps all quantities computable
//! from jets at a single point.
//!
//! Two sign conventions circulate for the bracket term of the correction
//! tensor `C`; both are computed, and the per-pair expansion of the second
//! fundamental form — an exact identity — arbitrates which one (if either)
//! reproduces the decomposition at each sample. See
//! [`Section::decomposition_check`].

use crate::expr::{CompiledExpr, Dual2, ExprError, ScalarExpr};
use crate::geometry::{
    covariant_derivative_dir, lie_bracket_jets, orthonormal_frame, Christoffel, FieldJet,
    GeomError, Point, Tangent,
};
use crate::report::CheckOptions;
use crate::submersion::{PointContext, SubError, SubmersionSpace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectError {
    #[error(transparent)]
    Sub(#[from] SubError),
    #[error("section needs {expected} fiber components, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("index {index} is out of range for {what} (dimension {dim})")]
    IndexRange {
        index: usize,
        what: &'static str,
        dim: usize,
    },
}

impl From<GeomError> for SectError {
    fn from(e: GeomError) -> SectError {
        SectError::Sub(SubError::Geom(e))
    }
}

impl From<ExprError> for SectError {
    fn from(e: ExprError) -> SectError {
        SectError::Sub(SubError::Geom(GeomError::Expr(e)))
    }
}

/// Which sign the bracket term carries in the correction tensor `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketSign {
    Plus,
    Minus,
}

/// How `tr C` is evaluated: one of the two closed-form sign conventions, or
/// the term that falls out of expanding the second fundamental form pair by
/// pair (the exact-identity reading).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CConvention {
    Plus,
    Minus,
    Expansion,
}

/// A section of the submersion: fiber components as expressions over the
/// base coordinates. The base projection of `σ(x)` is `x` by construction.
#[derive(Debug, Clone)]
pub struct Section {
    space: SubmersionSpace,
    comps: Vec<ScalarExpr>,
    compiled: Vec<CompiledExpr>,
}

/// Value, gradient, and Hessian of the fiber components at a base point.
#[derive(Debug, Clone)]
pub struct SectionJet2 {
    pub val: Vec<f64>,
    /// d1[a][k] = ∂_k σ^a
    pub d1: Vec<Vec<f64>>,
    /// d2[a][k][l] = ∂_k ∂_l σ^a (mirrored, symmetric bit-for-bit)
    pub d2: Vec<Vec<Vec<f64>>>,
}

fn enorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn jet_sub(a: &FieldJet, b: &FieldJet) -> FieldJet {
    FieldJet {
        comps: vec_sub(&a.comps, &b.comps),
        jac: a
            .jac
            .iter()
            .zip(&b.jac)
            .map(|(ra, rb)| vec_sub(ra, rb))
            .collect(),
    }
}

fn axpy(acc: &mut [f64], scale: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

impl Section {
    pub fn new(space: &SubmersionSpace, comps: Vec<ScalarExpr>) -> Result<Section, SectError> {
        let r = space.fiber_dim();
        if comps.len() != r {
            return Err(SectError::ComponentCount {
                expected: r,
                got: comps.len(),
            });
        }
        let compiled = comps
            .iter()
            .map(|e| space.base_chart().compile(e))
            .collect::<Result<_, GeomError>>()?;
        Ok(Section {
            space: space.clone(),
            comps,
            compiled,
        })
    }

    pub fn space(&self) -> &SubmersionSpace {
        &self.space
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    /// Printable component sources, used by reports.
    pub fn source(&self) -> Vec<String> {
        self.comps.iter().map(|e| e.to_string()).collect()
    }

    /// σ(x) as a total-space point.
    pub fn value_at(&self, x: &Point) -> Result<Point, SectError> {
        self.check_base_point(x)?;
        let mut coords = x.coords().to_vec();
        for c in &self.compiled {
            coords.push(c.eval(x.coords())?);
        }
        Ok(Point(coords))
    }

    /// Fiber components with first and second derivatives at `x`.
    pub fn jet2(&self, x: &Point) -> Result<SectionJet2, SectError> {
        self.check_base_point(x)?;
        let n = self.space.base_dim();
        let r = self.space.fiber_dim();
        let args = self.space.base_chart().seed(x);
        let mut val = vec![0.0; r];
        let mut d1 = vec![vec![0.0; n]; r];
        let mut d2 = vec![vec![vec![0.0; n]; n]; r];
        for (a, c) in self.compiled.iter().enumerate() {
            let v = c.eval(&args)?;
            val[a] = v.v;
            d1[a][..n].copy_from_slice(&v.d[..n]);
        }
        for k in 0..n {
            for l in k..n {
                let args2: Vec<Dual2> = x
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(m, &v)| Dual2::seeded(v, m == k, m == l))
                    .collect();
                for (a, c) in self.compiled.iter().enumerate() {
                    let v = c.eval(&args2)?;
                    d2[a][k][l] = v.dij;
                    d2[a][l][k] = v.dij;
                }
            }
        }
        Ok(SectionJet2 { val, d1, d2 })
    }

    /// σ_*X at σ(x) for a base tangent given by components at `x`.
    /// Base components pass through unchanged.
    pub fn pushforward(&self, x: &Point, xt: &[f64]) -> Result<Tangent, SectError> {
        let n = self.space.base_dim();
        if xt.len() != n {
            return Err(SectError::Sub(SubError::Geom(
                GeomError::DimensionMismatch {
                    expected: n,
                    got: xt.len(),
                },
            )));
        }
        let sj = self.jet2(x)?;
        let p = self.total_point(x, &sj);
        Ok(Tangent {
            comps: push_comps(xt, &sj, self.space.total_dim()),
            at: p,
        })
    }

    fn total_point(&self, x: &Point, sj: &SectionJet2) -> Point {
        let mut coords = x.coords().to_vec();
        coords.extend_from_slice(&sj.val);
        Point(coords)
    }

    fn check_base_point(&self, x: &Point) -> Result<(), SectError> {
        let n = self.space.base_dim();
        if x.dim() != n {
            return Err(SectError::Sub(SubError::Geom(
                GeomError::DimensionMismatch {
                    expected: n,
                    got: x.dim(),
                },
            )));
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), SectError> {
        let n = self.space.base_dim();
        for index in [i, j] {
            if index >= n {
                return Err(SectError::IndexRange {
                    index,
                    what: "base coordinate",
                    dim: n,
                });
            }
        }
        Ok(())
    }

    /// All pointwise data needed by the tensor operations at one base point.
    pub(crate) fn point_data(&self, x: &Point) -> Result<PointData, SectError> {
        let n = self.space.base_dim();
        let sj = self.jet2(x)?;
        let p = self.total_point(x, &sj);
        let ctx = self.space.eval_at(&p)?;
        let base_gamma = self.space.base_connection().at(x)?;
        let e_jets: Vec<FieldJet> = (0..n).map(|l| sigma_ext_jet(&sj, l, n)).collect();
        let h_jets: Vec<FieldJet> = (0..n).map(|l| self.space.h_jet(&ctx, l)).collect();
        let w_jets: Vec<FieldJet> = (0..n)
            .map(|l| jet_sub(&e_jets[l], &h_jets[l]))
            .collect();
        Ok(PointData {
            x: x.clone(),
            sj,
            ctx,
            base_gamma,
            e_jets,
            h_jets,
            w_jets,
        })
    }

    /// Second fundamental form on the coordinate pair (i, j):
    /// `∇^E_{σ_*∂_i}σ_*∂_j − σ_*(∇^M_{∂_i}∂_j)` at σ(x).
    pub fn beta(&self, i: usize, j: usize, x: &Point) -> Result<Tangent, SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        Ok(Tangent {
            comps: pd.beta(i, j),
            at: pd.ctx.point.clone(),
        })
    }

    /// β split into (horizontal, vertical) parts.
    pub fn beta_parts(
        &self,
        i: usize,
        j: usize,
        x: &Point,
    ) -> Result<(Tangent, Tangent), SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        let b = pd.beta(i, j);
        let (h, v) = self.space.project(&pd.ctx, &b);
        Ok((
            Tangent {
                comps: h,
                at: pd.ctx.point.clone(),
            },
            Tangent {
                comps: v,
                at: pd.ctx.point.clone(),
            },
        ))
    }

    /// Vertical second fundamental form on the coordinate pair (i, j):
    /// `v∇^E_{σ_*∂_i} W_j − vσ_*(∇^M_{∂_i}∂_j)`, where `W_j` extends the
    /// vertical part of `σ_*∂_j`. Always exactly vertical.
    pub fn beta_v(&self, i: usize, j: usize, x: &Point) -> Result<Tangent, SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        Ok(Tangent {
            comps: pd.vertical_integrand(self, i, j),
            at: pd.ctx.point.clone(),
        })
    }

    /// Tension field at `x`, pre-split into (vertical part, horizontal
    /// part). Computed by expanding β over the deterministic orthonormal
    /// frame of the base metric.
    pub fn tension(&self, x: &Point) -> Result<(Tangent, Tangent), SectError> {
        let pd = self.point_data(x)?;
        let tau = self.tau_from(&pd, |k, l| pd.beta(k, l))?;
        let (h, v) = self.space.project(&pd.ctx, &tau);
        Ok((
            Tangent {
                comps: v,
                at: pd.ctx.point.clone(),
            },
            Tangent {
                comps: h,
                at: pd.ctx.point.clone(),
            },
        ))
    }

    /// Vertical tension field: the frame trace of
    /// `v∇^E_{σ_*e_i} W_i − vσ_*(∇^M_{e_i}e_i)`, where `W_i` extends the
    /// vertical pushforward. Always an exactly vertical vector.
    pub fn tension_v(&self, x: &Point) -> Result<Tangent, SectError> {
        let pd = self.point_data(x)?;
        let t = self.tau_from(&pd, |k, l| pd.vertical_integrand(self, k, l))?;
        Ok(Tangent {
            comps: t,
            at: pd.ctx.point.clone(),
        })
    }

    fn tau_from(
        &self,
        pd: &PointData,
        pair: impl Fn(usize, usize) -> Vec<f64>,
    ) -> Result<Vec<f64>, SectError> {
        let n = self.space.base_dim();
        let nn = self.space.total_dim();
        let frame = orthonormal_frame(self.space.base_metric(), &pd.x)?;
        let mut acc = vec![0.0; nn];
        for e in &frame {
            for k in 0..n {
                for l in 0..n {
                    let w = e.comps[k] * e.comps[l];
                    if w != 0.0 {
                        axpy(&mut acc, w, &pair(k, l));
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Correction tensor `C` on the pair (i, j) under one bracket-sign
    /// convention: `2 T_{W_i} H_j + A_{H_i} H_j ± [H_i, W_j]`. Vertical.
    pub fn tensor_c(
        &self,
        sign: BracketSign,
        i: usize,
        j: usize,
        x: &Point,
    ) -> Result<Tangent, SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        Ok(Tangent {
            comps: pd.c_formula(self, sign, i, j),
            at: pd.ctx.point.clone(),
        })
    }

    /// The `C`-term produced by expanding `vβ` pair by pair:
    /// `T_{W_i} H_j + A_{H_i} H_j`. Vertical.
    pub fn tensor_c_expansion(&self, i: usize, j: usize, x: &Point) -> Result<Tangent, SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        Ok(Tangent {
            comps: pd.c_expansion(self, i, j),
            at: pd.ctx.point.clone(),
        })
    }

    /// Correction tensor `D` on the pair (i, j):
    /// `T_{W_i} W_j + 2 A_{H_i} W_j`. Horizontal.
    pub fn tensor_d(&self, i: usize, j: usize, x: &Point) -> Result<Tangent, SectError> {
        self.check_pair(i, j)?;
        let pd = self.point_data(x)?;
        Ok(Tangent {
            comps: pd.d_pair(self, i, j),
            at: pd.ctx.point.clone(),
        })
    }

    /// Metric trace of `C` under the requested convention.
    pub fn trace_c(&self, convention: CConvention, x: &Point) -> Result<Tangent, SectError> {
        let pd = self.point_data(x)?;
        let ginv = self.space.base_metric().inverse_at(&pd.x)?;
        let t = pd.trace(&ginv, |k, l| match convention {
            CConvention::Plus => pd.c_formula(self, BracketSign::Plus, k, l),
            CConvention::Minus => pd.c_formula(self, BracketSign::Minus, k, l),
            CConvention::Expansion => pd.c_expansion(self, k, l),
        });
        Ok(Tangent {
            comps: t,
            at: pd.ctx.point.clone(),
        })
    }

    /// Metric trace of `D`.
    pub fn trace_d(&self, x: &Point) -> Result<Tangent, SectError> {
        let pd = self.point_data(x)?;
        let ginv = self.space.base_metric().inverse_at(&pd.x)?;
        let t = pd.trace(&ginv, |k, l| pd.d_pair(self, k, l));
        Ok(Tangent {
            comps: t,
            at: pd.ctx.point.clone(),
        })
    }

    /// Everything the reports need at one sample point.
    fn analyze(&self, x: &Point) -> Result<SampleRow, SectError> {
        let n = self.space.base_dim();
        let pd = self.point_data(x)?;
        let ginv = self.space.base_metric().inverse_at(x)?;

        let mut beta = Vec::with_capacity(n * n);
        let mut nu = Vec::with_capacity(n * n);
        let mut c_plus = Vec::with_capacity(n * n);
        let mut c_minus = Vec::with_capacity(n * n);
        let mut c_exp = Vec::with_capacity(n * n);
        let mut d = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                beta.push(pd.beta(k, l));
                nu.push(pd.vertical_integrand(self, k, l));
                c_plus.push(pd.c_formula(self, BracketSign::Plus, k, l));
                c_minus.push(pd.c_formula(self, BracketSign::Minus, k, l));
                c_exp.push(pd.c_expansion(self, k, l));
                d.push(pd.d_pair(self, k, l));
            }
        }
        let at = |m: &[Vec<f64>], k: usize, l: usize| m[k * n + l].clone();

        let tau = self.tau_from(&pd, |k, l| at(&beta, k, l))?;
        let (tau_h, tau_v) = self.space.project(&pd.ctx, &tau);
        let tension_v = self.tau_from(&pd, |k, l| at(&nu, k, l))?;

        let trace = |m: &[Vec<f64>]| pd.trace(&ginv, |k, l| at(m, k, l));
        let trace_c_plus = trace(&c_plus);
        let trace_c_minus = trace(&c_minus);
        let trace_c = trace(&c_exp);
        let trace_d = trace(&d);

        let resid_v = |tc: &[f64]| {
            let mut dev = vec_sub(&tau_v, &tension_v);
            for (a, b) in dev.iter_mut().zip(tc) {
                *a -= b;
            }
            enorm(&dev)
        };
        let r_v_plus = resid_v(&trace_c_plus);
        let r_v_minus = resid_v(&trace_c_minus);
        let r_v_expansion = resid_v(&trace_c);
        let r_h = enorm(&vec_sub(&tau_h, &trace_d));

        Ok(SampleRow {
            x: x.coords().to_vec(),
            tau_v,
            tau_h,
            tension_v,
            trace_c,
            trace_c_plus,
            trace_c_minus,
            trace_d,
            r_v_plus,
            r_v_minus,
            r_v_expansion,
            r_h,
        })
    }

    fn sample_rows(&self, opts: &CheckOptions) -> Result<Vec<SampleRow>, SectError> {
        self.space
            .base_chart()
            .sample_points(opts.samples)
            .par_iter()
            .map(|x| self.analyze(x))
            .collect()
    }

    /// Evaluate the decomposition identities
    /// `vτ = τ^v + tr C` and `hτ = tr D` over the sample set, and record
    /// which bracket-sign convention (if either) reproduces the vertical
    /// identity. The expansion reading is the arbiter: it restates the
    /// identity term-by-term and is expected to hold to rounding.
    pub fn decomposition_check(
        &self,
        opts: &CheckOptions,
    ) -> Result<DecompositionReport, SectError> {
        let rows = self.sample_rows(opts)?;
        Ok(summarize_decomposition(&rows, opts))
    }

    /// Full report: decomposition residuals, harmonicity verdicts, and the
    /// five-item classification truth table.
    pub fn classify(&self, opts: &CheckOptions) -> Result<SectionReport, SectError> {
        let rows = self.sample_rows(opts)?;
        let decomposition = summarize_decomposition(&rows, opts);
        let tol = opts.tolerance;

        let max_norm = |f: &dyn Fn(&SampleRow) -> &Vec<f64>| {
            rows.iter().map(|r| enorm(f(r))).fold(0.0, f64::max)
        };
        let max_tension_h_norm = max_norm(&|r| &r.tau_h);
        let max_tension_v_part_norm = max_norm(&|r| &r.tau_v);
        let max_vertical_tension_norm = max_norm(&|r| &r.tension_v);
        let max_trace_c_norm = max_norm(&|r| &r.trace_c);
        let max_trace_c_plus_norm = max_norm(&|r| &r.trace_c_plus);
        let max_trace_c_minus_norm = max_norm(&|r| &r.trace_c_minus);
        let max_trace_d_norm = max_norm(&|r| &r.trace_d);
        let max_tension_norm = rows
            .iter()
            .map(|r| {
                let full: Vec<f64> = r.tau_v.iter().zip(&r.tau_h).map(|(a, b)| a + b).collect();
                enorm(&full)
            })
            .fold(0.0, f64::max);

        let harmonic_map = max_tension_norm <= tol;
        let harmonic_section = max_vertical_tension_norm <= tol;
        let trc_zero = max_trace_c_norm <= tol;
        let trd_zero = max_trace_d_norm <= tol;

        let row = |item: u8, claim: &str, applicable: bool, conclusion: bool| TheoremRow {
            item,
            claim: claim.to_string(),
            status: if !applicable {
                RowStatus::Vacuous
            } else if conclusion {
                RowStatus::Holds
            } else {
                RowStatus::Violated
            },
        };
        let truth_table = vec![
            row(
                1,
                "tr D = 0: harmonic map and harmonic section are equivalent",
                trd_zero,
                harmonic_map == harmonic_section,
            ),
            row(
                2,
                "harmonic map: tr C = 0 and tr D = 0",
                harmonic_map,
                trc_zero && trd_zero,
            ),
            row(
                3,
                "tr C != 0 or tr D != 0: not a harmonic map",
                !(trc_zero && trd_zero),
                !harmonic_map,
            ),
            row(
                4,
                "harmonic section: tr C = 0",
                harmonic_section,
                trc_zero,
            ),
            row(
                5,
                "tr C != 0: not a harmonic section",
                !trc_zero,
                !harmonic_section,
            ),
        ];

        // A harmonic map must be a harmonic section; allow a small frame
        // conditioning factor on the vertical residual.
        let consistency_ok = !harmonic_map || max_vertical_tension_norm <= 10.0 * tol;

        Ok(SectionReport {
            section: self.source(),
            samples: opts.samples,
            tolerance: tol,
            max_tension_norm,
            max_tension_h_norm,
            max_tension_v_part_norm,
            max_vertical_tension_norm,
            max_trace_c_norm,
            max_trace_c_plus_norm,
            max_trace_c_minus_norm,
            max_trace_d_norm,
            decomposition,
            harmonic_map,
            harmonic_section,
            truth_table,
            consistency_ok,
            rows,
        })
    }
}

/// Per-point evaluation state shared by the tensor operations.
pub(crate) struct PointData {
    x: Point,
    sj: SectionJet2,
    pub(crate) ctx: PointContext,
    base_gamma: Christoffel,
    e_jets: Vec<FieldJet>,
    h_jets: Vec<FieldJet>,
    w_jets: Vec<FieldJet>,
}

fn push_comps(xt: &[f64], sj: &SectionJet2, total_dim: usize) -> Vec<f64> {
    let n = xt.len();
    let mut comps = vec![0.0; total_dim];
    comps[..n].copy_from_slice(xt);
    for a in 0..sj.val.len() {
        let mut acc = 0.0;
        for k in 0..n {
            acc += xt[k] * sj.d1[a][k];
        }
        comps[n + a] = acc;
    }
    comps
}

/// Jet of the σ-related extension of `σ_*∂_l`: the field
/// `∂_l + ∂_l σ^a(x) ∂_{y^a}`, constant along the fibers.
fn sigma_ext_jet(sj: &SectionJet2, l: usize, n: usize) -> FieldJet {
    let r = sj.val.len();
    let mut jet = FieldJet::zero(n + r);
    jet.comps[l] = 1.0;
    for a in 0..r {
        jet.comps[n + a] = sj.d1[a][l];
        jet.jac[n + a][..n].copy_from_slice(&sj.d2[a][l][..n]);
    }
    jet
}

impl PointData {
    /// σ_* applied to a base vector, as total-space components.
    fn push(&self, z: &[f64]) -> Vec<f64> {
        push_comps(z, &self.sj, self.e_jets[0].comps.len())
    }

    fn base_gamma_vec(&self, k: usize, l: usize) -> Vec<f64> {
        let n = self.base_gamma.dim();
        (0..n).map(|m| self.base_gamma.get(m, k, l)).collect()
    }

    pub(crate) fn beta(&self, k: usize, l: usize) -> Vec<f64> {
        let full = covariant_derivative_dir(&self.ctx.gamma, &self.e_jets[k].comps, &self.e_jets[l]);
        let pushed = self.push(&self.base_gamma_vec(k, l));
        vec_sub(&full, &pushed)
    }

    /// `v∇^E_{σ_*∂_k} W_l − vσ_*(∇^M_{∂_k}∂_l)`: the vertical-tension
    /// integrand on one coordinate pair.
    pub(crate) fn vertical_integrand(&self, section: &Section, k: usize, l: usize) -> Vec<f64> {
        let space = section.space();
        let d = covariant_derivative_dir(&self.ctx.gamma, &self.e_jets[k].comps, &self.w_jets[l]);
        let (_, mut v) = space.project(&self.ctx, &d);
        let pushed = self.push(&self.base_gamma_vec(k, l));
        let (_, vp) = space.project(&self.ctx, &pushed);
        for (a, b) in v.iter_mut().zip(&vp) {
            *a -= b;
        }
        v
    }

    fn c_expansion(&self, section: &Section, k: usize, l: usize) -> Vec<f64> {
        let space = section.space();
        let (th, tv) = space.oneill_t_jets(&self.ctx, &self.w_jets[k].comps, &self.h_jets[l]);
        let (ah, av) = space.oneill_a_jets(&self.ctx, &self.h_jets[k].comps, &self.h_jets[l]);
        (0..th.len())
            .map(|c| th[c] + tv[c] + ah[c] + av[c])
            .collect()
    }

    fn c_formula(&self, section: &Section, sign: BracketSign, k: usize, l: usize) -> Vec<f64> {
        let space = section.space();
        let (th, tv) = space.oneill_t_jets(&self.ctx, &self.w_jets[k].comps, &self.h_jets[l]);
        let (ah, av) = space.oneill_a_jets(&self.ctx, &self.h_jets[k].comps, &self.h_jets[l]);
        let br = lie_bracket_jets(&self.h_jets[k], &self.w_jets[l]);
        let s = match sign {
            BracketSign::Plus => 1.0,
            BracketSign::Minus => -1.0,
        };
        (0..th.len())
            .map(|c| 2.0 * (th[c] + tv[c]) + ah[c] + av[c] + s * br[c])
            .collect()
    }

    fn d_pair(&self, section: &Section, k: usize, l: usize) -> Vec<f64> {
        let space = section.space();
        let (th, tv) = space.oneill_t_jets(&self.ctx, &self.w_jets[k].comps, &self.w_jets[l]);
        let (ah, av) = space.oneill_a_jets(&self.ctx, &self.h_jets[k].comps, &self.w_jets[l]);
        (0..th.len())
            .map(|c| th[c] + tv[c] + 2.0 * (ah[c] + av[c]))
            .collect()
    }

    fn trace(
        &self,
        ginv: &nalgebra::DMatrix<f64>,
        pair: impl Fn(usize, usize) -> Vec<f64>,
    ) -> Vec<f64> {
        let n = ginv.nrows();
        let nn = self.e_jets[0].comps.len();
        let mut acc = vec![0.0; nn];
        for k in 0..n {
            for l in 0..n {
                let w = ginv[(k, l)];
                if w != 0.0 {
                    axpy(&mut acc, w, &pair(k, l));
                }
            }
        }
        acc
    }
}

/// One sample point's worth of report data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRow {
    pub x: Vec<f64>,
    pub tau_v: Vec<f64>,
    pub tau_h: Vec<f64>,
    pub tension_v: Vec<f64>,
    pub trace_c: Vec<f64>,
    pub trace_c_plus: Vec<f64>,
    pub trace_c_minus: Vec<f64>,
    pub trace_d: Vec<f64>,
    pub r_v_plus: f64,
    pub r_v_minus: f64,
    pub r_v_expansion: f64,
    pub r_h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub tolerance: f64,
    pub samples: usize,
    pub r_v_plus_max: f64,
    pub r_v_minus_max: f64,
    pub r_v_expansion_max: f64,
    pub r_h_max: f64,
    /// Convention whose vertical residual stays below tolerance at every
    /// sample; the expansion reading is used when neither closed-form sign
    /// does.
    pub chosen_convention: CConvention,
    /// Which closed-form bracket sign (if either) matched.
    pub formula_sign: Option<BracketSign>,
    /// Neither closed-form sign reproduced the identity.
    pub inconsistent_formula_sign: bool,
    /// The identity itself held under some reading, and the horizontal line
    /// held too.
    pub identity_ok: bool,
}

fn summarize_decomposition(rows: &[SampleRow], opts: &CheckOptions) -> DecompositionReport {
    let tol = opts.tolerance;
    let fold = |f: &dyn Fn(&SampleRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let r_v_plus_max = fold(&|r| r.r_v_plus);
    let r_v_minus_max = fold(&|r| r.r_v_minus);
    let r_v_expansion_max = fold(&|r| r.r_v_expansion);
    let r_h_max = fold(&|r| r.r_h);
    let plus_ok = r_v_plus_max <= tol;
    let minus_ok = r_v_minus_max <= tol;
    let expansion_ok = r_v_expansion_max <= tol;
    let formula_sign = if plus_ok {
        Some(BracketSign::Plus)
    } else if minus_ok {
        Some(BracketSign::Minus)
    } else {
        None
    };
    let chosen_convention = match formula_sign {
        Some(BracketSign::Plus) => CConvention::Plus,
        Some(BracketSign::Minus) => CConvention::Minus,
        None => CConvention::Expansion,
    };
    DecompositionReport {
        tolerance: tol,
        samples: opts.samples,
        r_v_plus_max,
        r_v_minus_max,
        r_v_expansion_max,
        r_h_max,
        chosen_convention,
        formula_sign,
        inconsistent_formula_sign: formula_sign.is_none(),
        identity_ok: (plus_ok || minus_ok || expansion_ok) && r_h_max <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Holds,
    Vacuous,
    Violated,
}

/// One implication of the classification theorem, judged at tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremRow {
    pub item: u8,
    pub claim: String,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionReport {
    pub section: Vec<String>,
    pub samples: usize,
    pub tolerance: f64,
    pub max_tension_norm: f64,
    pub max_tension_h_norm: f64,
    pub max_tension_v_part_norm: f64,
    pub max_vertical_tension_norm: f64,
    pub max_trace_c_norm: f64,
    pub max_trace_c_plus_norm: f64,
    pub max_trace_c_minus_norm: f64,
    pub max_trace_d_norm: f64,
    pub decomposition: DecompositionReport,
    pub harmonic_map: bool,
    pub harmonic_section: bool,
    pub truth_table: Vec<TheoremRow>,
    pub consistency_ok: bool,
    pub rows: Vec<SampleRow>,
}
