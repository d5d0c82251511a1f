//! Built-in example spaces with closed-form structure: a flat product, the
//! tangent bundle of a flat torus, a constant-lift line bundle, and the
//! circle fibration of the round three-sphere. Each entry packages the
//! submersion, its natural total metric, a family of default sections, and
//! the list of properties the space is documented to satisfy, so tests and
//! the command line verify recorded claims instead of re-deriving them.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::expr::{parse, ScalarExpr};
use crate::geometry::{Chart, Connection, GeomError, Metric};
use crate::report::CheckOptions;
use crate::sections::{SectError, Section};
use crate::submersion::{SubError, SubmersionSpace};

/// Names accepted by [`instantiate`] and [`broken_variant`].
pub const GALLERY_NAMES: [&str; 4] = [
    "product",
    "tangent_bundle_flat",
    "blumenthal_flat",
    "hopf",
];

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error(
        "unknown gallery name `{0}`; known entries: product, tangent_bundle_flat, blumenthal_flat, hopf"
    )]
    UnknownGalleryName(String),
    #[error("gallery `{gallery}` has no default section named `{name}`")]
    UnknownSectionName { gallery: String, name: String },
    #[error("entry `{name}` failed its construction check `{check}` (max residual {residual:e})")]
    ConstructionCheck {
        name: String,
        check: String,
        residual: f64,
    },
    #[error(transparent)]
    Sub(#[from] SubError),
    #[error(transparent)]
    Sect(#[from] SectError),
}

impl From<GeomError> for GalleryError {
    fn from(e: GeomError) -> GalleryError {
        GalleryError::Sub(SubError::Geom(e))
    }
}

/// One documented property of an entry: a machine-checkable key, the value
/// the toolkit is expected to measure, and the reason written out in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub property: String,
    pub expected: String,
    pub provenance: String,
}

/// A default section, kept as expression source so exports and reports can
/// reproduce it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSection {
    pub name: String,
    pub comps: Vec<String>,
}

/// A ready-made example space. Immutable once built; safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    name: String,
    summary: String,
    space: SubmersionSpace,
    total_metric: Metric,
    sections: Vec<NamedSection>,
    expectations: Vec<Expectation>,
}

impl GalleryEntry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn summary(&self) -> &str {
        &self.summary
    }

    pub fn space(&self) -> &SubmersionSpace {
        &self.space
    }

    /// The metric on the total space whose Levi-Civita connection agrees
    /// with the entry's connection and whose fiber-orthogonal complement is
    /// the entry's horizontal distribution.
    pub fn total_metric(&self) -> &Metric {
        &self.total_metric
    }

    pub fn named_sections(&self) -> &[NamedSection] {
        &self.sections
    }

    pub fn expectations(&self) -> &[Expectation] {
        &self.expectations
    }

    /// Build one default section by name.
    pub fn section(&self, name: &str) -> Result<Section, GalleryError> {
        let ns = self
            .sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| GalleryError::UnknownSectionName {
                gallery: self.name.clone(),
                name: name.to_string(),
            })?;
        self.compile_section(&ns.comps)
    }

    /// Build every default section, in declaration order.
    pub fn sections(&self) -> Result<Vec<(String, Section)>, GalleryError> {
        self.sections
            .iter()
            .map(|ns| Ok((ns.name.clone(), self.compile_section(&ns.comps)?)))
            .collect()
    }

    fn compile_section(&self, comps: &[String]) -> Result<Section, GalleryError> {
        let exprs = comps
            .iter()
            .map(|c| parse(c).map_err(SectError::from))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Section::new(&self.space, exprs)?)
    }
}

/// Look up a built-in entry. The affine compatibility check runs here
/// (torsion symmetry is already enforced by the connection builders), so a
/// returned entry is structurally sound.
pub fn instantiate(name: &str) -> Result<GalleryEntry, GalleryError> {
    let entry = build(name)?;
    let report = entry.space.check_affine(&CheckOptions::default())?;
    if !report.passed {
        return Err(GalleryError::ConstructionCheck {
            name: entry.name,
            check: report.check,
            residual: report.max_residual,
        });
    }
    Ok(entry)
}

/// Negative control: the same entry with `eps` added to one connection
/// coefficient — a horizontal slot on the flat-style entries (so the affine
/// check must fail) and a vertical slot on the curved one (so the skew
/// check must fail). `eps = 0` reproduces the entry unchanged. The
/// construction check is deliberately skipped.
pub fn broken_variant(name: &str, eps: f64) -> Result<GalleryEntry, GalleryError> {
    let entry = build(name)?;
    let (k, i, j) = if name == "hopf" { (2, 0, 0) } else { (0, 0, 0) };
    let conn = entry.space.connection().with_offset(k, i, j, eps);
    let space = entry.space.with_connection(conn)?;
    Ok(GalleryEntry { space, ..entry })
}

fn build(name: &str) -> Result<GalleryEntry, GalleryError> {
    match name {
        "product" => build_product(),
        "tangent_bundle_flat" => build_tangent_bundle_flat(),
        "blumenthal_flat" => build_blumenthal_flat(),
        "hopf" => build_hopf(),
        other => Err(GalleryError::UnknownGalleryName(other.to_string())),
    }
}

fn ex(s: &str) -> ScalarExpr {
    parse(s).expect("gallery expression literal")
}

fn grid(rows: &[&[&str]]) -> Vec<Vec<ScalarExpr>> {
    rows.iter()
        .map(|r| r.iter().map(|s| ex(s)).collect())
        .collect()
}

fn named_sections(raw: &[(&str, &[&str])]) -> Vec<NamedSection> {
    raw.iter()
        .map(|(n, cs)| NamedSection {
            name: (*n).to_string(),
            comps: cs.iter().map(|c| (*c).to_string()).collect(),
        })
        .collect()
}

fn expectation(property: &str, expected: &str, provenance: &str) -> Expectation {
    Expectation {
        property: property.to_string(),
        expected: expected.to_string(),
        provenance: provenance.to_string(),
    }
}

fn build_product() -> Result<GalleryEntry, GalleryError> {
    let base_chart = Chart::new(&["x1"], &[(0.0, TAU)])?;
    let base = Metric::new(base_chart, grid(&[&["1"]]))?;
    let total = Chart::new(&["x1", "y1"], &[(0.0, TAU), (-3.0, 3.0)])?;
    let total_metric = Metric::new(total.clone(), grid(&[&["1", "0"], &["0", "1"]]))?;
    let conn = Connection::product(base.clone(), total.clone())?;
    let space = SubmersionSpace::new(base, total, vec![vec![ex("0")]], conn)?;
    Ok(GalleryEntry {
        name: "product".into(),
        summary: "Flat circle times a line with the product connection; both structural tensors vanish."
            .into(),
        space,
        total_metric,
        sections: named_sections(&[
            ("zero", &["0"]),
            ("constant", &["1.5"]),
            ("linear", &["0.3*x1"]),
            ("sine", &["sin(x1)"]),
            ("two-mode", &["sin(x1) + 0.5*sin(2*x1)"]),
        ]),
        expectations: vec![
            expectation(
                "oneill-t-zero",
                "0 at every sample",
                "The connection differentiates the two factors separately, so a derivative taken inside the fiber factor never produces a horizontal component.",
            ),
            expectation(
                "oneill-a-zero",
                "0 at every sample",
                "Coordinate horizontal planes are parallel under the factor-wise rule, so horizontal derivatives of horizontal fields stay horizontal and mixed slots vanish.",
            ),
            expectation(
                "trace-c-zero",
                "0 for every default section",
                "The vertical correction is assembled from contractions of the fiber shape tensor and the integrability tensor, and both vanish on a product.",
            ),
            expectation(
                "trace-d-zero",
                "0 for every default section",
                "The horizontal correction contracts the same two tensors against the section jet, so it vanishes with them.",
            ),
            expectation(
                "map-iff-section",
                "the two harmonicity verdicts agree for every default section",
                "With both corrections identically zero the full tension is purely vertical and coincides with the vertical tension, so one vanishes exactly when the other does.",
            ),
        ],
    })
}

fn build_tangent_bundle_flat() -> Result<GalleryEntry, GalleryError> {
    let base_chart = Chart::new(&["x1", "x2"], &[(0.0, TAU), (0.0, TAU)])?;
    let base = Metric::new(base_chart, grid(&[&["1", "0"], &["0", "1"]]))?;
    let total = Chart::new(
        &["x1", "x2", "y1", "y2"],
        &[(0.0, TAU), (0.0, TAU), (-2.0, 2.0), (-2.0, 2.0)],
    )?;
    let total_metric = Metric::new(
        total.clone(),
        grid(&[
            &["1", "0", "0", "0"],
            &["0", "1", "0", "0"],
            &["0", "0", "1", "0"],
            &["0", "0", "0", "1"],
        ]),
    )?;
    let conn = Connection::flat(total.clone());
    let lift = vec![vec![ex("0"), ex("0")], vec![ex("0"), ex("0")]];
    let space = SubmersionSpace::new(base, total, lift, conn)?;
    Ok(GalleryEntry {
        name: "tangent_bundle_flat".into(),
        summary: "Tangent bundle of a flat two-torus with the lift of the flat base connection."
            .into(),
        space,
        total_metric,
        sections: named_sections(&[
            ("zero", &["0", "0"]),
            ("constant", &["0.5", "-0.3"]),
            ("linear", &["0.25*x1", "0.25*x2"]),
            ("sine", &["sin(x1)", "cos(x2)"]),
            ("mixed", &["0.5*sin(x1 + x2)", "0.3*cos(x1)"]),
        ]),
        expectations: vec![
            expectation(
                "lift-relations",
                "vertical/vertical and vertical/horizontal derivatives vanish; horizontal derivatives carry the base derivative slot by slot",
                "Over a flat base the lifted connection has vanishing coefficients in adapted coordinates, so covariant derivatives reduce to directional derivatives of component functions, and base-only coefficients have no fiber derivatives.",
            ),
            expectation(
                "oneill-t-zero",
                "0 at every sample",
                "All connection and lift coefficients vanish in this chart, so every projected covariant derivative of a frame field is zero.",
            ),
            expectation(
                "oneill-a-zero",
                "0 at every sample",
                "The horizontal distribution is coordinate-flat and the connection coefficients vanish, leaving nothing for the integrability tensor to measure.",
            ),
            expectation(
                "trace-d-zero",
                "0 for every default section",
                "The horizontal correction is a contraction of the two structural tensors, both identically zero here.",
            ),
            expectation(
                "trace-c-bracket",
                "the minus closed form equals -sum_i [H(e_i), v sigma_*(e_i)]; the plus form is its negative",
                "With both structural tensors zero only the frame brackets survive in the closed-form correction, and on this flat chart the bracket sum is the coordinate Laplacian of the section pushed into the fiber.",
            ),
            expectation(
                "map-iff-section",
                "the two harmonicity verdicts agree for every default section",
                "Vanishing structural tensors make the horizontal tension and the vertical correction vanish, so the full tension reduces to the vertical tension.",
            ),
        ],
    })
}

fn build_blumenthal_flat() -> Result<GalleryEntry, GalleryError> {
    let base_chart = Chart::new(&["x1", "x2"], &[(-2.0, 2.0), (-2.0, 2.0)])?;
    let base = Metric::new(base_chart, grid(&[&["1", "0"], &["0", "1"]]))?;
    let total = Chart::new(
        &["x1", "x2", "y1"],
        &[(-2.0, 2.0), (-2.0, 2.0), (-3.0, 3.0)],
    )?;
    // Constant submersion metric for the lift (0.4, -0.3): the horizontal
    // planes are fiber-orthogonal and the lifted frame is orthonormal.
    let total_metric = Metric::new(
        total.clone(),
        grid(&[
            &["1.16", "-0.12", "-0.4"],
            &["-0.12", "1.09", "0.3"],
            &["-0.4", "0.3", "1"],
        ]),
    )?;
    let conn = Connection::flat(total.clone());
    let lift = vec![vec![ex("0.4"), ex("-0.3")]];
    let space = SubmersionSpace::new(base, total, lift, conn)?;
    Ok(GalleryEntry {
        name: "blumenthal_flat".into(),
        summary: "Trivial line bundle over the flat plane with a constant horizontal lift and a flat connection."
            .into(),
        space,
        total_metric,
        sections: named_sections(&[
            ("zero", &["0"]),
            ("constant", &["1.2"]),
            ("linear", &["0.4*x1 - 0.3*x2"]),
            ("sine", &["sin(x1)*cos(x2)"]),
            ("saddle", &["0.5*x1*x2"]),
        ]),
        expectations: vec![
            expectation(
                "blumenthal-conditions",
                "fiber shape, mixed-slot A, and fiber derivatives of the lifted frame are all 0",
                "Every adapted frame field has constant components and the connection coefficients vanish, so each projected covariant derivative evaluates to zero outright.",
            ),
            expectation(
                "trace-d-zero",
                "0 for every default section",
                "Both structural tensors vanish for a flat connection with a constant lift, and the horizontal correction is a contraction of them.",
            ),
            expectation(
                "map-iff-section",
                "the two harmonicity verdicts agree for every default section",
                "With zero corrections the tension of a section is its vertical tension, so the two vanishing conditions coincide.",
            ),
        ],
    })
}

fn build_hopf() -> Result<GalleryEntry, GalleryError> {
    let delta = 0.05;
    let base_chart = Chart::new(&["x1", "x2"], &[(delta, PI - delta), (delta, TAU - delta)])?;
    let base = Metric::new(base_chart, grid(&[&["0.25", "0"], &["0", "0.25*sin(x1)^2"]]))?;
    let total = Chart::new(
        &["x1", "x2", "y1"],
        &[(delta, PI - delta), (delta, TAU - delta), (delta, TAU - delta)],
    )?;
    let total_metric = Metric::new(
        total.clone(),
        grid(&[
            &["0.25", "0", "0"],
            &["0", "0.25", "0.25*cos(x1)"],
            &["0", "0.25*cos(x1)", "0.25"],
        ]),
    )?;
    let conn = Connection::levi_civita(total_metric.clone());
    let lift = vec![vec![ex("0"), ex("-cos(x1)")]];
    let space = SubmersionSpace::new(base, total, lift, conn)?;
    Ok(GalleryEntry {
        name: "hopf".into(),
        summary: "Circle fibers of the round three-sphere over the half-radius two-sphere, in an angular chart away from the poles."
            .into(),
        space,
        total_metric,
        sections: named_sections(&[
            ("center", &["3"]),
            ("cosine", &["3 + 0.3*cos(x1)"]),
            ("tilt", &["3 + 0.2*x1"]),
            ("wave", &["3 + 0.4*sin(x2)"]),
            ("ripple", &["3 + 0.25*sin(x1)*cos(x2)"]),
        ]),
        expectations: vec![
            expectation(
                "oneill-t-zero",
                "0 within 1e-10",
                "The fibers are great circles, hence geodesics of the round metric, and geodesic fibers have a vanishing shape tensor.",
            ),
            expectation(
                "a-half-bracket",
                "A(X,Y) = v[X,Y]/2 on horizontal pairs",
                "For the metric's own connection with horizontal planes orthogonal to the fibers, the horizontal-horizontal integrability tensor alternates, and its alternation is half the vertical part of the bracket.",
            ),
            expectation(
                "a-alternating-pairing",
                "<A_X Y, U> = -<A_X U, Y> for horizontal X, Y and vertical U",
                "Metric compatibility moves the integrability tensor across the inner product with a sign change.",
            ),
            expectation(
                "not-integrable",
                "vertical bracket residual at least 0.1 at every sample",
                "The lifted coordinate frame brackets to sin(x1) times the fiber direction, and sin(x1) stays above 0.1 on the sampled inset of the chart.",
            ),
            expectation(
                "a-norm-constant",
                "component norm 2 on the lifted orthonormal base pair, at every sample",
                "Rotations of the three-sphere carry fibers to fibers and act transitively on the chart, so the measured size cannot depend on the sample point.",
            ),
            expectation(
                "trace-c-bracket",
                "the minus closed form equals -sum_i [H(e_i), v sigma_*(e_i)]; the plus form is its negative",
                "The shape tensor vanishes on geodesic fibers and the alternating integrability tensor contracts to zero against the symmetric metric inverse, leaving only the bracket terms.",
            ),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        covariant_derivative, lie_bracket_jets, orthonormal_frame, FieldJet, Point, VectorField,
    };
    use crate::sections::{CConvention, RowStatus};
    use crate::submersion::horizontal_from_metric;

    fn enorm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn all_entries() -> Vec<GalleryEntry> {
        GALLERY_NAMES.iter().map(|n| instantiate(n).unwrap()).collect()
    }

    // --- expectation checkers ------------------------------------------

    fn max_t_norm(space: &SubmersionSpace) -> f64 {
        let mut worst = 0.0_f64;
        for p in space.sample_points(64) {
            let ctx = space.eval_at(&p).unwrap();
            let mut fields: Vec<FieldJet> = (0..space.fiber_dim())
                .map(|a| space.v_jet(&ctx, a))
                .collect();
            fields.extend((0..space.base_dim()).map(|i| space.h_jet(&ctx, i)));
            for a in 0..space.fiber_dim() {
                let u = space.v_jet(&ctx, a);
                for f in &fields {
                    let (h, v) = space.oneill_t_jets(&ctx, &u.comps, f);
                    worst = worst.max(enorm(&h)).max(enorm(&v));
                }
            }
        }
        worst
    }

    fn max_a_norm(space: &SubmersionSpace) -> f64 {
        let mut worst = 0.0_f64;
        for p in space.sample_points(64) {
            let ctx = space.eval_at(&p).unwrap();
            let mut fields: Vec<FieldJet> = (0..space.fiber_dim())
                .map(|a| space.v_jet(&ctx, a))
                .collect();
            fields.extend((0..space.base_dim()).map(|i| space.h_jet(&ctx, i)));
            for i in 0..space.base_dim() {
                let u = space.h_jet(&ctx, i);
                for f in &fields {
                    let (h, v) = space.oneill_a_jets(&ctx, &u.comps, f);
                    worst = worst.max(enorm(&h)).max(enorm(&v));
                }
            }
        }
        worst
    }

    fn max_half_bracket_residual(space: &SubmersionSpace) -> f64 {
        let n = space.base_dim();
        let mut worst = 0.0_f64;
        for p in space.sample_points(64) {
            let ctx = space.eval_at(&p).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let hi = space.h_jet(&ctx, i);
                    let hj = space.h_jet(&ctx, j);
                    let (ha, va) = space.oneill_a_jets(&ctx, &hi.comps, &hj);
                    let br = lie_bracket_jets(&hi, &hj);
                    let (_, vbr) = space.project(&ctx, &br);
                    let res: Vec<f64> = (0..space.total_dim())
                        .map(|c| ha[c] + va[c] - 0.5 * vbr[c])
                        .collect();
                    worst = worst.max(enorm(&res));
                }
            }
        }
        worst
    }

    fn max_alternation_pairing_residual(entry: &GalleryEntry) -> f64 {
        let space = entry.space();
        let g = entry.total_metric();
        let mut worst = 0.0_f64;
        for p in space.sample_points(64) {
            let ctx = space.eval_at(&p).unwrap();
            for i in 0..space.base_dim() {
                let hi = space.h_jet(&ctx, i);
                for j in 0..space.base_dim() {
                    let hj = space.h_jet(&ctx, j);
                    let (hij, vij) = space.oneill_a_jets(&ctx, &hi.comps, &hj);
                    let axy: Vec<f64> =
                        (0..space.total_dim()).map(|c| hij[c] + vij[c]).collect();
                    for a in 0..space.fiber_dim() {
                        let u = space.v_jet(&ctx, a);
                        let (hau, vau) = space.oneill_a_jets(&ctx, &hi.comps, &u);
                        let axu: Vec<f64> =
                            (0..space.total_dim()).map(|c| hau[c] + vau[c]).collect();
                        let lhs = g.inner(&p, &axy, &u.comps).unwrap();
                        let rhs = g.inner(&p, &axu, &hj.comps).unwrap();
                        worst = worst.max((lhs + rhs).abs());
                    }
                }
            }
        }
        worst
    }

    /// Component norm of A on the lifted Gram-Schmidt base pair, assembled
    /// tensorially from the coordinate slots.
    fn a_norm_range(space: &SubmersionSpace) -> (f64, f64) {
        let n = space.base_dim();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for p in space.sample_points(64) {
            let ctx = space.eval_at(&p).unwrap();
            let frame =
                orthonormal_frame(space.base_metric(), &space.project_point(&p)).unwrap();
            let mut acc = vec![0.0; space.total_dim()];
            for k in 0..n {
                let hk = space.h_jet(&ctx, k);
                for l in 0..n {
                    let hl = space.h_jet(&ctx, l);
                    let (h, v) = space.oneill_a_jets(&ctx, &hk.comps, &hl);
                    let w = frame[0].comps[k] * frame[1].comps[l];
                    for c in 0..space.total_dim() {
                        acc[c] += w * (h[c] + v[c]);
                    }
                }
            }
            let norm = enorm(&acc);
            lo = lo.min(norm);
            hi = hi.max(norm);
        }
        (lo, hi)
    }

    fn max_trace_c_expansion(entry: &GalleryEntry) -> f64 {
        let mut worst = 0.0_f64;
        for (_, sect) in entry.sections().unwrap() {
            for x in entry.space().base_chart().sample_points(64) {
                let t = sect.trace_c(CConvention::Expansion, &x).unwrap();
                worst = worst.max(enorm(&t.comps));
            }
        }
        worst
    }

    fn max_trace_d(entry: &GalleryEntry) -> f64 {
        let mut worst = 0.0_f64;
        for (_, sect) in entry.sections().unwrap() {
            for x in entry.space().base_chart().sample_points(64) {
                let t = sect.trace_d(&x).unwrap();
                worst = worst.max(enorm(&t.comps));
            }
        }
        worst
    }

    /// `g^{kl} [H_k, W_l]` assembled directly from the section jet and the
    /// lift jet, independently of the correction-tensor code path.
    fn bracket_trace(space: &SubmersionSpace, sect: &Section, x: &Point) -> Vec<f64> {
        let n = space.base_dim();
        let r = space.fiber_dim();
        let nr = space.total_dim();
        let jet = sect.jet2(x).unwrap();
        let p = sect.value_at(x).unwrap();
        let ctx = space.eval_at(&p).unwrap();
        let ginv = space.base_metric().inverse_at(x).unwrap();
        let mut acc = vec![0.0; nr];
        for k in 0..n {
            let hk = space.h_jet(&ctx, k);
            for l in 0..n {
                // W_l extended off the section by pulling its jet back from
                // the base: comps ∂_l σ^a − h^a_l, fiber rows of the lift
                // jet with the section's second derivatives on base slots.
                let mut w = FieldJet::zero(nr);
                for a in 0..r {
                    w.comps[n + a] = jet.d1[a][l] - ctx.lift[a][l];
                    for c in 0..nr {
                        w.jac[n + a][c] = -ctx.lift_d[a][l][c];
                    }
                    for c in 0..n {
                        w.jac[n + a][c] += jet.d2[a][l][c];
                    }
                }
                let br = lie_bracket_jets(&hk, &w);
                for c in 0..nr {
                    acc[c] += ginv[(k, l)] * br[c];
                }
            }
        }
        acc
    }

    fn max_bracket_form_residual(entry: &GalleryEntry) -> f64 {
        let mut worst = 0.0_f64;
        for (_, sect) in entry.sections().unwrap() {
            for x in entry.space().base_chart().sample_points(64) {
                let b = bracket_trace(entry.space(), &sect, &x);
                let plus = sect.trace_c(CConvention::Plus, &x).unwrap().comps;
                let minus = sect.trace_c(CConvention::Minus, &x).unwrap().comps;
                let rp: Vec<f64> = plus.iter().zip(&b).map(|(p, b)| p - b).collect();
                let rm: Vec<f64> = minus.iter().zip(&b).map(|(m, b)| m + b).collect();
                worst = worst.max(enorm(&rp)).max(enorm(&rm));
            }
        }
        worst
    }

    fn map_iff_section_holds(entry: &GalleryEntry) -> bool {
        entry.sections().unwrap().iter().all(|(_, sect)| {
            let rep = sect.classify(&CheckOptions::default()).unwrap();
            rep.harmonic_map == rep.harmonic_section
                && rep.truth_table[0].status != RowStatus::Violated
        })
    }

    fn blumenthal_max(space: &SubmersionSpace) -> f64 {
        space
            .check_blumenthal(&CheckOptions::default())
            .unwrap()
            .max_residual
    }

    fn max_lift_relation_residual(entry: &GalleryEntry) -> f64 {
        let space = entry.space();
        let total = space.total_chart().clone();
        let base = space.base_chart().clone();
        let conn = space.connection();
        let xb = VectorField::new(base.clone(), vec![ex("sin(x2)"), ex("0.5*x1")]).unwrap();
        let yb = VectorField::new(base, vec![ex("cos(x1)"), ex("0.2*x1*x2")]).unwrap();
        let lift_v = |f: &VectorField| {
            let mut comps = vec![ex("0"), ex("0")];
            comps.extend(f.comps().iter().cloned());
            VectorField::new(total.clone(), comps).unwrap()
        };
        let lift_h = |f: &VectorField| {
            let mut comps: Vec<ScalarExpr> = f.comps().to_vec();
            comps.extend([ex("0"), ex("0")]);
            VectorField::new(total.clone(), comps).unwrap()
        };
        let (xv, xh) = (lift_v(&xb), lift_h(&xb));
        let (yv, yh) = (lift_v(&yb), lift_h(&yb));
        let mut worst = 0.0_f64;
        for p in space.sample_points(64) {
            let bp = space.project_point(&p);
            // Flat base: the base derivative is the plain directional
            // derivative of components.
            let dir = xb.eval(&bp).unwrap().comps;
            let jet = yb.jet(&bp).unwrap();
            let dxy: Vec<f64> = (0..2)
                .map(|i| (0..2).map(|j| dir[j] * jet.jac[i][j]).sum())
                .collect();
            let r1 = covariant_derivative(conn, &xv, &yv, &p).unwrap().comps;
            let r2 = covariant_derivative(conn, &xv, &yh, &p).unwrap().comps;
            let r3 = covariant_derivative(conn, &xh, &yv, &p).unwrap().comps;
            let r4 = covariant_derivative(conn, &xh, &yh, &p).unwrap().comps;
            worst = worst.max(enorm(&r1)).max(enorm(&r2));
            let d3: Vec<f64> = vec![r3[0], r3[1], r3[2] - dxy[0], r3[3] - dxy[1]];
            let d4: Vec<f64> = vec![r4[0] - dxy[0], r4[1] - dxy[1], r4[2], r4[3]];
            worst = worst.max(enorm(&d3)).max(enorm(&d4));
        }
        worst
    }

    fn verify_expectation(entry: &GalleryEntry, exp: &Expectation) {
        let name = entry.name();
        let key = exp.property.as_str();
        let space = entry.space();
        match key {
            "oneill-t-zero" => {
                let worst = max_t_norm(space);
                assert!(worst <= 1e-10, "{name}/{key}: max |T| = {worst:e}");
            }
            "oneill-a-zero" => {
                let worst = max_a_norm(space);
                assert!(worst <= 1e-10, "{name}/{key}: max |A| = {worst:e}");
            }
            "a-half-bracket" => {
                let worst = max_half_bracket_residual(space);
                assert!(worst <= 1e-8, "{name}/{key}: residual {worst:e}");
            }
            "a-alternating-pairing" => {
                let worst = max_alternation_pairing_residual(entry);
                assert!(worst <= 1e-8, "{name}/{key}: residual {worst:e}");
            }
            "not-integrable" => {
                let rep = space
                    .check_horizontal_integrability(&CheckOptions::default())
                    .unwrap();
                assert!(!rep.passed, "{name}/{key}: unexpectedly integrable");
                let floor = rep.parts[0].min;
                assert!(floor >= 0.1, "{name}/{key}: weakest residual {floor:e}");
            }
            "a-norm-constant" => {
                let (lo, hi) = a_norm_range(space);
                assert!(
                    (lo - 2.0).abs() <= 1e-8 && (hi - 2.0).abs() <= 1e-8,
                    "{name}/{key}: norms ranged over [{lo}, {hi}]"
                );
            }
            "trace-c-zero" => {
                let worst = max_trace_c_expansion(entry);
                assert!(worst <= 1e-10, "{name}/{key}: max |tr C| = {worst:e}");
            }
            "trace-d-zero" => {
                let worst = max_trace_d(entry);
                assert!(worst <= 1e-10, "{name}/{key}: max |tr D| = {worst:e}");
            }
            "trace-c-bracket" => {
                let worst = max_bracket_form_residual(entry);
                assert!(worst <= 1e-8, "{name}/{key}: residual {worst:e}");
            }
            "map-iff-section" => {
                assert!(map_iff_section_holds(entry), "{name}/{key}: verdicts split");
            }
            "blumenthal-conditions" => {
                let worst = blumenthal_max(space);
                assert!(worst <= 1e-10, "{name}/{key}: max residual {worst:e}");
            }
            "lift-relations" => {
                let worst = max_lift_relation_residual(entry);
                assert!(worst <= 1e-12, "{name}/{key}: residual {worst:e}");
            }
            other => panic!("{name}: expectation key `{other}` has no checker"),
        }
    }

    #[test]
    fn every_documented_expectation_is_verified() {
        for entry in all_entries() {
            assert!(!entry.expectations().is_empty(), "{}", entry.name());
            for exp in entry.expectations() {
                assert!(!exp.provenance.is_empty());
                verify_expectation(&entry, exp);
            }
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        let err = instantiate("moebius").unwrap_err();
        assert!(matches!(err, GalleryError::UnknownGalleryName(n) if n == "moebius"));
        let err = broken_variant("klein", 0.1).unwrap_err();
        assert!(matches!(err, GalleryError::UnknownGalleryName(_)));
        let entry = instantiate("product").unwrap();
        let err = entry.section("spiral").unwrap_err();
        assert!(matches!(
            err,
            GalleryError::UnknownSectionName { gallery, name }
                if gallery == "product" && name == "spiral"
        ));
    }

    #[test]
    fn product_affine_residual_is_exactly_zero() {
        let entry = instantiate("product").unwrap();
        let rep = entry.space().check_affine(&CheckOptions::default()).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn projector_algebra_is_tight_on_every_entry() {
        let opts = CheckOptions {
            tolerance: 1e-12,
            samples: 64,
        };
        for entry in all_entries() {
            let rep = entry.space().check_projectors(&opts).unwrap();
            assert!(rep.passed, "{}: {:e}", entry.name(), rep.max_residual);
        }
    }

    #[test]
    fn hopf_passes_skew_but_not_integrability() {
        let entry = instantiate("hopf").unwrap();
        let opts = CheckOptions::default();
        assert!(entry.space().check_skew(&opts).unwrap().passed);
        assert!(!entry
            .space()
            .check_horizontal_integrability(&opts)
            .unwrap()
            .passed);
        // The stricter three-condition class is out of reach: A is nonzero
        // on mixed slots.
        let blu = entry.space().check_blumenthal(&opts).unwrap();
        assert!(!blu.passed);
        assert!(blu.part("A on mixed slots").unwrap().max > 0.1);
        // Projector ranks: two horizontal directions, one vertical.
        let p = Point::new(&[1.1, 2.0, 3.0]);
        let pp = entry.space().projectors(&p).unwrap();
        assert_eq!(pp.h.rank(1e-10), 2);
        assert_eq!(pp.v.rank(1e-10), 1);
    }

    #[test]
    fn hopf_closed_form_lift_matches_the_metric() {
        let entry = instantiate("hopf").unwrap();
        let derived = horizontal_from_metric(entry.total_metric(), 2).unwrap();
        let chart = entry.space().total_chart();
        for (row_d, row_e) in derived.iter().zip(entry.space().lift_exprs()) {
            for (d, e) in row_d.iter().zip(row_e) {
                let cd = chart.compile(d).unwrap();
                let ce = chart.compile(e).unwrap();
                for p in chart.sample_points(64) {
                    let a = cd.eval(p.coords()).unwrap();
                    let b = ce.eval(p.coords()).unwrap();
                    assert!((a - b).abs() <= 1e-12, "lift mismatch at {:?}", p);
                }
            }
        }
    }

    #[test]
    fn closed_form_correction_traces() {
        // Flat tangent bundle: tr C(minus) is the fiberwise Laplacian of
        // the section with the sign flipped, here (sin x1, cos x2).
        let tbf = instantiate("tangent_bundle_flat").unwrap();
        let sect = tbf.section("sine").unwrap();
        for x in tbf.space().base_chart().sample_points(64) {
            let t = sect.trace_c(CConvention::Minus, &x).unwrap().comps;
            let expect = [0.0, 0.0, x.coords()[0].sin(), x.coords()[1].cos()];
            for (a, b) in t.iter().zip(expect.iter()) {
                assert!((a - b).abs() <= 1e-8, "at {:?}: {t:?}", x);
            }
            let d = sect.trace_d(&x).unwrap().comps;
            assert!(enorm(&d) <= 1e-10);
        }
        // Curved entry, fiber component 3 + 0.3 cos(x1): the bracket trace
        // collapses to 1.2 cos(x1) in the fiber slot.
        let hopf = instantiate("hopf").unwrap();
        let sect = hopf.section("cosine").unwrap();
        for x in hopf.space().base_chart().sample_points(64) {
            let t = sect.trace_c(CConvention::Minus, &x).unwrap().comps;
            let expect = [0.0, 0.0, 1.2 * x.coords()[0].cos()];
            for (a, b) in t.iter().zip(expect.iter()) {
                assert!((a - b).abs() <= 1e-8, "at {:?}: {t:?}", x);
            }
        }
    }

    #[test]
    fn broken_variants_fail_their_checks() {
        let opts = CheckOptions::default();
        for name in GALLERY_NAMES {
            let clean = instantiate(name).unwrap();
            let b0 = broken_variant(name, 0.0).unwrap();
            let (ca, cs) = (
                clean.space().check_affine(&opts).unwrap(),
                clean.space().check_skew(&opts).unwrap(),
            );
            let (za, zs) = (
                b0.space().check_affine(&opts).unwrap(),
                b0.space().check_skew(&opts).unwrap(),
            );
            assert_eq!(ca.max_residual, za.max_residual, "{name}");
            assert_eq!(cs.max_residual, zs.max_residual, "{name}");

            for eps in [0.01, 0.1] {
                let broken = broken_variant(name, eps).unwrap();
                let rep = if name == "hopf" {
                    // The vertical-slot perturbation leaves the horizontal
                    // projection alone, so the affine check still passes.
                    assert!(broken.space().check_affine(&opts).unwrap().passed);
                    broken.space().check_skew(&opts).unwrap()
                } else {
                    broken.space().check_affine(&opts).unwrap()
                };
                assert!(!rep.passed, "{name} eps={eps}");
                if eps >= 0.1 {
                    assert!(rep.max_residual >= 1e-2, "{name}: {:e}", rep.max_residual);
                }
            }
        }
    }

    #[test]
    fn sections_are_plentiful_and_resolvable() {
        for entry in all_entries() {
            let built = entry.sections().unwrap();
            assert!(built.len() >= 5, "{}: {}", entry.name(), built.len());
            for ns in entry.named_sections() {
                entry.section(&ns.name).unwrap();
            }
        }
        let product = instantiate("product").unwrap();
        let opts = CheckOptions::default();
        let zero = product.section("zero").unwrap().classify(&opts).unwrap();
        assert!(zero.harmonic_map && zero.harmonic_section);
        let sine = product.section("sine").unwrap().classify(&opts).unwrap();
        assert!(!sine.harmonic_map && !sine.harmonic_section);
    }

    #[test]
    fn metadata_serializes() {
        let entry = instantiate("hopf").unwrap();
        let s = serde_json::to_string(entry.expectations()).unwrap();
        let back: Vec<Expectation> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, entry.expectations());
        let s = serde_json::to_string(entry.named_sections()).unwrap();
        let back: Vec<NamedSection> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, entry.named_sections());
    }
}
