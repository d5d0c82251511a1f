//! On-disk geometry definitions.
//!
//! A definition is a versioned TOML document declaring a base chart and
//! metric, fiber coordinates, a horizontal lift (explicit coefficients or
//! derived from a declared total metric), a connection (a directive or an
//! explicit coefficient table), and named sections. Loading validates the
//! whole document — one bad field rejects it with a path diagnostic — and
//! produces the same [`SubmersionSpace`] the built-in entries use, so every
//! check and experiment runs identically on user files. Built-in entries
//! export to this format with their expression sources intact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, ExprError, ScalarExpr};
use crate::gallery::{GalleryEntry, NamedSection};
use crate::geometry::{Chart, Connection, Metric, DEFAULT_SAMPLES};
use crate::sections::Section;
use crate::submersion::{horizontal_from_metric, SubmersionSpace};

pub const GEOMFILE_SCHEMA: &str = "geomfile/1";

const CONNECTION_KINDS: [&str; 4] = ["levi-civita", "table", "product", "horizontal-lift"];

#[derive(Debug, Error)]
pub enum GeomFileError {
    #[error("not a geometry document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema `{found}` (this build reads `geomfile/1`)")]
    Schema { found: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Expr {
        path: String,
        #[source]
        source: ExprError,
    },
    #[error("no section named `{0}` in this document")]
    UnknownSection(String),
}

fn invalid(path: impl Into<String>, message: impl ToString) -> GeomFileError {
    GeomFileError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseDecl {
    pub coords: Vec<String>,
    pub intervals: Vec<[f64; 2]>,
    /// Metric entries as expression strings over the base coordinates.
    pub metric: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberDecl {
    pub coords: Vec<String>,
    pub intervals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftDecl {
    /// `coefficients[a][i]` is the fiber-`a` component of the lift of the
    /// i-th base coordinate field, over the total coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<String>>>,
    /// Derive the lift from the declared total metric instead: horizontal
    /// means fiber-orthogonal.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub from_metric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TotalMetricDecl {
    pub entries: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionDecl {
    /// One of `levi-civita` (of the total metric), `table` (explicit
    /// coefficients), `product` (base Levi-Civita extended by zeros), or
    /// `horizontal-lift` (lift of a chart-flat base connection).
    pub kind: String,
    /// `table[k][i][j]` over the total coordinates; required exactly when
    /// `kind = "table"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<Vec<String>>>>,
}

/// The parsed document. Field layout mirrors the file; [`Self::build`]
/// turns it into live geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub base: BaseDecl,
    pub fiber: FiberDecl,
    pub lift: LiftDecl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_metric: Option<TotalMetricDecl>,
    pub connection: ConnectionDecl,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<NamedSection>,
}

/// A geometry built from a document: the space, the declared total metric
/// if any, and the named sections ready to compile.
#[derive(Debug, Clone)]
pub struct LoadedGeometry {
    pub name: String,
    pub summary: Option<String>,
    pub space: SubmersionSpace,
    pub total_metric: Option<Metric>,
    pub sections: Vec<NamedSection>,
}

impl LoadedGeometry {
    pub fn section(&self, name: &str) -> Result<Section, GeomFileError> {
        let ns = self
            .sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| GeomFileError::UnknownSection(name.to_string()))?;
        let comps = parse_all(&ns.comps, &format!("sections `{name}` comps"))?;
        Section::new(&self.space, comps)
            .map_err(|e| invalid(format!("sections `{name}`"), e))
    }
}

/// Parse and validate a document without building geometry.
pub fn parse_geometry(text: &str) -> Result<GeometryFile, GeomFileError> {
    let file: GeometryFile = toml::from_str(text)?;
    if file.schema != GEOMFILE_SCHEMA {
        return Err(GeomFileError::Schema {
            found: file.schema,
        });
    }
    file.validate()?;
    Ok(file)
}

/// Parse, validate, and build in one step.
pub fn load_geometry(text: &str) -> Result<LoadedGeometry, GeomFileError> {
    parse_geometry(text)?.build()
}

impl GeometryFile {
    /// Structural validation: shapes, counts, directive consistency. The
    /// first violation is returned and the document is rejected as a whole.
    pub fn validate(&self) -> Result<(), GeomFileError> {
        if self.name.is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let n = self.base.coords.len();
        if n == 0 {
            return Err(invalid("base.coords", "at least one base coordinate"));
        }
        if self.base.intervals.len() != n {
            return Err(invalid(
                "base.intervals",
                format!("{} intervals for {} coordinates", self.base.intervals.len(), n),
            ));
        }
        check_square("base.metric", &self.base.metric, n)?;
        let r = self.fiber.coords.len();
        if r == 0 {
            return Err(invalid("fiber.coords", "at least one fiber coordinate"));
        }
        if self.fiber.intervals.len() != r {
            return Err(invalid(
                "fiber.intervals",
                format!("{} intervals for {} coordinates", self.fiber.intervals.len(), r),
            ));
        }
        match (&self.lift.coefficients, self.lift.from_metric) {
            (Some(_), true) => {
                return Err(invalid(
                    "lift",
                    "declare either coefficients or from_metric = true, not both",
                ));
            }
            (None, false) => {
                return Err(invalid(
                    "lift",
                    "declare either coefficients or from_metric = true",
                ));
            }
            (Some(rows), false) => {
                if rows.len() != r {
                    return Err(invalid(
                        "lift.coefficients",
                        format!("{} rows for {} fiber coordinates", rows.len(), r),
                    ));
                }
                for (a, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(invalid(
                            format!("lift.coefficients[{a}]"),
                            format!("{} entries for {} base coordinates", row.len(), n),
                        ));
                    }
                }
            }
            (None, true) => {
                if self.total_metric.is_none() {
                    return Err(invalid(
                        "lift.from_metric",
                        "requires a [total_metric] table",
                    ));
                }
            }
        }
        if let Some(tm) = &self.total_metric {
            check_square("total_metric.entries", &tm.entries, n + r)?;
        }
        let kind = self.connection.kind.as_str();
        if !CONNECTION_KINDS.contains(&kind) {
            return Err(invalid(
                "connection.kind",
                format!("unknown kind `{kind}`; one of levi-civita, table, product, horizontal-lift"),
            ));
        }
        match (kind, &self.connection.table) {
            ("table", None) => {
                return Err(invalid(
                    "connection.table",
                    "required for connection.kind = \"table\"",
                ));
            }
            ("table", Some(table)) => {
                let d = n + r;
                if table.len() != d {
                    return Err(invalid(
                        "connection.table",
                        format!("{} coefficient matrices for {} total coordinates", table.len(), d),
                    ));
                }
                for (k, mat) in table.iter().enumerate() {
                    check_square(&format!("connection.table[{k}]"), mat, d)?;
                }
            }
            (_, Some(_)) => {
                return Err(invalid(
                    "connection.table",
                    format!("only allowed for connection.kind = \"table\", not `{kind}`"),
                ));
            }
            (_, None) => {}
        }
        if kind == "levi-civita" && self.total_metric.is_none() {
            return Err(invalid(
                "total_metric",
                "required for connection.kind = \"levi-civita\"",
            ));
        }
        for (s, sec) in self.sections.iter().enumerate() {
            if sec.name.is_empty() {
                return Err(invalid(format!("sections[{s}].name"), "must not be empty"));
            }
            if self.sections[..s].iter().any(|o| o.name == sec.name) {
                return Err(invalid(
                    format!("sections[{s}].name"),
                    format!("duplicate section name `{}`", sec.name),
                ));
            }
            if sec.comps.len() != r {
                return Err(invalid(
                    format!("sections[{s}].comps"),
                    format!("{} components for {} fiber coordinates", sec.comps.len(), r),
                ));
            }
        }
        Ok(())
    }

    /// Compile the document into live geometry. Every expression is parsed
    /// and bound against its declaring chart, so an undeclared variable or
    /// a bad formula is reported by field path.
    pub fn build(&self) -> Result<LoadedGeometry, GeomFileError> {
        self.validate()?;
        let n = self.base.coords.len();
        let r = self.fiber.coords.len();

        let base_names: Vec<&str> = self.base.coords.iter().map(String::as_str).collect();
        let base_domain: Vec<(f64, f64)> =
            self.base.intervals.iter().map(|iv| (iv[0], iv[1])).collect();
        let base_chart =
            Chart::new(&base_names, &base_domain).map_err(|e| invalid("base", e))?;

        let base_grid = parse_grid(&self.base.metric, "base.metric")?;
        compile_grid(&base_chart, &self.base.metric, "base.metric")?;
        let base_metric =
            Metric::new(base_chart.clone(), base_grid).map_err(|e| invalid("base.metric", e))?;

        let mut total_names = base_names.clone();
        total_names.extend(self.fiber.coords.iter().map(String::as_str));
        let mut total_domain = base_domain.clone();
        total_domain.extend(self.fiber.intervals.iter().map(|iv| (iv[0], iv[1])));
        let total_chart =
            Chart::new(&total_names, &total_domain).map_err(|e| invalid("fiber", e))?;

        let total_metric = match &self.total_metric {
            Some(tm) => {
                let grid = parse_grid(&tm.entries, "total_metric.entries")?;
                compile_grid(&total_chart, &tm.entries, "total_metric.entries")?;
                Some(
                    Metric::new(total_chart.clone(), grid)
                        .map_err(|e| invalid("total_metric", e))?,
                )
            }
            None => None,
        };

        let lift: Vec<Vec<ScalarExpr>> = match &self.lift.coefficients {
            Some(rows) => {
                let mut out = Vec::with_capacity(r);
                for (a, row) in rows.iter().enumerate() {
                    let path = format!("lift.coefficients[{a}]");
                    let exprs = parse_all(row, &path)?;
                    for (i, e) in exprs.iter().enumerate() {
                        total_chart
                            .compile(e)
                            .map_err(|err| invalid(format!("{path}[{i}]"), err))?;
                    }
                    out.push(exprs);
                }
                out
            }
            None => horizontal_from_metric(total_metric.as_ref().expect("validated"), n)
                .map_err(|e| invalid("lift.from_metric", e))?,
        };

        let conn = match self.connection.kind.as_str() {
            "levi-civita" => {
                Connection::levi_civita(total_metric.clone().expect("validated"))
            }
            "product" => Connection::product(base_metric.clone(), total_chart.clone())
                .map_err(|e| invalid("connection.kind", e))?,
            "horizontal-lift" => {
                horizontal_lift_connection(&base_metric, &total_chart, &lift)?
            }
            "table" => {
                let table = self.connection.table.as_ref().expect("validated");
                let mut gamma = Vec::with_capacity(n + r);
                for (k, mat) in table.iter().enumerate() {
                    let mut rows = Vec::with_capacity(n + r);
                    for (i, row) in mat.iter().enumerate() {
                        let path = format!("connection.table[{k}][{i}]");
                        let exprs = parse_all(row, &path)?;
                        for (j, e) in exprs.iter().enumerate() {
                            total_chart
                                .compile(e)
                                .map_err(|err| invalid(format!("{path}[{j}]"), err))?;
                        }
                        rows.push(exprs);
                    }
                    gamma.push(rows);
                }
                Connection::from_table(total_chart.clone(), &gamma)
                    .map_err(|e| invalid("connection.table", e))?
            }
            _ => unreachable!("validated"),
        };

        for (s, sec) in self.sections.iter().enumerate() {
            let path = format!("sections[{s}].comps");
            let exprs = parse_all(&sec.comps, &path)?;
            for (a, e) in exprs.iter().enumerate() {
                base_chart
                    .compile(e)
                    .map_err(|err| invalid(format!("{path}[{a}]"), err))?;
            }
        }

        let space = SubmersionSpace::new(base_metric, total_chart, lift, conn)
            .map_err(|e| invalid("geometry", e))?;
        Ok(LoadedGeometry {
            name: self.name.clone(),
            summary: self.summary.clone(),
            space,
            total_metric,
            sections: self.sections.clone(),
        })
    }

    /// Serialize back to TOML. Stable: the same document value always
    /// produces the same bytes.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("geometry document serializes")
    }
}

fn check_square(path: &str, grid: &[Vec<String>], d: usize) -> Result<(), GeomFileError> {
    if grid.len() != d {
        return Err(invalid(path, format!("{} rows for dimension {}", grid.len(), d)));
    }
    for (i, row) in grid.iter().enumerate() {
        if row.len() != d {
            return Err(invalid(
                format!("{path}[{i}]"),
                format!("{} entries for dimension {}", row.len(), d),
            ));
        }
    }
    Ok(())
}

fn parse_all(sources: &[String], path: &str) -> Result<Vec<ScalarExpr>, GeomFileError> {
    sources
        .iter()
        .enumerate()
        .map(|(k, src)| {
            parse(src).map_err(|source| GeomFileError::Expr {
                path: format!("{path}[{k}]"),
                source,
            })
        })
        .collect()
}

fn parse_grid(grid: &[Vec<String>], path: &str) -> Result<Vec<Vec<ScalarExpr>>, GeomFileError> {
    grid.iter()
        .enumerate()
        .map(|(i, row)| parse_all(row, &format!("{path}[{i}]")))
        .collect()
}

fn compile_grid(chart: &Chart, grid: &[Vec<String>], path: &str) -> Result<(), GeomFileError> {
    for (i, row) in grid.iter().enumerate() {
        for (j, src) in row.iter().enumerate() {
            let expr = parse(src).map_err(|source| GeomFileError::Expr {
                path: format!("{path}[{i}][{j}]"),
                source,
            })?;
            chart
                .compile(&expr)
                .map_err(|e| invalid(format!("{path}[{i}][{j}]"), e))?;
        }
    }
    Ok(())
}

/// The lift of a flat base connection is only expressible as a zero table
/// in adapted coordinates, so the directive insists on a chart-flat base
/// and vanishing lift coefficients and rejects anything else.
fn horizontal_lift_connection(
    base_metric: &Metric,
    total_chart: &Chart,
    lift: &[Vec<ScalarExpr>],
) -> Result<Connection, GeomFileError> {
    let base_lc = Connection::levi_civita(base_metric.clone());
    let nb = base_metric.chart().dim();
    for p in base_metric.chart().sample_points(DEFAULT_SAMPLES) {
        let gamma = base_lc.at(&p).map_err(|e| invalid("connection.kind", e))?;
        for k in 0..nb {
            for i in 0..nb {
                for j in 0..nb {
                    let v = gamma.get(k, i, j);
                    if v.abs() > 1e-12 {
                        return Err(invalid(
                            "connection.kind",
                            format!(
                                "horizontal-lift needs a chart-flat base metric; base coefficient ({k},{i},{j}) = {v:e} at {:?}",
                                p.coords()
                            ),
                        ));
                    }
                }
            }
        }
    }
    for (a, row) in lift.iter().enumerate() {
        for (i, e) in row.iter().enumerate() {
            let compiled = total_chart
                .compile(e)
                .map_err(|err| invalid(format!("lift.coefficients[{a}][{i}]"), err))?;
            for p in total_chart.sample_points(DEFAULT_SAMPLES) {
                let v = compiled
                    .eval(p.coords())
                    .map_err(|err| invalid(format!("lift.coefficients[{a}][{i}]"), err))?;
                if v != 0.0 {
                    return Err(invalid(
                        format!("lift.coefficients[{a}][{i}]"),
                        format!(
                            "horizontal-lift needs vanishing lift coefficients; found {v} at {:?}",
                            p.coords()
                        ),
                    ));
                }
            }
        }
    }
    Ok(Connection::flat(total_chart.clone()))
}

/// Export a built-in entry as a document whose expressions are the entry's
/// own sources, so reloading reproduces its residuals exactly.
pub fn export_entry(entry: &GalleryEntry) -> Result<GeometryFile, GeomFileError> {
    let space = entry.space();
    let n = space.base_dim();
    // Directives mirror each entry's construction; anything else (e.g. a
    // perturbed variant) has no document form.
    let kind = match entry.name() {
        "product" | "blumenthal_flat" => "product",
        "tangent_bundle_flat" => "horizontal-lift",
        "hopf" => "levi-civita",
        other => {
            return Err(invalid(
                "connection",
                format!("no export rule for entry `{other}`"),
            ));
        }
    };
    let base_chart = space.base_chart();
    let total_chart = space.total_chart();
    let base = BaseDecl {
        coords: base_chart.names().to_vec(),
        intervals: base_chart.domain().iter().map(|&(lo, hi)| [lo, hi]).collect(),
        metric: metric_grid(space.base_metric(), n),
    };
    let fiber = FiberDecl {
        coords: total_chart.names()[n..].to_vec(),
        intervals: total_chart.domain()[n..]
            .iter()
            .map(|&(lo, hi)| [lo, hi])
            .collect(),
    };
    let lift = LiftDecl {
        coefficients: Some(
            space
                .lift_exprs()
                .iter()
                .map(|row| row.iter().map(ToString::to_string).collect())
                .collect(),
        ),
        from_metric: false,
    };
    let total_metric = Some(TotalMetricDecl {
        entries: metric_grid(entry.total_metric(), n + space.fiber_dim()),
    });
    Ok(GeometryFile {
        schema: GEOMFILE_SCHEMA.to_string(),
        name: entry.name().to_string(),
        summary: Some(entry.summary().to_string()),
        base,
        fiber,
        lift,
        total_metric,
        connection: ConnectionDecl {
            kind: kind.to_string(),
            table: None,
        },
        sections: entry.named_sections().to_vec(),
    })
}

fn metric_grid(metric: &Metric, d: usize) -> Vec<Vec<String>> {
    (0..d)
        .map(|i| (0..d).map(|j| metric.entry(i, j).to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{instantiate, GALLERY_NAMES};
    use crate::report::CheckOptions;

    const FLAT_LINE_BUNDLE: &str = r#"
schema = "geomfile/1"
name = "tilted-line-bundle"

[base]
coords = ["x1", "x2"]
intervals = [[-2.0, 2.0], [-2.0, 2.0]]
metric = [["1", "0"], ["0", "1"]]

[fiber]
coords = ["y1"]
intervals = [[-3.0, 3.0]]

[lift]
from_metric = true

[total_metric]
entries = [
    ["1.16", "-0.12", "-0.4"],
    ["-0.12", "1.09", "0.3"],
    ["-0.4", "0.3", "1"],
]

[connection]
kind = "product"

[[sections]]
name = "plane"
comps = ["0.4*x1 - 0.3*x2"]

[[sections]]
name = "bump"
comps = ["sin(x1)*cos(x2)"]
"#;

    #[test]
    fn a_document_loads_and_runs() {
        let loaded = load_geometry(FLAT_LINE_BUNDLE).unwrap();
        assert_eq!(loaded.name, "tilted-line-bundle");
        assert_eq!(loaded.space.base_dim(), 2);
        assert_eq!(loaded.space.fiber_dim(), 1);
        // from_metric recovers the constant lift the metric encodes.
        let chart = loaded.space.total_chart();
        let h = [
            chart.compile(&loaded.space.lift_exprs()[0][0]).unwrap(),
            chart.compile(&loaded.space.lift_exprs()[0][1]).unwrap(),
        ];
        for p in chart.sample_points(16) {
            assert!((h[0].eval(p.coords()).unwrap() - 0.4).abs() <= 1e-12);
            assert!((h[1].eval(p.coords()).unwrap() + 0.3).abs() <= 1e-12);
        }
        let opts = CheckOptions::default();
        assert!(loaded.space.check_affine(&opts).unwrap().passed);
        assert!(loaded.space.check_blumenthal(&opts).unwrap().passed);
        loaded.section("plane").unwrap();
        loaded.section("bump").unwrap();
        assert!(matches!(
            loaded.section("nope").unwrap_err(),
            GeomFileError::UnknownSection(n) if n == "nope"
        ));
    }

    fn path_of(err: &GeomFileError) -> &str {
        match err {
            GeomFileError::Invalid { path, .. } | GeomFileError::Expr { path, .. } => path,
            other => panic!("expected a path diagnostic, got {other:?}"),
        }
    }

    /// Swap one line of the reference document and assert the reported
    /// field path.
    fn rejects(needle: &str, replacement: &str, want_path: &str) {
        let text = FLAT_LINE_BUNDLE.replace(needle, replacement);
        assert_ne!(text, FLAT_LINE_BUNDLE, "needle `{needle}` not found");
        let err = load_geometry(&text).unwrap_err();
        assert_eq!(path_of(&err), want_path, "{err}");
    }

    #[test]
    fn violations_carry_field_paths() {
        rejects(
            r#"intervals = [[-2.0, 2.0], [-2.0, 2.0]]"#,
            r#"intervals = [[-2.0, 2.0]]"#,
            "base.intervals",
        );
        rejects(
            r#"metric = [["1", "0"], ["0", "1"]]"#,
            r#"metric = [["1", "0"], ["0"]]"#,
            "base.metric[1]",
        );
        rejects(
            r#"metric = [["1", "0"], ["0", "1"]]"#,
            r#"metric = [["1", "0"], ["0", "y1"]]"#,
            "base.metric[1][1]",
        );
        rejects(
            r#"metric = [["1", "0"], ["0", "1"]]"#,
            r#"metric = [["1", "0"], ["0", "1 +"]]"#,
            "base.metric[1][1]",
        );
        rejects("from_metric = true", "", "lift");
        rejects(
            "from_metric = true",
            r#"coefficients = [["0.4"]]"#,
            "lift.coefficients[0]",
        );
        rejects(
            "from_metric = true",
            "from_metric = true\ncoefficients = [[\"0.4\", \"-0.3\"]]",
            "lift",
        );
        rejects(
            r#"["-0.4", "0.3", "1"],"#,
            r#"["-0.4", "0.3"],"#,
            "total_metric.entries[2]",
        );
        rejects(r#"kind = "product""#, r#"kind = "magic""#, "connection.kind");
        rejects(
            r#"kind = "product""#,
            r#"kind = "table""#,
            "connection.table",
        );
        rejects(
            r#"comps = ["0.4*x1 - 0.3*x2"]"#,
            r#"comps = ["0.4*x1", "0"]"#,
            "sections[0].comps",
        );
        rejects(
            r#"comps = ["sin(x1)*cos(x2)"]"#,
            r#"comps = ["sin(q)"]"#,
            "sections[1].comps[0]",
        );
        rejects(
            r#"name = "bump""#,
            r#"name = "plane""#,
            "sections[1].name",
        );
        // Intervals are validated by the chart with the offending
        // coordinate named; the path points at the declaring table.
        rejects(
            r#"intervals = [[-3.0, 3.0]]"#,
            r#"intervals = [[3.0, -3.0]]"#,
            "fiber",
        );
    }

    #[test]
    fn unknown_keys_and_schemas_are_rejected() {
        let err = load_geometry(&FLAT_LINE_BUNDLE.replace("[lift]", "[lyft]")).unwrap_err();
        assert!(matches!(err, GeomFileError::Parse(_)), "{err}");
        assert!(err.to_string().contains("lyft"), "{err}");

        let err =
            load_geometry(&FLAT_LINE_BUNDLE.replace("geomfile/1", "geomfile/9")).unwrap_err();
        assert!(matches!(err, GeomFileError::Schema { found } if found == "geomfile/9"));

        let err = load_geometry("schema = 3").unwrap_err();
        assert!(matches!(err, GeomFileError::Parse(_)), "{err}");
    }

    #[test]
    fn levi_civita_needs_the_total_metric() {
        let text = FLAT_LINE_BUNDLE
            .replace(r#"kind = "product""#, r#"kind = "levi-civita""#)
            .replace("from_metric = true", r#"coefficients = [["0.4", "-0.3"]]"#);
        let without: String = text
            .split("[total_metric]")
            .next()
            .unwrap()
            .to_string()
            + text.split("[connection]").nth(1).map(|rest| format!("[connection]{rest}")).unwrap().as_str();
        let err = load_geometry(&without).unwrap_err();
        assert_eq!(path_of(&err), "total_metric");
    }

    #[test]
    fn horizontal_lift_directive_is_guarded() {
        // Accepted: flat base, zero lift.
        let ok = FLAT_LINE_BUNDLE
            .replace(r#"kind = "product""#, r#"kind = "horizontal-lift""#)
            .replace("from_metric = true", r#"coefficients = [["0", "0"]]"#);
        let loaded = load_geometry(&ok).unwrap();
        assert!(loaded
            .space
            .check_affine(&CheckOptions::default())
            .unwrap()
            .passed);
        // Rejected: nonzero lift.
        let bad_lift = FLAT_LINE_BUNDLE
            .replace(r#"kind = "product""#, r#"kind = "horizontal-lift""#)
            .replace("from_metric = true", r#"coefficients = [["0.4", "-0.3"]]"#);
        let err = load_geometry(&bad_lift).unwrap_err();
        assert_eq!(path_of(&err), "lift.coefficients[0][0]");
        // Rejected: curved base.
        let curved = ok.replace(
            r#"metric = [["1", "0"], ["0", "1"]]"#,
            r#"metric = [["1", "0"], ["0", "1 + 0.5*sin(x1)^2"]]"#,
        );
        let err = load_geometry(&curved).unwrap_err();
        assert_eq!(path_of(&err), "connection.kind");
    }

    #[test]
    fn explicit_table_makes_a_broken_variant_file() {
        let text = FLAT_LINE_BUNDLE
            .replace(
                r#"kind = "product""#,
                r#"kind = "table"
table = [
    [["0.1", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]],
    [["0", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]],
    [["0", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]],
]"#,
            )
            .replace("from_metric = true", r#"coefficients = [["0.4", "-0.3"]]"#);
        let loaded = load_geometry(&text).unwrap();
        let rep = loaded
            .space
            .check_affine(&CheckOptions::default())
            .unwrap();
        assert!(!rep.passed);
        assert!(rep.max_residual >= 1e-2);
        // Asymmetric tables never construct.
        let asym = text.replace(
            r#"[["0.1", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]],"#,
            r#"[["0", "0.1", "0"], ["0", "0", "0"], ["0", "0", "0"]],"#,
        );
        let err = load_geometry(&asym).unwrap_err();
        assert_eq!(path_of(&err), "connection.table");
    }

    /// Pass/fail and exact max residual of every structural check, used to
    /// compare a space against its reloaded double.
    fn check_fingerprint(
        space: &SubmersionSpace,
        opts: &CheckOptions,
    ) -> Vec<(String, bool, f64)> {
        [
            space.check_affine(opts).unwrap(),
            space.check_skew(opts).unwrap(),
            space.check_projectors(opts).unwrap(),
            space.check_horizontal_integrability(opts).unwrap(),
        ]
        .iter()
        .map(|r| (r.check.clone(), r.passed, r.max_residual))
        .collect()
    }

    #[test]
    fn gallery_entries_round_trip_with_identical_residuals() {
        let opts = CheckOptions::default();
        for name in GALLERY_NAMES {
            let entry = instantiate(name).unwrap();
            let doc = export_entry(&entry).unwrap();
            let text = doc.to_toml();
            // The document itself is byte-stable.
            assert_eq!(parse_geometry(&text).unwrap().to_toml(), text, "{name}");
            let loaded = load_geometry(&text).unwrap();
            assert_eq!(loaded.name, name);
            assert_eq!(loaded.sections.len(), entry.named_sections().len());
            assert_eq!(
                check_fingerprint(entry.space(), &opts),
                check_fingerprint(&loaded.space, &opts),
                "{name}"
            );
        }
    }
}
