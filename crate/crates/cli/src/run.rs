//! Command implementations. Every command resolves its inputs (exit 2 on
//! any input problem), does the work, writes the report, and reports hard
//! failures (exit 1) after the report is out, so a failing run still leaves
//! a full document behind.

use std::fs;

use harmonic_sections::expr::parse;
use harmonic_sections::flow::{grid_from_expr, mode_amplitude, mode_rate, tension_flow, FlowError};
use harmonic_sections::gallery::{broken_variant, instantiate, NamedSection, GALLERY_NAMES};
use harmonic_sections::geomfile::{export_entry, load_geometry};
use harmonic_sections::geometry::Point;
use harmonic_sections::report::{CheckOptions, CheckReport};
use harmonic_sections::sections::{CConvention, RowStatus, Section};
use harmonic_sections::stochastic::{
    brownian_paths, pathwise_form_transfer_experiment, tension_transfer_experiment,
    vertical_form, FirstOrderForm,
};
use harmonic_sections::submersion::SubmersionSpace;

use crate::report::{CheckRow, ExperimentRow, FlowRow, RunReport, SectionRow, Status};
use crate::{FlowArgs, SimulateArgs, SkewPolicy, VerifyArgs};

/// How a command ends: input problems exit 2, check failures exit 1.
pub enum Failure {
    Input(String),
    Check(String),
}

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

/// A geometry plus its named sections, from either a built-in entry or a
/// definition file, with the canonical text that seeds the input digest.
struct Resolved {
    label: String,
    space: SubmersionSpace,
    sections: Vec<NamedSection>,
    digest_payload: String,
}

fn resolve_geometry(arg: &str, broken: Option<f64>) -> Result<Resolved, Failure> {
    if GALLERY_NAMES.contains(&arg) {
        let entry = instantiate(arg).map_err(input)?;
        let mut payload = export_entry(&entry).map_err(input)?.to_toml();
        let entry = match broken {
            Some(eps) => {
                payload.push_str(&format!("\n# broken eps = {eps}\n"));
                broken_variant(arg, eps).map_err(input)?
            }
            None => entry,
        };
        Ok(Resolved {
            label: arg.to_string(),
            space: entry.space().clone(),
            sections: entry.named_sections().to_vec(),
            digest_payload: payload,
        })
    } else if broken.is_some() {
        Err(Failure::Input(
            "--broken applies only to built-in geometries".to_string(),
        ))
    } else {
        let text = fs::read_to_string(arg)
            .map_err(|e| Failure::Input(format!("cannot read geometry `{arg}`: {e}")))?;
        let loaded = load_geometry(&text).map_err(input)?;
        Ok(Resolved {
            label: loaded.name.clone(),
            space: loaded.space,
            sections: loaded.sections,
            digest_payload: text,
        })
    }
}

/// `--section` may name one declared section, or supply one expression per
/// fiber component; no flag at all selects every declared section.
fn resolve_sections(
    resolved: &Resolved,
    flags: &[String],
) -> Result<Vec<(String, Section)>, Failure> {
    let r = resolved.space.fiber_dim();
    let compile = |comps: &[String]| -> Result<Section, Failure> {
        let exprs = comps
            .iter()
            .map(|c| parse(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(input)?;
        Section::new(&resolved.space, exprs).map_err(input)
    };
    if flags.is_empty() {
        if resolved.sections.is_empty() {
            return Ok(Vec::new());
        }
        return resolved
            .sections
            .iter()
            .map(|ns| Ok((ns.name.clone(), compile(&ns.comps)?)))
            .collect();
    }
    if flags.len() == 1 {
        if let Some(ns) = resolved.sections.iter().find(|ns| ns.name == flags[0]) {
            return Ok(vec![(ns.name.clone(), compile(&ns.comps)?)]);
        }
    }
    if flags.len() != r {
        return Err(Failure::Input(format!(
            "section needs {r} component expression(s) (or one declared name), got {}",
            flags.len()
        )));
    }
    Ok(vec![(flags.join("; "), compile(flags)?)])
}

fn parse_x0(arg: &Option<String>, space: &SubmersionSpace) -> Result<Point, Failure> {
    match arg {
        Some(text) => {
            let coords = text
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| Failure::Input(format!("bad --x0 `{text}`: {e}")))?;
            if coords.len() != space.base_dim() {
                return Err(Failure::Input(format!(
                    "--x0 needs {} coordinates, got {}",
                    space.base_dim(),
                    coords.len()
                )));
            }
            Ok(Point(coords))
        }
        None => Ok(Point(
            space
                .base_chart()
                .domain()
                .iter()
                .map(|&(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )),
    }
}

fn write_outputs(report: &RunReport, summary: &str, json: &Option<String>, csv_text: Option<(&str, &str)>) -> Result<(), Failure> {
    match json.as_deref() {
        Some("-") => println!("{}", report.to_json()),
        Some(path) => {
            fs::write(path, report.to_json())
                .map_err(|e| Failure::Input(format!("cannot write `{path}`: {e}")))?;
            print!("{summary}");
        }
        None => print!("{summary}"),
    }
    if let Some((path, text)) = csv_text {
        fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write `{path}`: {e}")))?;
    }
    Ok(())
}

fn worst_part_note(report: &CheckReport) -> String {
    report
        .parts
        .iter()
        .find(|p| p.max == report.max_residual)
        .map(|p| format!(" at sample {:?} ({})", p.worst_point, p.name))
        .unwrap_or_default()
}

// --- verify -------------------------------------------------------------

pub fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let resolved = resolve_geometry(&args.geometry, args.broken)?;
    let opts = CheckOptions {
        tolerance: args.tol,
        samples: args.samples,
    };
    let space = &resolved.space;

    let mut failures: Vec<String> = Vec::new();
    let mut checks: Vec<CheckRow> = Vec::new();
    let structural: [(&str, bool); 5] = [
        ("affine", true),
        ("skew", false),
        ("projectors", true),
        ("blumenthal", false),
        ("horizontal-integrability", false),
    ];
    for (name, hard) in structural {
        let rep = match name {
            "affine" => space.check_affine(&opts),
            "skew" => space.check_skew(&opts),
            "projectors" => space.check_projectors(&opts),
            "blumenthal" => space.check_blumenthal(&opts),
            _ => space.check_horizontal_integrability(&opts),
        }
        .map_err(input)?;
        let status = if hard {
            if rep.passed {
                Status::Pass
            } else {
                failures.push(format!(
                    "check `{}` failed: max residual {:e} > tolerance {:e}{}",
                    rep.check,
                    rep.max_residual,
                    rep.tolerance,
                    worst_part_note(&rep)
                ));
                Status::Fail
            }
        } else if name == "skew" {
            match (rep.passed, args.skew_policy) {
                (true, _) => Status::Pass,
                (false, SkewPolicy::Fail) => {
                    failures.push(format!(
                        "check `{}` failed: max residual {:e} > tolerance {:e}{}",
                        rep.check,
                        rep.max_residual,
                        rep.tolerance,
                        worst_part_note(&rep)
                    ));
                    Status::Fail
                }
                (false, SkewPolicy::Warn) => {
                    eprintln!(
                        "warning: skew-symmetry residual {:e} exceeds tolerance {:e} (policy: warn)",
                        rep.max_residual, rep.tolerance
                    );
                    Status::Warn
                }
            }
        } else {
            Status::Measured
        };
        checks.push(CheckRow {
            status,
            report: rep,
        });
    }

    let mut sections: Vec<SectionRow> = Vec::new();
    for (name, sect) in resolve_sections(&resolved, &args.section)? {
        let rep = sect.classify(&opts).map_err(input)?;
        let mut ok = true;
        if !rep.decomposition.identity_ok {
            ok = false;
            failures.push(format!(
                "section `{name}`: decomposition identity failed (vertical residuals {:e}/{:e}/{:e} by reading, horizontal {:e}, tolerance {:e})",
                rep.decomposition.r_v_plus_max,
                rep.decomposition.r_v_minus_max,
                rep.decomposition.r_v_expansion_max,
                rep.decomposition.r_h_max,
                rep.decomposition.tolerance
            ));
        }
        for row in &rep.truth_table {
            if row.status == RowStatus::Violated {
                ok = false;
                failures.push(format!(
                    "section `{name}`: classification item {} violated ({})",
                    row.item, row.claim
                ));
            }
        }
        sections.push(SectionRow {
            name,
            status: if ok { Status::Pass } else { Status::Fail },
            report: rep,
        });
    }

    let convention = global_convention(&sections);
    let exit = u8::from(!failures.is_empty());
    let mut report = RunReport::new("verify", resolved.label.clone(), &digest_payload_verify(&resolved, args), args.tol);
    report.samples = Some(args.samples);
    report.checks = checks;
    report.sections = sections;
    report.convention = convention;
    report.exit_code = exit;

    let summary = verify_summary(&resolved.label, &report);
    let csv = args
        .csv
        .as_deref()
        .map(|path| (path, verify_csv(&report)));
    write_outputs(&report, &summary, &args.json, csv.as_ref().map(|(p, t)| (*p, t.as_str())))?;

    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("\n")))
    }
}

fn digest_payload_verify(resolved: &Resolved, args: &VerifyArgs) -> String {
    format!(
        "{}\n--verify--\nsections={}\ntol={:e}\nsamples={}\nskew_policy={:?}\n",
        resolved.digest_payload,
        args.section.join(";"),
        args.tol,
        args.samples,
        args.skew_policy
    )
}

fn global_convention(sections: &[SectionRow]) -> Option<CConvention> {
    let first = sections.first()?.report.decomposition.chosen_convention;
    if sections
        .iter()
        .all(|s| s.report.decomposition.chosen_convention == first)
    {
        Some(first)
    } else {
        Some(CConvention::Expansion)
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Warn => "warn",
        Status::Measured => "measured",
    }
}

fn verify_summary(label: &str, report: &RunReport) -> String {
    let mut out = format!(
        "geometry {label} — {} checks, {} sections (tol {:e}, {} samples)\n",
        report.checks.len(),
        report.sections.len(),
        report.tolerance,
        report.samples.unwrap_or(0)
    );
    for row in &report.checks {
        out.push_str(&format!(
            "  check {:<26} {:<9} max {:e}\n",
            row.report.check,
            status_word(row.status),
            row.report.max_residual
        ));
    }
    for row in &report.sections {
        let d = &row.report.decomposition;
        out.push_str(&format!(
            "  section {:<24} {:<9} map {} section {} convention {:?} residual v {:e} h {:e}\n",
            row.name,
            status_word(row.status),
            yesno(row.report.harmonic_map),
            yesno(row.report.harmonic_section),
            d.chosen_convention,
            chosen_residual(d),
            d.r_h_max
        ));
    }
    out.push_str(&format!(
        "verdict: {}\n",
        if report.exit_code == 0 { "ok" } else { "failed" }
    ));
    out
}

fn chosen_residual(d: &harmonic_sections::sections::DecompositionReport) -> f64 {
    match d.chosen_convention {
        CConvention::Plus => d.r_v_plus_max,
        CConvention::Minus => d.r_v_minus_max,
        CConvention::Expansion => d.r_v_expansion_max,
    }
}

fn yesno(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn verify_csv(report: &RunReport) -> String {
    let mut out = String::from("kind,name,status,max_residual,tolerance\n");
    for row in &report.checks {
        out.push_str(&format!(
            "check,{},{},{},{}\n",
            row.report.check,
            status_word(row.status),
            row.report.max_residual,
            row.report.tolerance
        ));
    }
    for row in &report.sections {
        out.push_str(&format!(
            "section,{},{},{},{}\n",
            row.name,
            status_word(row.status),
            row.report.max_vertical_tension_norm,
            row.report.tolerance
        ));
    }
    out
}

// --- simulate -------------------------------------------------------------

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let resolved = resolve_geometry(&args.geometry, None)?;
    let space = &resolved.space;
    let sections = resolve_sections(&resolved, &args.section)?;
    if sections.is_empty() {
        return Err(Failure::Input(
            "this geometry declares no sections; pass --section".to_string(),
        ));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => match std::env::var("HSECT_SEED") {
            Ok(text) => text
                .parse::<u64>()
                .map_err(|e| Failure::Input(format!("bad HSECT_SEED `{text}`: {e}")))?,
            Err(_) => 0,
        },
    };
    let forms: Vec<FirstOrderForm> = if args.form.is_empty() {
        (0..space.fiber_dim())
            .map(|a| vertical_form(space, a))
            .collect::<Result<_, _>>()
            .map_err(input)?
    } else {
        if args.form.len() != space.total_dim() {
            return Err(Failure::Input(format!(
                "--form needs {} coefficient expressions, got {}",
                space.total_dim(),
                args.form.len()
            )));
        }
        let comps = args
            .form
            .iter()
            .map(|c| parse(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(input)?;
        vec![FirstOrderForm::new(space.total_chart(), comps).map_err(input)?]
    };
    let x0 = parse_x0(&args.x0, space)?;
    let paths = brownian_paths(
        space.base_metric(),
        &x0,
        args.horizon,
        args.dt,
        args.paths,
        seed,
    )
    .map_err(input)?;

    let mut rows: Vec<ExperimentRow> = Vec::new();
    for (name, sect) in &sections {
        for theta in &forms {
            // A non-vertical form is an input error by the experiment's
            // precondition, not a failed measurement.
            let pathwise = pathwise_form_transfer_experiment(sect, theta, &paths, args.tol)
                .map_err(input)?;
            let tension = tension_transfer_experiment(sect, theta, &paths, args.tol)
                .map_err(input)?;
            for report in [pathwise, tension] {
                rows.push(ExperimentRow {
                    name: name.clone(),
                    status: Status::Measured,
                    report,
                });
            }
        }
    }

    let payload = format!(
        "{}\n--simulate--\nsections={}\nforms={}\npaths={}\ndt={:e}\nT={:e}\nseed={}\ntol={:e}\nx0={:?}\n",
        resolved.digest_payload,
        args.section.join(";"),
        args.form.join(";"),
        args.paths,
        args.dt,
        args.horizon,
        seed,
        args.tol,
        x0.coords()
    );
    let mut report = RunReport::new("simulate", resolved.label.clone(), &payload, args.tol);
    report.seed = Some(seed);
    report.paths = Some(args.paths);
    report.dt = Some(args.dt);
    report.horizon = Some(args.horizon);
    report.experiments = rows;

    let summary = simulate_summary(&resolved.label, seed, args, &report);
    let csv = args.csv.as_deref().map(|p| (p, simulate_csv(&report)));
    write_outputs(&report, &summary, &args.json, csv.as_ref().map(|(p, t)| (*p, t.as_str())))?;
    Ok(())
}

fn simulate_summary(label: &str, seed: u64, args: &SimulateArgs, report: &RunReport) -> String {
    let mut out = format!(
        "geometry {label} — {} experiment rows over {} paths (seed {seed}, dt {:e}, T {:e})\n",
        report.experiments.len(),
        args.paths,
        args.dt,
        args.horizon
    );
    for row in &report.experiments {
        let r = &row.report;
        out.push_str(&format!(
            "  {:<24} section {:<14} used {}/{} mean diff {:e} se {:e} max {:e} pathwise-equal {}\n",
            r.experiment,
            row.name,
            r.paths_used,
            r.paths_requested,
            r.mean_difference,
            r.std_error,
            r.max_abs_difference,
            yesno(r.pathwise_equal)
        ));
    }
    out.push_str("verdict: ok (measured only)\n");
    out
}

fn simulate_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "experiment,section,paths_used,censored_fraction,lhs_mean,rhs_mean,mean_difference,std_error,max_abs_difference,pathwise_equal\n",
    );
    for row in &report.experiments {
        let r = &row.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            row.name,
            r.paths_used,
            r.censored_fraction,
            r.lhs_mean,
            r.rhs_mean,
            r.mean_difference,
            r.std_error,
            r.max_abs_difference,
            r.pathwise_equal
        ));
    }
    out
}

// --- flow -----------------------------------------------------------------

pub fn flow(args: &FlowArgs) -> Result<(), Failure> {
    if args.geometry != "product" {
        return Err(Failure::Input(format!(
            "flow supports only the built-in `product` geometry, got `{}`",
            args.geometry
        )));
    }
    let expr = parse(&args.section).map_err(input)?;
    let grid = grid_from_expr(&expr, "x1", args.grid).map_err(input)?;
    let initial_energy = harmonic_sections::flow::vertical_energy(&grid);
    let outcome = match tension_flow(&grid, args.steps, args.dt) {
        Ok(o) => o,
        Err(e @ FlowError::StepUnstable { .. }) => {
            return Err(Failure::Check(e.to_string()));
        }
        Err(e) => return Err(input(e)),
    };
    let monotone = outcome
        .energy_trace
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12);
    let row = FlowRow {
        status: if monotone { Status::Pass } else { Status::Fail },
        monotone,
        mode1_amplitude: mode_amplitude(&outcome.grid, 1),
        mode1_rate: mode_rate(args.grid, 1),
        outcome,
    };
    let exit = u8::from(!monotone);

    let payload = format!(
        "--flow--\nsection={}\ngrid={}\ndt={:e}\nsteps={}\n",
        args.section, args.grid, args.dt, args.steps
    );
    let mut report = RunReport::new("flow", args.geometry.clone(), &payload, 0.0);
    report.dt = Some(args.dt);
    report.flow = Some(row);
    report.exit_code = exit;

    let flow_row = report.flow.as_ref().expect("just set");
    let summary = format!(
        "flow on the product circle — grid {}, dt {:e}, {} steps\n  energy {:e} -> {:e} (monotone {})\n  final mode-1 amplitude {:e} (decay rate {:e} per unit time)\n  final sup tension {:e}\nverdict: {}\n",
        args.grid,
        args.dt,
        flow_row.outcome.steps,
        initial_energy,
        flow_row.outcome.energy_trace.last().copied().unwrap_or(0.0),
        yesno(flow_row.monotone),
        flow_row.mode1_amplitude,
        flow_row.mode1_rate,
        flow_row.outcome.final_sup_tension,
        if exit == 0 { "ok" } else { "failed" }
    );
    let csv = args.csv.as_deref().map(|p| {
        let mut text = String::from("step,energy\n");
        for (k, e) in report.flow.as_ref().expect("set").outcome.energy_trace.iter().enumerate() {
            text.push_str(&format!("{k},{e}\n"));
        }
        (p, text)
    });
    write_outputs(&report, &summary, &args.json, csv.as_ref().map(|(p, t)| (*p, t.as_str())))?;
    if exit == 0 {
        Ok(())
    } else {
        Err(Failure::Check("energy trace not monotone".to_string()))
    }
}

// --- list / export ----------------------------------------------------------

pub fn list(verbose: bool) -> Result<(), Failure> {
    for name in GALLERY_NAMES {
        let entry = instantiate(name)
            .map_err(|e| Failure::Input(format!("gallery `{name}` failed to build: {e}")))?;
        println!("{name:<22} {}", entry.summary());
        if verbose {
            let names: Vec<&str> = entry
                .named_sections()
                .iter()
                .map(|ns| ns.name.as_str())
                .collect();
            println!("    sections: {}", names.join(", "));
            for exp in entry.expectations() {
                println!("    {} = {}", exp.property, exp.expected);
                println!("        {}", exp.provenance);
            }
        }
    }
    Ok(())
}

pub fn export(name: &str, out: &Option<String>) -> Result<(), Failure> {
    let entry = instantiate(name).map_err(input)?;
    let text = export_entry(&entry).map_err(input)?.to_toml();
    match out.as_deref() {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write `{path}`: {e}")))?,
        None => print!("{text}"),
    }
    Ok(())
}
