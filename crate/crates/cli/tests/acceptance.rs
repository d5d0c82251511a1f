//! One test per shipping criterion; each prints a single PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use harmonic_sections::expr::parse;
use harmonic_sections::flow::{grid_from_expr, mode_amplitude, tension_flow, vertical_energy};
use harmonic_sections::gallery::{broken_variant, instantiate, GALLERY_NAMES};
use harmonic_sections::geometry::{Chart, Connection, FieldJet, Metric, Point, VectorField};
use harmonic_sections::report::CheckOptions;
use harmonic_sections::sections::{CConvention, RowStatus, Section};
use harmonic_sections::stochastic::{
    brownian_paths, ito_integral, pathwise_form_transfer_experiment, quadratic_integral,
    vertical_form, FirstOrderForm, SymmetricBilinear,
};
use harmonic_sections::submersion::SubmersionSpace;

fn conclude(criterion: u8, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn opts(tolerance: f64, samples: usize) -> CheckOptions {
    CheckOptions { tolerance, samples }
}

fn ex(s: &str) -> harmonic_sections::expr::ScalarExpr {
    parse(s).unwrap()
}

fn metric_from(names: &[&str], domain: &[(f64, f64)], rows: &[&[&str]]) -> Metric {
    let chart = Chart::new(names, domain).unwrap();
    let g = rows
        .iter()
        .map(|row| row.iter().map(|s| ex(s)).collect())
        .collect();
    Metric::new(chart, g).unwrap()
}

fn flat_plane() -> Metric {
    metric_from(
        &["x1", "x2"],
        &[(-50.0, 50.0), (-50.0, 50.0)],
        &[&["1", "0"], &["0", "1"]],
    )
}

fn sphere() -> Metric {
    metric_from(
        &["x1", "x2"],
        &[(0.02, 3.121_592_653_589_793), (-20.0, 20.0)],
        &[&["1", "0"], &["0", "sin(x1)^2"]],
    )
}

fn all_sections(name: &str) -> Vec<(String, Section)> {
    instantiate(name).unwrap().sections().unwrap()
}

// 1. The vertical/horizontal split of every gallery section's second
//    fundamental form closes to 1e-8 at 64 sample points.
#[test]
fn acceptance_1_decomposition_closes_on_the_whole_gallery() {
    let start = Instant::now();
    let o = opts(1e-8, 64);
    let mut ok = true;
    let mut detail = String::new();
    for name in GALLERY_NAMES {
        let sections = all_sections(name);
        if sections.len() < 5 {
            ok = false;
            detail = format!("{name} has only {} sections", sections.len());
        }
        for (sname, sect) in sections {
            let rep = sect.classify(&o).unwrap();
            let d = &rep.decomposition;
            if rep.samples < 64 || d.r_v_expansion_max > 1e-8 || d.r_h_max > 1e-8 {
                ok = false;
                detail = format!(
                    "{name}/{sname}: r_v {} r_h {} over {} samples",
                    d.r_v_expansion_max, d.r_h_max, rep.samples
                );
            }
        }
    }
    let within_budget = start.elapsed().as_secs_f64() < 30.0;
    if !within_budget {
        detail = format!("took {:?}", start.elapsed());
    }
    conclude(1, ok && within_budget, &detail);
}

// 2. Structural checks pass on every clean entry and catch every broken
//    variant with a residual at least 1e-2 when the offset is 0.1.
#[test]
fn acceptance_2_structural_checks_pass_clean_and_catch_broken() {
    let o = opts(1e-8, 64);
    let mut ok = true;
    let mut detail = String::new();
    for name in GALLERY_NAMES {
        let entry = instantiate(name).unwrap();
        for rep in [
            entry.space().check_affine(&o).unwrap(),
            entry.space().check_skew(&o).unwrap(),
            entry.space().check_projectors(&o).unwrap(),
        ] {
            if !rep.passed {
                ok = false;
                detail = format!("{name}: clean {} residual {}", rep.check, rep.max_residual);
            }
        }

        let broken = broken_variant(name, 0.1).unwrap();
        let affine = broken.space().check_affine(&o).unwrap();
        let skew = broken.space().check_skew(&o).unwrap();
        let caught = (!affine.passed && affine.max_residual >= 1e-2)
            || (!skew.passed && skew.max_residual >= 1e-2);
        if !caught {
            ok = false;
            detail = format!(
                "{name} broken slipped through: affine {} skew {}",
                affine.max_residual, skew.max_residual
            );
        }
    }
    conclude(2, ok, &detail);
}

fn lifted_frame(space: &SubmersionSpace, i: usize) -> VectorField {
    let n = space.base_dim();
    let r = space.fiber_dim();
    let mut comps = vec![ex("0"); n + r];
    comps[i] = ex("1");
    for a in 0..r {
        comps[n + a] = space.lift_exprs()[a][i].clone();
    }
    VectorField::new(space.total_chart().clone(), comps).unwrap()
}

fn vertical_frame(space: &SubmersionSpace, a: usize) -> VectorField {
    let n = space.base_dim();
    let r = space.fiber_dim();
    let mut comps = vec![ex("0"); n + r];
    comps[n + a] = ex("1");
    VectorField::new(space.total_chart().clone(), comps).unwrap()
}

fn bracket(x: &FieldJet, y: &FieldJet) -> Vec<f64> {
    let dim = x.comps.len();
    (0..dim)
        .map(|c| {
            (0..dim)
                .map(|m| x.comps[m] * y.jac[c][m] - y.comps[m] * x.jac[c][m])
                .sum()
        })
        .collect()
}

// 3. On the round-sphere entry the alternating tensor equals half the
//    vertical bracket of lifted fields, the symmetric tensor vanishes,
//    and the horizontal planes are measurably non-integrable.
#[test]
fn acceptance_3_sphere_tensors_match_their_closed_forms() {
    let entry = instantiate("hopf").unwrap();
    let space = entry.space();
    let h0 = lifted_frame(space, 0);
    let h1 = lifted_frame(space, 1);
    let v0 = vertical_frame(space, 0);

    let mut ok = true;
    let mut detail = String::new();
    for p in space.sample_points(64) {
        let ctx = space.eval_at(&p).unwrap();
        let a_val = space.oneill_a(&h0, &h1, &p).unwrap();
        let br = bracket(&h0.jet(&p).unwrap(), &h1.jet(&p).unwrap());
        let (_, vbr) = space.project(&ctx, &br);
        let a_res: f64 = a_val
            .comps
            .iter()
            .zip(&vbr)
            .map(|(a, b)| (a - 0.5 * b).abs())
            .fold(0.0, f64::max);
        if a_res > 1e-8 {
            ok = false;
            detail = format!("A vs half-bracket residual {a_res} at {:?}", p.coords());
        }
        for other in [&h0, &h1, &v0] {
            let t_val = space.oneill_t(&v0, other, &p).unwrap();
            let t_norm = t_val.comps.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if t_norm > 1e-10 {
                ok = false;
                detail = format!("T residual {t_norm} at {:?}", p.coords());
            }
        }
    }

    let integ = space
        .check_horizontal_integrability(&opts(1e-8, 64))
        .unwrap();
    let floor = integ
        .parts
        .iter()
        .map(|part| part.min)
        .fold(f64::INFINITY, f64::min);
    if integ.passed || floor < 0.1 {
        ok = false;
        detail = format!("integrability defect floor {floor}");
    }
    conclude(3, ok, &detail);
}

// 4. The map verdict and the section verdict agree wherever the trace of
//    D vanishes, and no classification item 2 or 4 is ever violated.
#[test]
fn acceptance_4_classification_is_consistent() {
    let o = opts(1e-8, 64);
    let mut ok = true;
    let mut detail = String::new();
    for name in ["product", "blumenthal_flat"] {
        for (sname, sect) in all_sections(name) {
            let rep = sect.classify(&o).unwrap();
            if rep.harmonic_map != rep.harmonic_section {
                ok = false;
                detail = format!(
                    "{name}/{sname}: map {} vs section {}",
                    rep.harmonic_map, rep.harmonic_section
                );
            }
        }
    }
    for name in GALLERY_NAMES {
        for (sname, sect) in all_sections(name) {
            let rep = sect.classify(&o).unwrap();
            for row in &rep.truth_table {
                if (row.item == 2 || row.item == 4) && row.status == RowStatus::Violated {
                    ok = false;
                    detail = format!("{name}/{sname}: item {} violated", row.item);
                }
            }
        }
    }
    conclude(4, ok, &detail);
}

// 5. Correction traces: identically zero on the product entry; equal to
//    the metric trace of the mixed bracket, with the convention deciding
//    only the sign, on the tangent-bundle entry, where trace D vanishes.
#[test]
fn acceptance_5_correction_traces_match_closed_forms() {
    let o = opts(1e-8, 64);
    let mut ok = true;
    let mut detail = String::new();

    for (sname, sect) in all_sections("product") {
        let rep = sect.classify(&o).unwrap();
        // the signed variants differ by the mixed bracket, which need not
        // vanish here; the resolved trace must
        if rep.max_trace_c_norm > 1e-10 {
            ok = false;
            detail = format!("product/{sname}: trace C {}", rep.max_trace_c_norm);
        }
    }

    let entry = instantiate("tangent_bundle_flat").unwrap();
    let space = entry.space();
    let n = space.base_dim();
    let r = space.fiber_dim();
    for (sname, sect) in entry.sections().unwrap() {
        let rep = sect.classify(&o).unwrap();
        if rep.max_trace_d_norm > 1e-10 {
            ok = false;
            detail = format!("tbf/{sname}: trace D {}", rep.max_trace_d_norm);
        }
        for x in space.base_chart().sample_points(64) {
            let jet = sect.jet2(&x).unwrap();
            let mut total = x.coords().to_vec();
            total.extend_from_slice(&jet.val);
            let p = Point(total);
            let ctx = space.eval_at(&p).unwrap();
            let ginv = space.base_metric().inverse_at(&x).unwrap();

            // g^{kl} [H_k, W_l], with W_l the vertical gap field of the section
            let mut mixed = vec![0.0; n + r];
            for k in 0..n {
                for l in 0..n {
                    let h = space.h_jet(&ctx, k);
                    let mut w = FieldJet::zero(n + r);
                    for a in 0..r {
                        w.comps[n + a] = jet.d1[a][l] - ctx.lift[a][l];
                        for c in 0..n + r {
                            w.jac[n + a][c] = -ctx.lift_d[a][l][c];
                        }
                        for c in 0..n {
                            w.jac[n + a][c] += jet.d2[a][l][c];
                        }
                    }
                    let br = bracket(&h, &w);
                    for item in 0..n + r {
                        mixed[item] += ginv[(k, l)] * br[item];
                    }
                }
            }

            let plus = sect.trace_c(CConvention::Plus, &x).unwrap();
            let minus = sect.trace_c(CConvention::Minus, &x).unwrap();
            let res_plus: f64 = plus
                .comps
                .iter()
                .zip(&mixed)
                .map(|(t, b)| (t - b).abs())
                .fold(0.0, f64::max);
            let res_minus: f64 = minus
                .comps
                .iter()
                .zip(&mixed)
                .map(|(t, b)| (t + b).abs())
                .fold(0.0, f64::max);
            if res_plus > 1e-8 || res_minus > 1e-8 {
                ok = false;
                detail = format!("tbf/{sname}: trace vs bracket {res_plus} / {res_minus}");
            }
        }
    }
    conclude(5, ok, &detail);
}

fn warped_line() -> Metric {
    metric_from(
        &["x1", "x2"],
        &[(-50.0, 50.0), (-50.0, 50.0)],
        &[&["(1.5 + sin(x1))^2", "0"], &["0", "1"]],
    )
}

fn warp_u(x: f64) -> f64 {
    1.5 * x - x.cos()
}

fn warp_u_inv(target: f64) -> f64 {
    let mut x = target / 1.5;
    for _ in 0..60 {
        let f = warp_u(x) - target;
        x -= f / (1.5 + x.sin());
        if f.abs() < 1e-15 {
            break;
        }
    }
    x
}

/// E[sin(X_T)] for the warped line started at x0: push a Gaussian through
/// the exact transform X_T = u^{-1}(u(x0) + sqrt(T) Z) by Simpson rule.
fn warped_exact_mean(x0: f64, t: f64) -> f64 {
    let u0 = warp_u(x0);
    let st = t.sqrt();
    let m = 8000usize;
    let (lo, hi) = (-10.0f64, 10.0f64);
    let h = (hi - lo) / m as f64;
    let f = |z: f64| warp_u_inv(u0 + st * z).sin() * (-0.5 * z * z).exp();
    let mut acc = f(lo) + f(hi);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
    }
    acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

fn mean_se(vals: &[f64]) -> (f64, f64) {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var =
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    (mean, (var / vals.len() as f64).sqrt())
}

// 6. The path sampler reproduces the dimension law on the plane, the heat
//    decay of the first eigenfunction on the sphere, and converges at weak
//    order one on a warped line with a quadrature reference.
#[test]
fn acceptance_6_sampler_statistics_match_the_laws() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();

    // mean squared displacement on the plane: E|B_T|^2 = 2T
    let t = 1.0;
    let n_paths = 4000;
    let paths =
        brownian_paths(&flat_plane(), &Point::new(&[0.0, 0.0]), t, 0.01, n_paths, 11).unwrap();
    let sq: Vec<f64> = paths
        .iter()
        .map(|p| {
            let f = p.final_state();
            f.coords()[0].powi(2) + f.coords()[1].powi(2)
        })
        .collect();
    let (mean_sq, _) = mean_se(&sq);
    let se = 2.0 * t / (n_paths as f64).sqrt();
    if (mean_sq - 2.0 * t).abs() > 4.0 * se {
        ok = false;
        detail = format!("displacement {mean_sq} vs {}", 2.0 * t);
    }

    // heat decay of cos(colatitude) on the unit sphere
    let m = sphere();
    let x0 = Point::new(&[1.0, 0.0]);
    for t in [0.25, 0.5] {
        let paths = brownian_paths(&m, &x0, t, 0.0025, 4000, 2024).unwrap();
        let vals: Vec<f64> = paths
            .iter()
            .filter(|p| p.is_clean())
            .map(|p| p.final_state().coords()[0].cos())
            .collect();
        let (mean, se) = mean_se(&vals);
        let expected = 1.0f64.cos() * (-t).exp();
        if (mean - expected).abs() > 4.0 * se {
            ok = false;
            detail = format!("sphere t={t}: {mean} vs {expected} (se {se})");
        }
    }

    // weak order one: halving dt halves the bias against the exact law
    let warped = warped_line();
    let x0 = Point::new(&[0.0, 0.0]);
    let exact = warped_exact_mean(0.0, 0.5);
    let mut biases = Vec::new();
    for (dt, seed) in [(0.25, 41), (0.125, 42)] {
        let paths = brownian_paths(&warped, &x0, 0.5, dt, 600_000, seed).unwrap();
        let vals: Vec<f64> = paths
            .iter()
            .filter(|p| p.is_clean())
            .map(|p| p.final_state().coords()[0].sin())
            .collect();
        if vals.len() != 600_000 {
            ok = false;
            detail = format!("warped line censored {} paths", 600_000 - vals.len());
        }
        let (mean, _) = mean_se(&vals);
        biases.push(mean - exact);
    }
    let ratio = biases[0] / biases[1];
    if !(1.5..=3.0).contains(&ratio) {
        ok = false;
        detail = format!("bias ratio {ratio} from {biases:?}");
    }

    let within_budget = start.elapsed().as_secs_f64() < 60.0;
    if !within_budget {
        detail = format!("took {:?}", start.elapsed());
    }
    conclude(6, ok && within_budget, &detail);
}

// 7. Second-order integrals: the metric trace accumulates exactly n*T per
//    path, flat Ito integrals are centred, and the transfer identity holds
//    pathwise on the product entry.
#[test]
fn acceptance_7_integrals_hit_their_identities() {
    let mut ok = true;
    let mut detail = String::new();

    let m = sphere();
    let paths = brownian_paths(&m, &Point::new(&[1.3, 3.0]), 0.5, 0.005, 64, 17).unwrap();
    let b = SymmetricBilinear::new(
        m.chart(),
        vec![vec![ex("1"), ex("0")], vec![ex("0"), ex("sin(x1)^2")]],
    )
    .unwrap();
    for p in paths.iter().filter(|p| p.is_clean()) {
        let integral = quadratic_integral(&b, p).unwrap();
        if (integral - 1.0).abs() > 1e-12 {
            ok = false;
            detail = format!("quadratic integral {integral} vs 1");
        }
    }

    let flat = flat_plane();
    let conn = Connection::levi_civita(flat.clone());
    let theta = FirstOrderForm::new(flat.chart(), vec![ex("1"), ex("0")]).unwrap();
    let paths =
        brownian_paths(&flat, &Point::new(&[0.0, 0.0]), 1.0, 0.01, 4000, 23).unwrap();
    let vals: Vec<f64> = paths
        .iter()
        .map(|p| ito_integral(&theta, &conn, p).unwrap())
        .collect();
    let (mean, se) = mean_se(&vals);
    if mean.abs() > 4.0 * se {
        ok = false;
        detail = format!("Ito mean {mean} (se {se})");
    }

    let entry = instantiate("product").unwrap();
    let space = entry.space();
    let theta = vertical_form(space, 0).unwrap();
    let base_paths = brownian_paths(
        space.base_metric(),
        &Point::new(&[3.0]),
        0.5,
        0.01,
        200,
        5,
    )
    .unwrap();
    for (sname, sect) in entry.sections().unwrap() {
        let rep = pathwise_form_transfer_experiment(&sect, &theta, &base_paths, 1e-10).unwrap();
        if !rep.pathwise_equal || rep.max_abs_difference > 1e-10 {
            ok = false;
            detail = format!(
                "product/{sname}: transfer gap {}",
                rep.max_abs_difference
            );
        }
    }
    conclude(7, ok, &detail);
}

// 8. The discrete tension flow dissipates monotonically, tracks the unit
//    decay rate of the first mode within two percent, and lands on a
//    numerically harmonic section.
#[test]
fn acceptance_8_flow_decays_at_the_continuum_rate() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    let dt = 1e-3;
    let grid0 = grid_from_expr(&ex("sin(x1)"), "x1", 128).unwrap();
    let a0 = mode_amplitude(&grid0, 1);

    let long = tension_flow(&grid0, 2000, dt).unwrap();
    if long
        .energy_trace
        .windows(2)
        .any(|w| w[1] > w[0] + 1e-12)
    {
        ok = false;
        detail = "energy trace is not monotone".to_string();
    }

    for k in 1..=8 {
        let t = 0.25 * k as f64;
        let steps = (t / dt).round() as usize;
        let out = tension_flow(&grid0, steps, dt).unwrap();
        let amp = mode_amplitude(&out.grid, 1) / a0;
        let expected = (-t).exp();
        if (amp - expected).abs() > 0.02 * expected {
            ok = false;
            detail = format!("t={t}: amplitude {amp} vs {expected}");
        }
    }

    let settled = tension_flow(&grid0, 15_000, dt).unwrap();
    if settled.final_sup_tension >= 1e-6 {
        ok = false;
        detail = format!("final sup tension {}", settled.final_sup_tension);
    }
    if vertical_energy(&settled.grid) > vertical_energy(&grid0) {
        ok = false;
        detail = "energy grew across the full run".to_string();
    }

    let within_budget = start.elapsed().as_secs_f64() < 20.0;
    if !within_budget {
        detail = format!("took {:?}", start.elapsed());
    }
    conclude(8, ok && within_budget, &detail);
}

// 9. Reports are byte-stable: reruns with the same seed agree exactly,
//    whatever the worker count.
#[test]
fn acceptance_9_reports_are_byte_stable_across_worker_counts() {
    let run = |args: &[&str], threads: &str| -> Vec<u8> {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_hsect"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .env_remove("HSECT_SEED")
            .output()
            .expect("binary runs");
        assert!(
            out.status.code() == Some(0),
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let mut ok = true;
    let mut detail = String::new();
    let verify: &[&str] = &["verify", "hopf", "--json", "-"];
    let simulate: &[&str] = &[
        "simulate", "product", "--seed", "123", "--paths", "400", "--json", "-",
    ];
    for args in [verify, simulate] {
        let single = run(args, "1");
        let multi = run(args, "4");
        let again = run(args, "4");
        if single != multi || multi != again {
            ok = false;
            detail = format!("{args:?} differed between runs");
        }
    }
    conclude(9, ok, &detail);
}
