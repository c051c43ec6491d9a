//! End-to-end acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p rope-cli --test acceptance`.

use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rope_cli::commands::{run_verification, simulate_rows};
use rope_cli::curves::{self, GAIN_FILE};
use rope_cli::params::System;
use rope_cli::CurvesArgs;
use rope_core::analytic;
use rope_core::oracle::{
    adjoint_gradient, dp_value_grid, optimize, DiscretizedControls, DpOptions, OptimizeOptions,
};
use rope_core::pulse::{compile, CompileOptions};
use rope_core::quantum::{
    build_relaxation, reduced_projection_error, run_sequence, Cartesian, CoherenceVector,
    ProductOperator, SpinSystemParams,
};
use rope_core::reduced::flow::{apply, flow_map};
use rope_core::reduced::{
    hjb_dissipation, propagate_feedback, reduced_rhs, return_function, ControlValue, ReducedState,
};
use rope_core::synthesis::{
    feedback_controls, feedback_start, synthesize_rope, verify_symmetry, SynthesisOptions,
};
use rope_core::RelativeRate64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const J_HZ: f64 = 140.0;

fn rate(x: f64) -> RelativeRate64 {
    RelativeRate64::new(x).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Unconstrained optimum from dynamic programming and gradient ascent.
fn criterion_1() -> Outcome {
    let (mut dp_worst, mut opt_worst) = (0.0f64, 0.0f64);
    for x in [0.25, 0.5, 1.0, 2.0] {
        let xi = rate(x);
        let eta = analytic::eta_max(xi);
        let grid = dp_value_grid(xi, 20.0, &DpOptions::default()).map_err(fail)?;
        let dp = grid.value_at(ReducedState::initial());
        dp_worst = dp_worst.max((dp - eta).abs());
        ensure((dp - eta).abs() < 2e-3, || {
            format!("ξ={x}: DP {dp} vs η {eta}")
        })?;

        let r = optimize(xi, 50.0, 500, 4, &OptimizeOptions::default()).map_err(fail)?;
        opt_worst = opt_worst.max((r.efficiency - eta).abs());
        ensure((r.efficiency - eta).abs() < 1e-3, || {
            format!("ξ={x}: optimizer {} vs η {eta}", r.efficiency)
        })?;
    }
    Ok(format!(
        "max |DP - η| = {dp_worst:.1e}, max |oracle - η| = {opt_worst:.1e}"
    ))
}

/// Constant-control optimum by bisection on the sign of dr2/dt' along the exact flow.
fn numerical_inept(x: f64) -> (f64, f64) {
    let xi = rate(x);
    let state = |t: f64| {
        apply(
            &flow_map(ControlValue::full(), xi, t),
            ReducedState::initial(),
        )
    };
    let slope = |t: f64| reduced_rhs(state(t), ControlValue::full(), xi).r2;
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (state(t).r2, t)
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for x in [0.05, 0.25, 0.5, 1.0, 2.0, 10.0] {
        let (closed, _) = analytic::eta_inept(rate(x));
        let (numeric, _) = numerical_inept(x);
        worst = worst.max((closed - numeric).abs());
        ensure((closed - numeric).abs() < 1e-10, || {
            format!("ξ={x}: {closed} vs {numeric}")
        })?;
    }
    let (_, t) = numerical_inept(1.0);
    let t_over_j = t / PI;
    ensure((t_over_j - 0.25).abs() < 1e-10, || {
        format!("optimal time {t_over_j} J⁻¹")
    })?;
    Ok(format!(
        "max |closed - numeric| = {worst:.1e}, t_opt(ξ=1) = {t_over_j:.12} J⁻¹"
    ))
}

fn criterion_3() -> Outcome {
    let xi = rate(1.0);
    let horizon = analytic::time_of_tau(0.1 * PI, xi).map_err(fail)?;
    let t = horizon / PI;
    ensure((t - 0.263).abs() < 5e-4, || format!("T = {t} J⁻¹"))?;
    let rope = synthesize_rope(horizon, xi, SynthesisOptions::default()).map_err(fail)?;
    let u1 = rope.initial_control().u1;
    ensure((u1 - 0.572).abs() <= 2e-3, || format!("u1(0) = {u1}"))?;
    Ok(format!(
        "T = {t:.4} J⁻¹, u1(0) = {u1:.4} (arccos {:.2}°)",
        u1.acos().to_degrees()
    ))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for x in [0.5, 1.0, 2.0] {
        let xi = rate(x);
        let system = System {
            xi,
            j_hz: J_HZ,
            k_hz: x * J_HZ,
        };
        for f in [1.5, 3.0, 10.0] {
            let t_over_j = f * analytic::critical_time(xi) / PI;
            let v = run_verification(
                &system,
                t_over_j,
                400,
                OptimizeOptions::<f64>::default().seed,
                5e-3,
            )
            .map_err(fail)?;
            for c in v
                .checks
                .iter()
                .filter(|c| c.name != "oracle_symmetry" && c.name != "oracle_bracket")
            {
                ensure(c.passed, || {
                    format!(
                        "ξ={x}, T={f}·Tc: {} = {} vs {} ({})",
                        c.name, c.value, c.reference, c.note
                    )
                })?;
                worst = worst.max((c.value - c.reference).abs());
            }
        }
    }
    Ok(format!("9 cases, max disagreement {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let xi = rate(100.0);
    let gain = analytic::gain_ratio(xi);
    let (inphase, inphase_inept) = analytic::inphase_efficiencies(xi);
    let gain_in = inphase / inphase_inept;
    let (g0, g1) = (E / 2.0, E * E / 4.0);
    ensure((gain - g0).abs() / g0 < 5e-3, || format!("gain {gain}"))?;
    ensure((gain_in - g1).abs() / g1 < 1e-2, || {
        format!("in-phase gain {gain_in}")
    })?;
    Ok(format!(
        "gain {gain:.4} (e/2 = {g0:.4}), in-phase gain {gain_in:.4} (e²/4 = {g1:.4})"
    ))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    let mut min_u = 1.0f64;
    for x in [0.5, 1.0, 2.0] {
        let xi = rate(x);
        for f in [0.25, 0.5, 0.75, 1.0] {
            let horizon = f * analytic::critical_time(xi);
            let r = optimize(xi, horizon, 200, 4, &OptimizeOptions::default()).map_err(fail)?;
            let lowest = r
                .best
                .values()
                .iter()
                .fold(1.0f64, |m, u| m.min(u.u1).min(u.u2));
            min_u = min_u.min(lowest);
            ensure(lowest >= 0.99, || {
                format!("ξ={x}, T={f}·Tc: min u = {lowest}")
            })?;
            let want = (-x * horizon).exp() * horizon.sin();
            worst = worst.max((r.efficiency - want).abs());
            ensure((r.efficiency - want).abs() < 1e-4, || {
                format!("ξ={x}, T={f}·Tc: {} vs {want}", r.efficiency)
            })?;
        }
    }
    Ok(format!(
        "12 cases, min control {min_u:.6}, max efficiency error {worst:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2005);
    let mut notes = Vec::new();

    // HJB inequality and norm dissipation on random samples
    let (mut hjb_max, mut norm_err) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..10_000 {
        let xi = rate(rng.gen_range(0.0..5.0));
        let s = ReducedState::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let u = ControlValue::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        hjb_max = hjb_max.max(hjb_dissipation(s, u, xi));
        let f = reduced_rhs(s, u, xi);
        let lhs = 2.0 * (s.r1 * f.r1 + s.r2 * f.r2);
        let rhs = -2.0 * xi.value() * (u.u1 * u.u1 * s.r1 * s.r1 + u.u2 * u.u2 * s.r2 * s.r2);
        norm_err = norm_err.max((lhs - rhs).abs());
    }
    ensure(hjb_max <= 1e-10, || format!("dV/dt reaches {hjb_max:e}"))?;
    ensure(norm_err <= 1e-12, || {
        format!("norm identity error {norm_err:e}")
    })?;
    notes.push(format!(
        "max dV/dt {hjb_max:.1e}, norm identity {norm_err:.1e}"
    ));

    // V conservation under the feedback law
    let mut v_drift = 0.0f64;
    for x in [0.5, 1.0, 2.0] {
        let xi = rate(x);
        let start = feedback_start(xi, 1e-6);
        let v0 = return_function(start, xi);
        let tr = propagate_feedback(start, |s| feedback_controls(*s, xi), xi, 20.0, 1e-3)
            .map_err(fail)?;
        for p in &tr {
            v_drift = v_drift.max((return_function(p.state, xi) - v0).abs());
        }
    }
    ensure(v_drift < 1e-6, || format!("V drifts by {v_drift:e}"))?;
    notes.push(format!("V drift {v_drift:.1e}"));

    // adjoint gradient against a five-point finite-difference stencil
    let mut grad_err = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(10..40);
        let xi = rate(rng.gen_range(0.0..3.0));
        let horizon = rng.gen_range(0.2..4.0);
        let values: Vec<_> = (0..n)
            .map(|_| ControlValue::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)))
            .collect();
        let c = DiscretizedControls::new(horizon, values.clone()).map_err(fail)?;
        let g = adjoint_gradient(&c, xi).map_err(fail)?;
        let h = 1e-3;
        for i in 0..n {
            for comp in 0..2 {
                let bump = |s: f64| {
                    let mut v = values.clone();
                    if comp == 0 {
                        v[i].u1 += s;
                    } else {
                        v[i].u2 += s;
                    }
                    DiscretizedControls::new(horizon, v).unwrap().efficiency(xi)
                };
                let fd =
                    (8.0 * (bump(h) - bump(-h)) - (bump(2.0 * h) - bump(-2.0 * h))) / (12.0 * h);
                let an = if comp == 0 { g.d_u1[i] } else { g.d_u2[i] };
                grad_err = grad_err.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-6));
            }
        }
    }
    ensure(grad_err < 1e-6, || {
        format!("gradient relative error {grad_err:e}")
    })?;
    notes.push(format!("gradient rel. error {grad_err:.1e}"));

    // relaxation spectrum from an independent symmetric eigensolver
    let k = 37.0;
    let relax = build_relaxation::<f64>(k);
    let m = relax.matrix();
    let dense = DMatrix::from_fn(16, 16, |i, j| m[(i, j)]);
    let eig = dense.symmetric_eigen().eigenvalues;
    let asym = (0..16)
        .flat_map(|i| (0..16).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0, f64::max);
    ensure(asym == 0.0, || {
        format!("relaxation superoperator not symmetric ({asym:e})")
    })?;
    let rate_k = PI * k;
    let zeros = eig.iter().filter(|&&e| e.abs() < 1e-12 * rate_k).count();
    let decays = eig
        .iter()
        .filter(|&&e| (e + rate_k).abs() < 1e-12 * rate_k)
        .count();
    ensure(zeros + decays == 16 && decays == 8, || {
        format!("spectrum {eig:?}")
    })?;
    notes.push("spectrum 8×0, 8×(-πk)".to_string());

    // projection of the quantum simulation onto the reduced model
    let xi = rate(1.0);
    let horizon = analytic::time_of_tau(0.1 * PI, xi).map_err(fail)?;
    let rope = synthesize_rope(horizon, xi, SynthesisOptions::default()).map_err(fail)?;
    let target = ProductOperator::IS(Cartesian::Y, Cartesian::Z);
    let seq =
        compile(&rope.schedule, J_HZ, xi, target, &CompileOptions::default()).map_err(fail)?;
    let params = SpinSystemParams::new(J_HZ, J_HZ).map_err(fail)?;
    let sim = run_sequence(
        &seq,
        &params,
        CoherenceVector::from_operator(ProductOperator::I(Cartesian::X)),
        4001,
    )
    .map_err(fail)?;
    let proj = reduced_projection_error(&sim, &params).map_err(fail)?;
    ensure(proj < 1e-6, || format!("projection error {proj:e}"))?;
    notes.push(format!("projection {proj:.1e}"));

    // time symmetry of numerical optima
    let mut sym = 0.0f64;
    for x in [0.5, 1.0, 2.0] {
        let xi = rate(x);
        let r = optimize(
            xi,
            3.0 * analytic::critical_time(xi),
            200,
            4,
            &OptimizeOptions::default(),
        )
        .map_err(fail)?;
        sym = sym.max(verify_symmetry(&r.best.to_schedule().map_err(fail)?));
    }
    ensure(sym <= 0.02, || format!("symmetry defect {sym}"))?;
    notes.push(format!("symmetry {sym:.1e}"));
    Ok(notes.join(", "))
}

fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(fail)?;
    rdr.records()
        .map(|r| {
            r.map_err(fail)?
                .iter()
                .map(|x| x.parse::<f64>().map_err(fail))
                .collect()
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(fail)?;
    let xis = vec![0.25, 0.5, 1.0, 2.0];
    let args = CurvesArgs {
        xi: xis.clone(),
        t_max: 3.0,
        grid: 201,
        out: dir.path().to_path_buf(),
    };
    curves::run(&args, &mut std::io::sink()).map_err(fail)?;

    // efficiency and gain against ξ
    let rows = read_csv(&dir.path().join(GAIN_FILE))?;
    ensure(rows[0][1..8].iter().all(|&v| v == 1.0 || v == 0.5), || {
        "ξ = 0 row".into()
    })?;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        ensure(b[0] > a[0], || "ξ grid not increasing".into())?;
        ensure(b[1] < a[1] && b[2] < a[2], || {
            format!("efficiencies not decreasing at ξ={}", b[0])
        })?;
        ensure(b[4] >= a[4] - 1e-12 && b[7] >= a[7] - 1e-12, || {
            format!("gains not increasing at ξ={}", b[0])
        })?;
    }
    ensure(rows.iter().all(|r| r[1] >= r[2]), || {
        "η below η_INEPT".into()
    })?;
    let last = rows.last().unwrap();
    ensure((last[4] - E / 2.0).abs() / (E / 2.0) < 5e-3, || {
        format!("gain limit {}", last[4])
    })?;
    ensure((last[7] - E * E / 4.0).abs() / (E * E / 4.0) < 1e-2, || {
        format!("in-phase limit {}", last[7])
    })?;

    // finite-time efficiency against T
    for &x in &xis {
        let xi = rate(x);
        let rows = read_csv(&dir.path().join(curves::horizon_file(x)))?;
        let eta = analytic::eta_max(xi);
        let t_c = analytic::critical_time(xi) / PI;
        ensure(rows.iter().filter(|r| r[3] == 1.0).count() == 1, || {
            format!("ξ={x}: critical time not marked once")
        })?;
        for w in rows.windows(2) {
            ensure(w[1][1] >= w[0][1] - 1e-12, || {
                format!("ξ={x}: η_T decreases at T={}", w[1][0])
            })?;
        }
        for r in &rows {
            ensure(r[1] <= eta + 1e-12 && r[1] >= r[2] - 1e-12, || {
                format!("ξ={x}: bounds at T={}", r[0])
            })?;
            if r[0] <= t_c {
                ensure((r[1] - r[2]).abs() < 1e-12, || {
                    format!("ξ={x}: η_T ≠ INEPT below T_c")
                })?;
            }
        }
        let above = analytic::optimal_efficiency(PI * t_c * (1.0 + 1e-9), xi).map_err(fail)?;
        let at = analytic::eta_inept_at_horizon(PI * t_c, xi);
        ensure((above - at).abs() < 1e-6, || {
            format!("ξ={x}: jump {} at T_c", above - at)
        })?;
        let gap = eta - rows.last().unwrap()[1];
        ensure(gap < 1e-2, || {
            format!("ξ={x}: η_T(3/J) still {gap} below η")
        })?;
    }

    // trajectory shape of the compiled element
    let xi = rate(1.0);
    let system = System {
        xi,
        j_hz: J_HZ,
        k_hz: J_HZ,
    };
    let target = ProductOperator::IS(Cartesian::Y, Cartesian::Z);
    let (rope, trace) = simulate_rows(&system, 0.263, target, 801).map_err(fail)?;
    let (tau, late) = rope.phase_bounds().ok_or("no phase bounds")?;
    let (tau_s, late_s) = (tau / (PI * J_HZ), late / (PI * J_HZ));
    ensure(trace[0][3] == 0.0, || "Iz not zero at start".into())?;
    let iz_peak = trace.iter().map(|r| r[3]).fold(0.0, f64::max);
    ensure(iz_peak > 0.5, || format!("Iz peak {iz_peak}"))?;
    let body = &trace[1..trace.len() - 1];
    ensure(
        body.iter()
            .filter(|r| r[0] > tau_s + 1e-12)
            .all(|r| r[3].abs() < 1e-6),
        || "Iz does not return to 0".into(),
    )?;
    ensure(
        body.iter()
            .filter(|r| r[0] < late_s)
            .all(|r| r[5].abs() < 1e-9),
        || "2IzSz before phase III".into(),
    )?;
    let v_peak = body
        .iter()
        .filter(|r| r[0] > late_s)
        .map(|r| r[5])
        .fold(0.0, f64::max);
    ensure(v_peak > 0.1, || format!("2IzSz peak {v_peak}"))?;
    Ok(format!(
        "gain(ξ=100) {:.4}, Iz peak {iz_peak:.3}, 2IzSz peak {v_peak:.3}",
        last[4]
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("unconstrained optimum", criterion_1),
        ("INEPT baseline", criterion_2),
        ("finite-time geometry", criterion_3),
        ("tri-consistency", criterion_4),
        ("asymptotic gains", criterion_5),
        ("critical-time regime", criterion_6),
        ("property suites", criterion_7),
        ("figure regeneration", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.1}s] {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1}s] {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
