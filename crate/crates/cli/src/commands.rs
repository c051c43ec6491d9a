use std::io::Write;
use std::path::Path;

use rope_core::analytic;
use rope_core::oracle::{optimize, OptimizeOptions};
use rope_core::pulse::export::{manifest_json, shaped_segment_text};
use rope_core::pulse::{
    compile as compile_schedule, roundtrip_check, CompileOptions, PulseSequence,
};
use rope_core::quantum::{
    run_sequence, Cartesian, CoherenceVector, ProductOperator, SpinSystemParams,
};
use rope_core::reduced::{propagate, ControlSchedule, ReducedState};
use rope_core::synthesis::{
    synthesize_rope, verify_symmetry, Regime, RopeSchedule, SynthesisOptions,
};

use crate::output::{csv_text, ensure_dir, num, provenance, write_file, Header};
use crate::params::{rescale, unscale, System, SystemArgs, TimeArgs};
use crate::{CliError, CliResult, VerifyArgs};

/// Largest disagreement tolerated between a symmetric optimum and its mirror.
pub const SYMMETRY_TOLERANCE: f64 = 0.02;
/// Slack on the optimizer's efficiency bracket.
pub const ORACLE_BRACKET_SLACK: f64 = 1e-4;

fn line(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> CliResult<()> {
    writeln!(out, "{key:<22}{value}").map_err(|e| CliError::io("<stdout>", e))
}

fn value(out: &mut dyn Write, key: &str, v: f64) -> CliResult<()> {
    line(out, key, format!("{v:.6}"))
}

pub fn regime_label(r: Regime) -> &'static str {
    match r {
        Regime::Lossless => "lossless",
        Regime::ConstantControl => "inept",
        Regime::ThreePhase => "three-phase",
    }
}

fn system_params(system: &System, t_over_j: Option<f64>) -> Vec<(&'static str, String)> {
    let mut p = vec![
        ("xi", num(system.xi.value())),
        ("J_Hz", num(system.j_hz)),
        ("k_Hz", num(system.k_hz)),
    ];
    if let Some(t) = t_over_j {
        p.push(("T_over_J", num(t)));
    }
    p
}

fn synthesize_for(system: &System, t_over_j: f64, grid: usize) -> CliResult<RopeSchedule<f64>> {
    let options = SynthesisOptions {
        samples_per_phase: grid,
        ..Default::default()
    };
    Ok(synthesize_rope(rescale(t_over_j), system.xi, options)?)
}

fn parse_target(label: &str) -> CliResult<ProductOperator> {
    ProductOperator::parse(label)
        .ok_or_else(|| CliError::Invalid(format!("unknown product operator {label:?}")))
}

pub fn efficiency(system: &SystemArgs, time: &TimeArgs, out: &mut dyn Write) -> CliResult<()> {
    let s = system.resolve()?;
    let x = s.xi;
    let eta = analytic::eta_max(x);
    let (inept, t_inept) = analytic::eta_inept(x);
    let (inphase, inphase_inept) = analytic::inphase_efficiencies(x);
    value(out, "xi", x.value())?;
    value(out, "eta", eta)?;
    value(out, "eta_inept", inept)?;
    value(out, "t_inept_over_J", unscale(t_inept))?;
    value(out, "gain", eta / inept)?;
    value(out, "eta_inphase", inphase)?;
    value(out, "eta_inphase_inept", inphase_inept)?;
    value(out, "gain_inphase", inphase / inphase_inept)?;
    value(
        out,
        "t_critical_over_J",
        unscale(analytic::critical_time(x)),
    )?;
    let Some(t) = time.over_j(&s)? else {
        return Ok(());
    };
    let rope = synthesize_for(&s, t, rope_core::synthesis::DEFAULT_SAMPLES_PER_PHASE)?;
    value(out, "T_over_J", t)?;
    line(out, "regime", regime_label(rope.regime))?;
    value(out, "eta_T", analytic::optimal_efficiency(rescale(t), x)?)?;
    value(out, "u1_0", rope.initial_control().u1)?;
    if let Some(g) = rope.geometry {
        value(out, "tau_over_J", unscale(g.tau))?;
        value(out, "theta1_deg", g.theta1.to_degrees())?;
        value(out, "theta2_deg", g.theta2.to_degrees())?;
        value(out, "kappa_tau", g.kappa)?;
    }
    Ok(())
}

pub fn synthesize(
    system: &SystemArgs,
    time: &TimeArgs,
    grid: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let s = system.resolve()?;
    let t = time.require_over_j(&s)?;
    let rope = synthesize_for(&s, t, grid)?;
    let mut params = system_params(&s, Some(t));
    params.push(("grid", grid.to_string()));
    params.push(("regime", regime_label(rope.regime).into()));
    params.push(("time_unit", "rescaled t' = pi*J*t".into()));
    let text = rope.schedule.to_text(&provenance("synthesize", &params));
    match path {
        Some(p) => {
            write_file(p, &text)?;
            line(out, "regime", regime_label(rope.regime))?;
            value(out, "duration_over_J", unscale(rope.schedule.duration()))?;
            value(out, "eta_T", rope.predicted_efficiency())?;
            value(out, "u1_0", rope.initial_control().u1)?;
            if let Some((tau, _)) = rope.phase_bounds() {
                value(out, "tau_over_J", unscale(tau))?;
            }
            line(out, "wrote", p.display())
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub struct CompileArgs<'a> {
    pub schedule: Option<&'a Path>,
    pub target: &'a str,
    pub rf_cap: f64,
    pub grid: usize,
    pub dir: &'a Path,
}

fn build_sequence(
    s: &System,
    schedule: &ControlSchedule<f64>,
    target: ProductOperator,
    rf_cap: f64,
) -> CliResult<PulseSequence<f64>> {
    if !(rf_cap > 0.0 && rf_cap.is_finite()) {
        return Err(CliError::Invalid(format!(
            "--rf-cap must be positive, got {rf_cap}"
        )));
    }
    let options = CompileOptions {
        rf_cap_over_j: rf_cap,
    };
    Ok(compile_schedule(schedule, s.j_hz, s.xi, target, &options)?)
}

pub fn compile(
    system: &SystemArgs,
    time: &TimeArgs,
    args: &CompileArgs<'_>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let s = system.resolve()?;
    let target = parse_target(args.target)?;
    let (schedule, t_over_j) = match args.schedule {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let (schedule, _) = ControlSchedule::from_text(&text)?;
            let t = unscale(schedule.duration());
            (schedule, t)
        }
        None => {
            let t = time.require_over_j(&s)?;
            (synthesize_for(&s, t, args.grid)?.schedule, t)
        }
    };
    let seq = build_sequence(&s, &schedule, target, args.rf_cap)?;
    ensure_dir(args.dir)?;

    let mut params = system_params(&s, Some(t_over_j));
    params.push(("target", target.label()));
    params.push(("rf_cap_over_J", num(args.rf_cap)));
    let header = provenance("compile", &params);
    let mut files = Vec::new();
    for (i, seg) in seq.shaped_segments().enumerate() {
        let name = format!("shaped_{}.txt", i + 1);
        let extra: Header = header
            .iter()
            .filter(|(k, _)| k != "J_Hz" && k != "k_Hz")
            .cloned()
            .collect();
        write_file(
            &args.dir.join(&name),
            &shaped_segment_text(seg, &seq.metadata, &extra),
        )?;
        files.push(name);
    }
    let mut manifest = manifest_json(&seq, &files);
    let prov: serde_json::Map<String, serde_json::Value> = header
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    manifest["provenance"] = serde_json::Value::Object(prov);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Invalid(format!("manifest encoding failed: {e}")))?;
    let manifest_path = args.dir.join("manifest.json");
    write_file(&manifest_path, &(text + "\n"))?;

    line(out, "elements", seq.elements.len())?;
    line(out, "hard_pulses", seq.hard_pulses().count())?;
    line(out, "shaped_segments", files.len())?;
    line(out, "duration_s", format!("{:.9}", seq.duration()))?;
    value(
        out,
        "transfer_simulated",
        roundtrip_check(&seq, s.j_hz, s.k_hz)?,
    )?;
    line(out, "wrote", manifest_path.display())
}

pub const TRACE_COLUMNS: [&str; 7] = ["t_s", "Ix", "Iy", "Iz", "2IySz", "2IzSz", "target"];

/// Trace rows of [`TRACE_COLUMNS`] for the compiled optimal sequence.
pub fn simulate_rows(
    s: &System,
    t_over_j: f64,
    target: ProductOperator,
    samples: usize,
) -> CliResult<(RopeSchedule<f64>, Vec<Vec<f64>>)> {
    use Cartesian::*;
    let rope = synthesize_for(s, t_over_j, rope_core::synthesis::DEFAULT_SAMPLES_PER_PHASE)?;
    let seq = build_sequence(
        s,
        &rope.schedule,
        target,
        rope_core::pulse::DEFAULT_RF_CAP_OVER_J,
    )?;
    let params = SpinSystemParams::new(s.j_hz, s.k_hz)?;
    let result = run_sequence(
        &seq,
        &params,
        CoherenceVector::from_operator(ProductOperator::I(X)),
        samples,
    )?;
    let ops = [
        ProductOperator::I(X),
        ProductOperator::I(Y),
        ProductOperator::I(Z),
        ProductOperator::IS(Y, Z),
        ProductOperator::IS(Z, Z),
        target,
    ];
    let rows = result
        .trace
        .iter()
        .map(|p| {
            std::iter::once(p.t)
                .chain(ops.iter().map(|&o| p.state.get(o)))
                .collect()
        })
        .collect();
    Ok((rope, rows))
}

pub fn simulate(
    system: &SystemArgs,
    time: &TimeArgs,
    target: &str,
    samples: usize,
    path: &Path,
    out: &mut dyn Write,
) -> CliResult<()> {
    let s = system.resolve()?;
    let t = time.require_over_j(&s)?;
    let target = parse_target(target)?;
    if samples < 2 {
        return Err(CliError::Invalid(format!(
            "--grid must be at least 2, got {samples}"
        )));
    }
    let (rope, rows) = simulate_rows(&s, t, target, samples)?;
    let mut params = system_params(&s, Some(t));
    params.push(("target", target.label()));
    params.push(("initial", "Ix".into()));
    params.push(("grid", samples.to_string()));
    params.push(("regime", regime_label(rope.regime).into()));
    if let Some((a, b)) = rope.phase_bounds() {
        let to_s = |x: f64| unscale(x) / s.j_hz;
        params.push(("phase1_end_s", num(to_s(a))));
        params.push(("phase3_start_s", num(to_s(b))));
    }
    write_file(
        path,
        &csv_text(&provenance("simulate", &params), &TRACE_COLUMNS, &rows)?,
    )?;
    let last = rows.last().expect("at least two samples");
    value(out, "final_target", last[6])?;
    value(
        out,
        "Iz_peak",
        rows.iter().map(|r| r[3]).fold(f64::NEG_INFINITY, f64::max),
    )?;
    value(out, "eta_T", rope.predicted_efficiency())?;
    line(out, "wrote", path.display())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn near(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
            tolerance,
            passed: (value - reference).abs() <= tolerance,
            note: String::new(),
        }
    }

    fn failed(name: &str, note: String) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            reference: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub analytic: f64,
    pub checks: Vec<Check>,
    pub oracle_controls: Option<ControlSchedule<f64>>,
}

/// Analytic efficiency against the reduced-model simulation, the numerical
/// optimum and the full quantum simulation of the compiled sequence.
pub fn run_verification(
    s: &System,
    t_over_j: f64,
    cells: usize,
    seed: u64,
    tolerance: f64,
) -> CliResult<Verification> {
    let horizon = rescale(t_over_j);
    let x = s.xi;
    let analytic_eta = analytic::optimal_efficiency(horizon, x)?;
    let rope = synthesize_for(s, t_over_j, rope_core::synthesis::DEFAULT_SAMPLES_PER_PHASE)?;
    let mut checks = Vec::new();

    let step = rope.schedule.grid_spacing().min(1e-3);
    let traj = propagate(ReducedState::initial(), &rope.schedule, x, step)?;
    let reduced = traj
        .last()
        .expect("trajectory holds the initial state")
        .state
        .r2;
    checks.push(Check::near(
        "reduced_model",
        reduced,
        analytic_eta,
        tolerance,
    ));

    let mut oracle_controls = None;
    let options = OptimizeOptions {
        seed,
        ..Default::default()
    };
    match optimize(x, horizon, cells, 4, &options) {
        Ok(report) => {
            let eff = report.efficiency;
            checks.push(Check::near("oracle_optimum", eff, analytic_eta, tolerance));
            let lo = analytic::eta_inept_at_horizon(horizon, x) - ORACLE_BRACKET_SLACK;
            let hi = analytic_eta + ORACLE_BRACKET_SLACK;
            checks.push(Check {
                name: "oracle_bracket".into(),
                value: eff,
                reference: hi,
                tolerance: ORACLE_BRACKET_SLACK,
                passed: eff >= lo && eff <= hi,
                note: format!("{lo:.6} <= value <= {hi:.6}"),
            });
            let schedule = report.best.to_schedule()?;
            let mut sym = Check::near(
                "oracle_symmetry",
                verify_symmetry(&schedule),
                0.0,
                SYMMETRY_TOLERANCE,
            );
            sym.note = "max |u1(t) - u2(T-t)|".into();
            checks.push(sym);
            oracle_controls = Some(schedule);
        }
        Err(e) => checks.push(Check::failed("oracle_optimum", e.to_string())),
    }

    let quantum = build_sequence(
        s,
        &rope.schedule,
        ProductOperator::IS(Cartesian::Y, Cartesian::Z),
        rope_core::pulse::DEFAULT_RF_CAP_OVER_J,
    )
    .and_then(|seq| Ok(roundtrip_check(&seq, s.j_hz, s.k_hz)?));
    match quantum {
        Ok(q) => checks.push(Check::near(
            "quantum_simulation",
            q,
            analytic_eta,
            tolerance,
        )),
        Err(e) => checks.push(Check::failed("quantum_simulation", e.to_string())),
    }
    Ok(Verification {
        analytic: analytic_eta,
        checks,
        oracle_controls,
    })
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let s = args.system.resolve()?;
    let t = args.time.require_over_j(&s)?;
    if !(args.tolerance > 0.0 && args.tolerance.is_finite()) {
        return Err(CliError::Invalid(format!(
            "--tolerance must be positive, got {}",
            args.tolerance
        )));
    }
    if args.grid < rope_core::oracle::MIN_OPTIMIZE_CELLS {
        return Err(CliError::Invalid(format!(
            "--grid must be at least {}, got {}",
            rope_core::oracle::MIN_OPTIMIZE_CELLS,
            args.grid
        )));
    }
    let v = run_verification(&s, t, args.grid, args.seed, args.tolerance)?;
    value(out, "eta_T_analytic", v.analytic)?;
    let io = |e| CliError::io("<stdout>", e);
    writeln!(
        out,
        "{:<20}{:>12}{:>12}{:>12}  result",
        "check", "value", "reference", "tolerance"
    )
    .map_err(io)?;
    for c in &v.checks {
        writeln!(
            out,
            "{:<20}{:>12.6}{:>12.6}{:>12.1e}  {}{}",
            c.name,
            c.value,
            c.reference,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" },
            if c.note.is_empty() {
                String::new()
            } else {
                format!("  ({})", c.note)
            }
        )
        .map_err(io)?;
    }
    line(out, "seed", args.seed)?;
    line(
        out,
        "note",
        "oracle reports the best local optimum over its starts; global optimality is not certified",
    )?;

    if let (Some(dir), Some(controls)) = (&args.out, &v.oracle_controls) {
        ensure_dir(dir)?;
        let mut params = system_params(&s, Some(t));
        params.push(("cells", args.grid.to_string()));
        params.push(("seed", args.seed.to_string()));
        params.push(("time_unit", "rescaled t' = pi*J*t".into()));
        let path = dir.join("oracle_controls.txt");
        write_file(&path, &controls.to_text(&provenance("verify", &params)))?;
        line(out, "wrote", path.display())?;
    }
    let failed: Vec<_> = v
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
