use std::f64::consts::PI;

use rope_core::analytic;
use rope_core::pulse::{compile, roundtrip_check, CompileOptions, PhaseAxis, PulseElement, Spin};
use rope_core::quantum::{
    reduced_projection_error, run_sequence, Cartesian, CoherenceVector, ProductOperator,
    SpinSystemParams,
};
use rope_core::reduced::{ControlSchedule, ControlValue, ScheduleSample};
use rope_core::synthesis::{synthesize_rope, SynthesisOptions};
use rope_core::{RelativeRate64, RopeError};

use Cartesian::*;
use ProductOperator as P;

const J: f64 = 140.0;

fn rate(x: f64) -> RelativeRate64 {
    RelativeRate64::new(x).unwrap()
}

fn antiphase() -> ProductOperator {
    P::IS(Y, Z)
}

fn reference_schedule() -> rope_core::synthesis::RopeSchedule<f64> {
    let xi = rate(1.0);
    let horizon = analytic::time_of_tau(0.1 * PI, xi).unwrap();
    synthesize_rope(horizon, xi, SynthesisOptions::default()).unwrap()
}

#[test]
fn reference_element_pulse_angles() {
    let rope = reference_schedule();
    let seq = compile(
        &rope.schedule,
        J,
        rate(1.0),
        antiphase(),
        &CompileOptions::default(),
    )
    .unwrap();
    let hard: Vec<_> = seq.hard_pulses().collect();
    let first = hard.first().unwrap();
    assert_eq!((first.spin, first.axis), (Spin::I, PhaseAxis::MinusY));
    assert!(
        (first.flip_angle.to_degrees() - 55.0).abs() < 0.5,
        "{}",
        first.flip_angle.to_degrees()
    );
    let last = hard.last().unwrap();
    assert_eq!((last.spin, last.axis), (Spin::I, PhaseAxis::MinusX));
    assert!((last.flip_angle - first.flip_angle).abs() < 1e-9);
    assert!((seq.duration() - rope.schedule.duration() / (PI * J)).abs() < 1e-15);

    // y-phase before the delay, x-phase after it
    let shaped: Vec<_> = seq.shaped_segments().collect();
    assert_eq!(shaped.len(), 2);
    assert!(shaped[0].samples().iter().all(|s| s.nu_x == 0.0));
    assert!(shaped[1].samples().iter().all(|s| s.nu_y == 0.0));
    let cap = 100.0 * J;
    for s in &shaped {
        assert!(s.peak_amplitude() <= cap * 1.05, "{}", s.peak_amplitude());
    }
}

#[test]
fn reference_element_transfers_eta_t() {
    let rope = reference_schedule();
    let xi = rate(1.0);
    let seq = compile(
        &rope.schedule,
        J,
        xi,
        antiphase(),
        &CompileOptions::default(),
    )
    .unwrap();
    let got = roundtrip_check(&seq, J, J).unwrap();
    let want = rope.geometry.unwrap().eta_t;
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    assert!((want - 0.345).abs() < 1e-3);
}

#[test]
fn trace_shape_follows_the_three_phases() {
    let rope = reference_schedule();
    let (tau, late) = rope.phase_bounds().unwrap();
    let seq = compile(
        &rope.schedule,
        J,
        rate(1.0),
        antiphase(),
        &CompileOptions::default(),
    )
    .unwrap();
    let params = SpinSystemParams::new(J, J).unwrap();
    let r = run_sequence(&seq, &params, CoherenceVector::from_operator(P::I(X)), 801).unwrap();
    let to_s = |t: f64| t / (PI * J);
    let iz: Vec<(f64, f64)> = r
        .trace
        .iter()
        .map(|s| (s.t, s.state.get(P::I(Z))))
        .collect();
    let peak = iz.iter().skip(1).map(|p| p.1).fold(0.0, f64::max);
    assert!(peak > 0.5);
    for s in &r.trace[1..r.trace.len() - 1] {
        let v = s.state.get(P::IS(Z, Z));
        if s.t < to_s(late) {
            assert!(v.abs() < 1e-9, "2IzSz before phase III: {v}");
        }
        if s.t > to_s(tau) + 1e-12 {
            assert!(s.state.get(P::I(Z)).abs() < 1e-6);
        }
    }
    let v_peak = r.trace[..r.trace.len() - 1]
        .iter()
        .map(|s| s.state.get(P::IS(Z, Z)))
        .fold(0.0, f64::max);
    assert!(v_peak > 0.1);
}

#[test]
fn compiled_sequences_project_onto_the_reduced_model() {
    let rope = reference_schedule();
    let seq = compile(
        &rope.schedule,
        J,
        rate(1.0),
        antiphase(),
        &CompileOptions::default(),
    )
    .unwrap();
    let params = SpinSystemParams::new(J, J).unwrap();
    let r = run_sequence(&seq, &params, CoherenceVector::from_operator(P::I(X)), 4001).unwrap();
    // the two cap substitutions rotate within the (x, z) and (w, v) planes, so the radii
    // stay continuous across them
    let err = reduced_projection_error(&r, &params).unwrap();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn constant_schedules_compile_to_a_delay() {
    let xi = rate(1.0);
    let horizon = 0.1 * PI;
    let s = ControlSchedule::constant(horizon, ControlValue::full()).unwrap();
    let seq = compile(&s, J, xi, antiphase(), &CompileOptions::default()).unwrap();
    assert_eq!(seq.elements, vec![PulseElement::Delay(0.1 / J)]);
    let got = roundtrip_check(&seq, J, J).unwrap();
    assert!((got - analytic::eta_inept_at_horizon(horizon, xi)).abs() < 1e-12);

    let (eta, t_opt) = analytic::eta_inept(xi);
    let s = ControlSchedule::constant(t_opt, ControlValue::full()).unwrap();
    let seq = compile(&s, J, xi, antiphase(), &CompileOptions::default()).unwrap();
    assert!((roundtrip_check(&seq, J, J).unwrap() - eta).abs() < 1e-12);
    assert!((eta - 0.32240).abs() < 5e-3);

    let lossless = synthesize_rope(0.5 * PI, rate(0.0), SynthesisOptions::default()).unwrap();
    let seq = compile(
        &lossless.schedule,
        J,
        rate(0.0),
        antiphase(),
        &CompileOptions::default(),
    )
    .unwrap();
    assert_eq!(seq.elements.len(), 1);
    assert!((roundtrip_check(&seq, J, 0.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn every_antiphase_target_is_reached() {
    let rope = reference_schedule();
    let want = rope.geometry.unwrap().eta_t;
    for b in [X, Y, Z] {
        for g in [X, Y, Z] {
            let seq = compile(
                &rope.schedule,
                J,
                rate(1.0),
                P::IS(b, g),
                &CompileOptions::default(),
            )
            .unwrap();
            let got = roundtrip_check(&seq, J, J).unwrap();
            assert!((got - want).abs() < 5e-3, "2I{b:?}S{g:?}: {got}");
        }
    }
    let err = compile(
        &rope.schedule,
        J,
        rate(1.0),
        P::S(X),
        &CompileOptions::default(),
    );
    assert!(matches!(err, Err(RopeError::InvalidParameter(_))));
}

#[test]
fn rf_cap_rules() {
    let rope = reference_schedule();
    // a tight cap widens the hard-pulse substitution but still compiles
    let tight = CompileOptions { rf_cap_over_j: 5.0 };
    let seq = compile(&rope.schedule, J, rate(1.0), antiphase(), &tight).unwrap();
    assert_eq!(seq.hard_pulses().count(), 4);
    let got = roundtrip_check(&seq, J, J).unwrap();
    assert!((got - rope.geometry.unwrap().eta_t).abs() < 2e-2);

    // a jump in the middle of phase I cannot be substituted
    let sample = |t: f64, u1: f64, u2: f64| ScheduleSample {
        t,
        u: ControlValue::new(u1, u2),
    };
    let s = ControlSchedule::new(vec![
        sample(0.0, 0.3, 1.0),
        sample(0.1, 0.3, 1.0),
        sample(0.1 + 1e-6, 0.6, 1.0),
        sample(0.3, 0.7, 1.0),
        sample(0.4, 1.0, 1.0),
        sample(0.8, 1.0, 1.0),
    ])
    .unwrap();
    let err = compile(&s, J, rate(1.0), antiphase(), &CompileOptions::default()).unwrap_err();
    assert!(matches!(err, RopeError::RfCapExceeded { .. }), "{err}");
}

#[test]
fn unstructured_schedules_are_rejected() {
    let sample = |t: f64, u1: f64, u2: f64| ScheduleSample {
        t,
        u: ControlValue::new(u1, u2),
    };
    let both_low =
        ControlSchedule::new(vec![sample(0.0, 0.5, 0.5), sample(1.0, 1.0, 1.0)]).unwrap();
    assert!(matches!(
        compile(
            &both_low,
            J,
            rate(1.0),
            antiphase(),
            &CompileOptions::default()
        ),
        Err(RopeError::InvalidSchedule(_))
    ));
    let reversed = ControlSchedule::new(vec![
        sample(0.0, 1.0, 0.5),
        sample(0.5, 1.0, 1.0),
        sample(1.0, 0.5, 1.0),
    ])
    .unwrap();
    assert!(matches!(
        compile(
            &reversed,
            J,
            rate(1.0),
            antiphase(),
            &CompileOptions::default()
        ),
        Err(RopeError::InvalidSchedule(_))
    ));
}

#[test]
fn efficiency_agrees_across_the_horizon_range() {
    for x in [0.5, 2.0] {
        let xi = rate(x);
        let tc = analytic::critical_time(xi);
        for f in [1.5, 3.0] {
            let rope = synthesize_rope(f * tc, xi, SynthesisOptions::default()).unwrap();
            let seq = compile(
                &rope.schedule,
                J,
                xi,
                antiphase(),
                &CompileOptions::default(),
            )
            .unwrap();
            let got = roundtrip_check(&seq, J, J * x).unwrap();
            let want = rope.predicted_efficiency();
            assert!((got - want).abs() < 5e-3, "ξ={x} T={f}Tc: {got} vs {want}");
        }
    }
}
