//! The reduced two-dimensional bilinear control system.
//!
//! `r1` is the magnitude of in-phase coherence and polarization on spin I,
//! `r2` the magnitude of the antiphase and two-spin order terms. In rescaled
//! time `t' = πJ·t` the dynamics read
//!
//! ```text
//! d/dt' [r1]   [ -ξu1²   -u1u2 ] [r1]
//!       [r2] = [  u1u2   -ξu2² ] [r2]
//! ```
//!
//! with controls `u = cos β ∈ [0, 1]` and relative relaxation rate `ξ = k/J`.

pub mod flow;
mod schedule;

pub use schedule::{ControlSchedule, ScheduleSample};

use crate::analytic;
use crate::error::{Result, RopeError};
use crate::scalar::{acot, Real};

/// Default integration step in rescaled time units.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Relative relaxation rate `ξ = k/J`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RelativeRate<T>(T);

impl<T: Real> RelativeRate<T> {
    pub fn new(xi: T) -> Result<Self> {
        if xi.is_finite() && xi >= T::zero() {
            Ok(Self(xi))
        } else {
            Err(RopeError::InvalidParameter(format!(
                "relative relaxation rate must be finite and non-negative, got {xi}"
            )))
        }
    }

    /// `ξ = k/J` from the coupling and transverse relaxation rate in Hz.
    pub fn from_rates(j_hz: T, k_hz: T) -> Result<Self> {
        if !(j_hz > T::zero() && j_hz.is_finite()) {
            return Err(RopeError::InvalidParameter(format!(
                "coupling J must be positive, got {j_hz}"
            )));
        }
        Self::new(k_hz / j_hz)
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn is_lossless(self) -> bool {
        self.0 == T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReducedState<T> {
    pub r1: T,
    pub r2: T,
}

impl<T: Real> ReducedState<T> {
    pub fn new(r1: T, r2: T) -> Self {
        Self { r1, r2 }
    }

    /// All transfer starts from pure in-phase coherence.
    pub fn initial() -> Self {
        Self::new(T::one(), T::zero())
    }

    pub fn norm(&self) -> T {
        self.r1.hypot(self.r2)
    }

    /// Angle of the state vector with the `r1` axis.
    pub fn angle(&self) -> T {
        self.r2.atan2(self.r1)
    }

    pub fn is_finite(&self) -> bool {
        self.r1.is_finite() && self.r2.is_finite()
    }

    fn axpy(self, a: T, d: Self) -> Self {
        Self::new(self.r1 + a * d.r1, self.r2 + a * d.r2)
    }
}

/// Control pair `(u1, u2) = (cos β1, cos β2)`, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlValue<T> {
    pub u1: T,
    pub u2: T,
}

impl<T: Real> ControlValue<T> {
    /// Clamps both components into `[0, 1]`.
    pub fn new(u1: T, u2: T) -> Self {
        let clamp = |u: T| u.max(T::zero()).min(T::one());
        Self {
            u1: clamp(u1),
            u2: clamp(u2),
        }
    }

    pub fn full() -> Self {
        Self::new(T::one(), T::one())
    }

    pub fn off() -> Self {
        Self::new(T::zero(), T::zero())
    }
}

/// A state stamped with rescaled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedState<T> {
    pub t: T,
    pub state: ReducedState<T>,
}

pub type Trajectory<T> = Vec<TimedState<T>>;

/// `(dr1/dt', dr2/dt')` of the reduced system.
#[inline]
pub fn reduced_rhs<T: Real>(
    state: ReducedState<T>,
    u: ControlValue<T>,
    xi: RelativeRate<T>,
) -> ReducedState<T> {
    let xi = xi.value();
    let c = u.u1 * u.u2;
    ReducedState {
        r1: -xi * u.u1 * u.u1 * state.r1 - c * state.r2,
        r2: c * state.r1 - xi * u.u2 * u.u2 * state.r2,
    }
}

/// Classic RK4 step for a control that may depend on time and state.
#[inline]
fn rk4_step<T: Real, F>(
    state: ReducedState<T>,
    t: T,
    h: T,
    xi: RelativeRate<T>,
    control: &F,
) -> ReducedState<T>
where
    F: Fn(T, &ReducedState<T>) -> ControlValue<T>,
{
    let half = T::lit(0.5);
    let k1 = reduced_rhs(state, control(t, &state), xi);
    let s2 = state.axpy(h * half, k1);
    let k2 = reduced_rhs(s2, control(t + h * half, &s2), xi);
    let s3 = state.axpy(h * half, k2);
    let k3 = reduced_rhs(s3, control(t + h * half, &s3), xi);
    let s4 = state.axpy(h, k3);
    let k4 = reduced_rhs(s4, control(t + h, &s4), xi);
    let sixth = T::one() / T::lit(6.0);
    ReducedState {
        r1: state.r1 + h * sixth * (k1.r1 + T::lit(2.0) * (k2.r1 + k3.r1) + k4.r1),
        r2: state.r2 + h * sixth * (k1.r2 + T::lit(2.0) * (k2.r2 + k3.r2) + k4.r2),
    }
}

/// Integrates `[t0, t1]` with uniform RK4 steps no longer than `step`,
/// appending every step to `out`.
fn integrate_span<T: Real, F>(
    out: &mut Trajectory<T>,
    t0: T,
    t1: T,
    step: T,
    xi: RelativeRate<T>,
    control: &F,
) -> Result<()>
where
    F: Fn(T, &ReducedState<T>) -> ControlValue<T>,
{
    let span = t1 - t0;
    let n = (span / step).ceil().to_usize().unwrap_or(1).max(1);
    let h = span / T::from_usize_lossy(n);
    let mut state = out.last().expect("trajectory seeded").state;
    for k in 0..n {
        let t = t0 + h * T::from_usize_lossy(k);
        state = rk4_step(state, t, h, xi, control);
        let t_next = if k + 1 == n { t1 } else { t + h };
        if !state.is_finite() {
            return Err(RopeError::NonFinite {
                time: t_next.as_f64(),
            });
        }
        out.push(TimedState { t: t_next, state });
    }
    Ok(())
}

fn check_step<T: Real>(step: T) -> Result<()> {
    if step > T::zero() && step.is_finite() {
        Ok(())
    } else {
        Err(RopeError::InvalidParameter(format!(
            "step must be positive, got {step}"
        )))
    }
}

/// Fixed-step RK4 integration of the reduced system under `schedule`.
///
/// Every sample interval is integrated separately so the piecewise-linear
/// controls are smooth within each step. The trajectory holds the initial
/// state and every step endpoint.
pub fn propagate<T: Real>(
    state: ReducedState<T>,
    schedule: &ControlSchedule<T>,
    xi: RelativeRate<T>,
    step: T,
) -> Result<Trajectory<T>> {
    check_step(step)?;
    if step > schedule.grid_spacing() {
        return Err(RopeError::InvalidParameter(format!(
            "step {step} exceeds the schedule grid spacing {}",
            schedule.grid_spacing()
        )));
    }
    if !state.is_finite() {
        return Err(RopeError::NonFinite { time: 0.0 });
    }
    let mut out = vec![TimedState {
        t: T::zero(),
        state,
    }];
    for w in schedule.samples().windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let control = |t: T, _: &ReducedState<T>| schedule::interpolate(a, b, t);
        integrate_span(&mut out, a.t, b.t, step, xi, &control)?;
    }
    Ok(out)
}

/// Fixed-step RK4 integration under a state-feedback law over `[0, duration]`.
pub fn propagate_feedback<T: Real, F>(
    state: ReducedState<T>,
    law: F,
    xi: RelativeRate<T>,
    duration: T,
    step: T,
) -> Result<Trajectory<T>>
where
    F: Fn(&ReducedState<T>) -> ControlValue<T>,
{
    check_step(step)?;
    if !(duration > T::zero()) {
        return Err(RopeError::InvalidParameter(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let mut out = vec![TimedState {
        t: T::zero(),
        state,
    }];
    let control = |_: T, s: &ReducedState<T>| law(s);
    integrate_span(&mut out, T::zero(), duration, step, xi, &control)?;
    Ok(out)
}

/// Constant full-coupling element of duration `acot ξ`, which maximizes `r2`
/// among constant controls.
pub fn inept_schedule<T: Real>(xi: RelativeRate<T>) -> ControlSchedule<T> {
    let duration = acot(xi.value());
    ControlSchedule::constant(duration, ControlValue::full())
        .expect("acot of a finite non-negative rate is positive")
}

/// Optimal return function `V = sqrt(η² r1² + r2²)` of the unconstrained-time problem.
pub fn return_function<T: Real>(state: ReducedState<T>, xi: RelativeRate<T>) -> T {
    let eta = analytic::eta_max(xi);
    (eta * state.r1).hypot(state.r2)
}

/// `dV/dt'` along the reduced dynamics at `(state, u)`.
///
/// Non-positive for every admissible control and zero exactly on the optimal
/// feedback law.
pub fn hjb_dissipation<T: Real>(
    state: ReducedState<T>,
    u: ControlValue<T>,
    xi: RelativeRate<T>,
) -> T {
    let v = return_function(state, xi);
    if v == T::zero() {
        return T::zero();
    }
    let eta = analytic::eta_max(xi);
    let f = reduced_rhs(state, u, xi);
    (eta * eta * state.r1 * f.r1 + state.r2 * f.r2) / v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn xi(x: f64) -> RelativeRate<f64> {
        RelativeRate::new(x).unwrap()
    }

    #[test]
    fn relative_rate_validation() {
        assert!(RelativeRate::new(-0.1).is_err());
        assert!(RelativeRate::new(f64::NAN).is_err());
        assert!(RelativeRate::new(f64::INFINITY).is_err());
        assert_eq!(RelativeRate::from_rates(90.0, 45.0).unwrap().value(), 0.5);
        assert!(RelativeRate::from_rates(0.0, 1.0).is_err());
    }

    #[test]
    fn control_values_are_clamped() {
        let u = ControlValue::new(-0.2, 1.7);
        assert_eq!((u.u1, u.u2), (0.0, 1.0));
    }

    #[test]
    fn rhs_examples() {
        let d = reduced_rhs(ReducedState::new(1.0, 0.0), ControlValue::full(), xi(1.0));
        assert_eq!((d.r1, d.r2), (-1.0, 1.0));

        let d = reduced_rhs(
            ReducedState::new(0.7, 0.4),
            ControlValue::new(0.0, 0.6),
            xi(3.0),
        );
        assert_eq!(d.r1, 0.0);
        assert_abs_diff_eq!(d.r2, -3.0 * 0.36 * 0.4, epsilon = 1e-15);

        // -ξu1²r1 - u1u2r2 = -2·0.25·0.8 - 0.5·0.3; u1u2r1 - ξu2²r2 = 0.5·0.8 - 2·0.3
        let d = reduced_rhs(
            ReducedState::new(0.8, 0.3),
            ControlValue::new(0.5, 1.0),
            xi(2.0),
        );
        assert_abs_diff_eq!(d.r1, -0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(d.r2, -0.2, epsilon = 1e-15);
    }

    #[test]
    fn lossless_rotation_transfers_completely() {
        let s = ControlSchedule::constant(FRAC_PI_2, ControlValue::full()).unwrap();
        let tr = propagate(ReducedState::initial(), &s, xi(0.0), 1e-3).unwrap();
        let end = tr.last().unwrap();
        assert_eq!(end.t, FRAC_PI_2);
        assert_abs_diff_eq!(end.state.r1, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(end.state.r2, 1.0, epsilon = 1e-8);
        assert_eq!(tr[0].t, 0.0);
    }

    #[test]
    fn constant_control_closed_form() {
        let s = ControlSchedule::constant(FRAC_PI_4, ControlValue::full()).unwrap();
        let end = propagate(ReducedState::initial(), &s, xi(1.0), 1e-3)
            .unwrap()
            .last()
            .unwrap()
            .state;
        let expect = (-FRAC_PI_4).exp() * FRAC_PI_4.cos();
        assert_abs_diff_eq!(end.r1, expect, epsilon = 1e-8);
        assert_abs_diff_eq!(end.r2, expect, epsilon = 1e-8);
        assert_abs_diff_eq!(expect, 0.32240, epsilon = 1e-5);

        let s = ControlSchedule::constant(PI, ControlValue::full()).unwrap();
        for p in propagate(ReducedState::initial(), &s, xi(0.7), 1e-3).unwrap() {
            let decay = (-0.7 * p.t).exp();
            assert_abs_diff_eq!(p.state.r1, decay * p.t.cos(), epsilon = 1e-8);
            assert_abs_diff_eq!(p.state.r2, decay * p.t.sin(), epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_generator_freezes_state() {
        let s = ControlSchedule::constant(3.0, ControlValue::off()).unwrap();
        let end = propagate(ReducedState::initial(), &s, xi(5.0), 1e-2).unwrap();
        assert_eq!(end.last().unwrap().state, ReducedState::initial());
    }

    #[test]
    fn propagate_rejects_bad_steps_and_states() {
        let s = ControlSchedule::constant(1.0, ControlValue::full()).unwrap();
        assert!(propagate(ReducedState::initial(), &s, xi(1.0), 0.0).is_err());
        assert!(propagate(ReducedState::initial(), &s, xi(1.0), 2.0).is_err());
        let bad = ReducedState::new(f64::NAN, 0.0);
        assert!(matches!(
            propagate(bad, &s, xi(1.0), 1e-2),
            Err(RopeError::NonFinite { .. })
        ));
        let huge = ReducedState::new(f64::MAX, f64::MAX);
        assert!(matches!(
            propagate(huge, &s, xi(1.0), 1e-2),
            Err(RopeError::NonFinite { .. })
        ));
    }

    #[test]
    fn fourth_order_convergence_on_a_smooth_schedule() {
        let s = ControlSchedule::new(vec![
            ScheduleSample {
                t: 0.0,
                u: ControlValue::new(0.3, 1.0),
            },
            ScheduleSample {
                t: 2.0,
                u: ControlValue::new(1.0, 0.5),
            },
        ])
        .unwrap();
        let end = |h: f64| {
            propagate(ReducedState::initial(), &s, xi(0.8), h)
                .unwrap()
                .last()
                .unwrap()
                .state
        };
        let reference = end(0.2 / 256.0);
        let err = |h: f64| {
            let e = end(h);
            (e.r1 - reference.r1).hypot(e.r2 - reference.r2)
        };
        let (e1, e2, e3) = (err(0.2), err(0.1), err(0.05));
        let order1 = (e1 / e2).log2();
        let order2 = (e2 / e3).log2();
        assert!(order1 >= 3.8 && order2 >= 3.8, "orders {order1} {order2}");
    }

    #[test]
    fn inept_durations() {
        assert_abs_diff_eq!(
            inept_schedule(xi(1.0)).duration(),
            FRAC_PI_4,
            epsilon = 1e-15
        );
        // physical 1/(4J) for ξ = 1
        assert_abs_diff_eq!(
            inept_schedule(xi(1.0)).duration() / PI,
            0.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            inept_schedule(xi(0.0)).duration(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert!(inept_schedule(xi(1e9)).duration() < 1e-8);
    }

    #[test]
    fn return_function_examples() {
        assert_abs_diff_eq!(
            return_function(ReducedState::initial(), xi(1.0)),
            2f64.sqrt() - 1.0,
            epsilon = 1e-15
        );
        assert_eq!(return_function(ReducedState::new(0.0, 0.37), xi(4.0)), 0.37);
        let eta = 2f64.sqrt() - 1.0;
        let expect = (eta * eta * 0.36 + 0.25).sqrt();
        assert_abs_diff_eq!(
            return_function(ReducedState::new(0.6, 0.5), xi(1.0)),
            expect,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(expect, 0.55836, epsilon = 1e-5);
    }

    #[test]
    fn hjb_examples() {
        let d = hjb_dissipation(ReducedState::initial(), ControlValue::full(), xi(1.0));
        // ∇V·f = -ξ(η u1 r1 - u2 r2)²/V = -η at (1,0) with full controls
        assert!(d < 0.0);
        assert_abs_diff_eq!(d, -(2f64.sqrt() - 1.0), epsilon = 1e-14);
        assert_eq!(
            hjb_dissipation(ReducedState::new(0.3, 0.2), ControlValue::off(), xi(1.0)),
            0.0
        );
    }

    #[test]
    fn f32_smoke() {
        let d = reduced_rhs(
            ReducedState::new(0.8f32, 0.3),
            ControlValue::new(0.5, 1.0),
            RelativeRate::new(2.0f32).unwrap(),
        );
        assert!((d.r1 + 0.55).abs() < 1e-6);
        let s =
            ControlSchedule::constant(std::f32::consts::FRAC_PI_2, ControlValue::full()).unwrap();
        let end = propagate(
            ReducedState::initial(),
            &s,
            RelativeRate::new(0.0f32).unwrap(),
            1e-2f32,
        )
        .unwrap()
        .last()
        .unwrap()
        .state;
        assert!((end.r2 - 1.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn norm_dissipation_identity(
            r1 in 0.0f64..1.0, r2 in 0.0f64..1.0,
            u1 in 0.0f64..=1.0, u2 in 0.0f64..=1.0, x in 0.0f64..10.0,
        ) {
            let s = ReducedState::new(r1, r2);
            let u = ControlValue::new(u1, u2);
            let f = reduced_rhs(s, u, xi(x));
            let lhs = 2.0 * (r1 * f.r1 + r2 * f.r2);
            let rhs = -2.0 * x * (u1 * u1 * r1 * r1 + u2 * u2 * r2 * r2);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            prop_assert!(lhs <= 1e-15);
        }

        #[test]
        fn hjb_inequality(
            r1 in 0.0f64..1.0, r2 in 0.0f64..1.0,
            u1 in 0.0f64..=1.0, u2 in 0.0f64..=1.0, x in 0.0f64..10.0,
        ) {
            let d = hjb_dissipation(ReducedState::new(r1, r2), ControlValue::new(u1, u2), xi(x));
            prop_assert!(d <= 1e-10);
        }
    }
}
