//! Optimal control schedules.
//!
//! Three constructions live here: the finite-time three-phase element, the
//! infinite-horizon feedback law `u2/u1 = η r1/r2`, and the case-based policy
//! that maximizes the control Hamiltonian in the ratio coordinates
//! `a = λ2/λ1` (costate) and `b = r2/r1` (state).
//!
//! ## Phase-I reconstruction
//!
//! During phase I, `u2 = 1` and `u1 = (a - b)/(2ξ)` with `b = κ(t) a`, hence
//! `u1 = a (1 - κ)/(2ξ)`. The costate ratio obeys
//!
//! ```text
//! da/dt' = u1 u2 (1 + a²) + ξ a (u2² - u1²)
//! ```
//!
//! which is regular on `[0, τ]`. It is integrated backwards from the exact
//! switching condition `u1(τ) = 1`, i.e. `a(τ) = 2ξ/(1 - κ(τ))`; `u1(0) = a(0)/(2ξ)`
//! then follows without extrapolation. Phase III is the time mirror of phase I
//! with the roles of `u1` and `u2` exchanged.

use crate::analytic::{self, SwitchingGeometry};
use crate::error::{Result, RopeError};
use crate::reduced::{ControlSchedule, ControlValue, ReducedState, RelativeRate, ScheduleSample};
use crate::scalar::Real;

/// Default number of intervals per phase.
pub const DEFAULT_SAMPLES_PER_PHASE: usize = 2000;

/// `(a, b) = (λ2/λ1, r2/r1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCoordinates<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> RatioCoordinates<T> {
    pub fn from_states(state: ReducedState<T>, adjoint: AdjointState<T>) -> Self {
        Self {
            a: adjoint.lambda2 / adjoint.lambda1,
            b: state.r2 / state.r1,
        }
    }
}

/// Costate `(λ1, λ2) = (∂V/∂r1, ∂V/∂r2)`; terminal value `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointState<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Real> AdjointState<T> {
    pub fn terminal() -> Self {
        Self {
            lambda1: T::zero(),
            lambda2: T::one(),
        }
    }

    /// `λ·r`, constant along every trajectory of the reduced system.
    pub fn pairing(&self, state: ReducedState<T>) -> T {
        self.lambda1 * state.r1 + self.lambda2 * state.r2
    }
}

/// Maximizer of the control Hamiltonian `-λ1 r1 [ξu1² - (a-b)u1u2 + ξab u2²]`.
///
/// * Case I, `a - b < 2ξ`: `(u1, u2) = ((a-b)/(2ξ), 1)`
/// * Case II, `a - b ≥ 2ξ` and `(a-b)/(ab) ≥ 2ξ`: `(1, 1)`
/// * Case III, `(a-b)/(ab) < 2ξ`: `(1, (a-b)/(2ξab))`
pub fn policy_from_ratios<T: Real>(
    coords: RatioCoordinates<T>,
    xi: RelativeRate<T>,
) -> Result<ControlValue<T>> {
    let RatioCoordinates { a, b } = coords;
    let x = xi.value();
    let two_xi = T::lit(2.0) * x;
    let diff = a - b;
    let ab = a * b;
    let outside = || RopeError::OutsideFiniteTimeRegime {
        a: a.as_f64(),
        b: b.as_f64(),
    };
    if !(a >= T::zero() && b >= T::zero()) || x <= T::zero() {
        return Err(RopeError::InvalidParameter(format!(
            "policy needs a, b ≥ 0 and ξ > 0 (a = {a}, b = {b}, ξ = {x})"
        )));
    }
    if diff <= T::zero() || diff * diff <= two_xi * two_xi * ab {
        return Err(outside());
    }
    if diff < two_xi {
        return Ok(ControlValue::new(diff / two_xi, T::one()));
    }
    // ab = 0 means (a-b)/(ab) = +∞, always Case II
    if ab > T::zero() && diff < two_xi * ab {
        return Ok(ControlValue::new(T::one(), diff / (two_xi * ab)));
    }
    Ok(ControlValue::full())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `ξ = 0`: full coupling for `min(T', π/2)`.
    Lossless,
    /// Horizon at or below the critical time: constant full controls.
    ConstantControl,
    /// Gradual phase I, saturated phase II, mirrored phase III.
    ThreePhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RopeSchedule<T> {
    pub schedule: ControlSchedule<T>,
    pub regime: Regime,
    pub xi: RelativeRate<T>,
    pub geometry: Option<SwitchingGeometry<T>>,
    /// Phase-I samples of the costate ratio `a(t)`, increasing in time.
    pub adjoint_ratio: Vec<(T, T)>,
}

impl<T: Real> RopeSchedule<T> {
    pub fn initial_control(&self) -> ControlValue<T> {
        self.schedule.samples()[0].u
    }

    /// `(τ', T' - τ')` for three-phase schedules.
    pub fn phase_bounds(&self) -> Option<(T, T)> {
        self.geometry.map(|g| (g.tau, g.horizon - g.tau))
    }

    /// Predicted `r2(T)` for the initial state `(1, 0)`.
    pub fn predicted_efficiency(&self) -> T {
        match (self.regime, self.geometry) {
            (Regime::ThreePhase, Some(g)) => g.eta_t,
            _ => {
                let t = self.schedule.duration();
                (-self.xi.value() * t).exp() * t.sin()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Intervals per phase; at least 2.
    pub samples_per_phase: usize,
    /// RK4 sub-steps per interval of the phase-I reconstruction.
    pub substeps: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            samples_per_phase: DEFAULT_SAMPLES_PER_PHASE,
            substeps: 2,
        }
    }
}

/// Optimal schedule for the transfer `(1, 0) → max r2(T')` within horizon `T'`.
pub fn synthesize_rope<T: Real>(
    horizon: T,
    xi: RelativeRate<T>,
    options: SynthesisOptions,
) -> Result<RopeSchedule<T>> {
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(RopeError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if options.samples_per_phase < 2 {
        return Err(RopeError::InvalidParameter(
            "need at least two samples per phase".into(),
        ));
    }
    let constant = |duration: T, regime| -> Result<RopeSchedule<T>> {
        Ok(RopeSchedule {
            schedule: ControlSchedule::constant(duration, ControlValue::full())?,
            regime,
            xi,
            geometry: None,
            adjoint_ratio: Vec::new(),
        })
    };
    if xi.is_lossless() {
        return constant(horizon.min(T::FRAC_PI_2()), Regime::Lossless);
    }
    if horizon <= analytic::critical_time(xi) {
        return constant(horizon, Regime::ConstantControl);
    }

    let geometry = analytic::tau_of_time(horizon, xi)?;
    let n = options.samples_per_phase;
    let phase_one = reconstruct_phase_one(&geometry, n, options.substeps.max(1))?;

    let tau = geometry.tau;
    let mirror_start = horizon - tau;
    let mut samples: Vec<ScheduleSample<T>> = Vec::with_capacity(3 * n + 3);
    for &(t, _, u1) in &phase_one {
        samples.push(ScheduleSample {
            t,
            u: ControlValue::new(u1, T::one()),
        });
    }
    let middle = mirror_start - tau;
    if middle > T::zero() {
        for k in 1..n {
            let t = tau + middle * T::from_usize_lossy(k) / T::from_usize_lossy(n);
            samples.push(ScheduleSample {
                t,
                u: ControlValue::full(),
            });
        }
    }
    for &(t, _, u1) in phase_one.iter().rev() {
        samples.push(ScheduleSample {
            t: horizon - t,
            u: ControlValue::new(T::one(), u1),
        });
    }
    // pin the endpoints and drop samples that collapse in floating point
    let last = samples.len() - 1;
    samples[last].t = horizon;
    let mut grid: Vec<ScheduleSample<T>> = Vec::with_capacity(samples.len());
    for s in samples {
        match grid.last() {
            Some(p) if s.t <= p.t => {}
            _ => grid.push(s),
        }
    }
    if grid.last().map(|s| s.t) != Some(horizon) {
        let u = ControlValue::new(T::one(), phase_one[0].2);
        grid.pop();
        grid.push(ScheduleSample { t: horizon, u });
    }

    Ok(RopeSchedule {
        schedule: ControlSchedule::new(grid)?,
        regime: Regime::ThreePhase,
        xi,
        geometry: Some(geometry),
        adjoint_ratio: phase_one.iter().map(|&(t, a, _)| (t, a)).collect(),
    })
}

/// `(t, a(t), u1(t))` on a grid clustered at both ends of `[0, τ]`.
fn reconstruct_phase_one<T: Real>(
    geometry: &SwitchingGeometry<T>,
    n: usize,
    substeps: usize,
) -> Result<Vec<(T, T, T)>> {
    let xi = geometry.xi;
    let x = xi.value();
    let tau = geometry.tau;
    let two_xi = T::lit(2.0) * x;
    let kap = |t: T| analytic::kappa(t.max(T::zero()), xi);

    let times: Vec<T> = (0..=n)
        .map(|i| {
            let s = T::from_usize_lossy(i) / T::from_usize_lossy(n);
            tau * (T::one() - (T::PI() * s).cos()) * T::lit(0.5)
        })
        .collect();

    let rhs = |t: T, a: T| -> Result<T> {
        let u = (a * (T::one() - kap(t)?) / two_xi)
            .max(T::zero())
            .min(T::one());
        Ok(u * (T::one() + a * a) + x * a * (T::one() - u * u))
    };

    let mut a_vals = vec![T::zero(); n + 1];
    let mut a = two_xi / (T::one() - geometry.kappa);
    a_vals[n] = a;
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for i in (0..n).rev() {
        let h = (times[i] - times[i + 1]) / T::from_usize_lossy(substeps);
        let mut t = times[i + 1];
        for _ in 0..substeps {
            let k1 = rhs(t, a)?;
            let k2 = rhs(t + half * h, a + half * h * k1)?;
            let k3 = rhs(t + half * h, a + half * h * k2)?;
            let k4 = rhs(t + h, a + h * k3)?;
            a += h * sixth * (k1 + T::lit(2.0) * (k2 + k3) + k4);
            t += h;
        }
        if !a.is_finite() {
            return Err(RopeError::NonFinite {
                time: times[i].as_f64(),
            });
        }
        a_vals[i] = a;
    }

    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let u1 = if i == n {
            T::one()
        } else {
            (a_vals[i] * (T::one() - kap(times[i])?) / two_xi)
                .max(T::zero())
                .min(T::one())
        };
        out.push((times[i], a_vals[i], u1));
    }
    Ok(out)
}

/// Infinite-horizon optimal feedback: `u2/u1 = η r1/r2`, the larger control
/// saturated at 1. On `r2 = 0` this returns the limiting `(0, 1)`.
pub fn feedback_controls<T: Real>(state: ReducedState<T>, xi: RelativeRate<T>) -> ControlValue<T> {
    let eta = analytic::eta_max(xi);
    let lead = eta * state.r1;
    if lead >= state.r2 {
        if lead == T::zero() {
            return ControlValue::full();
        }
        ControlValue::new(state.r2 / lead, T::one())
    } else {
        ControlValue::new(T::one(), lead / state.r2)
    }
}

/// Point `(1 - ε, εη)` on the optimal plane next to the degenerate start `(1, 0)`.
pub fn feedback_start<T: Real>(xi: RelativeRate<T>, eps: T) -> ReducedState<T> {
    ReducedState::new(T::one() - eps, eps * analytic::eta_max(xi))
}

/// `max |u1(t) - u2(T - t)|` over the sample times of `schedule`.
pub fn verify_symmetry<T: Real>(schedule: &ControlSchedule<T>) -> T {
    let horizon = schedule.duration();
    schedule
        .samples()
        .iter()
        .map(|s| (s.u.u1 - schedule.value_at(horizon - s.t).u2).abs())
        .fold(T::zero(), T::max)
}

/// Costate trajectory for `schedule`, integrated backwards from `(0, 1)` at `T'`
/// with RK4 steps no longer than `step`. Returned in increasing time.
pub fn propagate_adjoint<T: Real>(
    schedule: &ControlSchedule<T>,
    xi: RelativeRate<T>,
    step: T,
) -> Result<Vec<(T, AdjointState<T>)>> {
    if !(step > T::zero()) {
        return Err(RopeError::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let x = xi.value();
    // dλ/dt' = [[ξu1², -u1u2], [u1u2, ξu2²]] λ
    let rhs = |u: ControlValue<T>, l: [T; 2]| -> [T; 2] {
        let c = u.u1 * u.u2;
        [
            x * u.u1 * u.u1 * l[0] - c * l[1],
            c * l[0] + x * u.u2 * u.u2 * l[1],
        ]
    };
    let mut lam = [T::zero(), T::one()];
    let mut out = vec![(schedule.duration(), AdjointState::terminal())];
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for w in schedule.samples().windows(2).rev() {
        let (a, b) = (&w[0], &w[1]);
        let span = b.t - a.t;
        let n = (span / step).ceil().to_usize().unwrap_or(1).max(1);
        let h = -span / T::from_usize_lossy(n);
        let interp = |t: T| {
            let wgt = (t - a.t) / span;
            ControlValue {
                u1: a.u.u1 + (b.u.u1 - a.u.u1) * wgt,
                u2: a.u.u2 + (b.u.u2 - a.u.u2) * wgt,
            }
        };
        for k in 0..n {
            let t = b.t + h * T::from_usize_lossy(k);
            let add = |l: [T; 2], d: [T; 2], s: T| [l[0] + s * d[0], l[1] + s * d[1]];
            let k1 = rhs(interp(t), lam);
            let k2 = rhs(interp(t + half * h), add(lam, k1, half * h));
            let k3 = rhs(interp(t + half * h), add(lam, k2, half * h));
            let k4 = rhs(interp(t + h), add(lam, k3, h));
            for j in 0..2 {
                lam[j] += h * sixth * (k1[j] + T::lit(2.0) * (k2[j] + k3[j]) + k4[j]);
            }
            let t_next = if k + 1 == n { a.t } else { t + h };
            if !(lam[0].is_finite() && lam[1].is_finite()) {
                return Err(RopeError::NonFinite {
                    time: t_next.as_f64(),
                });
            }
            out.push((
                t_next,
                AdjointState {
                    lambda1: lam[0],
                    lambda2: lam[1],
                },
            ));
        }
    }
    out.reverse();
    Ok(out)
}
