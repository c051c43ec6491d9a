//! Schedule to pulse-sequence compilation.
//!
//! On the optimal trajectory the density operator stays in the span of
//! `x = ⟨Ix⟩, z = ⟨Iz⟩, w = ⟨2IySz⟩, v = ⟨2IzSz⟩`. With `β1 = atan2(z, x)` and
//! `β2 = atan2(v, w)`, y-phase rf of angular rate `ω` on spin I gives
//!
//! ```text
//! dβ1/dt = πJ z (ξx + w) / r1² - ω
//! ```
//!
//! and x-phase rf gives `dβ2/dt = ω - πJ v (x - ξw) / r2²`. The compiler tracks
//! `(x, z, w, v)` exactly (one 4x4 exponential per cell) and picks the constant
//! `ω` of every cell so that `β` lands on `arccos u` at the next schedule node.
//!
//! Near the saturated middle phase `dβ/dt` diverges like `1/√s`. A contiguous
//! run of cells whose nominal rate `|Δβ|/Δt` exceeds the rf cap and touches that
//! boundary is replaced by a hard pulse of the accumulated angle; an over-cap
//! cell anywhere else is an error.

use crate::error::{Result, RopeError};
use crate::linalg::Matrix;
use crate::quantum::{run_sequence, Cartesian, CoherenceVector, ProductOperator, SpinSystemParams};
use crate::reduced::{ControlSchedule, RelativeRate};
use crate::scalar::Real;

use super::{
    HardPulse, PhaseAxis, PulseElement, PulseSequence, RfSample, SequenceMetadata, ShapedSegment,
    Spin,
};

/// Default rf amplitude cap in units of `J`.
pub const DEFAULT_RF_CAP_OVER_J: f64 = 100.0;

/// Controls within this distance of 1 count as saturated.
const SATURATION_TOL: f64 = 1e-9;

/// Rotations smaller than this are dropped instead of emitted as hard pulses.
const MIN_FLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions<T> {
    /// Largest allowed shaped-pulse `|dβ/dt|/2π`, in units of `J`.
    pub rf_cap_over_j: T,
}

impl<T: Real> Default for CompileOptions<T> {
    fn default() -> Self {
        Self {
            rf_cap_over_j: T::lit(DEFAULT_RF_CAP_OVER_J),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// y-phase rf, `β1` moves.
    One,
    /// x-phase rf, `β2` moves.
    Three,
}

/// `(x, z, w, v)` under coupling, relaxation and single-phase rf on I.
struct Tracker<T> {
    coupling: T,
    relaxation: T,
    s: [T; 4],
}

impl<T: Real> Tracker<T> {
    fn advance(&self, s: [T; 4], phase: Option<Phase>, omega: T, dt: T) -> [T; 4] {
        let (wy, wx) = match phase {
            Some(Phase::One) => (omega, T::zero()),
            Some(Phase::Three) => (T::zero(), omega),
            None => (T::zero(), T::zero()),
        };
        let (c, k, z) = (self.coupling, self.relaxation, T::zero());
        let m = Matrix::from_rows(
            4,
            4,
            vec![
                -k, wy, -c, z, //
                -wy, z, z, z, //
                c, z, -k, -wx, //
                z, z, wx, z,
            ],
        );
        let p = m.scale(dt).expm();
        let v = p.matvec(&s);
        [v[0], v[1], v[2], v[3]]
    }

    fn angle(s: [T; 4], phase: Phase) -> T {
        match phase {
            Phase::One => s[1].atan2(s[0]),
            Phase::Three => s[3].atan2(s[2]),
        }
    }

    /// Angular rate that drift alone imposes on the moving angle.
    fn drift(&self, s: [T; 4], phase: Phase) -> T {
        let [x, z, w, v] = s;
        let xi = self.relaxation / self.coupling;
        match phase {
            Phase::One => self.coupling * z * (xi * x + w) / (x * x + z * z),
            Phase::Three => -self.coupling * v * (x - xi * w) / (w * w + v * v),
        }
    }

    /// Constant `ω` over `dt` that brings the phase angle to `target`.
    fn solve_cell(&self, phase: Phase, dt: T, target: T) -> Result<T> {
        let s = self.s;
        let beta = Self::angle(s, phase);
        let drift = self.drift(s, phase);
        let step_rate = (target - beta) / dt;
        let guess = match phase {
            Phase::One => drift - step_rate,
            Phase::Three => step_rate - drift,
        };
        let f = |omega: T| Self::angle(self.advance(s, Some(phase), omega, dt), phase) - target;
        let tol = T::lit(1e-13);
        let (mut w0, mut f0) = (guess, f(guess));
        if f0.abs() <= tol {
            return Ok(w0);
        }
        let mut w1 = guess + (guess.abs() * T::lit(1e-6)).max(T::lit(1e-6) * self.coupling);
        for _ in 0..60 {
            let f1 = f(w1);
            if f1.abs() <= tol {
                return Ok(w1);
            }
            let denom = f1 - f0;
            if denom == T::zero() || !denom.is_finite() {
                break;
            }
            let w2 = w1 - f1 * (w1 - w0) / denom;
            (w0, f0, w1) = (w1, f1, w2);
        }
        let residual = f(w1);
        if residual.abs() <= T::lit(1e-9) {
            Ok(w1)
        } else {
            Err(RopeError::RootSolve(format!(
                "rf rate for a cell did not converge (residual {residual:e})"
            )))
        }
    }
}

/// Phase-I end index and phase-III start index of a phase-structured schedule.
fn phase_bounds<T: Real>(schedule: &ControlSchedule<T>) -> Result<(usize, usize)> {
    let s = schedule.samples();
    let n = s.len();
    let sat = |u: T| (u - T::one()).abs() <= T::lit(SATURATION_TOL);
    if let Some(bad) = s.iter().find(|p| !(sat(p.u.u1) || sat(p.u.u2))) {
        return Err(RopeError::InvalidSchedule(format!(
            "neither control is saturated at t' = {}; only phase-structured schedules compile",
            bad.t
        )));
    }
    let last_u1_drop = s.iter().rposition(|p| !sat(p.u.u1));
    let first_u2_drop = s.iter().position(|p| !sat(p.u.u2));
    let ia = last_u1_drop.map_or(0, |i| (i + 1).min(n - 1));
    let ib = match first_u2_drop {
        None => n - 1,
        Some(i) => i.saturating_sub(1),
    };
    if ia > ib || last_u1_drop.zip(first_u2_drop).is_some_and(|(a, b)| a >= b) {
        return Err(RopeError::InvalidSchedule(
            "u1 must reach 1 before u2 leaves 1".into(),
        ));
    }
    Ok((ia, ib))
}

/// Compiles a phase-structured schedule (`u2 = 1` while `u1 < 1`, then both 1,
/// then `u1 = 1` while `u2 < 1`) into a pulse sequence from `Ix` to the
/// antiphase `target` `2IβSγ`.
pub fn compile<T: Real>(
    schedule: &ControlSchedule<T>,
    j_hz: T,
    xi: RelativeRate<T>,
    target: ProductOperator,
    options: &CompileOptions<T>,
) -> Result<PulseSequence<T>> {
    if !(j_hz > T::zero() && j_hz.is_finite()) {
        return Err(RopeError::InvalidParameter(format!(
            "J must be positive, got {j_hz}"
        )));
    }
    let (beta_axis, gamma_axis) = match target {
        ProductOperator::IS(b, g) => (b, g),
        other => {
            return Err(RopeError::InvalidParameter(format!(
                "only antiphase targets 2IβSγ compile, got {}",
                other.label()
            )))
        }
    };
    let cap_hz = options.rf_cap_over_j * j_hz;
    if !(cap_hz > T::zero()) {
        return Err(RopeError::InvalidParameter(
            "rf cap must be positive".into(),
        ));
    }
    let (ia, ib) = phase_bounds(schedule)?;
    let samples = schedule.samples();
    let n = samples.len();
    let pi_j = T::PI() * j_hz;
    let seconds = |i: usize| samples[i].t / pi_j;
    let two_pi = T::lit(2.0) * T::PI();
    let acos_u = |u: T| u.max(-T::one()).min(T::one()).acos();
    let min_flip = T::lit(MIN_FLIP);

    let mut tracker = Tracker {
        coupling: pi_j,
        relaxation: pi_j * xi.value(),
        s: [T::one(), T::zero(), T::zero(), T::zero()],
    };
    let mut elements: Vec<PulseElement<T>> = Vec::new();
    let push_delay = |elements: &mut Vec<PulseElement<T>>, d: T| {
        if d <= T::zero() {
            return;
        }
        if let Some(PulseElement::Delay(prev)) = elements.last_mut() {
            *prev += d;
        } else {
            elements.push(PulseElement::Delay(d));
        }
    };

    let nominal_hz = |i: usize, beta: &dyn Fn(usize) -> T| {
        (beta(i + 1) - beta(i)).abs() / (seconds(i + 1) - seconds(i)) / two_pi
    };
    let cap_error = |i: usize, rate: T| RopeError::RfCapExceeded {
        time_s: seconds(i).as_f64(),
        rate_hz: rate.as_f64(),
        cap_hz: cap_hz.as_f64(),
    };

    // initial rotation Ix -> u1(0) Ix + sqrt(1 - u1(0)²) Iz
    let beta0 = acos_u(samples[0].u.u1);
    if beta0 > min_flip {
        elements.push(PulseElement::Hard(HardPulse::new(
            Spin::I,
            beta0,
            PhaseAxis::MinusY,
        )?));
        tracker.s = [beta0.cos(), beta0.sin(), T::zero(), T::zero()];
    }

    // phase I
    let beta1 = |i: usize| acos_u(samples[i].u.u1);
    let mut c0 = ia;
    while c0 > 0 && nominal_hz(c0 - 1, &beta1) > cap_hz {
        c0 -= 1;
    }
    if let Some(i) = (0..c0).find(|&i| nominal_hz(i, &beta1) > cap_hz) {
        return Err(cap_error(i, nominal_hz(i, &beta1)));
    }
    if c0 > 0 {
        let mut rf = Vec::with_capacity(c0);
        for i in 0..c0 {
            let dt = seconds(i + 1) - seconds(i);
            let omega = tracker.solve_cell(Phase::One, dt, beta1(i + 1))?;
            rf.push(RfSample {
                t: seconds(i) - seconds(0),
                nu_x: T::zero(),
                nu_y: omega / two_pi,
            });
            tracker.s = tracker.advance(tracker.s, Some(Phase::One), omega, dt);
        }
        elements.push(PulseElement::Shaped(ShapedSegment::new(
            rf,
            seconds(c0) - seconds(0),
        )?));
    }
    if c0 < ia {
        let beta = Tracker::angle(tracker.s, Phase::One);
        if beta > min_flip {
            elements.push(PulseElement::Hard(HardPulse::new(
                Spin::I,
                beta,
                PhaseAxis::Y,
            )?));
        }
        let [x, z, w, v] = tracker.s;
        tracker.s = [x.hypot(z), T::zero(), w, v];
    }

    // phase II and the over-cap head of phase III
    let beta2 = |i: usize| acos_u(samples[i].u.u2);
    let mut e0 = ib;
    while e0 + 1 < n && nominal_hz(e0, &beta2) > cap_hz {
        e0 += 1;
    }
    if let Some(i) = (e0..n - 1).find(|&i| nominal_hz(i, &beta2) > cap_hz) {
        return Err(cap_error(i, nominal_hz(i, &beta2)));
    }
    let free = seconds(e0) - seconds(c0);
    push_delay(&mut elements, free);
    tracker.s = tracker.advance(tracker.s, None, T::zero(), free);
    if e0 > ib {
        let beta = beta2(e0);
        if beta > min_flip {
            elements.push(PulseElement::Hard(HardPulse::new(
                Spin::I,
                beta,
                PhaseAxis::X,
            )?));
            let [x, z, w, v] = tracker.s;
            let (sn, cs) = beta.sin_cos();
            tracker.s = [x, z, w * cs - v * sn, w * sn + v * cs];
        }
    }

    // phase III
    if e0 + 1 < n {
        let mut rf = Vec::with_capacity(n - 1 - e0);
        for i in e0..n - 1 {
            let dt = seconds(i + 1) - seconds(i);
            let omega = tracker.solve_cell(Phase::Three, dt, beta2(i + 1))?;
            rf.push(RfSample {
                t: seconds(i) - seconds(e0),
                nu_x: omega / two_pi,
                nu_y: T::zero(),
            });
            tracker.s = tracker.advance(tracker.s, Some(Phase::Three), omega, dt);
        }
        elements.push(PulseElement::Shaped(ShapedSegment::new(
            rf,
            seconds(n - 1) - seconds(e0),
        )?));
    }

    // 2IySz cos β2 + 2IzSz sin β2 -> 2IySz
    let beta_end = Tracker::angle(tracker.s, Phase::Three);
    if beta_end > min_flip {
        elements.push(PulseElement::Hard(HardPulse::new(
            Spin::I,
            beta_end,
            PhaseAxis::MinusX,
        )?));
    }
    elements.extend(target_rotations(beta_axis, gamma_axis)?);

    Ok(PulseSequence {
        elements,
        metadata: SequenceMetadata {
            j_hz,
            k_hz: j_hz * xi.value(),
            target,
        },
    })
}

/// Hard pulses taking `2IySz` to `2IβSγ`.
fn target_rotations<T: Real>(beta: Cartesian, gamma: Cartesian) -> Result<Vec<PulseElement<T>>> {
    let quarter = T::FRAC_PI_2();
    let hard = |spin, axis| HardPulse::new(spin, quarter, axis).map(PulseElement::Hard);
    let mut out = Vec::new();
    match beta {
        Cartesian::Y => {}
        Cartesian::Z => out.push(hard(Spin::I, PhaseAxis::X)?),
        Cartesian::X => {
            out.push(hard(Spin::I, PhaseAxis::X)?);
            out.push(hard(Spin::I, PhaseAxis::Y)?);
        }
    }
    match gamma {
        Cartesian::Z => {}
        Cartesian::X => out.push(hard(Spin::S, PhaseAxis::Y)?),
        Cartesian::Y => out.push(hard(Spin::S, PhaseAxis::MinusX)?),
    }
    Ok(out)
}

/// Simulates `seq` on the full two-spin system from `Ix` and returns `⟨target⟩`.
pub fn roundtrip_check<T: Real>(seq: &PulseSequence<T>, j_hz: T, k_hz: T) -> Result<T> {
    let params = SpinSystemParams::new(j_hz, k_hz)?;
    let initial = CoherenceVector::from_operator(ProductOperator::I(Cartesian::X));
    let result = run_sequence(seq, &params, initial, 2)?;
    Ok(result.final_state.get(seq.metadata.target))
}
