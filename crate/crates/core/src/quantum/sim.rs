use crate::error::{Result, RopeError};
use crate::linalg::Matrix;
use crate::pulse::{PulseElement, PulseSequence, Spin};
use crate::reduced::{propagate, ControlSchedule, ControlValue, ReducedState, ScheduleSample};
use crate::scalar::Real;
use crate::textio::sig12;

use super::{
    build_rf, rotation, Cartesian, CoherenceVector, ProductOperator, SpinSystemParams,
    Superoperator,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample<T> {
    /// Seconds from the start of the sequence.
    pub t: T,
    pub state: CoherenceVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T> {
    pub final_state: CoherenceVector<T>,
    /// States on a uniform grid over `[0, duration]`.
    pub trace: Vec<TraceSample<T>>,
}

/// Propagates `initial` through `seq`.
///
/// Hard pulses are exact instantaneous rotations; delays and shaped cells use
/// one matrix exponential per constant piece. `samples` (at least 2) trace
/// points are recorded uniformly; a point coinciding with hard pulses records
/// the state after them, except at `t = 0` when the sequence starts with
/// pulses, where it records the initial state.
pub fn run_sequence<T: Real>(
    seq: &PulseSequence<T>,
    params: &SpinSystemParams<T>,
    initial: CoherenceVector<T>,
    samples: usize,
) -> Result<SimulationResult<T>> {
    if samples < 2 {
        return Err(RopeError::InvalidParameter(
            "need at least two trace samples".into(),
        ));
    }
    if !initial.is_finite() {
        return Err(RopeError::NonFinite { time: 0.0 });
    }
    let total = seq.duration();
    let grid: Vec<T> = (0..samples)
        .map(|k| total * T::from_usize_lossy(k) / T::from_usize_lossy(samples - 1))
        .collect();
    let free = params.free_generator();

    let mut state = initial;
    let mut trace = Vec::with_capacity(samples);
    trace.push(TraceSample {
        t: T::zero(),
        state,
    });
    let mut next = 1;
    let mut clock = T::zero();

    let evolve = |l: &Superoperator<T>,
                  dt: T,
                  state: &mut CoherenceVector<T>,
                  clock: &mut T,
                  trace: &mut Vec<TraceSample<T>>,
                  next: &mut usize|
     -> Result<()> {
        if dt <= T::zero() {
            return Ok(());
        }
        let start = *state;
        let end_t = *clock + dt;
        while *next < samples - 1 && grid[*next] < end_t {
            if grid[*next] > *clock {
                let p = l.propagator(grid[*next] - *clock)?;
                trace.push(TraceSample {
                    t: grid[*next],
                    state: start.apply(&p),
                });
            } else {
                trace.push(TraceSample {
                    t: grid[*next],
                    state: start,
                });
            }
            *next += 1;
        }
        *state = start.apply(&l.propagator(dt)?);
        *clock = end_t;
        if !state.is_finite() {
            return Err(RopeError::NonFinite {
                time: clock.as_f64(),
            });
        }
        Ok(())
    };

    for element in &seq.elements {
        match element {
            PulseElement::Hard(h) => {
                let r: Matrix<T> = rotation(h.spin, h.axis, h.flip_angle);
                state = state.apply(&r);
            }
            PulseElement::Delay(d) => {
                evolve(&free, *d, &mut state, &mut clock, &mut trace, &mut next)?;
            }
            PulseElement::Shaped(s) => {
                for (a, b, rf) in s.cells() {
                    let l = free.add(&build_rf(rf.nu_x, rf.nu_y, Spin::I));
                    evolve(&l, b - a, &mut state, &mut clock, &mut trace, &mut next)?;
                }
            }
        }
    }
    while trace.len() < samples {
        trace.push(TraceSample {
            t: grid[trace.len()],
            state,
        });
    }
    Ok(SimulationResult {
        final_state: state,
        trace,
    })
}

/// Largest deviation between the radii `(√(⟨Ix⟩²+⟨Iz⟩²), √(⟨2IySz⟩²+⟨2IzSz⟩²))`
/// of a simulated trace and the reduced model driven by the realized controls
/// `u1 = ⟨Ix⟩/r1`, `u2 = ⟨2IySz⟩/r2`, read off the same trace.
///
/// Hard pulses may only occur at the ends of the sequence: the controls of the
/// two end samples are taken from their neighbours and the last sample is not
/// compared. Accuracy is second order in the trace spacing.
pub fn reduced_projection_error<T: Real>(
    result: &SimulationResult<T>,
    params: &SpinSystemParams<T>,
) -> Result<T> {
    use Cartesian::*;
    let trace = &result.trace;
    let n = trace.len();
    if n < 4 {
        return Err(RopeError::InvalidParameter(
            "need at least four trace samples".into(),
        ));
    }
    let pi_j = T::PI() * params.j_hz();
    let controls = |st: &CoherenceVector<T>| {
        let (r1, r2) = st.reduced_radii();
        let ratio = |num: T, den: T| if den > T::zero() { num / den } else { T::one() };
        ControlValue::new(
            ratio(st.get(ProductOperator::I(X)), r1),
            ratio(st.get(ProductOperator::IS(Y, Z)), r2),
        )
    };
    let samples: Vec<ScheduleSample<T>> = (0..n)
        .map(|i| {
            let src = i.clamp(1, n - 2);
            ScheduleSample {
                t: pi_j * trace[i].t,
                u: controls(&trace[src].state),
            }
        })
        .collect();
    let schedule = ControlSchedule::new(samples)?;
    let (r1, r2) = trace[0].state.reduced_radii();
    let reduced = propagate(
        ReducedState::new(r1, r2),
        &schedule,
        params.xi(),
        schedule.grid_spacing() / T::lit(2.0),
    )?;
    // propagate emits every sample time; walk both lists together
    let mut worst = T::zero();
    let mut i = 0;
    for point in &reduced {
        while i < n - 1 && pi_j * trace[i].t < point.t {
            i += 1;
        }
        if i < n - 1 && pi_j * trace[i].t == point.t {
            let (q1, q2) = trace[i].state.reduced_radii();
            worst = worst
                .max((q1 - point.state.r1).abs())
                .max((q2 - point.state.r2).abs());
        }
    }
    Ok(worst)
}

/// Columnar trace: `t_s Ix Iy Iz 2IySz 2IzSz <target>`.
pub fn trace_to_text<T: Real>(
    trace: &[TraceSample<T>],
    target: ProductOperator,
    header: &[(String, String)],
) -> String {
    use Cartesian::*;
    let cols = [
        ProductOperator::I(X),
        ProductOperator::I(Y),
        ProductOperator::I(Z),
        ProductOperator::IS(Y, Z),
        ProductOperator::IS(Z, Z),
        target,
    ];
    let mut out = String::from("# rope quantum trajectory\n");
    for (k, v) in header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!(
        "# columns: t_s Ix Iy Iz 2IySz 2IzSz target({})\n",
        target.label()
    ));
    for s in trace {
        let mut row = sig12(s.t.as_f64());
        for op in cols {
            row.push(' ');
            row.push_str(&sig12(s.state.get(op).as_f64()));
        }
        row.push('\n');
        out.push_str(&row);
    }
    out
}
