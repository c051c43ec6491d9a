//! Numerical optimal control on the reduced model.
//!
//! Nothing here uses the closed forms: controls are piecewise constant on a
//! uniform grid, the state is advanced with the exact flow of each cell, and
//! the gradient is the exact derivative of the discrete map. The analytic
//! schedule only enters as one of several optimizer starts.

mod dp;
mod optimize;

pub use dp::{dp_value_grid, DpOptions, ValueGrid, DEFAULT_DP_RESOLUTION, DEFAULT_DP_STEP};
pub use optimize::{
    optimize, OptimizationReport, OptimizeOptions, RunSummary, StartKind, MIN_OPTIMIZE_CELLS,
    MIN_RESTARTS,
};

use crate::error::{Result, RopeError};
use crate::reduced::flow::{apply, apply_transpose, bilinear, flow_map, flow_map_with_derivatives};
use crate::reduced::{ControlSchedule, ControlValue, ReducedState, RelativeRate, ScheduleSample};
use crate::scalar::Real;

/// Smallest grid accepted by [`adjoint_gradient`].
pub const MIN_GRADIENT_CELLS: usize = 10;

/// `N` piecewise-constant control values on a uniform grid over `[0, T']`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedControls<T> {
    horizon: T,
    values: Vec<ControlValue<T>>,
}

impl<T: Real> DiscretizedControls<T> {
    /// Values are clamped into `[0, 1]`.
    pub fn new(horizon: T, values: Vec<ControlValue<T>>) -> Result<Self> {
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(RopeError::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if values.is_empty() {
            return Err(RopeError::InvalidParameter("no control cells".into()));
        }
        if values
            .iter()
            .any(|u| !(u.u1.is_finite() && u.u2.is_finite()))
        {
            return Err(RopeError::InvalidParameter(
                "non-finite control value".into(),
            ));
        }
        let values = values
            .into_iter()
            .map(|u| ControlValue::new(u.u1, u.u2))
            .collect();
        Ok(Self { horizon, values })
    }

    pub fn constant(horizon: T, cells: usize, u: ControlValue<T>) -> Result<Self> {
        Self::new(horizon, vec![u; cells])
    }

    /// Samples `schedule` at the cell midpoints.
    pub fn from_schedule(schedule: &ControlSchedule<T>, cells: usize) -> Result<Self> {
        let horizon = schedule.duration();
        let dt = horizon / T::from_usize_lossy(cells.max(1));
        let values = (0..cells)
            .map(|i| schedule.value_at(dt * (T::from_usize_lossy(i) + T::lit(0.5))))
            .collect();
        Self::new(horizon, values)
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.values.len())
    }

    pub fn values(&self) -> &[ControlValue<T>] {
        &self.values
    }

    /// Midpoint of cell `i`.
    pub fn cell_center(&self, i: usize) -> T {
        self.dt() * (T::from_usize_lossy(i) + T::lit(0.5))
    }

    /// Schedule through the cell midpoints, held flat to both ends.
    pub fn to_schedule(&self) -> Result<ControlSchedule<T>> {
        let mut samples = Vec::with_capacity(self.cells() + 2);
        samples.push(ScheduleSample {
            t: T::zero(),
            u: self.values[0],
        });
        for (i, &u) in self.values.iter().enumerate() {
            samples.push(ScheduleSample {
                t: self.cell_center(i),
                u,
            });
        }
        samples.push(ScheduleSample {
            t: self.horizon,
            u: self.values[self.cells() - 1],
        });
        ControlSchedule::new(samples)
    }

    /// States at the `N + 1` grid nodes, from `(1, 0)`.
    pub fn forward(&self, xi: RelativeRate<T>) -> Vec<ReducedState<T>> {
        let dt = self.dt();
        let mut out = Vec::with_capacity(self.cells() + 1);
        let mut r = ReducedState::initial();
        out.push(r);
        for &u in &self.values {
            r = apply(&flow_map(u, xi, dt), r);
            out.push(r);
        }
        out
    }

    /// `r2(T')` from `(1, 0)`.
    pub fn efficiency(&self, xi: RelativeRate<T>) -> T {
        self.forward(xi)[self.cells()].r2
    }
}

/// Exact derivative of `r2(T')` with respect to every control value.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub value: T,
    pub d_u1: Vec<T>,
    pub d_u2: Vec<T>,
    /// Node states, `N + 1` entries.
    pub states: Vec<ReducedState<T>>,
    /// Discrete costates `λ_i` with `λ_N = (0, 1)` and `λ_i = M_iᵀ λ_{i+1}`.
    pub costates: Vec<[T; 2]>,
}

impl<T: Real> Gradient<T> {
    /// `L2(0, T')` norm of the projected functional gradient `∂r2/∂u / Δt`.
    pub fn projected_norm(&self, controls: &DiscretizedControls<T>) -> T {
        let dt = controls.dt();
        let mut acc = T::zero();
        for (i, u) in controls.values().iter().enumerate() {
            let p1 = project_component(u.u1, self.d_u1[i]);
            let p2 = project_component(u.u2, self.d_u2[i]);
            acc += p1 * p1 + p2 * p2;
        }
        (acc / dt).sqrt()
    }
}

/// Zeroes gradient components that push against an active bound.
fn project_component<T: Real>(u: T, g: T) -> T {
    if (u <= T::zero() && g < T::zero()) || (u >= T::one() && g > T::zero()) {
        T::zero()
    } else {
        g
    }
}

/// Forward states, backward costates and `∂r2(T')/∂u_i = λ_{i+1}ᵀ (∂M_i/∂u) r_i`.
pub fn adjoint_gradient<T: Real>(
    controls: &DiscretizedControls<T>,
    xi: RelativeRate<T>,
) -> Result<Gradient<T>> {
    let n = controls.cells();
    if n < MIN_GRADIENT_CELLS {
        return Err(RopeError::InvalidParameter(format!(
            "need at least {MIN_GRADIENT_CELLS} cells, got {n}"
        )));
    }
    let dt = controls.dt();
    let maps: Vec<_> = controls
        .values()
        .iter()
        .map(|&u| flow_map_with_derivatives(u, xi, dt))
        .collect();
    let mut states = Vec::with_capacity(n + 1);
    let mut r = ReducedState::initial();
    states.push(r);
    for (m, _, _) in &maps {
        r = apply(m, r);
        states.push(r);
    }
    let mut costates = vec![[T::zero(); 2]; n + 1];
    costates[n] = [T::zero(), T::one()];
    let mut d_u1 = vec![T::zero(); n];
    let mut d_u2 = vec![T::zero(); n];
    for i in (0..n).rev() {
        let (m, m1, m2) = &maps[i];
        let l = costates[i + 1];
        d_u1[i] = bilinear(l, m1, states[i]);
        d_u2[i] = bilinear(l, m2, states[i]);
        costates[i] = apply_transpose(m, l);
    }
    if !states[n].is_finite() {
        return Err(RopeError::NonFinite {
            time: controls.horizon().as_f64(),
        });
    }
    Ok(Gradient {
        value: states[n].r2,
        d_u1,
        d_u2,
        states,
        costates,
    })
}

/// First and last cells in which `u1` (resp. `u2`) is saturated within `tol`:
/// `(first cell with u1 ≥ 1 - tol, last cell with u2 ≥ 1 - tol)`.
pub fn switch_cells<T: Real>(
    controls: &DiscretizedControls<T>,
    tol: T,
) -> (Option<usize>, Option<usize>) {
    let v = controls.values();
    let on = T::one() - tol;
    (
        v.iter().position(|u| u.u1 >= on),
        v.iter().rposition(|u| u.u2 >= on),
    )
}
