use rayon::prelude::*;

use crate::error::{Result, RopeError};
use crate::reduced::flow::{apply, flow_map, Mat2};
use crate::reduced::{ControlValue, ReducedState, RelativeRate};
use crate::scalar::Real;

pub const DEFAULT_DP_RESOLUTION: usize = 129;
/// Default time step in rescaled units.
pub const DEFAULT_DP_STEP: f64 = 0.2;
pub const MIN_DP_RESOLUTION: usize = 64;
/// Control samples per axis before refinement.
const COARSE_CONTROLS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions<T> {
    /// Grid nodes per state axis over `[0, 1]`.
    pub resolution: usize,
    /// Largest time step; the horizon is split into equal steps no longer than this.
    pub step: T,
    /// Keep every time slice rather than only `t = 0`.
    pub keep_slices: bool,
}

impl<T: Real> Default for DpOptions<T> {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_DP_RESOLUTION,
            step: T::lit(DEFAULT_DP_STEP),
            keep_slices: false,
        }
    }
}

/// Value function tabulated on a uniform `(r1, r2)` grid over `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid<T> {
    resolution: usize,
    horizon: T,
    dt: T,
    /// `slices[k]` holds `V(·, ·, t_k)`, row-major in `(r1, r2)`; only `t = 0`
    /// unless slices were kept.
    slices: Vec<Vec<T>>,
    keep_slices: bool,
}

impl<T: Real> ValueGrid<T> {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of time steps between `0` and `T'`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Coordinate of grid node `i` along either axis.
    pub fn node(&self, i: usize) -> T {
        T::from_usize_lossy(i) / T::from_usize_lossy(self.resolution - 1)
    }

    /// `V(node(i), node(j), 0)`.
    pub fn node_value(&self, i: usize, j: usize) -> T {
        self.slices[0][i * self.resolution + j]
    }

    /// Bilinear interpolation of `V(r1, r2, 0)`.
    pub fn value_at(&self, state: ReducedState<T>) -> T {
        interpolate(&self.slices[0], self.resolution, state)
    }

    /// `V(r1, r2, t_k)` if slices were kept.
    pub fn value_at_step(&self, k: usize, state: ReducedState<T>) -> Option<T> {
        if !self.keep_slices {
            return (k == 0).then(|| self.value_at(state));
        }
        self.slices
            .get(k)
            .map(|s| interpolate(s, self.resolution, state))
    }
}

fn interpolate<T: Real>(values: &[T], res: usize, state: ReducedState<T>) -> T {
    let scale = T::from_usize_lossy(res - 1);
    let locate = |x: T| {
        let x = x.max(T::zero()).min(T::one()) * scale;
        let i = x.floor().to_usize().unwrap_or(0).min(res - 2);
        (i, x - T::from_usize_lossy(i))
    };
    let (i, wx) = locate(state.r1);
    let (j, wy) = locate(state.r2);
    let v = |a: usize, b: usize| values[a * res + b];
    let one = T::one();
    (one - wx) * ((one - wy) * v(i, j) + wy * v(i, j + 1))
        + wx * ((one - wy) * v(i + 1, j) + wy * v(i + 1, j + 1))
}

/// Backward value iteration `V_k(r) = max_u V_{k+1}(exp(A(u) Δt) r)`, `V_N = r2`.
///
/// The maximization scans a 17x17 control grid, then refines once on the
/// half-spaced grid around the best sample. Grid queries are clamped to the
/// unit square. Every cell of a sweep is independent and runs in parallel.
pub fn dp_value_grid<T: Real>(
    xi: RelativeRate<T>,
    horizon: T,
    options: &DpOptions<T>,
) -> Result<ValueGrid<T>> {
    let res = options.resolution;
    if res < MIN_DP_RESOLUTION {
        return Err(RopeError::InvalidParameter(format!(
            "DP resolution must be at least {MIN_DP_RESOLUTION}, got {res}"
        )));
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(RopeError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(options.step > T::zero()) {
        return Err(RopeError::InvalidParameter(
            "DP step must be positive".into(),
        ));
    }
    let steps = (horizon / options.step)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let dt = horizon / T::from_usize_lossy(steps);

    // maps on the refined grid (spacing 1/32); coarse samples are the even indices
    let fine = 2 * (COARSE_CONTROLS - 1) + 1;
    let fine_den = T::from_usize_lossy(fine - 1);
    let maps: Vec<Mat2<T>> = (0..fine * fine)
        .map(|idx| {
            let u = ControlValue::new(
                T::from_usize_lossy(idx / fine) / fine_den,
                T::from_usize_lossy(idx % fine) / fine_den,
            );
            flow_map(u, xi, dt)
        })
        .collect();

    let scale = T::from_usize_lossy(res - 1);
    let mut current: Vec<T> = (0..res * res)
        .map(|idx| T::from_usize_lossy(idx % res) / scale)
        .collect();
    let mut slices = Vec::new();
    if options.keep_slices {
        slices.push(current.clone());
    }

    for _ in 0..steps {
        let next: Vec<T> = (0..res * res)
            .into_par_iter()
            .map(|idx| {
                let state = ReducedState::new(
                    T::from_usize_lossy(idx / res) / scale,
                    T::from_usize_lossy(idx % res) / scale,
                );
                let eval = |a: usize, b: usize| {
                    interpolate(&current, res, apply(&maps[a * fine + b], state))
                };
                let mut best = (T::neg_infinity(), 0, 0);
                for a in (0..fine).step_by(2) {
                    for b in (0..fine).step_by(2) {
                        let v = eval(a, b);
                        if v > best.0 {
                            best = (v, a, b);
                        }
                    }
                }
                let (mut top, ca, cb) = best;
                for a in ca.saturating_sub(1)..=(ca + 1).min(fine - 1) {
                    for b in cb.saturating_sub(1)..=(cb + 1).min(fine - 1) {
                        top = top.max(eval(a, b));
                    }
                }
                top
            })
            .collect();
        current = next;
        if options.keep_slices {
            slices.push(current.clone());
        }
    }
    if options.keep_slices {
        // stored from t = T' backwards
        slices.reverse();
    } else {
        slices.push(current);
    }
    Ok(ValueGrid {
        resolution: res,
        horizon,
        dt,
        slices,
        keep_slices: options.keep_slices,
    })
}
