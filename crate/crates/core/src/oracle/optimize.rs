use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, RopeError};
use crate::reduced::{ControlValue, RelativeRate};
use crate::scalar::Real;
use crate::synthesis::{synthesize_rope, SynthesisOptions};

use super::{adjoint_gradient, DiscretizedControls, Gradient};

/// Smallest grid and start count accepted by [`optimize`].
pub const MIN_OPTIMIZE_CELLS: usize = 50;
pub const MIN_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartKind {
    /// `u = (1, 1)` everywhere.
    Constant,
    /// Uniform random values; the index selects the RNG stream.
    Random(u64),
    /// Midpoint samples of the synthesized schedule.
    AnalyticWarmStart,
}

impl StartKind {
    pub fn label(&self) -> String {
        match self {
            StartKind::Constant => "constant".into(),
            StartKind::Random(k) => format!("random-{k}"),
            StartKind::AnalyticWarmStart => "analytic".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions<T> {
    pub max_iterations: usize,
    /// Projected gradient norm above which a run counts as unconverged.
    pub tolerance: T,
    /// Projected gradient norm at which a run stops early.
    pub stop_tolerance: T,
    pub seed: u64,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: T::lit(1e-4),
            stop_tolerance: T::lit(1e-9),
            seed: 20_050_401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary<T> {
    pub start: StartKind,
    pub efficiency: T,
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport<T> {
    pub best: DiscretizedControls<T>,
    pub efficiency: T,
    pub grad_norm: T,
    pub best_start: StartKind,
    pub seed: u64,
    /// One entry per start, in start order.
    pub runs: Vec<RunSummary<T>>,
}

/// Multi-start projected gradient ascent of `r2(T')`.
///
/// Starts: constant `(1, 1)`, two random fields, the analytic warm start, then
/// further random fields up to `restarts`. Each run is spectral projected
/// gradient (Barzilai-Borwein step, Armijo backtracking); runs are evaluated in
/// parallel and reported in start order. The result is the best local optimum
/// found; nothing here certifies it is global.
pub fn optimize<T: Real>(
    xi: RelativeRate<T>,
    horizon: T,
    cells: usize,
    restarts: usize,
    options: &OptimizeOptions<T>,
) -> Result<OptimizationReport<T>> {
    if cells < MIN_OPTIMIZE_CELLS {
        return Err(RopeError::InvalidParameter(format!(
            "need at least {MIN_OPTIMIZE_CELLS} cells, got {cells}"
        )));
    }
    if restarts < MIN_RESTARTS {
        return Err(RopeError::InvalidParameter(format!(
            "need at least {MIN_RESTARTS} starts, got {restarts}"
        )));
    }
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(RopeError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut starts = vec![
        StartKind::Constant,
        StartKind::Random(0),
        StartKind::Random(1),
        StartKind::AnalyticWarmStart,
    ];
    starts.extend((2..).take(restarts - MIN_RESTARTS).map(StartKind::Random));

    let runs: Vec<Result<(DiscretizedControls<T>, RunSummary<T>)>> = starts
        .par_iter()
        .map(|&kind| {
            let start = initial_controls(kind, xi, horizon, cells, options.seed)?;
            ascend(start, kind, xi, options)
        })
        .collect();
    let runs: Vec<(DiscretizedControls<T>, RunSummary<T>)> =
        runs.into_iter().collect::<Result<_>>()?;

    let best = runs.iter().enumerate().fold(0, |b, (i, r)| {
        if r.1.efficiency > runs[b].1.efficiency {
            i
        } else {
            b
        }
    });
    let (controls, summary) = runs[best].clone();
    if summary.grad_norm > options.tolerance {
        return Err(RopeError::NonConvergence {
            grad_norm: summary.grad_norm.as_f64(),
            iterations: summary.iterations,
        });
    }
    Ok(OptimizationReport {
        best: controls,
        efficiency: summary.efficiency,
        grad_norm: summary.grad_norm,
        best_start: summary.start,
        seed: options.seed,
        runs: runs.into_iter().map(|r| r.1).collect(),
    })
}

fn initial_controls<T: Real>(
    kind: StartKind,
    xi: RelativeRate<T>,
    horizon: T,
    cells: usize,
    seed: u64,
) -> Result<DiscretizedControls<T>> {
    match kind {
        StartKind::Constant => DiscretizedControls::constant(horizon, cells, ControlValue::full()),
        StartKind::Random(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let values = (0..cells)
                .map(|_| ControlValue::new(T::lit(rng.gen::<f64>()), T::lit(rng.gen::<f64>())))
                .collect();
            DiscretizedControls::new(horizon, values)
        }
        StartKind::AnalyticWarmStart => {
            let rope = synthesize_rope(horizon, xi, SynthesisOptions::default())?;
            if rope.schedule.duration() < horizon {
                // lossless element is shorter than the horizon; idle afterwards
                let dt = horizon / T::from_usize_lossy(cells);
                let values = (0..cells)
                    .map(|i| {
                        let t = dt * (T::from_usize_lossy(i) + T::lit(0.5));
                        if t <= rope.schedule.duration() {
                            rope.schedule.value_at(t)
                        } else {
                            ControlValue::new(T::one(), T::zero())
                        }
                    })
                    .collect();
                return DiscretizedControls::new(horizon, values);
            }
            DiscretizedControls::from_schedule(&rope.schedule, cells)
        }
    }
}

fn flatten<T: Real>(c: &DiscretizedControls<T>) -> Vec<T> {
    c.values().iter().flat_map(|u| [u.u1, u.u2]).collect()
}

fn unflatten<T: Real>(horizon: T, v: &[T]) -> Result<DiscretizedControls<T>> {
    DiscretizedControls::new(
        horizon,
        v.chunks(2).map(|p| ControlValue::new(p[0], p[1])).collect(),
    )
}

fn flat_gradient<T: Real>(g: &Gradient<T>) -> Vec<T> {
    g.d_u1
        .iter()
        .zip(&g.d_u2)
        .flat_map(|(&a, &b)| [a, b])
        .collect()
}

fn ascend<T: Real>(
    start: DiscretizedControls<T>,
    kind: StartKind,
    xi: RelativeRate<T>,
    options: &OptimizeOptions<T>,
) -> Result<(DiscretizedControls<T>, RunSummary<T>)> {
    let horizon = start.horizon();
    let dt = start.dt();
    let clamp = |x: T| x.max(T::zero()).min(T::one());
    let (alpha_min, alpha_max) = (T::lit(1e-10), T::lit(1e10));
    let armijo = T::lit(1e-4);

    let mut controls = start;
    let mut grad = adjoint_gradient(&controls, xi)?;
    let mut u = flatten(&controls);
    let mut g = flat_gradient(&grad);
    let mut alpha = T::one();
    let mut iterations = 0;

    while iterations < options.max_iterations {
        if grad.projected_norm(&controls) <= options.stop_tolerance {
            break;
        }
        // ascent direction on the functional gradient g/dt
        let d: Vec<T> = u
            .iter()
            .zip(&g)
            .map(|(&x, &gi)| clamp(x + alpha * gi / dt) - x)
            .collect();
        let slope: T = d.iter().zip(&g).map(|(&a, &b)| a * b).sum();
        if !(slope > T::zero()) {
            break;
        }
        let mut step = T::one();
        let accepted = loop {
            let trial: Vec<T> = u
                .iter()
                .zip(&d)
                .map(|(&x, &di)| clamp(x + step * di))
                .collect();
            let candidate = unflatten(horizon, &trial)?;
            if candidate.efficiency(xi) >= grad.value + armijo * step * slope {
                break Some((trial, candidate));
            }
            step *= T::lit(0.5);
            if step < T::lit(1e-14) {
                break None;
            }
        };
        let Some((u_new, c_new)) = accepted else {
            break;
        };
        let grad_new = adjoint_gradient(&c_new, xi)?;
        let g_new = flat_gradient(&grad_new);
        let mut sts = T::zero();
        let mut sty = T::zero();
        for i in 0..u.len() {
            let s = u_new[i] - u[i];
            let y = (g_new[i] - g[i]) / dt;
            sts += s * s;
            sty += s * y;
        }
        alpha = if sty < T::zero() {
            (sts / -sty).max(alpha_min).min(alpha_max)
        } else {
            alpha_max
        };
        u = u_new;
        g = g_new;
        controls = c_new;
        grad = grad_new;
        iterations += 1;
    }
    let grad_norm = grad.projected_norm(&controls);
    Ok((
        controls,
        RunSummary {
            start: kind,
            efficiency: grad.value,
            grad_norm,
            iterations,
            converged: grad_norm <= options.tolerance,
        },
    ))
}
