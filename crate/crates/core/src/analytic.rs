//! Closed-form efficiencies and the finite-time switching geometry.
//!
//! All times are rescaled (`t' = πJ·t`); divide by `π` for units of `1/J`.

use crate::error::{Result, RopeError};
use crate::reduced::RelativeRate;
use crate::scalar::{acot, Real};

/// Maximum transfer efficiency without a time constraint, `η = sqrt(1+ξ²) - ξ`.
pub fn eta_max<T: Real>(xi: RelativeRate<T>) -> T {
    let x = xi.value();
    // 1/(sqrt(1+ξ²)+ξ) avoids cancellation for large ξ
    T::one() / ((T::one() + x * x).sqrt() + x)
}

/// Best constant-control efficiency and the rescaled time at which it is reached.
pub fn eta_inept<T: Real>(xi: RelativeRate<T>) -> (T, T) {
    let t = acot(xi.value());
    ((-xi.value() * t).exp() * t.sin(), t)
}

/// Best constant-control efficiency reachable within horizon `horizon`.
pub fn eta_inept_at_horizon<T: Real>(horizon: T, xi: RelativeRate<T>) -> T {
    let (_, t_opt) = eta_inept(xi);
    let t = horizon.min(t_opt).max(T::zero());
    (-xi.value() * t).exp() * t.sin()
}

/// In-phase to in-phase efficiencies: `(η², (η_INEPT)²)`.
pub fn inphase_efficiencies<T: Real>(xi: RelativeRate<T>) -> (T, T) {
    let eta = eta_max(xi);
    let inept = eta_inept(xi).0;
    (eta * eta, inept * inept)
}

/// `η / η_INEPT`.
pub fn gain_ratio<T: Real>(xi: RelativeRate<T>) -> T {
    eta_max(xi) / eta_inept(xi).0
}

/// Rescaled critical time `acot(2ξ)`; shorter horizons are optimally served by constant controls.
pub fn critical_time<T: Real>(xi: RelativeRate<T>) -> T {
    acot(T::lit(2.0) * xi.value())
}

fn require_lossy<T: Real>(xi: RelativeRate<T>) -> Result<T> {
    if xi.is_lossless() {
        Err(RopeError::InvalidParameter(
            "the switching geometry is undefined for ξ = 0".into(),
        ))
    } else {
        Ok(xi.value())
    }
}

/// `κ(t') = 1 + 2ξ² - 2ξ sqrt(1+ξ²) coth(sqrt(1+ξ²) t' + 2 asinh ξ)`.
///
/// Evaluated through the equivalent `tanh(st')/(2ξs + (1+2ξ²) tanh(st'))`,
/// `s = sqrt(1+ξ²)`, which is exact at `t' = 0` and free of cancellation.
pub fn kappa<T: Real>(t: T, xi: RelativeRate<T>) -> Result<T> {
    let x = require_lossy(xi)?;
    if !(t >= T::zero()) {
        return Err(RopeError::InvalidParameter(format!(
            "κ needs t' ≥ 0, got {t}"
        )));
    }
    let s = (T::one() + x * x).sqrt();
    let th = (s * t).tanh();
    let two = T::lit(2.0);
    Ok(th / (two * x * s + (T::one() + two * x * x) * th))
}

/// Switching angles `(θ1, θ2)` of the finite-time optimum for a given `κ(τ)`.
pub fn angles<T: Real>(kappa_val: T, xi: RelativeRate<T>) -> (T, T) {
    let two_xi = T::lit(2.0) * xi.value();
    let one_minus = T::one() - kappa_val;
    (
        (two_xi * kappa_val / one_minus).atan(),
        (one_minus / two_xi).atan(),
    )
}

/// `T' = 2τ' + θ2 - θ1` evaluated at `κ(τ')`.
pub fn time_of_tau<T: Real>(tau: T, xi: RelativeRate<T>) -> Result<T> {
    let k = kappa(tau, xi)?;
    let (t1, t2) = angles(k, xi);
    Ok(T::lit(2.0) * tau + t2 - t1)
}

/// `η_T = exp(ξ(θ1-θ2)) (1 - ξ sin 2θ2) / sin(θ1+θ2)`.
pub fn eta_from_angles<T: Real>(theta1: T, theta2: T, xi: RelativeRate<T>) -> T {
    let x = xi.value();
    (x * (theta1 - theta2)).exp() * (T::one() - x * (T::lit(2.0) * theta2).sin())
        / (theta1 + theta2).sin()
}

/// Finite-time solution descriptor. Times are rescaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingGeometry<T> {
    pub xi: RelativeRate<T>,
    /// Total transfer time `T'`.
    pub horizon: T,
    /// Duration `τ'` of the first (and, mirrored, the last) phase.
    pub tau: T,
    pub kappa: T,
    pub theta1: T,
    pub theta2: T,
    pub eta_t: T,
}

impl<T: Real> SwitchingGeometry<T> {
    /// Assembles the geometry for a given `τ'`.
    pub fn from_tau(tau: T, xi: RelativeRate<T>) -> Result<Self> {
        let k = kappa(tau, xi)?;
        let (theta1, theta2) = angles(k, xi);
        Ok(Self {
            xi,
            horizon: T::lit(2.0) * tau + theta2 - theta1,
            tau,
            kappa: k,
            theta1,
            theta2,
            eta_t: eta_from_angles(theta1, theta2, xi),
        })
    }

    pub fn horizon_inverse_j(&self) -> T {
        self.horizon / T::PI()
    }

    pub fn tau_inverse_j(&self) -> T {
        self.tau / T::PI()
    }

    /// Time spent with both controls saturated.
    pub fn phase_two_duration(&self) -> T {
        self.horizon - T::lit(2.0) * self.tau
    }
}

/// Finite-time efficiency of a geometry.
pub fn eta_finite<T: Real>(geometry: &SwitchingGeometry<T>) -> T {
    eta_from_angles(geometry.theta1, geometry.theta2, geometry.xi)
}

/// Inverts `time_of_tau` by bisection on `[0, T'/2]`.
///
/// Returns [`RopeError::IneptRegime`] when `T'` does not exceed the critical time.
pub fn tau_of_time<T: Real>(horizon: T, xi: RelativeRate<T>) -> Result<SwitchingGeometry<T>> {
    require_lossy(xi)?;
    if !(horizon.is_finite() && horizon > T::zero()) {
        return Err(RopeError::InvalidParameter(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let critical = critical_time(xi);
    if horizon <= critical {
        return Err(RopeError::IneptRegime {
            horizon: horizon.as_f64(),
            critical: critical.as_f64(),
        });
    }
    let f = |tau: T| time_of_tau(tau, xi).map(|t| t - horizon);

    let half = horizon * T::lit(0.5);
    // coarse monotonicity check of the bracket
    let probes = 16usize;
    let mut prev = f(T::zero())?;
    for i in 1..=probes {
        let v = f(half * T::from_usize_lossy(i) / T::from_usize_lossy(probes))?;
        if v < prev {
            return Err(RopeError::RootSolve(format!(
                "T'(τ') not monotone on [0, {half}] for ξ = {}",
                xi.value()
            )));
        }
        prev = v;
    }

    let (mut lo, mut hi) = (T::zero(), half);
    let tol = T::lit(1e-12).max(T::epsilon() * half);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        if f(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = if f(hi)?.abs() < f(lo)?.abs() { hi } else { lo };
    let geometry = SwitchingGeometry::from_tau(tau, xi)?;
    let residual = (geometry.horizon - horizon).abs();
    let allowed = T::lit(1e-10).max(T::lit(64.0) * T::epsilon() * horizon);
    if residual > allowed {
        return Err(RopeError::RootSolve(format!(
            "residual {residual} exceeds {allowed} for T' = {horizon}"
        )));
    }
    Ok(SwitchingGeometry {
        horizon,
        ..geometry
    })
}

/// Optimal efficiency for a horizon `T'`, covering every regime:
/// lossless rotation for `ξ = 0`, constant controls up to the critical time,
/// the three-phase optimum beyond it.
pub fn optimal_efficiency<T: Real>(horizon: T, xi: RelativeRate<T>) -> Result<T> {
    if !(horizon >= T::zero()) {
        return Err(RopeError::InvalidParameter(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    if xi.is_lossless() {
        return Ok(horizon.min(T::FRAC_PI_2()).sin());
    }
    if horizon <= critical_time(xi) {
        return Ok((-xi.value() * horizon).exp() * horizon.sin());
    }
    Ok(tau_of_time(horizon, xi)?.eta_t)
}
