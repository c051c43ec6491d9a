//! Two-spin master equation in the product-operator basis.
//!
//! The density operator is expanded as `ρ = Σ v_i B_i` over the sixteen
//! trace-orthonormal operators `B_i` of [`ProductOperator`], so `v_i = ⟨B_i⟩`.
//! Every generator is a real 16x16 matrix `L` with `dv/dt = L v` in rad/s:
//!
//! * coupling: `-i[πJ·2IzSz, ρ]`
//! * relaxation: `-πk [2IzSz, [2IzSz, ρ]]`, which damps transverse single-spin
//!   and antiphase terms at rate `πk`
//! * rf on one spin: `-i[2π(ν_x A_x + ν_y A_y), ρ]`
//!
//! Rotations are right-handed: a positive rotation about `+x` takes `Iz` to `-Iy`,
//! one about `+y` takes `Iz` to `Ix`.

mod basis;
mod sim;

pub use basis::{Cartesian, Op4, ProductOperator};
pub use sim::{
    reduced_projection_error, run_sequence, trace_to_text, SimulationResult, TraceSample,
};

use crate::error::{Result, RopeError};
use crate::linalg::Matrix;
use crate::pulse::{PhaseAxis, Spin};
use crate::reduced::RelativeRate;
use crate::scalar::Real;

const DIM: usize = ProductOperator::DIM;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystemParams<T> {
    j_hz: T,
    k_hz: T,
}

impl<T: Real> SpinSystemParams<T> {
    pub fn new(j_hz: T, k_hz: T) -> Result<Self> {
        if !(j_hz > T::zero() && j_hz.is_finite()) {
            return Err(RopeError::InvalidParameter(format!(
                "J must be positive, got {j_hz}"
            )));
        }
        if !(k_hz >= T::zero() && k_hz.is_finite()) {
            return Err(RopeError::InvalidParameter(format!(
                "k must be non-negative, got {k_hz}"
            )));
        }
        Ok(Self { j_hz, k_hz })
    }

    pub fn j_hz(&self) -> T {
        self.j_hz
    }

    pub fn k_hz(&self) -> T {
        self.k_hz
    }

    pub fn xi(&self) -> RelativeRate<T> {
        RelativeRate::from_rates(self.j_hz, self.k_hz).expect("validated rates")
    }

    /// Coupling plus relaxation.
    pub fn free_generator(&self) -> Superoperator<T> {
        build_coupling(self.j_hz).add(&build_relaxation(self.k_hz))
    }
}

/// Expansion coefficients of `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceVector<T>(pub [T; DIM]);

impl<T: Real> CoherenceVector<T> {
    pub fn zero() -> Self {
        Self([T::zero(); DIM])
    }

    /// `ρ = op` (traceless part only; the identity coefficient plays no role).
    pub fn from_operator(op: ProductOperator) -> Self {
        let mut v = Self::zero();
        v.0[op.index()] = T::one();
        v
    }

    pub fn get(&self, op: ProductOperator) -> T {
        self.0[op.index()]
    }

    pub fn set(&mut self, op: ProductOperator, value: T) {
        self.0[op.index()] = value;
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn traceless_norm(&self) -> T {
        self.0[1..].iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `(√(⟨Ix⟩² + ⟨Iz⟩²), √(⟨2IySz⟩² + ⟨2IzSz⟩²))`.
    pub fn reduced_radii(&self) -> (T, T) {
        use Cartesian::*;
        let g = |op| self.get(op);
        (
            g(ProductOperator::I(X)).hypot(g(ProductOperator::I(Z))),
            g(ProductOperator::IS(Y, Z)).hypot(g(ProductOperator::IS(Z, Z))),
        )
    }

    pub fn apply(&self, propagator: &Matrix<T>) -> Self {
        let out = propagator.matvec(&self.0);
        let mut v = Self::zero();
        v.0.copy_from_slice(&out);
        v
    }
}

/// Real generator acting on [`CoherenceVector`], in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T>(pub Matrix<T>);

impl<T: Real> Superoperator<T> {
    pub fn zero() -> Self {
        Self(Matrix::zeros(DIM, DIM))
    }

    /// Matrix of the linear map `ρ ↦ f(ρ)` in the product-operator basis.
    pub fn from_map(f: impl Fn(&Op4<T>) -> Op4<T>) -> Self {
        let basis: Vec<Op4<T>> = ProductOperator::all().map(|p| p.matrix()).collect();
        let mut m = Matrix::zeros(DIM, DIM);
        for (j, bj) in basis.iter().enumerate() {
            let image = f(bj);
            for (i, bi) in basis.iter().enumerate() {
                m[(i, j)] = bi.trace_product(&image).re;
            }
        }
        Self(m)
    }

    /// `ρ ↦ -i[H, ρ]`.
    pub fn from_hamiltonian(h: &Op4<T>) -> Self {
        Self::from_map(|rho| h.commutator(rho).times_minus_i())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.scale(s))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    /// `exp(L·dt)`.
    pub fn propagator(&self, dt: T) -> Result<Matrix<T>> {
        if !(dt.is_finite() && self.0.is_finite()) {
            return Err(RopeError::InvalidParameter(
                "non-finite generator or duration".into(),
            ));
        }
        Ok(self.0.scale(dt).expm())
    }
}

/// `-i[πJ·2IzSz, ·]`.
pub fn build_coupling<T: Real>(j_hz: T) -> Superoperator<T> {
    let h = ProductOperator::IS(Cartesian::Z, Cartesian::Z)
        .matrix::<T>()
        .scale(T::PI() * j_hz);
    Superoperator::from_hamiltonian(&h)
}

/// `-πk [2IzSz, [2IzSz, ·]]`.
pub fn build_relaxation<T: Real>(k_hz: T) -> Superoperator<T> {
    let a = ProductOperator::IS(Cartesian::Z, Cartesian::Z).matrix::<T>();
    let rate = T::PI() * k_hz;
    Superoperator::from_map(|rho| a.commutator(&a.commutator(rho)).scale(-rate))
}

/// `-i[2π(ν_x A_x + ν_y A_y), ·]` for `A = I` or `S`.
pub fn build_rf<T: Real>(nu_x: T, nu_y: T, spin: Spin) -> Superoperator<T> {
    let (ax, ay) = match spin {
        Spin::I => (
            ProductOperator::I(Cartesian::X),
            ProductOperator::I(Cartesian::Y),
        ),
        Spin::S => (
            ProductOperator::S(Cartesian::X),
            ProductOperator::S(Cartesian::Y),
        ),
    };
    let two_pi = T::lit(2.0) * T::PI();
    let h = ax
        .matrix::<T>()
        .scale(two_pi * nu_x)
        .add(&ay.matrix::<T>().scale(two_pi * nu_y));
    Superoperator::from_hamiltonian(&h)
}

/// Propagator of an ideal rotation by `angle` about `axis` on `spin`.
pub fn rotation<T: Real>(spin: Spin, axis: PhaseAxis, angle: T) -> Matrix<T> {
    let (nx, ny) = axis.direction::<T>();
    let unit = T::one() / (T::lit(2.0) * T::PI());
    build_rf(nx * unit, ny * unit, spin).0.scale(angle).expm()
}
