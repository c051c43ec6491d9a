//! Exact flow of the reduced system under a constant control.
//!
//! For constant `(u1, u2)` the generator `A = [[-ξu1², -u1u2], [u1u2, -ξu2²]]`
//! splits as `m·I + B` with `B` traceless and `B² = δ·I`, so
//! `exp(A h) = e^{m h} (C(δ) I + S(δ) B)` in closed form. The derivatives of
//! the map with respect to `u1` and `u2` follow by differentiating `m`, `δ`
//! and `B`; they feed the exact discrete adjoint gradient of the oracle.

use crate::scalar::Real;

use super::{ControlValue, ReducedState, RelativeRate};

/// 2x2 matrix stored row-major.
pub type Mat2<T> = [[T; 2]; 2];

#[inline]
pub fn apply<T: Real>(m: &Mat2<T>, s: ReducedState<T>) -> ReducedState<T> {
    ReducedState {
        r1: m[0][0] * s.r1 + m[0][1] * s.r2,
        r2: m[1][0] * s.r1 + m[1][1] * s.r2,
    }
}

/// `mᵀ v`, used to carry costates backwards.
#[inline]
pub fn apply_transpose<T: Real>(m: &Mat2<T>, v: [T; 2]) -> [T; 2] {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

/// `lᵀ m r`.
#[inline]
pub fn bilinear<T: Real>(l: [T; 2], m: &Mat2<T>, r: ReducedState<T>) -> T {
    let mr = apply(m, r);
    l[0] * mr.r1 + l[1] * mr.r2
}

/// Entire functions of `z = δh²`: `cosh√z`, `sinh√z/√z` and `(cosh√z - sinh√z/√z)/z`.
fn trig_family<T: Real>(z: T) -> (T, T, T) {
    if z.abs() < T::lit(0.5) {
        // c0 = Σ z^k/(2k)!, s1 = Σ z^k/(2k+1)!, s3 = Σ 2(k+1) z^k/(2k+3)!
        let mut c0 = T::zero();
        let mut s1 = T::zero();
        let mut s3 = T::zero();
        let mut zk = T::one();
        let mut fact_even = T::one(); // (2k)!
        for k in 0..14usize {
            let kk = T::from_usize_lossy(k);
            let two = T::lit(2.0);
            let f_odd = fact_even * (two * kk + T::one()); // (2k+1)!
            let f_odd3 = f_odd * (two * kk + two) * (two * kk + T::lit(3.0)); // (2k+3)!
            c0 += zk / fact_even;
            s1 += zk / f_odd;
            s3 += two * (kk + T::one()) * zk / f_odd3;
            zk *= z;
            fact_even = f_odd * (two * kk + two);
        }
        (c0, s1, s3)
    } else if z > T::zero() {
        let w = z.sqrt();
        let c0 = w.cosh();
        let s1 = w.sinh() / w;
        (c0, s1, (c0 - s1) / z)
    } else {
        let w = (-z).sqrt();
        let c0 = w.cos();
        let s1 = w.sin() / w;
        (c0, s1, (c0 - s1) / z)
    }
}

/// `exp(A(u) h)`.
pub fn flow_map<T: Real>(u: ControlValue<T>, xi: RelativeRate<T>, h: T) -> Mat2<T> {
    flow_map_with_derivatives(u, xi, h).0
}

/// `exp(A(u) h)` together with its partial derivatives in `u1` and `u2`.
pub fn flow_map_with_derivatives<T: Real>(
    u: ControlValue<T>,
    xi: RelativeRate<T>,
    h: T,
) -> (Mat2<T>, Mat2<T>, Mat2<T>) {
    let xi = xi.value();
    let (p, q) = (u.u1, u.u2);
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let m = -xi * (p * p + q * q) * half;
    let d = xi * (p * p - q * q) * half;
    let c = p * q;
    let delta = d * d - c * c;
    let (c0, s1, s3) = trig_family(delta * h * h);

    let em = (m * h).exp();
    let cc = c0;
    let ss = h * s1;
    let dc = h * h * s1 * half; // dC/dδ
    let ds = h * h * h * s3 * half; // dS/dδ

    let compose = |ci: T, si: T, b: Mat2<T>| -> Mat2<T> {
        [
            [em * (ci + si * b[0][0]), em * si * b[0][1]],
            [em * si * b[1][0], em * (ci + si * b[1][1])],
        ]
    };
    let b = [[-d, -c], [c, d]];
    let map = compose(cc, ss, b);

    let deriv = |m_t: T, d_t: T, c_t: T| -> Mat2<T> {
        let delta_t = two * d * d_t - two * c * c_t;
        let b_t = [[-d_t, -c_t], [c_t, d_t]];
        let mut out = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let eye = if i == j { T::one() } else { T::zero() };
                let base = cc * eye + ss * b[i][j];
                out[i][j] =
                    em * (h * m_t * base + delta_t * (dc * eye + ds * b[i][j]) + ss * b_t[i][j]);
            }
        }
        out
    };
    let d_u1 = deriv(-xi * p, xi * p, q);
    let d_u2 = deriv(-xi * q, -xi * q, p);
    (map, d_u1, d_u2)
}
