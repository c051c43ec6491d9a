//! Relaxation-optimized coherence transfer in a scalar-coupled two-spin system.
//!
//! The crate covers the whole chain from closed forms to pulses:
//!
//! * [`reduced`]: the two-dimensional bilinear control system and its integrator,
//! * [`analytic`]: closed-form efficiencies and the finite-time switching geometry,
//! * [`synthesis`]: optimal control schedules (three-phase finite-time elements and the
//!   infinite-horizon feedback law),
//! * [`pulse`]: compilation of schedules into hard pulses, delays and shaped rf,
//! * [`quantum`]: a product-operator master-equation simulator of the full two-spin system,
//! * [`oracle`]: numerical optimal control (adjoint-gradient ascent and dynamic programming)
//!   that checks the closed forms without relying on them.
//!
//! Numerical code is generic over [`Real`] (`f32`/`f64`); the `*64` aliases below fix the
//! scalar to `f64`, which every tolerance in the test suites assumes.
//!
//! Internally time is rescaled, `t' = πJ·t`; physical units appear only in [`pulse`],
//! [`quantum`] and at the command line.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod pulse;
pub mod quantum;
pub mod reduced;
pub mod scalar;
pub mod synthesis;
pub mod textio;

pub use error::{Result, RopeError};
pub use scalar::Real;

pub type RelativeRate64 = reduced::RelativeRate<f64>;
pub type ReducedState64 = reduced::ReducedState<f64>;
pub type ControlValue64 = reduced::ControlValue<f64>;
pub type ControlSchedule64 = reduced::ControlSchedule<f64>;
pub type SwitchingGeometry64 = analytic::SwitchingGeometry<f64>;
pub type RopeSchedule64 = synthesis::RopeSchedule<f64>;
pub type PulseSequence64 = pulse::PulseSequence<f64>;
pub type CoherenceVector64 = quantum::CoherenceVector<f64>;
pub type Superoperator64 = quantum::Superoperator<f64>;
pub type DiscretizedControls64 = oracle::DiscretizedControls<f64>;
pub type ValueGrid64 = oracle::ValueGrid<f64>;
