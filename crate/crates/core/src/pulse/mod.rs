//! Physical pulse sequences: ideal hard pulses, delays and shaped rf on spin I.
//!
//! [`compile`] turns a phase-structured control schedule into a sequence;
//! [`export`] writes shaped-pulse tables and a JSON manifest.

pub mod compile;
pub mod export;

pub use compile::{compile, roundtrip_check, CompileOptions, DEFAULT_RF_CAP_OVER_J};

use crate::error::{Result, RopeError};
use crate::quantum::ProductOperator;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    I,
    S,
}

impl Spin {
    pub fn label(self) -> &'static str {
        match self {
            Spin::I => "I",
            Spin::S => "S",
        }
    }
}

/// Rotation axis of a hard pulse. Rotations are right-handed: `+x` takes
/// `Iz` to `-Iy`, `+y` takes `Iz` to `Ix`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseAxis {
    X,
    MinusX,
    Y,
    MinusY,
}

impl PhaseAxis {
    pub fn label(self) -> &'static str {
        match self {
            PhaseAxis::X => "x",
            PhaseAxis::MinusX => "-x",
            PhaseAxis::Y => "y",
            PhaseAxis::MinusY => "-y",
        }
    }

    /// Unit rotation axis `(nx, ny)` in the transverse plane.
    pub fn direction<T: Real>(self) -> (T, T) {
        let (o, z) = (T::one(), T::zero());
        match self {
            PhaseAxis::X => (o, z),
            PhaseAxis::MinusX => (-o, z),
            PhaseAxis::Y => (z, o),
            PhaseAxis::MinusY => (z, -o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardPulse<T> {
    pub spin: Spin,
    pub flip_angle: T,
    pub axis: PhaseAxis,
}

impl<T: Real> HardPulse<T> {
    /// Flip angle in `(0, π]`.
    pub fn new(spin: Spin, flip_angle: T, axis: PhaseAxis) -> Result<Self> {
        if !(flip_angle > T::zero() && flip_angle <= T::PI() * (T::one() + T::epsilon())) {
            return Err(RopeError::InvalidParameter(format!(
                "flip angle {flip_angle} outside (0, π]"
            )));
        }
        Ok(Self {
            spin,
            flip_angle: flip_angle.min(T::PI()),
            axis,
        })
    }
}

/// One piecewise-constant rf value, held from `t` (seconds from the segment start)
/// to the next sample or the end of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfSample<T> {
    pub t: T,
    pub nu_x: T,
    pub nu_y: T,
}

/// Shaped rf on spin I.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedSegment<T> {
    samples: Vec<RfSample<T>>,
    duration: T,
}

impl<T: Real> ShapedSegment<T> {
    pub fn new(samples: Vec<RfSample<T>>, duration: T) -> Result<Self> {
        let bad = |m: String| Err(RopeError::InvalidParameter(format!("shaped segment: {m}")));
        if samples.is_empty() {
            return bad("no samples".into());
        }
        if samples[0].t != T::zero() {
            return bad("first sample must start at 0".into());
        }
        if !(duration > T::zero() && duration.is_finite()) {
            return bad(format!("duration {duration} must be positive"));
        }
        if samples
            .iter()
            .any(|s| !(s.t.is_finite() && s.nu_x.is_finite() && s.nu_y.is_finite()))
        {
            return bad("non-finite sample".into());
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) || samples[samples.len() - 1].t >= duration
        {
            return bad("sample times must increase and stay below the duration".into());
        }
        Ok(Self { samples, duration })
    }

    pub fn samples(&self) -> &[RfSample<T>] {
        &self.samples
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    /// `(start, end, sample)` for every constant piece.
    pub fn cells(&self) -> impl Iterator<Item = (T, T, RfSample<T>)> + '_ {
        self.samples.iter().enumerate().map(move |(i, s)| {
            let end = self.samples.get(i + 1).map_or(self.duration, |n| n.t);
            (s.t, end, *s)
        })
    }

    pub fn peak_amplitude(&self) -> T {
        self.samples
            .iter()
            .map(|s| s.nu_x.hypot(s.nu_y))
            .fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseElement<T> {
    Hard(HardPulse<T>),
    Shaped(ShapedSegment<T>),
    /// Free evolution for the given number of seconds.
    Delay(T),
}

impl<T: Real> PulseElement<T> {
    pub fn duration(&self) -> T {
        match self {
            PulseElement::Hard(_) => T::zero(),
            PulseElement::Shaped(s) => s.duration(),
            PulseElement::Delay(d) => *d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceMetadata<T> {
    pub j_hz: T,
    pub k_hz: T,
    pub target: ProductOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence<T> {
    pub elements: Vec<PulseElement<T>>,
    pub metadata: SequenceMetadata<T>,
}

impl<T: Real> PulseSequence<T> {
    /// Total duration in seconds; hard pulses take no time.
    pub fn duration(&self) -> T {
        self.elements.iter().map(PulseElement::duration).sum()
    }

    pub fn hard_pulses(&self) -> impl Iterator<Item = &HardPulse<T>> {
        self.elements.iter().filter_map(|e| match e {
            PulseElement::Hard(h) => Some(h),
            _ => None,
        })
    }

    pub fn shaped_segments(&self) -> impl Iterator<Item = &ShapedSegment<T>> {
        self.elements.iter().filter_map(|e| match e {
            PulseElement::Shaped(s) => Some(s),
            _ => None,
        })
    }
}
