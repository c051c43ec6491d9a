use crate::error::{Result, RopeError};
use crate::scalar::Real;
use crate::textio::{parse_header_line, sig12};

use super::ControlValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSample<T> {
    /// Rescaled time `t' = πJ·t`.
    pub t: T,
    pub u: ControlValue<T>,
}

/// Time-sampled controls on `[0, duration]`, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule<T> {
    samples: Vec<ScheduleSample<T>>,
}

impl<T: Real> ControlSchedule<T> {
    pub fn new(samples: Vec<ScheduleSample<T>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(RopeError::InvalidSchedule(
                "a schedule needs at least two samples".into(),
            ));
        }
        if samples[0].t != T::zero() {
            return Err(RopeError::InvalidSchedule(
                "first sample must be at t = 0".into(),
            ));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.u.u1.is_finite() && s.u.u2.is_finite()) {
                return Err(RopeError::InvalidSchedule(format!("non-finite sample {i}")));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(RopeError::InvalidSchedule(format!(
                "times not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(Self { samples })
    }

    /// Constant controls over `[0, duration]`.
    pub fn constant(duration: T, u: ControlValue<T>) -> Result<Self> {
        if !(duration > T::zero() && duration.is_finite()) {
            return Err(RopeError::InvalidParameter(format!(
                "schedule duration must be positive, got {duration}"
            )));
        }
        Self::new(vec![
            ScheduleSample { t: T::zero(), u },
            ScheduleSample { t: duration, u },
        ])
    }

    pub fn samples(&self) -> &[ScheduleSample<T>] {
        &self.samples
    }

    pub fn duration(&self) -> T {
        self.samples[self.samples.len() - 1].t
    }

    /// Largest spacing between consecutive samples.
    pub fn grid_spacing(&self) -> T {
        self.samples
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(T::zero(), T::max)
    }

    /// Piecewise-linear interpolation; clamps outside `[0, duration]`.
    pub fn value_at(&self, t: T) -> ControlValue<T> {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].u;
        }
        if t >= self.duration() {
            return s[s.len() - 1].u;
        }
        let i = s.partition_point(|x| x.t <= t) - 1;
        interpolate(&s[i], &s[i + 1], t)
    }

    /// Serializes to the columnar `t u1 u2` text format.
    pub fn to_text(&self, header: &[(String, String)]) -> String {
        let mut out = String::from("# rope control schedule\n");
        for (k, v) in header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&format!(
            "# duration_rescaled={}\n",
            sig12(self.duration().as_f64())
        ));
        out.push_str("# columns: t_rescaled u1 u2\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{} {} {}\n",
                sig12(s.t.as_f64()),
                sig12(s.u.u1.as_f64()),
                sig12(s.u.u2.as_f64())
            ));
        }
        out
    }

    /// Parses the columnar format, returning the schedule and its `key=value` header.
    pub fn from_text(text: &str) -> Result<(Self, crate::textio::HeaderLines)> {
        let mut header = Vec::new();
        let mut samples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if let Some(kv) = parse_header_line(line) {
                    header.push(kv);
                }
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(RopeError::Parse {
                    line: n + 1,
                    message: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let mut vals = [T::zero(); 3];
            for (v, c) in vals.iter_mut().zip(&cols) {
                let x: f64 = c.parse().map_err(|e| RopeError::Parse {
                    line: n + 1,
                    message: format!("{c}: {e}"),
                })?;
                *v = T::lit(x);
            }
            samples.push(ScheduleSample {
                t: vals[0],
                u: ControlValue::new(vals[1], vals[2]),
            });
        }
        header.retain(|(k, _)| k != "duration_rescaled");
        Ok((Self::new(samples)?, header))
    }
}

#[inline]
pub(crate) fn interpolate<T: Real>(
    a: &ScheduleSample<T>,
    b: &ScheduleSample<T>,
    t: T,
) -> ControlValue<T> {
    let w = (t - a.t) / (b.t - a.t);
    ControlValue {
        u1: a.u.u1 + (b.u.u1 - a.u.u1) * w,
        u2: a.u.u2 + (b.u.u2 - a.u.u2) * w,
    }
}
