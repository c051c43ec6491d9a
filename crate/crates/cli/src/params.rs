use std::f64::consts::PI;

use clap::Args;
use rope_core::RelativeRate64;

use crate::{CliError, CliResult};

/// `J` used when only `--xi` is given; seconds then read as units of `1/J`.
pub const DEFAULT_J_HZ: f64 = 1.0;

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Relaxation ratio k/J.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Scalar coupling in Hz.
    #[arg(long = "J-hz")]
    pub j_hz: Option<f64>,
    /// Transverse relaxation rate in Hz.
    #[arg(long = "k-hz")]
    pub k_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct System {
    pub xi: RelativeRate64,
    pub j_hz: f64,
    pub k_hz: f64,
}

impl SystemArgs {
    pub fn resolve(&self) -> CliResult<System> {
        match (self.xi, self.j_hz, self.k_hz) {
            (Some(_), _, Some(_)) => Err(CliError::Invalid(
                "give either --xi or --k-hz, not both".into(),
            )),
            (Some(x), j, None) => {
                let j_hz = j.unwrap_or(DEFAULT_J_HZ);
                check_positive("--J-hz", j_hz)?;
                let xi = RelativeRate64::new(x)?;
                Ok(System {
                    xi,
                    j_hz,
                    k_hz: x * j_hz,
                })
            }
            (None, Some(j_hz), Some(k_hz)) => {
                check_positive("--J-hz", j_hz)?;
                Ok(System {
                    xi: RelativeRate64::from_rates(j_hz, k_hz)?,
                    j_hz,
                    k_hz,
                })
            }
            _ => Err(CliError::Invalid(
                "give --xi, or both --J-hz and --k-hz".into(),
            )),
        }
    }
}

fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TimeArgs {
    /// Transfer time in units of 1/J.
    #[arg(long = "T", conflicts_with = "t_seconds")]
    pub t_over_j: Option<f64>,
    /// Transfer time in seconds.
    #[arg(long = "T-seconds")]
    pub t_seconds: Option<f64>,
}

impl TimeArgs {
    /// Horizon in units of `1/J`, if one was given.
    pub fn over_j(&self, system: &System) -> CliResult<Option<f64>> {
        let t = match (self.t_over_j, self.t_seconds) {
            (Some(t), _) => t,
            (None, Some(s)) => s * system.j_hz,
            (None, None) => return Ok(None),
        };
        check_positive("transfer time", t)?;
        Ok(Some(t))
    }

    pub fn require_over_j(&self, system: &System) -> CliResult<f64> {
        self.over_j(system)?.ok_or_else(|| {
            CliError::Invalid("a transfer time (--T or --T-seconds) is required".into())
        })
    }
}

/// Units of `1/J` to rescaled time.
pub fn rescale(t_over_j: f64) -> f64 {
    PI * t_over_j
}

/// Rescaled time to units of `1/J`.
pub fn unscale(t: f64) -> f64 {
    t / PI
}
