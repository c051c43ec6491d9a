use std::io::Write;

use rayon::prelude::*;
use rope_core::analytic;
use rope_core::RelativeRate64;

use crate::output::{csv_text, ensure_dir, num, provenance, write_file};
use crate::params::{rescale, unscale};
use crate::{CliError, CliResult, CurvesArgs};

pub const GAIN_FILE: &str = "efficiency_vs_xi.csv";
pub const GAIN_COLUMNS: [&str; 9] = [
    "xi",
    "eta",
    "eta_inept",
    "t_inept_over_J",
    "gain",
    "eta_inphase",
    "eta_inphase_inept",
    "gain_inphase",
    "t_critical_over_J",
];
pub const HORIZON_COLUMNS: [&str; 4] = ["T_over_J", "eta_T", "eta_inept_T", "critical"];
/// Range of the logarithmic ξ grid.
pub const XI_RANGE: (f64, f64) = (1e-2, 1e2);

pub fn horizon_file(xi: f64) -> String {
    format!("eta_vs_T_xi_{xi}.csv")
}

fn rate(xi: f64) -> CliResult<RelativeRate64> {
    Ok(RelativeRate64::new(xi)?)
}

/// One row of [`GAIN_COLUMNS`].
pub fn gain_row(xi: f64) -> CliResult<Vec<f64>> {
    let x = rate(xi)?;
    let eta = analytic::eta_max(x);
    let (inept, t_inept) = analytic::eta_inept(x);
    let (inphase, inphase_inept) = analytic::inphase_efficiencies(x);
    Ok(vec![
        xi,
        eta,
        inept,
        unscale(t_inept),
        eta / inept,
        inphase,
        inphase_inept,
        inphase / inphase_inept,
        unscale(analytic::critical_time(x)),
    ])
}

/// `ξ = 0` followed by `points` logarithmically spaced values over [`XI_RANGE`].
pub fn gain_rows(points: usize) -> CliResult<Vec<Vec<f64>>> {
    let (lo, hi) = (XI_RANGE.0.ln(), XI_RANGE.1.ln());
    let mut xis = vec![0.0];
    xis.extend((0..points).map(|i| {
        if i + 1 == points {
            XI_RANGE.1
        } else {
            (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()
        }
    }));
    xis.par_iter().map(|&x| gain_row(x)).collect()
}

/// Rows of [`HORIZON_COLUMNS`] on a uniform grid over `(0, t_max]`, with the
/// critical time inserted and flagged when it falls inside the range.
pub fn horizon_rows(xi: f64, t_max: f64, points: usize) -> CliResult<Vec<Vec<f64>>> {
    let x = rate(xi)?;
    let t_c = unscale(analytic::critical_time(x));
    let mut times: Vec<(f64, bool)> = (1..=points)
        .map(|i| (t_max * i as f64 / points as f64, false))
        .filter(|(t, _)| *t != t_c)
        .collect();
    if t_c <= t_max {
        times.push((t_c, true));
        times.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    times
        .par_iter()
        .map(|&(t, critical)| {
            let eta_t = analytic::optimal_efficiency(rescale(t), x)?;
            let inept = analytic::eta_inept_at_horizon(rescale(t), x);
            Ok(vec![t, eta_t, inept, if critical { 1.0 } else { 0.0 }])
        })
        .collect()
}

pub fn run(args: &CurvesArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.xi.is_empty() {
        return Err(CliError::Invalid("--xi needs at least one value".into()));
    }
    if args.grid < 2 {
        return Err(CliError::Invalid(format!(
            "--grid must be at least 2, got {}",
            args.grid
        )));
    }
    if !(args.t_max > 0.0 && args.t_max.is_finite()) {
        return Err(CliError::Invalid(format!(
            "--T must be positive, got {}",
            args.t_max
        )));
    }
    for &x in &args.xi {
        rate(x)?;
    }
    ensure_dir(&args.out)?;

    let header = provenance(
        "curves",
        &[
            ("grid", args.grid.to_string()),
            ("xi_min", num(XI_RANGE.0)),
            ("xi_max", num(XI_RANGE.1)),
            ("note", "first row is xi=0; times in units of 1/J".into()),
        ],
    );
    let text = csv_text(&header, &GAIN_COLUMNS, &gain_rows(args.grid)?)?;
    let path = args.out.join(GAIN_FILE);
    write_file(&path, &text)?;
    report(out, &path)?;

    for &x in &args.xi {
        let t_c = unscale(analytic::critical_time(rate(x)?));
        let header = provenance(
            "curves",
            &[
                ("xi", num(x)),
                ("T_max_over_J", num(args.t_max)),
                ("grid", args.grid.to_string()),
                ("T_critical_over_J", num(t_c)),
                ("note", "critical=1 marks the critical time".into()),
            ],
        );
        let text = csv_text(
            &header,
            &HORIZON_COLUMNS,
            &horizon_rows(x, args.t_max, args.grid)?,
        )?;
        let path = args.out.join(horizon_file(x));
        write_file(&path, &text)?;
        report(out, &path)?;
    }
    Ok(())
}

fn report(out: &mut dyn Write, path: &std::path::Path) -> CliResult<()> {
    writeln!(out, "wrote {}", path.display()).map_err(|e| CliError::io("<stdout>", e))
}
