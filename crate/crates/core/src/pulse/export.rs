//! Shaped-pulse tables and the JSON manifest.
//!
//! Every number is written with 12 significant digits so that output is
//! byte-stable across runs.

use serde_json::{json, Value};

use crate::error::{Result, RopeError};
use crate::scalar::Real;
use crate::textio::{parse_header_line, round_sig12, sig12};

use super::{PulseElement, PulseSequence, RfSample, SequenceMetadata, ShapedSegment};

/// Table for one shaped segment: `# J_Hz=`, `# k_Hz=` headers and rows `t_s nu_x_Hz nu_y_Hz`.
pub fn shaped_segment_text<T: Real>(
    segment: &ShapedSegment<T>,
    metadata: &SequenceMetadata<T>,
    extra_header: &[(String, String)],
) -> String {
    let mut out = String::from("# rope shaped pulse (spin I)\n");
    out.push_str(&format!("# J_Hz={}\n", sig12(metadata.j_hz.as_f64())));
    out.push_str(&format!("# k_Hz={}\n", sig12(metadata.k_hz.as_f64())));
    for (k, v) in extra_header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!(
        "# duration_s={}\n",
        sig12(segment.duration().as_f64())
    ));
    out.push_str("# columns: t_s nu_x_Hz nu_y_Hz\n");
    for s in segment.samples() {
        out.push_str(&format!(
            "{} {} {}\n",
            sig12(s.t.as_f64()),
            sig12(s.nu_x.as_f64()),
            sig12(s.nu_y.as_f64())
        ));
    }
    out
}

/// Reads a table written by [`shaped_segment_text`]; returns the segment and its header.
pub fn parse_shaped_segment<T: Real>(
    text: &str,
) -> Result<(ShapedSegment<T>, crate::textio::HeaderLines)> {
    let mut header = Vec::new();
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            header.extend(parse_header_line(line));
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| RopeError::Parse {
                line: n + 1,
                message: format!("{e}"),
            })?;
        if vals.len() != 3 {
            return Err(RopeError::Parse {
                line: n + 1,
                message: format!("expected 3 columns, found {}", vals.len()),
            });
        }
        samples.push(RfSample {
            t: T::lit(vals[0]),
            nu_x: T::lit(vals[1]),
            nu_y: T::lit(vals[2]),
        });
    }
    let duration = header
        .iter()
        .find(|(k, _)| k == "duration_s")
        .and_then(|(_, v)| v.parse::<f64>().ok())
        .ok_or(RopeError::Parse {
            line: 0,
            message: "missing duration_s header".into(),
        })?;
    Ok((ShapedSegment::new(samples, T::lit(duration))?, header))
}

/// Ordered element list; shaped segments refer to `segment_files` in order.
pub fn manifest_json<T: Real>(seq: &PulseSequence<T>, segment_files: &[String]) -> Value {
    let r = |x: T| round_sig12(x.as_f64());
    let mut files = segment_files.iter();
    let mut clock = T::zero();
    let elements: Vec<Value> = seq
        .elements
        .iter()
        .map(|e| {
            let start = clock;
            clock += e.duration();
            match e {
                PulseElement::Hard(h) => json!({
                    "type": "hard_pulse",
                    "spin": h.spin.label(),
                    "axis": h.axis.label(),
                    "flip_angle_rad": r(h.flip_angle),
                    "flip_angle_deg": r(h.flip_angle.to_degrees()),
                    "start_s": r(start),
                }),
                PulseElement::Delay(d) => json!({
                    "type": "delay",
                    "duration_s": r(*d),
                    "start_s": r(start),
                }),
                PulseElement::Shaped(s) => json!({
                    "type": "shaped",
                    "spin": "I",
                    "duration_s": r(s.duration()),
                    "start_s": r(start),
                    "samples": s.samples().len(),
                    "peak_amplitude_hz": r(s.peak_amplitude()),
                    "file": files.next().cloned(),
                }),
            }
        })
        .collect();
    json!({
        "J_Hz": r(seq.metadata.j_hz),
        "k_Hz": r(seq.metadata.k_hz),
        "target": seq.metadata.target.label(),
        "initial": "Ix",
        "total_duration_s": r(seq.duration()),
        "elements": elements,
    })
}
