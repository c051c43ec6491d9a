//! File output shared by every command.
//!
//! Each file starts with `# key=value` provenance lines followed by the body;
//! numbers use 12 significant digits so repeated runs are byte-identical.

use std::fs;
use std::path::Path;

use rope_core::textio::sig12;

use crate::{CliError, CliResult};

pub type Header = Vec<(String, String)>;

/// Provenance lines common to every artifact.
pub fn provenance(command: &str, params: &[(&str, String)]) -> Header {
    let mut h = vec![
        (
            "generator".to_string(),
            format!("rope {}", env!("CARGO_PKG_VERSION")),
        ),
        ("command".to_string(), command.to_string()),
    ];
    h.extend(params.iter().map(|(k, v)| (k.to_string(), v.clone())));
    h
}

pub fn num(x: f64) -> String {
    sig12(x)
}

pub fn header_text(header: &Header) -> String {
    header.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

/// Header comment lines followed by a CSV table.
pub fn csv_text(header: &Header, columns: &[&str], rows: &[Vec<f64>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Invalid(format!("CSV encoding failed: {e}"));
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| num(x)))
            .map_err(csv_err)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Invalid(format!("CSV encoding failed: {e}")))?;
    let mut out = header_text(header);
    out.push_str(&String::from_utf8_lossy(&body));
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
