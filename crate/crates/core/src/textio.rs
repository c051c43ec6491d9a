//! Shared decimal formatting for every text and JSON artifact.

/// `# key=value` header lines, in file order.
pub type HeaderLines = Vec<(String, String)>;

/// Formats with 12 significant digits in scientific notation.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Rounds to the value `sig12` would print.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig12(x).parse().unwrap_or(x)
}

/// Splits a `# key=value` comment line.
pub fn parse_header_line(line: &str) -> Option<(String, String)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    Some((k.trim().to_string(), v.trim().to_string()))
}
