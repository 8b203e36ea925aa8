//! CSV output helpers: fixed 12-significant-digit formatting and a writer
//! that targets a file or stdout.

use crate::error::CliError;
use std::io::Write;
use std::path::Path;

/// Format with 12 significant digits, dropping trailing zeros; plain
/// decimal notation for moderate magnitudes, exponent notation otherwise.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp_str) = sci.split_once('e').expect("exponent formatting");
    let exp: i32 = exp_str.parse().expect("numeric exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_trailing_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_trailing_zeros(mantissa))
    }
}

fn trim_trailing_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Write a completed document to `--out` or stdout. Output is UTF-8 with
/// LF line endings throughout.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}
