//! Number formatting for machine-readable output.
//!
//! Files carry 17 significant digits, which round-trips every `f64`.
//! Human-readable text uses 4.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `value` in scientific notation with 17 significant digits.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// `value` with 4 significant digits.
pub fn format_short(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (3 - magnitude).max(0) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.3e}")
    }
}

/// Complex number as `re+imj` (or `re-imj`), both parts with 17 significant digits.
pub fn format_complex(value: Complex64) -> String {
    let sign = if value.im.is_sign_negative() {
        '-'
    } else {
        '+'
    };
    format!(
        "{}{}{}j",
        format_f64(value.re),
        sign,
        format_f64(value.im.abs())
    )
}

/// Inverse of [`format_complex`].
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let body = text.trim().strip_suffix('j')?;
    // split at the sign that starts the imaginary part: skip the leading sign
    // and any sign that follows an exponent marker
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| {
        (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
    })?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}
