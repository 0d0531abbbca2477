//! Fixed-precision number formatting for reports and CSV output.

/// Significant digits used in every report and CSV cell.
pub const REPORT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, `%g` style: plain decimal for
/// moderate magnitudes, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    fmt_sig_digits(x, REPORT_DIGITS)
}

pub fn fmt_sig_digits(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Scientific rendering settles the exponent after rounding.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Rounds `x` to 12 significant digits; stable for serialization.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig(x).parse().unwrap_or(x)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
