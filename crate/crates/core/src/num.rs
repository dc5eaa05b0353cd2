//! Significant-figure rounding and rendering.

/// Rounds `value` to `digits` significant figures.
pub fn round_sig(value: f64, digits: usize) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let digits = digits.max(1);
    format!("{:.*e}", digits - 1, value).parse().unwrap_or(value)
}

/// Renders `value` with at most `digits` significant figures, trailing zeros removed.
///
/// `format_sig(0.03910, 4)` is `"0.0391"`, `format_sig(122.4675, 3)` is `"122"`.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let rounded: f64 = sci.parse().unwrap_or(value);
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    let mut out = format!("{:.*}", decimals, rounded);
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if out == "-0" {
        out = "0".to_string();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_results_text_values() {
        assert_eq!(format_sig(0.0391, 4), "0.0391");
        assert_eq!(format_sig(0.241, 4), "0.241");
        assert_eq!(format_sig(0.000711, 4), "0.000711");
        assert_eq!(format_sig(0.2 * 0.00156, 4), "0.000312");
        assert_eq!(format_sig(2.0 * 0.0775, 4), "0.155");
    }

    #[test]
    fn rounds_three_figures() {
        assert_eq!(format_sig(122.4675, 3), "122");
        assert_eq!(format_sig(131.48, 3), "131");
        assert_eq!(format_sig(1.39963, 3), "1.4");
        assert_eq!(format_sig(1234.5, 3), "1230");
        assert_eq!(format_sig(9.996, 3), "10");
        assert_eq!(round_sig(131.48, 3), 131.0);
        assert_eq!(round_sig(0.0, 3), 0.0);
    }
}
