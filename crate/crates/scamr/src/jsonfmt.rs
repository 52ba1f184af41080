//! Deterministic JSON number formatting (17 significant digits) for the
//! surrogate and bundle writers. serde_json's shortest-roundtrip formatting
//! would be lossless too, but the on-disk schema pins 17 significant digits.

/// Format a finite double with 17 significant digits in scientific notation.
pub fn f64_to_json(v: f64) -> String {
    assert!(v.is_finite(), "JSON output requires finite values, got {v}");
    if v == 0.0 {
        // Collapse -0.0 so byte-identity does not depend on sign of zero.
        return "0.0".to_string();
    }
    format!("{:.16e}", v)
}

/// Escape a string for inclusion in a JSON document.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_through_parse() {
        for &v in &[1.0, -0.125, 3.0f64.sqrt(), 1e-300, 123456.789, -0.0] {
            let s = f64_to_json(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, if v == 0.0 { 0.0 } else { v }, "{s}");
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = f64_to_json(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
    }
}
