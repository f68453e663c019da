/// Formats with 12 significant digits; plain notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_number;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(12.3456789012345), "12.3456789012");
        assert_eq!(format_number(0.5), "0.500000000000");
        assert_eq!(format_number(1e-13), "1.00000000000e-13");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-2.0), "-2.00000000000");
    }
}
