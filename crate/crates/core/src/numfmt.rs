/// Formats a real with 17 significant digits, which round-trips every f64.
pub fn sig17(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.0943951023931953, 1e-300, 12345.678] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(sig17(0.5), "5.0000000000000000e-1");
    }
}
