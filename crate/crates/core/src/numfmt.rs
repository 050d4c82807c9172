//! Decimal formatting for CSV output.
//!
//! 17 significant digits are enough to reproduce any f64 exactly, so CSV
//! files written with `g17` parse back bit-for-bit.

pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(field: &str) -> crate::Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| crate::Error::Parse(format!("expected a number, got {field:?}")))
}

pub fn parse_i8(field: &str) -> crate::Result<i8> {
    field
        .trim()
        .parse::<i8>()
        .map_err(|_| crate::Error::Parse(format!("expected an outcome label, got {field:?}")))
}
