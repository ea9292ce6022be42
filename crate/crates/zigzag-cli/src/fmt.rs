//! Round-trip-safe numeric formatting for tabular output.

/// 17 significant decimal digits: enough to reproduce any f64 bit-exactly
/// when parsed back.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
