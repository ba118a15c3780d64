//! Durations are carried as integer milliseconds inside the simulator so that
//! repeated subtraction of the shortest remaining run time stays exact.

pub type Millis = u64;

/// Converts decimal seconds to milliseconds, rounding to the nearest ms.
/// Any positive duration maps to at least 1 ms.
pub fn secs_to_ms(secs: f64) -> Millis {
    if secs.is_nan() || secs <= 0.0 {
        return 0;
    }
    ((secs * 1000.0).round() as Millis).max(1)
}

pub fn ms_to_secs(ms: Millis) -> f64 {
    ms as f64 / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(secs_to_ms(2.0), 2000);
        assert_eq!(secs_to_ms(32.5), 32_500);
        assert_eq!(secs_to_ms(0.0001), 1);
        assert_eq!(secs_to_ms(0.0), 0);
        assert_eq!(secs_to_ms(f64::NAN), 0);
        assert_eq!(ms_to_secs(1500), 1.5);
    }
}
