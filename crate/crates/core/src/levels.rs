//! Integer index arithmetic for significance levels.
//!
//! Order-statistic indices such as `⌈(1-α)(n+1)⌉` and `⌊α(n+1)⌋` change value
//! exactly where `α(n+1)` crosses an integer, so a level like `88/1001` that
//! arrives as the nearest double must not slip to the wrong side. Products
//! within `SNAP_REL` (relative) of an integer are treated as that integer;
//! after snapping everything is integer arithmetic, and
//! `⌈(1-α)m⌉ = m - ⌊αm⌋` holds exactly.

const SNAP_REL: f64 = 1e-9;

fn snapped(level: f64, m: u64) -> Result<i64, f64> {
    let x = level * m as f64;
    let r = x.round();
    if (x - r).abs() <= SNAP_REL * r.abs().max(1.0) {
        Ok(r as i64)
    } else {
        Err(x)
    }
}

/// `⌊level · m⌋`.
pub fn scaled_floor(level: f64, m: u64) -> i64 {
    snapped(level, m).unwrap_or_else(|x| x.floor() as i64)
}

/// `⌈level · m⌉`.
pub fn scaled_ceil(level: f64, m: u64) -> i64 {
    snapped(level, m).unwrap_or_else(|x| x.ceil() as i64)
}

/// `⌈(1 - level) · m⌉`, computed as `m - ⌊level · m⌋`.
pub fn complement_ceil(level: f64, m: u64) -> i64 {
    m as i64 - scaled_floor(level, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rational_levels_land_on_integers() {
        let alpha = 88.0 / 1001.0;
        assert_eq!(scaled_floor(alpha, 1001), 88);
        assert_eq!(scaled_ceil(alpha, 1001), 88);
        assert_eq!(complement_ceil(alpha, 1001), 913);
        for num in 1..1001u64 {
            let a = num as f64 / 1001.0;
            assert_eq!(scaled_floor(a, 1001), num as i64);
            assert_eq!(complement_ceil(a, 1001), 1001 - num as i64);
        }
    }

    #[test]
    fn decimal_levels() {
        assert_eq!(complement_ceil(0.1, 10), 9);
        assert_eq!(complement_ceil(0.05, 10), 10);
        assert_eq!(scaled_floor(0.1, 1001), 100);
        assert_eq!(scaled_floor(0.005, 101), 0);
        assert_eq!(scaled_floor(0.01, 101), 1);
        // 0.1 * 100 is not exactly 10 in binary
        assert_eq!(scaled_floor(0.1, 100), 10);
        assert_eq!(scaled_ceil(0.7, 10), 7);
    }
}
