//! Arithmetic on the unit circle `R / Z`.

/// Fractional part in `[0, 1)`, with ties at integers resolved to `0`.
///
/// Guarded against the rounding case where `x - floor(x)` evaluates to `1.0`
/// for tiny negative `x`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance from `t` to the nearest integer.
pub fn dist_to_int(t: f64) -> f64 {
    let f = frac(t);
    f.min(1.0 - f)
}

/// Circle distance between two phases.
pub fn circle_dist(x: f64, y: f64) -> f64 {
    dist_to_int(x - y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_basic() {
        assert_eq!(frac(1.25), 0.25);
        assert_eq!(frac(-0.25), 0.75);
        assert_eq!(frac(3.0), 0.0);
        assert_eq!(frac(0.0), 0.0);
    }

    #[test]
    fn frac_never_reaches_one() {
        // 1 - 1e-17 rounds to 1.0 in f64; the guard must kick in.
        let f = frac(-1e-17);
        assert!((0.0..1.0).contains(&f));
    }

    #[test]
    fn dist_symmetric() {
        assert!((dist_to_int(0.4) - 0.4).abs() < 1e-15);
        assert!((dist_to_int(0.6) - 0.4).abs() < 1e-15);
        assert!((dist_to_int(-0.1) - 0.1).abs() < 1e-15);
        assert_eq!(dist_to_int(2.0), 0.0);
    }
}
