//! The 2x2 building block of the diagonalization scheme: an exact Jacobi
//! rotation for a symmetric block `[[a, h], [h, b]]` whose off-diagonal
//! entry is small relative to the diagonal separation.

use crate::error::Error;
use crate::Result;

/// A plane rotation `[[c, s], [-s, c]]` with the angle folded into `(c, s)`,
/// plus the first-order coupling ratio it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRotation {
    pub c: f64,
    pub s: f64,
    /// Signed first-order angle `tau = h / (b - a)`; the rotation agrees with
    /// `[[1, tau], [-tau, 1]]` to `O(tau^2)`.
    pub tau: f64,
}

impl PlaneRotation {
    pub const IDENTITY: PlaneRotation = PlaneRotation {
        c: 1.0,
        s: 0.0,
        tau: 0.0,
    };

    pub fn is_identity(&self) -> bool {
        self.s == 0.0 && self.c == 1.0
    }

    /// Largest-entry distance to the identity, `max(|c - 1|, |s|)`.
    pub fn dist_to_identity(&self) -> f64 {
        (self.c - 1.0).abs().max(self.s.abs())
    }

    /// Apply to the block it was built for and return the new diagonal pair;
    /// used by tests to pin the eigenvalue ordering convention.
    pub fn rotated_diagonal(&self, a: f64, b: f64, h: f64) -> (f64, f64) {
        let (c, s) = (self.c, self.s);
        (
            c * c * a - 2.0 * c * s * h + s * s * b,
            s * s * a + 2.0 * c * s * h + c * c * b,
        )
    }
}

/// Exact diagonalizing rotation for `[[a, h], [h, b]]`.
///
/// The angle is `theta = atan(2h / (b - a)) / 2`, which keeps `|theta| <
/// pi/4` so each rotated diagonal entry continues the one it started from.
/// Requires the relative dominance `|h| <= (1 - margin) |b - a|`; a
/// violation means the perturbative ordering is about to break and is
/// reported rather than absorbed. A block touching a `-inf` diagonal entry
/// is never rotated.
pub fn jacobi_rotation_2x2(a: f64, b: f64, h: f64, margin: f64) -> Result<PlaneRotation> {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return Ok(PlaneRotation::IDENTITY);
    }
    if h == 0.0 {
        return Ok(PlaneRotation::IDENTITY);
    }
    if !(h.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite rotation block a={a}, b={b}, h={h}"
        )));
    }
    if h.abs() > (1.0 - margin) * (b - a).abs() {
        return Err(Error::DominanceViolation { a, b, h });
    }
    let tau = h / (b - a);
    let theta = 0.5 * (2.0 * tau).atan();
    let (s, c) = theta.sin_cos();
    Ok(PlaneRotation { c, s, tau })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cases() {
        assert!(jacobi_rotation_2x2(1.0, 2.0, 0.0, 1e-3).unwrap().is_identity());
        assert!(jacobi_rotation_2x2(f64::NEG_INFINITY, 2.0, 0.5, 1e-3)
            .unwrap()
            .is_identity());
        assert!(jacobi_rotation_2x2(1.0, f64::NEG_INFINITY, 0.5, 1e-3)
            .unwrap()
            .is_identity());
    }

    #[test]
    fn dominance_violation_reported_with_block() {
        let err = jacobi_rotation_2x2(0.0, 1.0, 1.0, 1e-3).unwrap_err();
        match err {
            Error::DominanceViolation { a, b, h } => {
                assert_eq!((a, b, h), (0.0, 1.0, 1.0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn exact_block_diagonalization_follows_starting_entry() {
        // a=0, b=2, h=0.5: eigenvalues 1 -+ sqrt(1.25); the entry that started
        // at a must continue to the lower one.
        let rot = jacobi_rotation_2x2(0.0, 2.0, 0.5, 1e-3).unwrap();
        let (ap, bp) = rot.rotated_diagonal(0.0, 2.0, 0.5);
        assert!((ap - (1.0 - 1.25f64.sqrt())).abs() < 1e-14);
        assert!((bp - (1.0 + 1.25f64.sqrt())).abs() < 1e-14);
        // Off-diagonal killed exactly up to rounding.
        let (c, s) = (rot.c, rot.s);
        let hp = c * s * (0.0 - 2.0) + (c * c - s * s) * 0.5;
        assert!(hp.abs() < 1e-15);
    }

    #[test]
    fn first_order_consistency() {
        // || U - [[1, tau], [-tau, 1]] || <= 10 tau^2, with the signed tau.
        for &(a, b, h) in &[
            (0.0, 1.0, 0.01),
            (0.0, 1.0, -0.01),
            (3.0, 1.0, 0.05),
            (-1.0, 1.0, 0.2),
            (1.0, -1.0, 0.2),
        ] {
            let rot = jacobi_rotation_2x2(a, b, h, 1e-3).unwrap();
            let tau = h / (b - a);
            assert_eq!(rot.tau, tau);
            let err = (rot.c - 1.0).abs().max((rot.s - tau).abs());
            assert!(
                err <= 10.0 * tau * tau,
                "a={a} b={b} h={h}: err {err} vs {}",
                10.0 * tau * tau
            );
        }
    }

    #[test]
    fn orthogonality_is_exact_to_rounding() {
        let rot = jacobi_rotation_2x2(0.3, 1.1, 0.2, 1e-3).unwrap();
        let det = rot.c * rot.c + rot.s * rot.s;
        assert!((det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sign_convention_matches_perturbation_theory() {
        // For a < b and h > 0 the lower eigenvalue pushes down: a' < a < b < b'.
        let rot = jacobi_rotation_2x2(0.0, 1.0, 0.05, 1e-3).unwrap();
        let (ap, bp) = rot.rotated_diagonal(0.0, 1.0, 0.05);
        assert!(ap < 0.0 && bp > 1.0);
        // Second-order accuracy of a' = a - h^2/(b-a) + O(h^4).
        assert!((ap - (0.0 - 0.05f64.powi(2))).abs() < 1e-5);
    }
}
