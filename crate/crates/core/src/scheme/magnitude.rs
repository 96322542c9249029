//! The magnitude ladder that prices off-diagonal entries by their lattice
//! order, and the absorption inequality that lets a small denominator of a
//! given level be paid for by the combinatorial slack of the ladder.
//!
//! All comparisons are done in natural-log space: the raw values span
//! hundreds of orders of magnitude and underflow long before the inequality
//! itself becomes tight.

use crate::error::Error;
use crate::model::frequency::Frequency;
use crate::model::lattice::{l1_norm, Site};
use crate::regions;
use crate::Result;

/// `ln magn(k)` for `magn(k) = M^{k-1/2} beta^{12 gamma k / ln(k+1)}`.
pub fn magn_ln(k: u32, m: f64, beta: f64, gamma: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("magnitude ladder starts at k = 1".into()));
    }
    check_params(m, beta)?;
    let kf = k as f64;
    Ok((kf - 0.5) * m.ln() + 12.0 * gamma * kf / (kf + 1.0).ln() * beta.ln())
}

/// `magn(k)` directly; underflows to zero for parameter ranges where the
/// exponent drops below what f64 can hold — use `magn_ln` for comparisons.
pub fn magn(k: u32, m: f64, beta: f64, gamma: f64) -> Result<f64> {
    Ok(magn_ln(k, m, beta, gamma)?.exp())
}

fn check_params(m: f64, beta: f64) -> Result<()> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::InvalidInput(format!(
            "magnitude base must be finite and > 1, got {m}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    Ok(())
}

/// The sub-multiplicativity exponent
/// `m(k1,k2) = k1/ln(k1+1) + k2/ln(k2+1) - (k1+k2)/ln(k1+k2+1)`,
/// non-negative for all k1, k2 >= 1, so that
/// `magn(k1) magn(k2) = M^{-1/2} beta^{12 gamma m(k1,k2)} magn(k1+k2)`.
pub fn submultiplicative_exponent(k1: u32, k2: u32) -> f64 {
    let f = |k: u32| k as f64 / (k as f64 + 1.0).ln();
    f(k1) + f(k2) - f(k1 + k2)
}

/// Both sides of the absorption inequality in log space.
#[derive(Debug, Clone, Copy)]
pub struct AbsorptionCheck {
    pub lhs_ln: f64,
    pub rhs_ln: f64,
    pub holds: bool,
}

impl AbsorptionCheck {
    /// Positive when the inequality holds strictly.
    pub fn margin_ln(&self) -> f64 {
        self.rhs_ln - self.lhs_ln
    }
}

/// Check `magn(k1) magn(k2) / |n.omega|^{2 alpha}
///        <= M^{-1/2} beta^{gamma k1 / ln^2(k1+1)} magn(k1+k2)`
/// under the admissibility constraint `|n|_1 = k2 >= k1 >= level(n)`.
pub fn absorption_check(
    k1: u32,
    k2: u32,
    n: &Site,
    freq: &Frequency,
    m: f64,
    beta: f64,
    gamma: f64,
    alpha: f64,
) -> Result<AbsorptionCheck> {
    let level = regions::level(n, freq, beta)?;
    if l1_norm(n) != k2 as i64 || k2 < k1 || k1 < level {
        return Err(Error::InvalidAbsorptionQuery { k1, k2, level });
    }
    let denom_ln = 2.0 * alpha * freq.dist(n).ln();
    let lhs_ln = magn_ln(k1, m, beta, gamma)? + magn_ln(k2, m, beta, gamma)? - denom_ln;
    let k1f = k1 as f64;
    let rhs_ln = -0.5 * m.ln()
        + gamma * k1f / (k1f + 1.0).ln().powi(2) * beta.ln()
        + magn_ln(k1 + k2, m, beta, gamma)?;
    Ok(AbsorptionCheck {
        lhs_ln,
        rhs_ln,
        holds: lhs_ln <= rhs_ln,
    })
}

/// The worst-level comparison: with the epsilon weights attached, the
/// absorbed bound for the smaller first index dominates. Returns
/// `ln` of both bounds `eps^{q+k2} M^{-1/2} beta^{gamma q/ln^2(q+1)} magn(q+k2)`
/// for `q = k1` and `q = k1_smaller`, which must satisfy `first <= second`.
pub fn worst_level_bounds_ln(
    k1: u32,
    k1_smaller: u32,
    k2: u32,
    eps: f64,
    m: f64,
    beta: f64,
    gamma: f64,
) -> Result<(f64, f64)> {
    if k1_smaller > k1 || k1_smaller == 0 {
        return Err(Error::InvalidInput(format!(
            "worst-level comparison needs 1 <= k1' <= k1, got k1'={k1_smaller}, k1={k1}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon weights need eps in (0,1), got {eps}"
        )));
    }
    let bound = |q: u32| -> Result<f64> {
        let qf = q as f64;
        Ok((qf + k2 as f64) * eps.ln() - 0.5 * m.ln()
            + gamma * qf / (qf + 1.0).ln().powi(2) * beta.ln()
            + magn_ln(q + k2, m, beta, gamma)?)
    };
    Ok((bound(k1)?, bound(k1_smaller)?))
}
