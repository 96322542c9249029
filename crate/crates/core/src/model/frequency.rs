//! Frequency vectors and the weak Diophantine condition.
//!
//! The scheme requires the orbit `x + omega . n` to avoid exact resonances
//! and, quantitatively, to satisfy
//!
//! ```text
//! dist(n . omega, Z) >= exp(-rho |n|^(1 / (1 + mu)))     for all n != 0,
//! ```
//!
//! a condition much weaker than the classical Diophantine one: the admissible
//! frequency set has full measure for every `rho, mu > 0`. The check below is
//! a finite-window certificate for a given `N`.

use crate::circle::{dist_to_int, frac};
use crate::error::Error;
use crate::Result;
use serde::Serialize;

/// A frequency vector `omega in R^d` together with the Diophantine
/// parameters `(rho, mu)` the run is declared against.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequency {
    omega: Vec<f64>,
    rho: f64,
    mu: f64,
}

/// Result of a finite Diophantine scan up to `|n|_1 <= n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct DiophantineReport {
    /// True when the lower bound held for every scanned vector.
    pub ok: bool,
    /// Vector with the smallest logarithmic margin.
    pub worst_n: Vec<i64>,
    /// `ln dist(n . omega, Z) + rho |n|^(1/(1+mu))` at the worst vector;
    /// non-negative iff the bound holds there.
    pub worst_log_margin: f64,
    /// Number of lattice vectors scanned (up to sign symmetry).
    pub checked: usize,
}

impl Frequency {
    pub fn new(omega: Vec<f64>, rho: f64, mu: f64) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidInput("empty frequency vector".into()));
        }
        if !omega.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidInput("non-finite frequency component".into()));
        }
        if !(rho > 0.0) || !(mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Diophantine parameters must be positive: rho = {rho}, mu = {mu}"
            )));
        }
        Ok(Frequency { omega, rho, mu })
    }

    /// Golden-mean frequency in one dimension with the given `(rho, mu)`.
    pub fn golden(rho: f64, mu: f64) -> Self {
        Frequency::new(vec![crate::GOLDEN_MEAN], rho, mu).expect("valid parameters")
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `n . omega`.
    pub fn dot(&self, n: &[i64]) -> f64 {
        debug_assert_eq!(n.len(), self.omega.len());
        n.iter()
            .zip(&self.omega)
            .map(|(&k, &w)| k as f64 * w)
            .sum()
    }

    /// Orbit phase `{x + omega . n}`.
    pub fn phase(&self, x: f64, n: &[i64]) -> f64 {
        frac(x + self.dot(n))
    }

    /// `dist(n . omega, Z)`.
    pub fn dist(&self, n: &[i64]) -> f64 {
        dist_to_int(self.dot(n))
    }

    /// Scan all `0 < |n|_1 <= n_max` (modulo sign symmetry) and certify the
    /// weak Diophantine lower bound. An exact integer value of `n . omega`
    /// is a hard [`Error::ResonantFrequency`].
    pub fn check_diophantine(&self, n_max: i64) -> Result<DiophantineReport> {
        if n_max < 1 {
            return Err(Error::InvalidInput(format!("n_max must be >= 1, got {n_max}")));
        }
        let mut worst_n = Vec::new();
        let mut worst = f64::INFINITY;
        let mut checked = 0usize;
        let mut n = vec![0i64; self.dim()];
        self.scan_rec(0, n_max, &mut n, &mut checked, &mut worst, &mut worst_n)?;
        Ok(DiophantineReport {
            ok: worst >= 0.0,
            worst_n,
            worst_log_margin: worst,
            checked,
        })
    }

    fn scan_rec(
        &self,
        coord: usize,
        budget: i64,
        n: &mut Vec<i64>,
        checked: &mut usize,
        worst: &mut f64,
        worst_n: &mut Vec<i64>,
    ) -> Result<()> {
        if coord == self.dim() {
            // Skip zero and use symmetry dist(n.w) = dist(-n.w): only visit
            // vectors whose first nonzero component is positive.
            match n.iter().find(|&&c| c != 0) {
                None => return Ok(()),
                Some(&first) if first < 0 => return Ok(()),
                _ => {}
            }
            let d = self.dist(n);
            if d == 0.0 {
                return Err(Error::ResonantFrequency { n: n.clone() });
            }
            let l1: i64 = n.iter().map(|c| c.abs()).sum();
            let margin = d.ln() + self.rho * (l1 as f64).powf(1.0 / (1.0 + self.mu));
            *checked += 1;
            if margin < *worst {
                *worst = margin;
                *worst_n = n.clone();
            }
            return Ok(());
        }
        for c in -budget..=budget {
            n[coord] = c;
            self.scan_rec(coord + 1, budget - c.abs(), n, checked, worst, worst_n)?;
        }
        n[coord] = 0;
        Ok(())
    }
}
