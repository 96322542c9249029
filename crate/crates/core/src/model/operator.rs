//! Assembly of the quasiperiodic operator on a finite box.
//!
//! The operator acts on `l^2` of a finite box `B ⊂ Z^d` by
//!
//! ```text
//! (H psi)(n) = eps * sum_{|m - n|_1 = 1, m in B} psi(m) + f(x + omega . n) psi(n),
//! ```
//!
//! i.e. `eps` times the nearest-neighbor hopping term plus the potential
//! sampled along the orbit of the phase `x` (Dirichlet restriction: hops
//! leaving the box are dropped). The diagonal may contain a single `-inf`
//! entry when the sampling function has an infinite-coupling pole.

use crate::error::Error;
use crate::mat::Mat;
use crate::model::frequency::Frequency;
use crate::model::lattice::{l1_dist, LatticeBox, Site};
use crate::model::potential::PotentialSpec;
use crate::Result;
use std::collections::BTreeMap;

/// Symmetric sparse operator on a lattice box.
///
/// Off-diagonal entries are stored once per unordered pair, keyed by
/// `(i, j)` with `i < j`; zero entries are never stored, so the sparsity
/// pattern is structural and comparisons against "exact zero" are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOperator {
    boxed: LatticeBox,
    diag: Vec<f64>,
    off: BTreeMap<(usize, usize), f64>,
    eps: f64,
    x: f64,
    omega: Vec<f64>,
}

impl SymOperator {
    /// Assemble `eps * Laplacian + diag(f(x + omega . n))` on `boxed`.
    ///
    /// At most one site may carry `f = -inf`; two poles on one box would make
    /// every deflation rule ambiguous and are rejected.
    pub fn assemble(
        spec: &PotentialSpec,
        eps: f64,
        freq: &Frequency,
        x: f64,
        boxed: &LatticeBox,
    ) -> Result<Self> {
        if boxed.dim() != freq.dim() {
            return Err(Error::InvalidInput(format!(
                "box dimension {} != frequency dimension {}",
                boxed.dim(),
                freq.dim()
            )));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidInput(format!("eps must be finite >= 0, got {eps}")));
        }
        let n = boxed.len();
        let mut diag = Vec::with_capacity(n);
        let mut poles = 0usize;
        for site in boxed.sites() {
            let v = spec.sample(x + freq.dot(site));
            if v == f64::NEG_INFINITY {
                poles += 1;
            }
            diag.push(v);
        }
        if poles > 1 {
            return Err(Error::InvalidInput(format!(
                "{poles} infinite-coupling sites on one box"
            )));
        }
        let mut off = BTreeMap::new();
        if eps > 0.0 {
            for i in 0..n {
                for j in (i + 1)..n {
                    if l1_dist(boxed.site(i), boxed.site(j)) == 1 {
                        off.insert((i, j), eps);
                    }
                }
            }
        }
        Ok(SymOperator {
            boxed: boxed.clone(),
            diag,
            off,
            eps,
            x,
            omega: freq.omega().to_vec(),
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.boxed
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn phase(&self) -> f64 {
        self.x
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Index of the `-inf` site, if present.
    pub fn pole_index(&self) -> Option<usize> {
        self.diag.iter().position(|&v| v == f64::NEG_INFINITY)
    }

    /// Matrix entry by box index; symmetric by construction.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            let key = if i < j { (i, j) } else { (j, i) };
            self.off.get(&key).copied().unwrap_or(0.0)
        }
    }

    /// Stored off-diagonal pairs `(i, j, value)` with `i < j`.
    pub fn off_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.off.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// `H v`. The operator must have no `-inf` entry unless the vector
    /// vanishes there, in which case the pole row contributes `-inf * 0 = 0`
    /// by the deflation convention.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.len());
        let mut out: Vec<f64> = self
            .diag
            .iter()
            .zip(v)
            .map(|(&d, &c)| {
                if d == f64::NEG_INFINITY && c == 0.0 {
                    0.0
                } else {
                    d * c
                }
            })
            .collect();
        for (&(i, j), &h) in &self.off {
            out[i] += h * v[j];
            out[j] += h * v[i];
        }
        out
    }

    /// Max-row-sum norm. Infinite when a pole is present.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        let mut rows = vec![0.0f64; n];
        for i in 0..n {
            rows[i] = self.diag[i].abs();
        }
        for (&(i, j), &h) in &self.off {
            rows[i] += h.abs();
            rows[j] += h.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Dense copy (poles kept as `-inf`; deflate before dense spectral work).
    pub fn to_dense(&self) -> Mat {
        let n = self.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (&(i, j), &h) in &self.off {
            m[(i, j)] = h;
            m[(j, i)] = h;
        }
        m
    }

    /// Covariance shift: the operator at phase `x + omega . n` on the box
    /// translated by `-n`, obtained by pure data translation.
    ///
    /// Translation preserves the lexicographic site order, so the sparse data
    /// is reused verbatim; only the box labels and the phase change. Up to
    /// floating-point rounding of the phase sum, this equals re-assembling at
    /// the shifted phase.
    pub fn shift_phase(&self, n: &[i64]) -> Result<SymOperator> {
        if n.len() != self.boxed.dim() {
            return Err(Error::InvalidInput("shift dimension mismatch".into()));
        }
        let minus_n: Vec<i64> = n.iter().map(|c| -c).collect();
        let dot: f64 = n
            .iter()
            .zip(&self.omega)
            .map(|(&k, &w)| k as f64 * w)
            .sum();
        Ok(SymOperator {
            boxed: self.boxed.translate(&minus_n)?,
            diag: self.diag.clone(),
            off: self.off.clone(),
            eps: self.eps,
            x: crate::circle::frac(self.x + dot),
            omega: self.omega.clone(),
        })
    }

    /// Entry lookup by site labels.
    pub fn entry_at(&self, m: &Site, k: &Site) -> Option<f64> {
        let i = self.boxed.index_of(m)?;
        let j = self.boxed.index_of(k)?;
        Some(self.entry(i, j))
    }

    /// Conjugate in place by the plane rotation that is the identity except
    /// for `[[c, s], [-s, c]]` in coordinates `(p, q)`: `H <- G^T H G`.
    ///
    /// Only rows and columns `p`, `q` change, so the sparse support can only
    /// grow into positions that already have a neighbour in one of those two
    /// rows; entries that come out exactly `0.0` are dropped rather than
    /// stored, keeping absence of a key a structural statement. Both rotated
    /// diagonal entries must be finite — rotations never touch a pole site.
    pub fn apply_givens(&mut self, p: usize, q: usize, c: f64, s: f64) {
        let n = self.len();
        assert!(p < n && q < n && p != q, "bad rotation plane ({p}, {q})");
        assert!(
            self.diag[p].is_finite() && self.diag[q].is_finite(),
            "rotation touches a pole site"
        );
        for j in 0..n {
            if j == p || j == q {
                continue;
            }
            let apj = self.entry(p, j);
            let aqj = self.entry(q, j);
            if apj == 0.0 && aqj == 0.0 {
                continue;
            }
            self.set_off(p, j, c * apj - s * aqj);
            self.set_off(q, j, s * apj + c * aqj);
        }
        let a = self.diag[p];
        let b = self.diag[q];
        let h = self.entry(p, q);
        self.diag[p] = c * c * a - 2.0 * c * s * h + s * s * b;
        self.diag[q] = s * s * a + 2.0 * c * s * h + c * c * b;
        self.set_off(p, q, c * s * (a - b) + (c * c - s * s) * h);
    }

    fn set_off(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_ne!(i, j);
        let key = if i < j { (i, j) } else { (j, i) };
        if v == 0.0 {
            self.off.remove(&key);
        } else {
            self.off.insert(key, v);
        }
    }
}
