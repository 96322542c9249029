//! Eigenvalue tools for symmetric tridiagonal matrices: the one-dimensional
//! interval restriction is tridiagonal, and spectrum-level studies (counting
//! functions, pooled spectra over many phases, coupling sweeps) need orders of
//! magnitude more eigenvalue solves than the dense route can afford.
//!
//! Two independent algorithms are kept: Sturm pivot counting (exact
//! eigenvalue counts below a threshold, plus bisection) and an implicit-shift
//! QL iteration (all eigenvalues). Tests check them against each other and
//! against the dense solver.

use crate::error::Error;
use crate::model::operator::SymOperator;
use crate::Result;

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
/// Diagonal entries may be `-inf` (an infinite-coupling site); off entries
/// must be finite.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().any(|d| d.is_nan() || *d == f64::INFINITY) {
            return Err(Error::InvalidInput(
                "diagonal entries must be finite or -inf".into(),
            ));
        }
        if off.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("off-diagonal must be finite".into()));
        }
        Ok(Self { diag, off })
    }

    /// Extract the tridiagonal form of a one-dimensional interval operator.
    pub fn from_operator(op: &SymOperator) -> Result<Self> {
        let boxed = op.lattice();
        if boxed.dim() != 1 {
            return Err(Error::InvalidInput(format!(
                "tridiagonal extraction needs dimension 1, got {}",
                boxed.dim()
            )));
        }
        let n = boxed.len();
        for i in 0..n.saturating_sub(1) {
            if boxed.site(i + 1)[0] != boxed.site(i)[0] + 1 {
                return Err(Error::InvalidInput(
                    "tridiagonal extraction needs a contiguous interval".into(),
                ));
            }
        }
        let diag = op.diag().to_vec();
        let off = (0..n - 1).map(|i| op.entry(i, i + 1)).collect();
        Self::new(diag, off)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Number of eigenvalues strictly below `lambda`, by Sturm pivot
    /// counting on the shifted LDL^T factorization. A `-inf` diagonal entry
    /// yields a `-inf` pivot, which correctly counts as one eigenvalue below
    /// any finite threshold and decouples its neighbors.
    pub fn count_below(&self, lambda: f64) -> usize {
        debug_assert!(lambda.is_finite());
        let mut count = 0usize;
        let mut d = self.diag[0] - lambda;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let b = self.off[i - 1];
            // b*b/d underflows to -0.0 when d is -inf, decoupling the chain.
            let mut next = self.diag[i] - lambda - b * b / d;
            if next == 0.0 {
                next = -1e-300;
            }
            if next < 0.0 {
                count += 1;
            }
            d = next;
        }
        count
    }

    /// Gershgorin enclosure of the finite part of the spectrum.
    fn finite_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            if self.diag[i] == f64::NEG_INFINITY {
                continue;
            }
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        if lo > hi {
            // Matrix consisted of poles only.
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// All eigenvalues by bisection on the Sturm count, each to absolute
    /// accuracy `tol`. Robust reference route; slower than `eigenvalues`.
    pub fn eigenvalues_bisect(&self, tol: f64) -> Vec<f64> {
        let n = self.len();
        let poles = self.diag.iter().filter(|d| **d == f64::NEG_INFINITY).count();
        let (mut lo0, mut hi0) = self.finite_bounds();
        let pad = 1e-10 * (1.0 + lo0.abs().max(hi0.abs()));
        lo0 -= pad;
        hi0 += pad;
        let mut out = vec![f64::NEG_INFINITY; poles];
        for k in poles..n {
            let (mut lo, mut hi) = (lo0, hi0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// All eigenvalues, ascending, via implicit-shift QL iteration on each
    /// pole-free block. Pole sites decouple their neighbors and contribute
    /// one `-inf` eigenvalue apiece.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        let mut start = 0usize;
        for i in 0..=n {
            let at_pole = i < n && self.diag[i] == f64::NEG_INFINITY;
            if i == n || at_pole {
                if i > start {
                    let mut d = self.diag[start..i].to_vec();
                    let e = self.off[start..i - 1].to_vec();
                    ql_implicit(&mut d, e)?;
                    out.extend_from_slice(&d);
                }
                if at_pole {
                    out.push(f64::NEG_INFINITY);
                }
                start = i + 1;
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }

    /// Eigenvalues of the matrix with row and column `idx` removed — the
    /// infinite-coupling limit of a diagonal perturbation at that site.
    pub fn eigenvalues_deflated(&self, idx: usize) -> Result<Vec<f64>> {
        if idx >= self.len() {
            return Err(Error::InvalidInput(format!(
                "deflation index {idx} out of range for dimension {}",
                self.len()
            )));
        }
        let mut out = Vec::with_capacity(self.len() - 1);
        if idx > 0 {
            let sub = Self::new(self.diag[..idx].to_vec(), self.off[..idx - 1].to_vec())?;
            out.extend(sub.eigenvalues()?);
        }
        if idx + 1 < self.len() {
            let sub = Self::new(
                self.diag[idx + 1..].to_vec(),
                self.off[idx + 1..].to_vec(),
            )?;
            out.extend(sub.eigenvalues()?);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }

    /// Copy with the diagonal entry at `idx` replaced by `value`.
    pub fn with_diag(&self, idx: usize, value: f64) -> Result<Self> {
        if idx >= self.len() {
            return Err(Error::InvalidInput(format!(
                "diagonal index {idx} out of range for dimension {}",
                self.len()
            )));
        }
        let mut diag = self.diag.clone();
        diag[idx] = value;
        Self::new(diag, self.off.clone())
    }
}

const QL_SWEEP_CAP: usize = 50;

/// EISPACK-style tql1: eigenvalues only, implicit shifts, in place on `d`.
fn ql_implicit(d: &mut [f64], mut e: Vec<f64>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_SWEEP_CAP {
                return Err(Error::NoConvergence {
                    what: "tridiagonal ql iteration".into(),
                    achieved: e[l].abs(),
                    target: f64::EPSILON * (d[l].abs() + d[l + 1].abs()),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::frequency::Frequency;
    use crate::model::lattice::LatticeBox;
    use crate::model::potential::PotentialSpec;
    use crate::oracle::eig::{dense_eig, multiset_distance};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_tridiag(rng: &mut ChaCha8Rng, n: usize) -> SymTridiag {
        let diag = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let off = (0..n - 1).map(|_| rng.gen_range(-0.5..0.5)).collect();
        SymTridiag::new(diag, off).unwrap()
    }

    #[test]
    fn count_matches_eigenvalues_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t = random_tridiag(&mut rng, 30);
            let eigs = t.eigenvalues().unwrap();
            for probe in [-3.0, -1.0, -0.1, 0.0, 0.4, 1.7, 3.5] {
                let expect = eigs.iter().filter(|e| **e < probe).count();
                assert_eq!(t.count_below(probe), expect, "probe {probe}");
            }
        }
    }

    #[test]
    fn ql_and_bisection_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let t = random_tridiag(&mut rng, 40);
            let a = t.eigenvalues().unwrap();
            let b = t.eigenvalues_bisect(1e-12);
            assert!(multiset_distance(&a, &b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn tridiagonal_route_matches_dense_solver() {
        let spec = PotentialSpec::sawtooth();
        let freq = Frequency::golden(2.0, 1.0);
        let boxed = LatticeBox::interval(-20, 20).unwrap();
        let op = SymOperator::assemble(&spec, 1e-2, &freq, 0.3, &boxed).unwrap();
        let t = SymTridiag::from_operator(&op).unwrap();
        let fast = t.eigenvalues().unwrap();
        let dense = dense_eig(&op, 1e-11).unwrap();
        assert!(multiset_distance(&fast, &dense.values).unwrap() < 1e-12);
    }

    #[test]
    fn pole_splits_chain_and_counts_below_everything() {
        let spec = PotentialSpec::maryland();
        let freq = Frequency::golden(2.0, 1.0);
        let boxed = LatticeBox::interval(-5, 5).unwrap();
        // Phase 0 puts the pole exactly at site 0.
        let op = SymOperator::assemble(&spec, 0.05, &freq, 0.0, &boxed).unwrap();
        let t = SymTridiag::from_operator(&op).unwrap();
        let eigs = t.eigenvalues().unwrap();
        assert_eq!(eigs[0], f64::NEG_INFINITY);
        assert_eq!(eigs.len(), 11);
        // The pole counts below any finite energy.
        let far_left = -1e6;
        assert_eq!(t.count_below(far_left), 1);
        // The finite part must match the dense deflated decomposition.
        let dense = dense_eig(&op, 1e-11).unwrap();
        assert!(multiset_distance(&eigs, &dense.values).unwrap() < 1e-10);
    }

    #[test]
    fn deflation_matches_dropping_the_site() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = random_tridiag(&mut rng, 21);
        let idx = 10;
        let removed = t.eigenvalues_deflated(idx).unwrap();
        // Interlacing with the full spectrum (Cauchy): removing one row and
        // column nests each remaining eigenvalue between consecutive
        // originals.
        let full = t.eigenvalues().unwrap();
        for (k, lam) in removed.iter().enumerate() {
            assert!(full[k] <= *lam + 1e-12 && *lam <= full[k + 1] + 1e-12);
        }
        // And it is the limit of a huge diagonal value at the site (up to
        // one runaway eigenvalue near that huge value).
        let big = t.with_diag(idx, 1e9).unwrap();
        let mut limit = big.eigenvalues().unwrap();
        let runaway = limit.pop().unwrap();
        assert!(runaway > 1e8);
        assert!(multiset_distance(&limit, &removed).unwrap() < 1e-6);
    }

    #[test]
    fn interval_extraction_requires_dimension_one() {
        let spec = PotentialSpec::sawtooth();
        let freq = Frequency::new(vec![0.61, 0.43], 2.0, 1.0).unwrap();
        let boxed = LatticeBox::rect(&[(-1, 1), (-1, 1)]).unwrap();
        let op = SymOperator::assemble(&spec, 0.01, &freq, 0.0, &boxed).unwrap();
        assert!(SymTridiag::from_operator(&op).is_err());
    }
}
