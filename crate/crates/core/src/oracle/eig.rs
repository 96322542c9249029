//! Dense symmetric eigensolver: classical cyclic Jacobi sweeps with threshold
//! pivoting. This is the ground-truth route — it shares no code path with the
//! iterative one-rotation-per-scale construction it is used to check.

use crate::error::Error;
use crate::mat::Mat;
use crate::model::operator::SymOperator;
use crate::Result;

/// Hard cap on full Jacobi sweeps before declaring failure.
const SWEEP_CAP: usize = 50;

/// Sorted eigenvalues with matching orthonormal eigenvector columns.
///
/// A deflated infinite-coupling site appears as a leading `-inf` eigenvalue
/// whose eigenvector is the corresponding standard basis vector.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigDecomposition {
    /// Column `j` as a vector.
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// Largest `|A v - lambda v|` component over all finite pairs.
    pub fn residual(&self, a: &Mat) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            if !self.values[j].is_finite() {
                continue;
            }
            let v = self.vectors.column(j);
            for i in 0..n {
                let mut r = -self.values[j] * v[i];
                for k in 0..n {
                    r += a[(i, k)] * v[k];
                }
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of a finite symmetric matrix.
///
/// Post-condition enforced, not assumed: the reconstruction residual
/// `max |A v - lambda v|` must come out below `tol * max(1, |A|_inf)` or the
/// call fails with `NoConvergence`.
pub fn dense_eig_mat(a: &Mat, tol: f64) -> Result<EigDecomposition> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(Error::InvalidInput(
                    "eigensolver input must be finite (deflate poles first)".into(),
                ));
            }
            if (a[(i, j)] - a[(j, i)]).abs() > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let (mut values, mut vectors) = jacobi_cyclic(a)?;
    let scale = norm_inf(a).max(1.0);
    sort_pairs(&mut values, &mut vectors);
    fix_signs(&mut vectors);
    let dec = EigDecomposition { values, vectors };
    let res = dec.residual(a);
    if res > tol * scale {
        return Err(Error::NoConvergence {
            what: "jacobi eigensolver residual".into(),
            achieved: res,
            target: tol * scale,
        });
    }
    Ok(dec)
}

/// Eigendecomposition of an assembled operator; a single `-inf` site is
/// deflated (row and column removed) and reported as a leading `-inf`
/// eigenvalue with the standard basis eigenvector at that site.
pub fn dense_eig(op: &SymOperator, tol: f64) -> Result<EigDecomposition> {
    match op.pole_index() {
        None => dense_eig_mat(&op.to_dense(), tol),
        Some(pole) => {
            let n = op.len();
            let keep: Vec<usize> = (0..n).filter(|&i| i != pole).collect();
            let mut reduced = Mat::zeros(n - 1, n - 1);
            for (ri, &i) in keep.iter().enumerate() {
                for (rj, &j) in keep.iter().enumerate() {
                    reduced[(ri, rj)] = op.entry(i, j);
                }
            }
            let inner = dense_eig_mat(&reduced, tol)?;
            let mut values = Vec::with_capacity(n);
            values.push(f64::NEG_INFINITY);
            values.extend_from_slice(&inner.values);
            let mut vectors = Mat::zeros(n, n);
            vectors[(pole, 0)] = 1.0;
            for col in 0..n - 1 {
                for (ri, &i) in keep.iter().enumerate() {
                    vectors[(i, col + 1)] = inner.vectors[(ri, col)];
                }
            }
            Ok(EigDecomposition { values, vectors })
        }
    }
}

fn norm_inf(a: &Mat) -> f64 {
    let n = a.rows();
    (0..n)
        .map(|i| (0..a.cols()).map(|j| a[(i, j)].abs()).sum())
        .fold(0.0, f64::max)
}

/// Cyclic Jacobi with threshold pivoting: early sweeps skip rotations below a
/// fraction of the total off-diagonal mass, later sweeps rotate everything and
/// zero entries that are negligible against both diagonal neighbors.
fn jacobi_cyclic(input: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = input.rows();
    let mut a = input.clone();
    let mut v = Mat::identity(n);
    if n < 2 {
        let d = (0..n).map(|i| a[(i, i)]).collect();
        return Ok((d, v));
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];
    for sweep in 0..SWEEP_CAP {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += a[(p, q)].abs();
            }
        }
        if off == 0.0 {
            return Ok((d, v));
        }
        let tresh = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = 100.0 * a[(p, q)].abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[(p, q)] = 0.0;
                } else if a[(p, q)].abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        a[(p, q)] / h
                    } else {
                        let theta = 0.5 * h / a[(p, q)];
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * a[(p, q)];
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[(p, q)] = 0.0;
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q, s, tau);
                    }
                    for j in p + 1..q {
                        rotate(&mut a, p, j, j, q, s, tau);
                    }
                    for j in q + 1..n {
                        rotate(&mut a, p, j, q, j, s, tau);
                    }
                    for j in 0..n {
                        rotate(&mut v, j, p, j, q, s, tau);
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    // The caller's residual check decides whether what we have is usable.
    Ok((d, v))
}

#[inline]
fn rotate(a: &mut Mat, i: usize, j: usize, k: usize, l: usize, s: f64, tau: f64) {
    let g = a[(i, j)];
    let h = a[(k, l)];
    a[(i, j)] = g - s * (h + g * tau);
    a[(k, l)] = h + s * (g - h * tau);
}

fn sort_pairs(values: &mut Vec<f64>, vectors: &mut Mat) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_vectors = Mat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vectors[(r, new)] = vectors[(r, old)];
        }
    }
    *values = sorted_values;
    *vectors = sorted_vectors;
}

/// Make each column's largest-magnitude component positive (first such
/// component on exact ties), so decompositions are reproducible.
fn fix_signs(vectors: &mut Mat) {
    let n = vectors.rows();
    for j in 0..vectors.cols() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..n {
            let a = vectors[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vectors[(best, j)] < 0.0 {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
}

/// Largest aligned difference between two sorted spectra of equal size.
/// Matching infinite values at the same rank contribute zero; a rank where
/// exactly one side is infinite yields an infinite distance.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut worst = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = if x == y { 0.0 } else { (x - y).abs() };
        worst = worst.max(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::frequency::Frequency;
    use crate::model::lattice::LatticeBox;
    use crate::model::potential::PotentialSpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn check_orthonormal(v: &Mat, tol: f64) {
        let n = v.cols();
        let g = v.tr_mul(v);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g[(i, j)] - expect).abs() < tol,
                    "gram ({i},{j}) = {}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let a = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, -1.0]]);
        let dec = dense_eig_mat(&a, 1e-12).unwrap();
        assert_eq!(dec.values, vec![-1.0, 3.0]);
        assert_eq!(dec.vectors[(1, 0)], 1.0);
        assert_eq!(dec.vectors[(0, 1)], 1.0);
    }

    #[test]
    fn symmetric_swap_eigenvalues() {
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let dec = dense_eig_mat(&a, 1e-12).unwrap();
        assert!((dec.values[0] + 1.0).abs() < 1e-14);
        assert!((dec.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 8;
            let mut a = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = x;
                    a[(j, i)] = x;
                }
            }
            let dec = dense_eig_mat(&a, 1e-12).unwrap();
            assert!(dec.residual(&a) < 1e-12 * 8.0, "trial {trial}");
            check_orthonormal(&dec.vectors, 1e-12);
            for w in dec.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn pole_site_is_deflated() {
        let spec = PotentialSpec::maryland();
        let freq = Frequency::golden(2.0, 1.0);
        let boxed = LatticeBox::interval(-2, 2).unwrap();
        let op = SymOperator::assemble(&spec, 0.01, &freq, 0.0, &boxed).unwrap();
        let dec = dense_eig(&op, 1e-11).unwrap();
        assert_eq!(dec.values[0], f64::NEG_INFINITY);
        assert!(dec.values[1].is_finite());
        // The -inf eigenvector is the basis vector at the pole site.
        let pole = op.pole_index().unwrap();
        let v0 = dec.vector(0);
        for (i, &c) in v0.iter().enumerate() {
            assert_eq!(c, if i == pole { 1.0 } else { 0.0 });
        }
        // Finite part is orthonormal and satisfies the eigen equation on the
        // complementary sites (all have zero component at the pole).
        for j in 1..dec.values.len() {
            assert_eq!(dec.vector(j)[pole], 0.0);
        }
    }

    #[test]
    fn multiset_distance_examples() {
        assert_eq!(multiset_distance(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(multiset_distance(&[1.0, 3.0], &[2.0, 3.0]).unwrap(), 1.0);
        let inf = f64::NEG_INFINITY;
        assert_eq!(multiset_distance(&[inf, 1.0], &[inf, 1.5]).unwrap(), 0.5);
        assert_eq!(
            multiset_distance(&[inf, 1.0], &[0.0, 1.0]).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            multiset_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::CardinalityMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn weyl_perturbation_bound_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let n = 6;
            let mut a = Mat::zeros(n, n);
            let mut p = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = x;
                    a[(j, i)] = x;
                    let y: f64 = rng.gen_range(-0.01..0.01);
                    p[(i, j)] = y;
                    p[(j, i)] = y;
                }
            }
            let mut apb = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    apb[(i, j)] = a[(i, j)] + p[(i, j)];
                }
            }
            let da = dense_eig_mat(&a, 1e-12).unwrap();
            let db = dense_eig_mat(&apb, 1e-12).unwrap();
            let dist = multiset_distance(&da.values, &db.values).unwrap();
            // Weyl: the spectral shift is at most the 2-norm of the
            // perturbation, which its Frobenius norm dominates.
            let mut frob = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    frob += p[(i, j)] * p[(i, j)];
                }
            }
            assert!(dist <= frob.sqrt() + 1e-12);
        }
    }
}
