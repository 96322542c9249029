//! Minimal dense matrix type used by the oracle eigensolver and for
//! small-block products inside the scheme.
//!
//! Row-major, square or rectangular, no external dependencies. Only the
//! handful of operations the crate actually needs.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `self * other`.
    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self[(i, k)];
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += v * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn tr_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let v = self[(k, i)];
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += v * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Right-multiply by the plane rotation that is the identity except for
    /// `[[c, s], [-s, c]]` in coordinates `(p, q)`: only columns `p` and `q`
    /// change.
    pub fn apply_givens_right(&mut self, p: usize, q: usize, c: f64, s: f64) {
        assert!(p < self.cols && q < self.cols && p != q);
        for i in 0..self.rows {
            let wp = self[(i, p)];
            let wq = self[(i, q)];
            self[(i, p)] = c * wp - s * wq;
            self[(i, q)] = s * wp + c * wq;
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.a
            .iter()
            .zip(&other.a)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Spectral norm via a few power iterations on `A^T A`; adequate for the
    /// small blocks this crate measures. Falls back to the Frobenius norm as
    /// an upper bound when the iteration stalls at zero.
    pub fn norm2_est(&self) -> f64 {
        let n = self.cols;
        if n == 0 || self.rows == 0 {
            return 0.0;
        }
        let fro: f64 = self.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if fro == 0.0 {
            return 0.0;
        }
        let mut v = vec![1.0_f64 / (n as f64).sqrt(); n];
        let mut lambda = 0.0_f64;
        for _ in 0..60 {
            // w = A^T (A v)
            let mut av = vec![0.0; self.rows];
            for i in 0..self.rows {
                let mut s = 0.0;
                for j in 0..n {
                    s += self[(i, j)] * v[j];
                }
                av[i] = s;
            }
            let mut w = vec![0.0; n];
            for i in 0..self.rows {
                let x = av[i];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    w[j] += self[(i, j)] * x;
                }
            }
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            for j in 0..n {
                v[j] = w[j] / norm;
            }
        }
        lambda.sqrt().min(fro)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.cols + j]
    }
}
