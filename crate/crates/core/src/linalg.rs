//! Minimal dense linear algebra: row-major matrices, LU with partial
//! pivoting, and a Jacobi eigensolver for symmetric matrices.
//!
//! Everything here targets systems with at most a few hundred unknowns, so
//! dense factorizations with partial pivoting are used throughout. Pivoting
//! is by magnitude only, which keeps results bitwise reproducible on a fixed
//! platform.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Pivots smaller than this are treated as exact rank deficiency.
pub const SINGULAR_PIVOT: f64 = 1e-14;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix-matrix dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinalgError {
    /// A pivot fell below [`SINGULAR_PIVOT`] during elimination.
    Singular,
    DimensionMismatch,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular => write!(f, "matrix is numerically singular"),
            LinalgError::DimensionMismatch => write!(f, "dimension mismatch"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// LU factorization with partial pivoting.
///
/// Factorization always completes; rank deficiency is recorded in
/// `min_pivot` and only reported as an error when solving.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
}

impl Lu {
    pub fn factor(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols(), "LU requires a square matrix");
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            min_pivot = min_pivot.min(pivot.abs());
            if pivot.abs() <= SINGULAR_PIVOT {
                // Column already eliminated to working precision.
                continue;
            }
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let sub = factor * lu[(k, j)];
                    lu[(i, j)] -= sub;
                }
            }
        }
        if n == 0 {
            min_pivot = 0.0;
        }
        Lu {
            lu,
            perm,
            sign,
            min_pivot,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.min_pivot <= SINGULAR_PIVOT
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Signed determinant from the pivot product.
    pub fn determinant(&self) -> f64 {
        let n = self.lu.rows();
        let mut det = self.sign;
        for i in 0..n {
            det *= self.lu[(i, i)];
        }
        det
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.lu.rows();
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch);
        }
        if self.is_singular() {
            return Err(LinalgError::Singular);
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = rhs[self.perm[i]];
        }
        // Forward substitution, unit lower triangle.
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// sorted ascending. The input is symmetrized to wash out roundoff in
/// callers that assemble the matrix from two halves.
pub fn symmetric_eigenvalues(m: &Mat) -> Vec<f64> {
    assert_eq!(m.rows(), m.cols(), "eigenvalues require a square matrix");
    let n = m.rows();
    let mut a = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let scale = a.max_abs().max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    1.0 / (theta - libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s * apj + c * aqj;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalue NaN"));
    eig
}

/// Max-norm of a vector.
pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean norm of a vector.
pub fn euclidean_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Mat::from_fn(3, 3, |i, j| {
            [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]][i][j]
        });
        let lu = Lu::factor(&a);
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.mul_vec(&x);
        for (b, r) in back.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((b - r).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_determinant_matches_cofactor_expansion() {
        let a = Mat::from_fn(2, 2, |i, j| [[2.0, 1.0], [3.0, 4.0]][i][j]);
        let det = Lu::factor(&a).determinant();
        assert!((det - 5.0).abs() < 1e-13);
    }

    #[test]
    fn lu_reports_singularity() {
        let a = Mat::from_fn(2, 2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        let lu = Lu::factor(&a);
        assert!(lu.is_singular());
        assert!(lu.solve(&[1.0, 1.0]).is_err());
        assert!(lu.determinant().abs() < 1e-13);
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // diag(1, 3) rotated by 45 degrees.
        let a = Mat::from_fn(2, 2, |i, j| [[2.0, 1.0], [1.0, 2.0]][i][j]);
        let eig = symmetric_eigenvalues(&a);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_handles_larger_circulant() {
        // Nearest-neighbour ring Laplacian on 6 nodes has eigenvalues
        // 2 cos(2πk/6) - 2.
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                -2.0
            } else if (i + 1) % n == j || (j + 1) % n == i {
                1.0
            } else {
                0.0
            }
        });
        let eig = symmetric_eigenvalues(&a);
        let mut expect: Vec<f64> = (0..n)
            .map(|k| 2.0 * libm::cos(2.0 * core::f64::consts::PI * k as f64 / n as f64) - 2.0)
            .collect();
        expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (e, x) in eig.iter().zip(&expect) {
            assert!((e - x).abs() < 1e-10, "eig {e} vs {x}");
        }
    }
}
