//! Small dense linear algebra used throughout the crate.
//!
//! Problem sizes here are a few hundred rows at most, so everything is a
//! row-major `Vec<f64>` and the factorizations are textbook.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, and a 0-column matrix still has rows
        (0..self.rows).map(move |i| self.row(i))
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.row_iter().map(|r| dot(r, x)).collect()
    }

    /// `selfᵀ * x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &xi) in self.row_iter().zip(x) {
            if xi != 0.0 {
                axpy(xi, r, &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    axpy(a, other.row(k), out.row_mut(i));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Matrix) {
        for i in 0..block.rows {
            let dst = &mut self.row_mut(row + i)[col..col + block.cols];
            dst.copy_from_slice(block.row(i));
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// `s^p / p!` evaluated as a running product, exact for `p = 0`.
pub fn power_over_factorial(s: f64, p: usize) -> f64 {
    (1..=p).fold(1.0, |acc, k| acc * s / k as f64)
}

/// Dense `L D Lᵀ` factorization of a symmetric matrix without pivoting.
///
/// Only used on quasi-definite or positive definite matrices, where the
/// factorization exists for the natural ordering.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// Unit lower factor, strictly-lower part stored row-major.
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    /// Factors `a`; returns `None` if a pivot is zero or not finite.
    pub fn factor(a: &Matrix) -> Option<Self> {
        assert_eq!(a.rows(), a.cols(), "LDLᵀ needs a square matrix");
        let n = a.rows();
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        // scratch row: w[k] = L[j,k] * d[k]
        let mut w = vec![0.0; n];
        for j in 0..n {
            let lj = j * n;
            let mut dj = a[(j, j)];
            for k in 0..j {
                w[k] = l[lj + k] * d[k];
                dj -= l[lj + k] * w[k];
            }
            if dj == 0.0 || !dj.is_finite() {
                return None;
            }
            d[j] = dj;
            for i in j + 1..n {
                let li = i * n;
                let mut v = a[(i, j)];
                for k in 0..j {
                    v -= l[li + k] * w[k];
                }
                l[li + j] = v / dj;
            }
        }
        Some(Self { n, l, d })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let li = i * n;
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[li + k] * b[k];
            }
            b[i] = v;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v;
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ldlt_solves_spd_system() {
        let a = Matrix::from_rows(
            &[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, -0.2], vec![0.5, -0.2, 2.0]],
            3,
        );
        let x_true = [1.0, -2.0, 0.25];
        let b = a.mul_vec(&x_true);
        let f = Ldlt::factor(&a).unwrap();
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn ldlt_handles_quasi_definite() {
        // [[2, 1], [1, -3]] is quasi-definite
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, -3.0]], 2);
        let f = Ldlt::factor(&a).unwrap();
        assert!(f.diagonal()[0] > 0.0 && f.diagonal()[1] < 0.0);
        let x = f.solve(&[3.0, -2.0]);
        assert!((2.0 * x[0] + x[1] - 3.0).abs() < 1e-14);
        assert!((x[0] - 3.0 * x[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn ldlt_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], 2);
        assert!(Ldlt::factor(&a).is_none());
    }

    #[test]
    fn power_over_factorial_matches_direct() {
        assert_eq!(power_over_factorial(0.0, 0), 1.0);
        assert_eq!(power_over_factorial(0.0, 3), 0.0);
        assert!((power_over_factorial(2.0, 2) - 2.0).abs() < 1e-15);
        assert!((power_over_factorial(1.5, 4) - 1.5f64.powi(4) / 24.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_products_agree() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]], 3);
        let x = [0.3, -0.7];
        assert_eq!(a.tr_mul_vec(&x), a.transpose().mul_vec(&x));
        let i3 = Matrix::identity(3);
        assert_eq!(a.matmul(&i3), a);
    }
}
