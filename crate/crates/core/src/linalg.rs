//! Small dense square matrices. Manifold dimensions here are single digits,
//! so everything is row-major `Vec` storage with naive loops.

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data has wrong length");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Bilinear form `uᵀ M v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            let mut row = T::zero();
            for j in 0..self.n {
                row += self[(i, j)] * v[j];
            }
            acc += u[i] * row;
        }
        acc
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::new(self)
    }

    /// Sets the block `[offset..offset+b.dim()]²` to `b`.
    pub fn set_block(&mut self, rows: &[usize], b: &Matrix<T>) {
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in rows.iter().enumerate() {
                self[(i, j)] = b[(bi, bj)];
            }
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn det(&self) -> T {
        let d: T = (0..self.l.dim()).fold(T::one(), |acc, i| acc * self.l[(i, i)]);
        d * d
    }

    /// `√det A`, computed without squaring first.
    pub fn sqrt_det(&self) -> T {
        (0..self.l.dim()).fold(T::one(), |acc, i| acc * self.l[(i, i)])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.l[(k, i)] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.dim();
        let mut inv = Matrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // symmetrize round-off
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (inv[(i, j)] + inv[(j, i)]) * T::lit(0.5);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }
}
