//! Small dense matrices over an exact or floating field.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::ring::{Coefficient, Field};

/// Pivot tolerance for floating factorizations (relative to the largest entry).
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl<T: Clone> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Matrix::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Submatrix keeping the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn principal(&self, idx: &[usize]) -> Self {
        self.select(idx, idx)
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.rows {
            list.entry(&&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        list.finish()
    }
}

impl<T: Coefficient> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a.plus(b)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a.minus(b)))
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|a| a.times(c))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, k| acc.plus(&self[(i, k)].times(&other[(k, j)])))
        }))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc.plus(&self[(i, i)]))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl<T: Field> Matrix<T> {
    fn require_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    fn scale_magnitude(&self) -> f64 {
        self.data.iter().map(Field::magnitude).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..i).all(|j| {
                    if T::is_exact() {
                        self[(i, j)] == self[(j, i)]
                    } else {
                        self[(i, j)].minus(&self[(j, i)]).magnitude() <= tol
                    }
                })
            })
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> Result<T> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = pivot_row(&a, k);
            let Some(p) = p else {
                return Ok(T::zero());
            };
            if p != k {
                a.swap_rows(p, k);
                det = det.negate();
            }
            let pivot = a[(k, k)].clone();
            det = det.times(&pivot);
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].divide(&pivot);
                for j in k..n {
                    let v = a[(i, j)].minus(&f.times(&a[(k, j)]));
                    a[(i, j)] = v;
                }
            }
        }
        Ok(det)
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.require_square()?;
        if rhs.rows != n {
            return Err(Error::DimensionMismatch("right-hand side rows".into()));
        }
        let tol = PIVOT_TOLERANCE * self.scale_magnitude();
        let mut a = self.clone();
        let mut b = rhs.clone();
        for k in 0..n {
            let p = pivot_row(&a, k).ok_or(Error::Singular)?;
            if !T::is_exact() && a[(p, k)].magnitude() <= tol {
                return Err(Error::Singular);
            }
            if p != k {
                a.swap_rows(p, k);
                b.swap_rows(p, k);
            }
            let pivot = a[(k, k)].clone();
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].divide(&pivot);
                for j in k..n {
                    let v = a[(i, j)].minus(&f.times(&a[(k, j)]));
                    a[(i, j)] = v;
                }
                for j in 0..b.cols {
                    let v = b[(i, j)].minus(&f.times(&b[(k, j)]));
                    b[(i, j)] = v;
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..b.cols {
                let mut v = b[(k, j)].clone();
                for m in k + 1..n {
                    v = v.minus(&a[(k, m)].times(&b[(m, j)]));
                }
                b[(k, j)] = v.divide(&a[(k, k)]);
            }
        }
        Ok(b)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.require_square()?;
        self.solve(&Matrix::identity(n))
    }

    /// Symmetric `L D L^T` factorization without pivoting; succeeds iff the
    /// matrix is positive definite (floating pivots must exceed the tolerance).
    pub fn ldlt(&self) -> Result<(Matrix<T>, Vec<T>)> {
        let n = self.require_square()?;
        let tol = T::from_f64(PIVOT_TOLERANCE * self.scale_magnitude().max(f64::MIN_POSITIVE));
        let mut l: Matrix<T> = Matrix::identity(n);
        let mut d: Vec<T> = Vec::with_capacity(n);
        for j in 0..n {
            let mut dj = self[(j, j)].clone();
            for k in 0..j {
                dj = dj.minus(&l[(j, k)].times(&l[(j, k)]).times(&d[k]));
            }
            let ok = if T::is_exact() { dj > T::zero() } else { dj > tol };
            if !ok {
                return Err(Error::NotPositiveDefinite);
            }
            for i in j + 1..n {
                let mut v = self[(i, j)].clone();
                for k in 0..j {
                    v = v.minus(&l[(i, k)].times(&l[(j, k)]).times(&d[k]));
                }
                l[(i, j)] = v.divide(&dj);
            }
            d.push(dj);
        }
        Ok((l, d))
    }

    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric(1e-12) && self.ldlt().is_ok()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Matrix<f64> {
    /// Lower Cholesky factor `L` with `L L^T = self`.
    pub fn cholesky(&self) -> Result<Matrix<f64>> {
        let (l, d) = self.ldlt()?;
        let mut out = l;
        for j in 0..self.cols {
            let s = d[j].sqrt();
            for i in j..self.rows {
                out[(i, j)] *= s;
            }
        }
        Ok(out)
    }
}

/// Exact fields take the first nonzero entry; floats take the largest.
fn pivot_row<T: Field>(a: &Matrix<T>, k: usize) -> Option<usize> {
    if T::is_exact() {
        (k..a.rows).find(|&i| !a[(i, k)].is_zero())
    } else {
        let (best, mag) = (k..a.rows)
            .map(|i| (i, a[(i, k)].magnitude()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        (mag > 0.0).then_some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, Rational};

    fn r(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|row| row.iter().map(|&v| rat(v, 1)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn det_small_cases() {
        assert_eq!(r(&[&[2, 1], &[1, 2]]).det().unwrap(), rat(3, 1));
        assert_eq!(r(&[&[0, 1], &[1, 0]]).det().unwrap(), rat(-1, 1));
        assert_eq!(r(&[&[1, 2], &[2, 4]]).det().unwrap(), rat(0, 1));
        let f = Matrix::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!((f.det().unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn solve_and_inverse() {
        let a = r(&[&[4, 1, 0], &[1, 3, 1], &[0, 1, 2]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(3));
        assert_eq!(r(&[&[1, 2], &[2, 4]]).inverse().unwrap_err(), Error::Singular);
    }

    #[test]
    fn ldlt_detects_definiteness() {
        assert!(r(&[&[2, 1], &[1, 2]]).is_positive_definite());
        assert!(!r(&[&[1, 2], &[2, 1]]).is_positive_definite());
        let c = Matrix::from_rows(vec![vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = c.cholesky().unwrap();
        let back = l.mul(&l.transpose()).unwrap();
        for (a, b) in back.as_slice().iter().zip(c.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
