//! Dense row-major matrices and LU factorization over any [`Field`].

use crate::scalar::Field;
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Field> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<F: Field>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Matrix product; panics on a shape mismatch.
    pub fn matmul(&self, other: &Matrix<E>) -> Matrix<E> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// `I - self` for a square matrix.
    pub fn identity_minus(&self) -> Matrix<E> {
        assert_eq!(self.rows, self.cols);
        let mut out = self.map(|x| -x);
        for i in 0..self.rows {
            out[(i, i)] = out[(i, i)] + E::one();
        }
        out
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Lu<E> {
        Lu::factor(self.clone())
    }

    pub fn det(&self) -> E {
        if self.rows == 0 {
            return E::one();
        }
        self.lu().det()
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<E> {
    lu: Matrix<E>,
    perm: Vec<usize>,
    sign_flip: bool,
    singular: bool,
}

impl<E: Field> Lu<E> {
    fn factor(mut a: Matrix<E>) -> Self {
        assert_eq!(a.rows, a.cols, "LU of a non-square matrix");
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flip = false;
        let mut singular = false;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[(i, k)].magnitude()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 || a[(p, k)].is_zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign_flip = !sign_flip;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
            }
        }
        Lu { lu: a, perm, sign_flip, singular }
    }

    pub fn det(&self) -> E {
        if self.singular {
            return E::zero();
        }
        let mut d = E::one();
        for i in 0..self.lu.rows {
            d = d * self.lu[(i, i)];
        }
        if self.sign_flip {
            -d
        } else {
            d
        }
    }

    /// Diagonal of `U` and whether the row permutation is odd; together
    /// they give the determinant in whatever form the caller prefers.
    pub fn diagonal(&self) -> (Vec<E>, bool) {
        ((0..self.lu.rows).map(|i| self.lu[(i, i)]).collect(), self.sign_flip)
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Ratio of the largest to the smallest pivot magnitude; a cheap
    /// stand-in for the condition number that flags near-singular inputs.
    pub fn pivot_ratio(&self) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        let n = self.lu.rows;
        if n == 0 {
            return 1.0;
        }
        let mags: Vec<f64> = (0..n).map(|i| self.lu[(i, i)].magnitude()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[E]) -> Vec<E> {
        let n = self.lu.rows;
        let mut x: Vec<E> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<E> {
        let n = self.lu.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![E::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = E::zero());
            e[j] = E::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// `det(I - A B)`, formed on whichever side gives the smaller square matrix.
pub fn det_i_minus_product<E: Field>(a: &Matrix<E>, b: &Matrix<E>) -> E {
    assert_eq!(a.cols, b.rows);
    assert_eq!(a.rows, b.cols);
    let prod = if a.rows <= a.cols { a.matmul(b) } else { b.matmul(a) };
    prod.identity_minus().det()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use num_rational::Ratio;

    #[test]
    fn exact_rational_determinant() {
        let m = Matrix::from_fn(3, 3, |i, j| Ratio::new(1, (i + j + 1) as i64));
        // det of the 3x3 Hilbert matrix is 1/2160
        assert_eq!(m.det(), Ratio::new(1, 2160));
    }

    #[test]
    fn float_and_rational_agree() {
        let m = Matrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + (i == j) as usize as f64);
        let q = Matrix::from_fn(4, 4, |i, j| {
            Ratio::new(2 * (((i * 7 + j * 3) % 5) as i64) - 3 + 2 * (i == j) as i64, 2)
        });
        let exact = q.det();
        let approx = m.det();
        let e = *exact.numer() as f64 / *exact.denom() as f64;
        assert!((approx - e).abs() < 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn solve_and_inverse() {
        let a = Matrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, (i as f64 - j as f64).sin()) + if i == j { Complex64::new(4.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let inv = a.lu().inverse();
        let id = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(t, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_has_zero_det() {
        let m = Matrix::from_fn(2, 2, |i, _| (i + 1) as f64);
        assert_eq!(m.det(), 0.0);
        assert!(m.lu().is_singular());
    }

    #[test]
    fn rank_one_product() {
        // det(I - x y^T) = 1 - y^T x
        let x = Matrix::from_fn(3, 1, |i, _| Complex64::new(0.1 * i as f64, 0.2));
        let y = Matrix::from_fn(1, 3, |_, j| Complex64::new(0.3, -0.1 * j as f64));
        let d = det_i_minus_product(&x, &y);
        let ytx = (0..3).fold(Complex64::new(0.0, 0.0), |s, i| s + y[(0, i)] * x[(i, 0)]);
        assert!((d - (Complex64::new(1.0, 0.0) - ytx)).norm() < 1e-14);
    }
}
