//! Small dense complex matrices, stored row-major.
//!
//! The toolkit only ever handles desk-scale matrices (a handful of antennas),
//! so the arithmetic here is plain loops over a `Vec<Complex64>` rather than a
//! heavyweight linear-algebra backend. The SVD is the one place that delegates
//! to `nalgebra` (see [`crate::mimo::svd`]).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadVectorLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = Self { rows, cols, data };
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix of real entries (imaginary parts zero).
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let data = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self + t * rhs`, the line-search iterate.
    pub fn add_scaled(&self, rhs: &Self, t: f64) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b * t)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// `tr(A^H A)`, the total power carried by the matrix. Always real.
    pub fn gram_trace(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.gram_trace().sqrt()
    }

    /// Real inner product `sum Re(conj(a_ij) b_ij)` of the entries viewed as a
    /// real vector of dimension 2*rows*cols.
    pub fn re_inner(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "inner product shape");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "difference shape");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex64]) {
        assert_eq!(col.len(), self.rows, "column length");
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    /// Entries in column-major order, the `vec(.)` convention used throughout.
    pub fn vec_column_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn from_vec_column_major(rows: usize, cols: usize, v: &[Complex64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::BadVectorLength {
                expected: rows * cols,
                got: v.len(),
            });
        }
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = v[j * rows + i];
            }
        }
        Ok(m)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_against_hand_calculation() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)])
            .unwrap();
        let b = ComplexMatrix::identity(2);
        assert_eq!(a.mul(&b), a);

        let d = a.mul(&a);
        // (1+i)(1+i) + 2(-i) = 2i - 2i = 0; (1+i)*2 + 2*1 = 4+2i
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
        assert_eq!(d[(0, 1)], c(4.0, 2.0));
    }

    #[test]
    fn hermitian_conjugates_and_transposes() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)])
            .unwrap();
        let h = a.hermitian();
        assert_eq!(h[(0, 0)], c(1.0, -2.0));
        assert_eq!(h[(0, 1)], c(5.0, -6.0));
        assert_eq!(h[(1, 0)], c(3.0, -4.0));
    }

    #[test]
    fn column_major_round_trip() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.0, 3.0), c(2.0, 0.0), c(4.0, 0.0)])
            .unwrap();
        let v = a.vec_column_major();
        assert_eq!(v, vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0), c(4.0, 0.0)]);
        let back = ComplexMatrix::from_vec_column_major(2, 2, &v).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![c(1.0, 0.0)]),
            Err(Error::BadVectorLength { .. })
        ));
        assert!(matches!(
            ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn gram_trace_is_total_power() {
        let a = ComplexMatrix::new(1, 2, vec![c(3.0, 4.0), c(0.0, 2.0)]).unwrap();
        assert!((a.gram_trace() - 29.0).abs() < 1e-15);
    }
}
