use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::config(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::config("ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.concat(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::config(format!(
                "vstack column mismatch: {} vs {}",
                self.cols, other.cols
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            values,
        })
    }

    /// Appends `column` as a new last column.
    pub fn with_column(&self, column: &[f64]) -> Result<Self> {
        if column.len() != self.rows {
            return Err(Error::config(format!(
                "column length {} does not match {} rows",
                column.len(),
                self.rows
            )));
        }
        let cols = self.cols + 1;
        let mut values = Vec::with_capacity(self.rows * cols);
        for (r, extra) in column.iter().enumerate() {
            values.extend_from_slice(self.row(r));
            values.push(*extra);
        }
        Ok(Self {
            rows: self.rows,
            cols,
            values,
        })
    }

    /// Copy of columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        Self::from_fn(self.rows, end - start, |r, c| self.get(r, start + c))
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, other: &Matrix, factor: f64) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    /// `out = alpha * op(a) * op(b) + beta * out` for row-major operands.
    pub(crate) fn gemm(
        alpha: f64,
        a: &Matrix,
        transpose_a: bool,
        b: &Matrix,
        transpose_b: bool,
        beta: f64,
        out: &mut Matrix,
    ) {
        let (m, k) = if transpose_a {
            (a.cols, a.rows)
        } else {
            (a.rows, a.cols)
        };
        let (kb, n) = if transpose_b {
            (b.cols, b.rows)
        } else {
            (b.rows, b.cols)
        };
        assert_eq!(k, kb, "inner dimensions differ");
        assert_eq!(out.shape(), (m, n), "output shape mismatch");
        let (rsa, csa) = if transpose_a {
            (1, a.cols as isize)
        } else {
            (a.cols as isize, 1)
        };
        let (rsb, csb) = if transpose_b {
            (1, b.cols as isize)
        } else {
            (b.cols as isize, 1)
        };
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            out.scale(beta);
            return;
        }
        // SAFETY: strides and extents describe exactly the backing buffers checked above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.values.as_ptr(),
                rsa,
                csa,
                b.values.as_ptr(),
                rsb,
                csb,
                beta,
                out.values.as_mut_ptr(),
                out.cols as isize,
                1,
            );
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::config(format!(
                "matmul shape mismatch: {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        Self::gemm(1.0, self, false, other, false, 0.0, &mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    #[test]
    fn matmul_matches_naive_loop() {
        let a = Matrix::from_fn(5, 7, |i, j| (i * 7 + j) as f64 * 0.1 - 1.3);
        let b = Matrix::from_fn(7, 3, |i, j| ((i + 2 * j) % 5) as f64 - 2.0);
        let got = a.matmul(&b).unwrap();
        let want = naive(&a, &b);
        for (x, y) in got.values().iter().zip(want.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn transposed_gemm() {
        let a = Matrix::from_fn(4, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let b = Matrix::from_fn(4, 2, |i, j| (i * j) as f64 + 1.0);
        let mut out = Matrix::zeros(3, 2);
        Matrix::gemm(1.0, &a, true, &b, false, 0.0, &mut out);
        let at = Matrix::from_fn(3, 4, |i, j| a.get(j, i));
        assert_eq!(out, naive(&at, &b));
    }

    #[test]
    fn shape_errors() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::zeros(2, 3).matmul(&Matrix::zeros(2, 3)).is_err());
        assert!(Matrix::zeros(2, 3).with_column(&[1.0]).is_err());
    }

    #[test]
    fn with_column_and_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = m.with_column(&[9.0, 8.0]).unwrap();
        assert_eq!(w.row(1), &[3.0, 4.0, 8.0]);
        assert_eq!(w.columns(0, 2), m);
    }
}
