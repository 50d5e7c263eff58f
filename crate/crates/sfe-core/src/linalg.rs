//! Small dense containers used throughout: vectors and column-major matrices.

use crate::error::{Error, Result};

/// Accumulates a sum with Neumaier's compensated scheme. The residual error
/// stays near one ulp of the running total regardless of term count, which
/// the tight extension-identity tolerances rely on.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// A real vector.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Self {
        DenseVector(data)
    }

    pub fn zeros(len: usize) -> Self {
        DenseVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.len(), other.len());
        compensated_sum(self.0.iter().zip(&other.0).map(|(a, b)| a * b))
    }

    pub fn norm2(&self) -> f64 {
        compensated_sum(self.0.iter().map(|a| a * a)).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scale(&self, s: f64) -> DenseVector {
        DenseVector(self.0.iter().map(|a| a * s).collect())
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), other.len());
        DenseVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn sum(&self) -> f64 {
        compensated_sum(self.0.iter().copied())
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        DenseVector(v)
    }
}

impl From<&[f64]> for DenseVector {
    fn from(v: &[f64]) -> Self {
        DenseVector(v.to_vec())
    }
}

/// A real matrix in column-major storage.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Rank-one matrix v vᵀ scaled by `s`.
    pub fn scaled_outer(v: &DenseVector, s: f64) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                m.set(r, c, s * v[r] * v[c]);
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> DenseVector {
        DenseVector::new(self.data[c * self.rows..(c + 1) * self.rows].to_vec())
    }

    pub fn set_column(&mut self, c: usize, v: &DenseVector) {
        assert_eq!(v.len(), self.rows);
        self.data[c * self.rows..(c + 1) * self.rows].copy_from_slice(v.as_slice());
    }

    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for c in 0..self.cols {
            let x = v[c];
            if x == 0.0 {
                continue;
            }
            let col = &self.data[c * self.rows..(c + 1) * self.rows];
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * x;
            }
        }
        DenseVector::new(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        compensated_sum(self.data.iter().map(|a| a * a)).sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        compensated_sum((0..self.rows).map(|i| self.get(i, i)))
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m = 0.0f64;
        for c in 0..self.cols {
            for r in 0..c {
                m = m.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        m
    }

    /// Errors unless the matrix is symmetric within `tol`.
    pub fn require_symmetric(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                detail: format!("{}x{} matrix is not square", self.rows, self.cols),
            });
        }
        let asym = self.max_asymmetry();
        if asym > tol {
            return Err(Error::NotSymmetric { max_asym: asym });
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let terms: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 1000))
            .collect();
        let exact = 1.0 + 1000.0 * 1e-16;
        assert!((compensated_sum(terms.iter().copied()) - exact).abs() < 1e-18);
    }

    #[test]
    fn matvec_matches_manual() {
        let m = DenseMatrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let v = DenseVector::new(vec![1.0, 2.0, 3.0]);
        let out = m.matvec(&v);
        assert_eq!(out.as_slice(), &[8.0, 26.0]);
    }

    #[test]
    fn symmetry_check() {
        let mut m = DenseMatrix::identity(3);
        assert!(m.require_symmetric(0.0).is_ok());
        m.set(0, 1, 1e-6);
        assert!(m.require_symmetric(1e-12).is_err());
    }
}
