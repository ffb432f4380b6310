//! Compressed sparse row complex matrices.
//!
//! Operators carry a Hermitian tag set by the builders that construct them.
//! The tag is a contract, not a cache: [`Operator::hermitian_deviation`]
//! recomputes the element-wise check on demand.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    symmetry: Symmetry,
}

impl Operator {
    /// Assemble from `(row, col, value)` triplets. Duplicate entries are
    /// summed and exact zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
        symmetry: Symmetry,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut entry_rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                entry_rows.push(r);
                last = Some((r, c));
            }
        }
        // drop exact zeros produced by cancellation
        let mut k = 0;
        let mut kept_rows = Vec::with_capacity(entry_rows.len());
        for i in 0..values.len() {
            if values[i] != C64::new(0.0, 0.0) {
                values[k] = values[i];
                col_idx[k] = col_idx[i];
                kept_rows.push(entry_rows[i]);
                k += 1;
            }
        }
        values.truncate(k);
        col_idx.truncate(k);
        for &r in &kept_rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Operator { rows, cols, row_ptr, col_idx, values, symmetry }
    }

    pub fn zeros(rows: usize, cols: usize, symmetry: Symmetry) -> Self {
        Self::from_triplets(rows, cols, Vec::new(), symmetry)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let t = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), t, Symmetry::Hermitian)
    }

    pub fn from_dense(m: &DMatrix<C64>, symmetry: Symmetry) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t, symmetry)
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_tagged_hermitian(&self) -> bool {
        self.symmetry == Symmetry::Hermitian
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    /// Iterate over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = DVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// Sparse times dense matrix.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.nrows(), self.cols, "mul_dense dimension mismatch");
        let mut out = DMatrix::zeros(self.rows, m.ncols());
        for j in 0..m.ncols() {
            for r in 0..self.rows {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * m[(self.col_idx[k], j)];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Operator {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Operator::from_triplets(self.cols, self.rows, t, self.symmetry)
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut t = Vec::new();
        for (r, mid, a) in self.iter() {
            for k in rhs.row_ptr[mid]..rhs.row_ptr[mid + 1] {
                t.push((r, rhs.col_idx[k], a * rhs.values[k]));
            }
        }
        Ok(Operator::from_triplets(self.rows, rhs.cols, t, Symmetry::General))
    }

    /// Linear combination `self + factor * other`; the Hermitian tag survives
    /// only when both inputs carry it and `factor` is real.
    pub fn add_scaled(&self, other: &Operator, factor: C64) -> Result<Operator> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut t: Vec<_> = self.iter().collect();
        t.extend(other.iter().map(|(r, c, v)| (r, c, v * factor)));
        let sym = if self.symmetry == Symmetry::Hermitian
            && other.symmetry == Symmetry::Hermitian
            && factor.im == 0.0
        {
            Symmetry::Hermitian
        } else {
            Symmetry::General
        };
        Ok(Operator::from_triplets(self.rows, self.cols, t, sym))
    }

    pub fn scale(&self, factor: C64) -> Operator {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        if factor.im != 0.0 {
            out.symmetry = Symmetry::General;
        }
        out
    }

    /// Largest `|A_ij - conj(A_ji)|` over stored entries.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for (r, c, v) in self.iter() {
            dev = dev.max((v - self.get(c, r).conj()).norm());
        }
        dev
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Gershgorin enclosure `(lower, upper)` of the real spectrum of a
    /// Hermitian operator.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.rows {
            let mut center = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    center = self.values[k].re;
                } else {
                    radius += self.values[k].norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.rows == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Frobenius norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &Operator) -> Result<f64> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Ok(ab.add_scaled(&ba, C64::new(-1.0, 0.0))?.frobenius_norm())
    }

    /// `<x| self |x>` for a square operator.
    pub fn expectation(&self, x: &DVector<C64>) -> C64 {
        x.dotc(&self.matvec(x))
    }
}
