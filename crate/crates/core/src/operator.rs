//! Matrix operators over a [`FockBasis`], stored dense below
//! [`DENSE_LIMIT`] and as CSR above it.

use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockBasis;

/// Largest dimension stored densely.
pub const DENSE_LIMIT: usize = 4096;

/// Hermiticity tolerance used when wrapping an [`Operator`] as a
/// [`HermitianOperator`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = CsrMatrix { nrows, ncols, row_ptr, col_idx, values };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != Complex64::new(0.0, 0.0) {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::zeros(self.nrows);
        for r in 0..self.nrows {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<Complex64>),
    Sparse(CsrMatrix),
}

/// A linear map from the `cols` basis to the `rows` basis.
#[derive(Debug, Clone)]
pub struct Operator {
    rows: Arc<FockBasis>,
    cols: Arc<FockBasis>,
    storage: Storage,
    label: String,
}

impl Operator {
    pub fn from_dense(
        rows: Arc<FockBasis>,
        cols: Arc<FockBasis>,
        matrix: DMatrix<Complex64>,
        label: impl Into<String>,
    ) -> Self {
        assert_eq!(matrix.nrows(), rows.dim());
        assert_eq!(matrix.ncols(), cols.dim());
        Operator { rows, cols, storage: Storage::Dense(matrix), label: label.into() }
    }

    /// Chooses dense or sparse storage by dimension.
    pub fn from_triplets(
        rows: Arc<FockBasis>,
        cols: Arc<FockBasis>,
        triplets: Vec<(usize, usize, Complex64)>,
        label: impl Into<String>,
    ) -> Self {
        let (nr, nc) = (rows.dim(), cols.dim());
        let storage = if nr.max(nc) <= DENSE_LIMIT {
            let mut m = DMatrix::zeros(nr, nc);
            for (r, c, v) in triplets {
                m[(r, c)] += v;
            }
            Storage::Dense(m)
        } else {
            Storage::Sparse(CsrMatrix::from_triplets(nr, nc, triplets))
        };
        Operator { rows, cols, storage, label: label.into() }
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        let d = basis.dim();
        let triplets = (0..d).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect();
        Operator::from_triplets(basis.clone(), basis.clone(), triplets, "1")
    }

    pub fn zero(rows: &Arc<FockBasis>, cols: &Arc<FockBasis>) -> Self {
        Operator::from_triplets(rows.clone(), cols.clone(), Vec::new(), "0")
    }

    pub fn from_diagonal(basis: &Arc<FockBasis>, diag: impl IntoIterator<Item = Complex64>, label: &str) -> Self {
        let triplets = diag.into_iter().enumerate().map(|(i, v)| (i, i, v)).collect();
        Operator::from_triplets(basis.clone(), basis.clone(), triplets, label)
    }

    pub fn rows(&self) -> &Arc<FockBasis> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<FockBasis> {
        &self.cols
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.cols
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    /// Borrow the dense matrix; `None` for sparse storage.
    pub fn dense(&self) -> Option<&DMatrix<Complex64>> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(s) => s.get(r, c),
        }
    }

    pub fn matvec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Sparse(s) => s.matvec(x),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Sparse(s) => Storage::Sparse(CsrMatrix::from_triplets(
                s.ncols,
                s.nrows,
                s.iter().map(|(r, c, v)| (c, r, v.conj())).collect(),
            )),
        };
        Operator {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            storage,
            label: format!("({})^dag", self.label),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square operator");
        match &self.storage {
            Storage::Dense(m) => m.trace(),
            Storage::Sparse(s) => (0..s.nrows).map(|i| s.get(i, i)).sum(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok((self.to_dense() - other.to_dense()).iter().fold(0.0, |m, v| m.max(v.norm())))
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().fold(0.0, |a, v| a.max(v.norm())),
            Storage::Sparse(s) => s.values.iter().fold(0.0, |a, v| a.max(v.norm())),
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut dev: f64 = 0.0;
                for i in 0..n {
                    for j in i..n {
                        dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                dev
            }
            Storage::Sparse(s) => s.iter().fold(0.0, |d, (r, c, v)| d.max((v - s.get(c, r).conj()).norm())),
        }
    }

    fn check_same_shape(&self, other: &Operator) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(self.combine(other, |a, b| a + b, "+"))
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(self.combine(other, |a, b| a - b, "-"))
    }

    fn combine(
        &self,
        other: &Operator,
        f: impl Fn(DMatrix<Complex64>, DMatrix<Complex64>) -> DMatrix<Complex64>,
        sym: &str,
    ) -> Operator {
        let label = format!("{} {sym} {}", self.label, other.label);
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => {
                Operator::from_dense(self.rows.clone(), self.cols.clone(), f(a.clone(), b.clone()), label)
            }
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let neg = sym == "-";
                let mut t: Vec<_> = a.iter().collect();
                t.extend(b.iter().map(|(r, c, v)| (r, c, if neg { -v } else { v })));
                Operator::from_triplets(self.rows.clone(), self.cols.clone(), t, label)
            }
            _ => Operator::from_dense(self.rows.clone(), self.cols.clone(), f(self.to_dense(), other.to_dense()), label),
        }
    }

    /// Matrix product `self * other`.
    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        if self.cols != other.rows {
            return Err(Error::BasisMismatch);
        }
        let label = format!("{} {}", self.label, other.label);
        let m = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => a * b,
            (Storage::Sparse(a), Storage::Dense(b)) => {
                let mut out = DMatrix::zeros(a.nrows, b.ncols());
                for (r, c, v) in a.iter() {
                    for j in 0..b.ncols() {
                        out[(r, j)] += v * b[(c, j)];
                    }
                }
                out
            }
            _ => self.to_dense() * other.to_dense(),
        };
        Ok(Operator::from_dense(self.rows.clone(), other.cols.clone(), m, label))
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * c),
            Storage::Sparse(s) => {
                let mut s = s.clone();
                s.values.iter_mut().for_each(|v| *v *= c);
                s.prune();
                Storage::Sparse(s)
            }
        };
        Operator { rows: self.rows.clone(), cols: self.cols.clone(), storage, label: self.label.clone() }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Operator) -> Result<Operator> {
        self.try_mul(other)?.try_add(&other.try_mul(self)?)
    }

    /// `U^dag A U`.
    pub fn conjugated_by(&self, u: &Operator) -> Result<Operator> {
        u.adjoint().try_mul(self)?.try_mul(u)
    }

    /// Restrict a square full-basis operator to the rows/columns listed.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator bases differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator bases differ")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator bases differ")
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// An [`Operator`] checked to equal its conjugate transpose within
/// [`HERMITIAN_TOL`].
#[derive(Debug, Clone)]
pub struct HermitianOperator(Operator);

impl HermitianOperator {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, HERMITIAN_TOL)
    }

    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self> {
        let deviation = op.hermiticity_deviation();
        if deviation > tol * op.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(HermitianOperator(op))
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }
}

impl Deref for HermitianOperator {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

impl AsRef<Operator> for HermitianOperator {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}
