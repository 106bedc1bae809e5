//! Closed-form solutions of linear protocol instances via the matrix exponential.
//!
//! This path shares nothing with the time stepper; it exists to check it.

use std::ops::{Index, IndexMut};

use crate::error::{domain, Error, Result};
use crate::graph::SwitchingSignal;
use crate::scalar::Scalar;

use super::protocol::ProtocolSpec;

/// Small row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return domain("matrix rows have unequal length");
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scaled(&self, s: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> S {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<S>())
            .fold(S::zero(), S::max)
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// `exp(A)` by scaling and squaring around a truncated Taylor series.
pub fn expm<S: Scalar>(a: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
    if a.rows != a.cols {
        return domain("matrix exponential needs a square matrix");
    }
    let norm = a.norm1();
    if !norm.is_finite() {
        return domain("matrix has non-finite entries");
    }
    let half = S::lit(0.5);
    let mut squarings = 0i32;
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm *= half;
        squarings += 1;
    }
    let b = a.scaled(S::lit(2.0).powi(-squarings));

    let n = a.rows;
    let mut result = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&b).scaled(S::one() / S::from_usize_lossy(k));
        result.add_assign(&term);
        if term.norm1() <= S::epsilon() * result.norm1() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// `x(t) = exp(A t) x0` for the linear system `x' = A x`.
pub fn linear_oracle_solution<S: Scalar>(system: &DenseMatrix<S>, x0: &[S], t: S) -> Result<Vec<S>> {
    if system.rows() != system.cols() || system.cols() != x0.len() {
        return domain(format!(
            "system matrix is {}x{} but the state has length {}",
            system.rows(),
            system.cols(),
            x0.len()
        ));
    }
    if !t.is_finite() {
        return domain("time must be finite");
    }
    Ok(expm(&system.scaled(t))?.matvec(x0))
}

/// Solution of a built-in protocol from `(t_start, x0)` to `t_end`, valid only when the
/// switching signal holds one graph over the whole interval.
pub fn linear_oracle_for<S: Scalar>(
    spec: &ProtocolSpec<S>,
    signal: &SwitchingSignal<S>,
    x0: &[S],
    t_start: S,
    t_end: S,
) -> Result<Vec<S>> {
    if !(t_end >= t_start) {
        return domain("oracle interval must be nonempty");
    }
    let switches = signal.switch_times(t_start, t_end);
    let p = signal.index_at(t_start)?;
    if switches.iter().any(|&s| !matches!(signal.index_at(s), Ok(q) if q == p)) {
        return Err(Error::OracleScope(format!(
            "graph switches inside [{t_start}, {t_end}]"
        )));
    }
    linear_oracle_solution(&spec.system_matrix(p)?, x0, t_end - t_start)
}
