//! Hermitian low-rank factorization `X = U diag(λ) U†`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// A Hermitian matrix in eigen-form: `U` is `d × r` with orthonormal columns
/// and `lambdas` are real and signed, ordered by decreasing magnitude.
/// The singular values of `X` are `|lambdas|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRFactor {
    u: DMatrix<C64>,
    lambdas: DVector<f64>,
}

impl RankRFactor {
    /// Wraps a factorization. Only shapes are checked; orthonormality of `u`
    /// is the caller's responsibility (see [`RankRFactor::orthonormality_error`]).
    pub fn new(u: DMatrix<C64>, lambdas: DVector<f64>) -> Result<Self> {
        if u.ncols() != lambdas.len() {
            return Err(Error::Dimension {
                expected: u.ncols(),
                actual: lambdas.len(),
            });
        }
        if !u.nrows().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "factor row count {} is not a power of two",
                u.nrows()
            )));
        }
        Ok(RankRFactor { u, lambdas })
    }

    /// The zero matrix carried on the first `r` computational basis vectors.
    pub fn zeros(d: usize, r: usize) -> Self {
        let r = r.min(d);
        let u = DMatrix::from_fn(d, r, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        RankRFactor {
            u,
            lambdas: DVector::zeros(r),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Number of stored eigenpairs (an upper bound on the rank).
    pub fn width(&self) -> usize {
        self.u.ncols()
    }

    /// Number of eigenvalues with `|λ| > tol`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        self.lambdas.iter().filter(|l| l.abs() > tol).count()
    }

    pub fn u(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn lambdas(&self) -> &DVector<f64> {
        &self.lambdas
    }

    pub fn into_parts(self) -> (DMatrix<C64>, DVector<f64>) {
        (self.u, self.lambdas)
    }

    pub fn trace(&self) -> f64 {
        self.lambdas.sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.lambdas.norm_squared()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.lambdas.norm()
    }

    /// `U diag(λ)`, the left factor of `X = (UΛ) U†`.
    pub fn scaled_u(&self) -> DMatrix<C64> {
        let mut out = self.u.clone();
        for (mut col, &l) in out.column_iter_mut().zip(self.lambdas.iter()) {
            col *= C64::new(l, 0.0);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.scaled_u() * self.u.adjoint()
    }

    /// `max |U†U − I|`, entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.u.adjoint() * &self.u;
        let r = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in 0..r {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `Tr(X Y)` for two factored Hermitian matrices, in O(d·r·s).
    pub fn trace_product(&self, other: &RankRFactor) -> f64 {
        let overlap = self.u.adjoint() * &other.u;
        let mut acc = 0.0;
        for (i, &a) in self.lambdas.iter().enumerate() {
            for (j, &b) in other.lambdas.iter().enumerate() {
                acc += a * b * overlap[(i, j)].norm_sqr();
            }
        }
        acc
    }

    /// `‖X − Y‖_F²` without densifying.
    pub fn frobenius_dist_sq(&self, other: &RankRFactor) -> f64 {
        let v = self.frobenius_norm_sq() + other.frobenius_norm_sq() - 2.0 * self.trace_product(other);
        v.max(0.0)
    }
}
