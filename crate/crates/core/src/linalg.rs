//! Small dense helpers over nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// `max |M − M†|`, entrywise.
pub fn max_asymmetry(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, returned in solver order.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Indices ordered by decreasing `|value|`; ties keep the solver's order.
pub fn order_by_magnitude(values: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    idx
}

pub fn spectral_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_complex_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let a = random_complex_matrix(d, d, rng);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Orthonormal basis for the column span (thin Householder QR).
pub fn orthonormalize(m: DMatrix<C64>) -> DMatrix<C64> {
    m.qr().q()
}

/// `d × r` matrix with orthonormal columns drawn from the Haar-like
/// distribution (QR of a complex Gaussian matrix).
pub fn random_orthonormal(d: usize, r: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    orthonormalize(random_complex_matrix(d, r, rng))
}

/// Trace norm of a Hermitian matrix.
pub fn nuclear_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().map(|v| v.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_orthonormal_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthonormal(16, 4, &mut rng);
        assert_eq!(q.shape(), (16, 4));
        let gram = q.adjoint() * &q;
        assert!((gram - DMatrix::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(8, &mut rng);
        assert_eq!(max_asymmetry(&h), 0.0);
        let (vals, vecs) = hermitian_eigen(&h);
        let diag = DMatrix::from_diagonal(&vals.map(|v| C64::new(v, 0.0)));
        let back = &vecs * diag * vecs.adjoint();
        assert!((back - h).norm() < 1e-12);
    }

    #[test]
    fn magnitude_order_is_stable() {
        let v = DVector::from_vec(vec![0.5, -2.0, 2.0, 0.1]);
        assert_eq!(order_by_magnitude(&v), vec![1, 2, 0, 3]);
    }
}
