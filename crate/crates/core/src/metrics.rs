//! Reconstruction error metrics and PSD post-processing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::linalg::hermitian_eigen;
use crate::state::{DensityState, StateKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub frob_err: f64,
    pub frob_err_sq: f64,
    pub nuclear_err: f64,
    /// `|Tr(estimate) − 1|`.
    pub trace_dev: f64,
    /// Smallest eigenvalue of the estimate as a `d × d` matrix.
    pub min_eig: f64,
    /// `⟨ψ|X|ψ⟩` when the truth is a pure state `|ψ⟩`.
    pub fidelity: Option<f64>,
}

/// Eigenvalues of `X − Y` from the `(r + s)`-dimensional span of both factors.
fn difference_spectrum(x: &RankRFactor, y: &RankRFactor) -> DVector<f64> {
    let d = x.dim();
    let (a, b) = (x.width(), y.width());
    let mut stacked = DMatrix::zeros(d, a + b);
    stacked.columns_mut(0, a).copy_from(x.u());
    stacked.columns_mut(a, b).copy_from(y.u());
    let basis = stacked.qr().q();
    let px = basis.adjoint() * x.scaled_u();
    let py = basis.adjoint() * y.scaled_u();
    let qx = basis.adjoint() * x.u();
    let qy = basis.adjoint() * y.u();
    let mut core = px * qx.adjoint() - py * qy.adjoint();
    core = (&core + core.adjoint()) * C64::new(0.5, 0.0);
    hermitian_eigen(&core).0
}

pub fn metrics(estimate: &RankRFactor, truth: &DensityState) -> Result<Metrics> {
    if estimate.dim() != truth.dim() {
        return Err(Error::Dimension {
            expected: truth.dim(),
            actual: estimate.dim(),
        });
    }
    let spectrum = difference_spectrum(estimate, truth.factor());
    let frob_err_sq = spectrum.norm_squared();
    let nuclear_err = spectrum.iter().map(|v| v.abs()).sum();
    let smallest = estimate.lambdas().iter().copied().fold(f64::INFINITY, f64::min);
    let min_eig = if estimate.width() < estimate.dim() {
        smallest.min(0.0)
    } else {
        smallest
    };
    let fidelity = (truth.rank() == 1).then(|| {
        let psi = truth.factor().u().column(0);
        estimate
            .lambdas()
            .iter()
            .enumerate()
            .map(|(i, &l)| l * estimate.u().column(i).dotc(&psi).norm_sqr())
            .sum()
    });
    Ok(Metrics {
        frob_err: frob_err_sq.sqrt(),
        frob_err_sq,
        nuclear_err,
        trace_dev: (estimate.trace() - 1.0).abs(),
        min_eig,
        fidelity,
    })
}

/// Clips negative eigenvalues and rescales to unit trace.
pub fn psd_normalize(estimate: &RankRFactor) -> Result<DensityState> {
    let mut keep: Vec<usize> = (0..estimate.width()).filter(|&i| estimate.lambdas()[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::AllClipped);
    }
    keep.sort_by(|&a, &b| estimate.lambdas()[b].total_cmp(&estimate.lambdas()[a]));
    let total: f64 = keep.iter().map(|&i| estimate.lambdas()[i]).sum();
    let lambdas = DVector::from_iterator(keep.len(), keep.iter().map(|&i| estimate.lambdas()[i] / total));
    let u = estimate.u().select_columns(keep.iter());
    // renormalized weights may sum to 1 only up to rounding
    let fix = lambdas.sum();
    DensityState::new(u, lambdas / fix, StateKind::Reconstructed)
}
