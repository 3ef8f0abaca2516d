//! Ground-truth density matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::linalg::random_orthonormal;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `|+⟩^{⊗k}`.
    Hadamard,
    /// `(|0…0⟩ + |1…1⟩)/√2`.
    Ghz,
    /// Random eigenvectors, geometrically spaced spectrum with prescribed κ.
    RandomKappa,
    /// Produced by post-processing an estimate.
    Reconstructed,
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(StateKind::Hadamard),
            "ghz" => Ok(StateKind::Ghz),
            "random_kappa" => Ok(StateKind::RandomKappa),
            other => Err(Error::InvalidArgument(format!(
                "unknown state kind {other:?} (expected hadamard, ghz or random_kappa)"
            ))),
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateKind::Hadamard => "hadamard",
            StateKind::Ghz => "ghz",
            StateKind::RandomKappa => "random_kappa",
            StateKind::Reconstructed => "reconstructed",
        })
    }
}

/// Everything needed to rebuild a ground-truth state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub kind: StateKind,
    pub k: usize,
    #[serde(default = "one")]
    pub rank: usize,
    #[serde(default = "one_f")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl StateSpec {
    pub fn pure(kind: StateKind, k: usize) -> Self {
        StateSpec {
            kind,
            k,
            rank: 1,
            kappa: 1.0,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<DensityState> {
        make_state(self.kind, self.k, self.rank, self.kappa, self.seed)
    }
}

/// `ρ = U diag(λ) U†` with orthonormal `U`, positive descending `λ`, `Σλ = 1`.
#[derive(Debug, Clone)]
pub struct DensityState {
    factor: RankRFactor,
    kind: StateKind,
}

impl DensityState {
    /// Validates the density-state invariants to 1e-12.
    pub fn new(u: DMatrix<C64>, lambdas: DVector<f64>, kind: StateKind) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidArgument("density state needs rank ≥ 1".into()));
        }
        if lambdas.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
            return Err(Error::InvalidArgument("density eigenvalues must be positive".into()));
        }
        if lambdas.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("density eigenvalues must be descending".into()));
        }
        if (lambdas.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("trace {} ≠ 1", lambdas.sum())));
        }
        let factor = RankRFactor::new(u, lambdas)?;
        if factor.orthonormality_error() > 1e-12 {
            return Err(Error::InvalidArgument("eigenvectors are not orthonormal".into()));
        }
        Ok(DensityState { factor, kind })
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn rank(&self) -> usize {
        self.factor.width()
    }

    pub fn lambdas(&self) -> &DVector<f64> {
        self.factor.lambdas()
    }

    pub fn factor(&self) -> &RankRFactor {
        &self.factor
    }

    /// `σ_1 / σ_r`.
    pub fn condition_number(&self) -> f64 {
        let l = self.factor.lambdas();
        l[0] / l[l.len() - 1]
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.factor.to_dense()
    }
}

/// Builds a ground-truth state. `r`, `kappa` and `seed` only matter for
/// [`StateKind::RandomKappa`].
pub fn make_state(kind: StateKind, k: usize, r: usize, kappa: f64, seed: u64) -> Result<DensityState> {
    if k == 0 {
        return Err(Error::EmptyLabel);
    }
    if k > 16 {
        return Err(Error::QubitCap { k, cap: 16 });
    }
    let d = 1usize << k;
    let zero = C64::new(0.0, 0.0);
    match kind {
        StateKind::Hadamard => {
            let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
            DensityState::new(DMatrix::from_element(d, 1, amp), DVector::from_element(1, 1.0), kind)
        }
        StateKind::Ghz => {
            let mut u = DMatrix::from_element(d, 1, zero);
            let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            u[(0, 0)] = amp;
            u[(d - 1, 0)] = amp;
            DensityState::new(u, DVector::from_element(1, 1.0), kind)
        }
        StateKind::RandomKappa => {
            if r == 0 || r > d {
                return Err(Error::InvalidArgument(format!("rank {r} out of range for d = {d}")));
            }
            if !(kappa >= 1.0) || !kappa.is_finite() {
                return Err(Error::InvalidArgument(format!("kappa {kappa} must be ≥ 1")));
            }
            if r == 1 && kappa != 1.0 {
                return Err(Error::InvalidArgument("a rank-1 state has kappa = 1".into()));
            }
            let raw: Vec<f64> = (0..r)
                .map(|i| {
                    if r == 1 {
                        1.0
                    } else {
                        kappa.powf(-(i as f64) / (r - 1) as f64)
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            let lambdas = DVector::from_iterator(r, raw.iter().map(|v| v / total));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_orthonormal(d, r, &mut rng);
            DensityState::new(u, lambdas, kind)
        }
        StateKind::Reconstructed => Err(Error::InvalidArgument(
            "reconstructed states come from psd_normalize, not make_state".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::compile;

    #[test]
    fn ghz2_is_bell() {
        let s = make_state(StateKind::Ghz, 2, 1, 1.0, 0).unwrap();
        let rho = s.to_dense();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho[(i, j)].re - 0.5).abs() < 1e-15);
        }
        assert!(rho[(1, 1)].norm() < 1e-15);
        assert_eq!(s.lambdas().as_slice(), &[1.0]);
    }

    #[test]
    fn hadamard1_has_x_expectation_one() {
        let s = make_state(StateKind::Hadamard, 1, 1, 1.0, 0).unwrap();
        let x = compile(&"X".parse().unwrap());
        assert!((x.expectation(s.factor()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_kappa_spectrum() {
        let s = make_state(StateKind::RandomKappa, 4, 4, 10.0, 5).unwrap();
        let l = s.lambdas();
        assert!((l[0] / l[3] - 10.0).abs() < 1e-12);
        assert!((l.sum() - 1.0).abs() < 1e-12);
        assert!((s.condition_number() - 10.0).abs() < 1e-12);
        assert!(s.factor().orthonormality_error() < 1e-12);
        assert_eq!(s.rank(), 4);
    }

    #[test]
    fn invalid_requests() {
        assert!(make_state(StateKind::RandomKappa, 2, 5, 2.0, 0).is_err());
        assert!(make_state(StateKind::RandomKappa, 2, 2, 0.5, 0).is_err());
        assert!(make_state(StateKind::Hadamard, 0, 1, 1.0, 0).is_err());
        assert!("bogus".parse::<StateKind>().is_err());
    }
}
