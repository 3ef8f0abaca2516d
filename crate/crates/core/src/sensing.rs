//! The Pauli sensing map `A` and its adjoint.
//!
//! For an ensemble of `m` Pauli words `S_1 … S_m` on `k` qubits (`d = 2^k`):
//!
//! ```text
//! A(X)_i = √(d/m) · Tr(S_i X)
//! A†(y)  = √(d/m) · Σ_i y_i S_i
//! ```
//!
//! With the complete basis (every word exactly once) `A†A` is the identity.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::linalg::random_orthonormal;
use crate::pauli::{compile, mul_i_pow, CompiledPauli, PauliLabel, MAX_QUBITS};
use crate::C64;

/// How labels are drawn from the `4^k` words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

#[derive(Debug, Clone)]
pub struct SensingEnsemble {
    k: usize,
    labels: Vec<PauliLabel>,
    compiled: Vec<CompiledPauli>,
    seed: Option<u64>,
    sampling: Sampling,
}

/// Persisted form of an ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub k: usize,
    pub m: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub sampling: Sampling,
    pub labels: Vec<String>,
}

impl EnsembleRecord {
    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("ensemble record serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

impl SensingEnsemble {
    /// Draws `m` labels i.i.d. uniformly over all `4^k` words, identity included.
    pub fn sample(k: usize, m: usize, seed: u64) -> Result<Self> {
        Self::sample_with(k, m, seed, Sampling::WithReplacement)
    }

    pub fn sample_with(k: usize, m: usize, seed: u64, sampling: Sampling) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("ensemble size m must be at least 1".into()));
        }
        if k == 0 {
            return Err(Error::EmptyLabel);
        }
        if k > MAX_QUBITS {
            return Err(Error::QubitCap { k, cap: MAX_QUBITS });
        }
        let total = 1u64 << (2 * k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let indices: Vec<u64> = match sampling {
            Sampling::WithReplacement => (0..m).map(|_| rng.random_range(0..total)).collect(),
            Sampling::WithoutReplacement => {
                if m as u64 > total {
                    return Err(Error::InvalidArgument(format!(
                        "cannot draw {m} distinct labels from {total}"
                    )));
                }
                rand::seq::index::sample(&mut rng, total as usize, m)
                    .into_iter()
                    .map(|i| i as u64)
                    .collect()
            }
        };
        let labels = indices
            .into_iter()
            .map(|idx| PauliLabel::from_index(k, idx))
            .collect::<Result<Vec<_>>>()?;
        let mut e = Self::from_labels(labels)?;
        e.seed = Some(seed);
        e.sampling = sampling;
        Ok(e)
    }

    /// Every word exactly once, in lexicographic order.
    pub fn complete(k: usize) -> Result<Self> {
        let labels = crate::pauli::enumerate_all(k)?;
        Self::from_labels(labels)
    }

    pub fn from_labels(labels: Vec<PauliLabel>) -> Result<Self> {
        let first = labels
            .first()
            .ok_or_else(|| Error::InvalidArgument("ensemble size m must be at least 1".into()))?;
        let k = first.num_qubits();
        if let Some(bad) = labels.iter().find(|l| l.num_qubits() != k) {
            return Err(Error::Dimension {
                expected: k,
                actual: bad.num_qubits(),
            });
        }
        let compiled = labels.iter().map(compile).collect();
        Ok(SensingEnsemble {
            k,
            labels,
            compiled,
            seed: None,
            sampling: Sampling::WithReplacement,
        })
    }

    pub fn from_record(record: &EnsembleRecord) -> Result<Self> {
        let labels = record
            .labels
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<PauliLabel>>>()?;
        if labels.len() != record.m {
            return Err(Error::Dimension {
                expected: record.m,
                actual: labels.len(),
            });
        }
        let mut e = Self::from_labels(labels)?;
        if e.k != record.k {
            return Err(Error::Dimension {
                expected: record.k,
                actual: e.k,
            });
        }
        e.seed = record.seed;
        e.sampling = record.sampling;
        Ok(e)
    }

    pub fn record(&self) -> EnsembleRecord {
        EnsembleRecord {
            k: self.k,
            m: self.len(),
            seed: self.seed,
            sampling: self.sampling,
            labels: self.labels.iter().map(|l| l.to_string()).collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn labels(&self) -> &[PauliLabel] {
        &self.labels
    }

    pub fn compiled(&self) -> &[CompiledPauli] {
        &self.compiled
    }

    /// `√(d/m)`.
    pub fn scale(&self) -> f64 {
        (self.dim() as f64 / self.len() as f64).sqrt()
    }

    /// Exact isometry constant over all Hermitian matrices:
    /// `max_P |n_P d²/m − 1|`, with `n_P` the multiplicity of Pauli `P` in the
    /// ensemble. An upper bound on every restricted constant `δ_r`; it is at
    /// least 1 unless every Pauli occurs.
    pub fn full_rank_isometry_constant(&self) -> f64 {
        let mut counts = std::collections::HashMap::new();
        for label in &self.labels {
            *counts.entry(label.index()).or_insert(0u64) += 1;
        }
        let d2 = (self.dim() * self.dim()) as f64;
        let m = self.len() as f64;
        let worst = counts.values().map(|&n| (n as f64 * d2 / m - 1.0).abs()).fold(0.0, f64::max);
        if (counts.len() as u128) < 1u128 << (2 * self.k) {
            worst.max(1.0)
        } else {
            worst
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: d,
            });
        }
        Ok(())
    }

    /// `A(X)` for a factored Hermitian `X`, in O(m·d·r).
    pub fn forward(&self, x: &RankRFactor) -> Result<DVector<f64>> {
        self.forward_lowrank(&x.scaled_u(), x.u())
    }

    /// `A(L R†)`, real part. `L R†` must be Hermitian for the result to be
    /// meaningful.
    pub fn forward_lowrank(&self, left: &DMatrix<C64>, right: &DMatrix<C64>) -> Result<DVector<f64>> {
        self.check_dim(left.nrows())?;
        self.check_dim(right.nrows())?;
        if left.ncols() != right.ncols() {
            return Err(Error::Dimension {
                expected: left.ncols(),
                actual: right.ncols(),
            });
        }
        let scale = self.scale();
        let cols = left.ncols();
        let out: Vec<f64> = self
            .compiled
            .par_iter()
            .map(|p| {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..cols {
                    acc += p.sandwich(right.column(c).as_slice(), left.column(c).as_slice());
                }
                scale * acc.re
            })
            .collect();
        Ok(DVector::from_vec(out))
    }

    /// `A(M)` for a dense Hermitian `M`, in O(m·d).
    pub fn forward_dense(&self, m: &DMatrix<C64>) -> Result<DVector<f64>> {
        self.check_dim(m.nrows())?;
        self.check_dim(m.ncols())?;
        let scale = self.scale();
        let d = self.dim();
        let out: Vec<f64> = self
            .compiled
            .par_iter()
            .map(|p| {
                // Tr(S M) = Σ_b φ(b) M[b, b ⊕ mask]
                let mask = p.flip_mask() as usize;
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..d {
                    acc += mul_i_pow(m[(b, b ^ mask)], p.phase_exponent(b));
                }
                scale * acc.re
            })
            .collect();
        Ok(DVector::from_vec(out))
    }

    /// `A†(y) = √(d/m) Σ_i y_i S_i`, dense. Exactly Hermitian: each
    /// contribution is a real scalar times a phase in `{±1, ±i}`, and the
    /// mirrored entries receive conjugate contributions in the same order.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<DMatrix<C64>> {
        if y.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: y.len(),
            });
        }
        let d = self.dim();
        let scale = self.scale();
        let mut out = DMatrix::<C64>::zeros(d, d);
        let data = out.as_mut_slice();
        for (p, &yi) in self.compiled.iter().zip(y.iter()) {
            let s = C64::new(scale * yi, 0.0);
            let mask = p.flip_mask() as usize;
            for col in 0..d {
                let row = col ^ mask;
                data[row + col * d] += mul_i_pow(s, p.phase_exponent(col));
            }
        }
        Ok(out)
    }
}

/// Result of [`rip_probe`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RipProbe {
    /// `max |‖A X‖² − 1|` over the sampled unit-Frobenius rank-r matrices.
    /// A lower bound on the true restricted isometry constant.
    pub delta_hat: f64,
    /// `‖A X‖² / ‖X‖_F²` for every trial.
    pub samples: Vec<f64>,
}

/// Empirical lower bound on the rank-`r` restricted isometry constant.
pub fn rip_probe(ensemble: &SensingEnsemble, r: usize, trials: usize, seed: u64) -> Result<RipProbe> {
    if trials == 0 {
        return Err(Error::InvalidArgument("rip probe needs at least one trial".into()));
    }
    if r == 0 || r > ensemble.dim() {
        return Err(Error::InvalidArgument(format!(
            "rank {r} out of range for d = {}",
            ensemble.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ensemble.dim();
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = random_orthonormal(d, r, &mut rng);
        let mut lambdas = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let n = lambdas.norm();
        lambdas /= n;
        let x = RankRFactor::new(u, lambdas)?;
        let ax = ensemble.forward(&x)?;
        samples.push(ax.norm_squared() / x.frobenius_norm_sq());
    }
    let delta_hat = samples.iter().fold(0.0f64, |acc, s| acc.max((s - 1.0).abs()));
    Ok(RipProbe { delta_hat, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_hermitian, random_orthonormal};

    fn random_factor(d: usize, r: usize, rng: &mut ChaCha8Rng) -> RankRFactor {
        let u = random_orthonormal(d, r, rng);
        let l = DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0));
        RankRFactor::new(u, l).unwrap()
    }

    #[test]
    fn full_rank_constant() {
        assert_eq!(SensingEnsemble::complete(2).unwrap().full_rank_isometry_constant(), 0.0);
        assert!(SensingEnsemble::sample(2, 10, 0).unwrap().full_rank_isometry_constant() >= 1.0);
        let mut labels = SensingEnsemble::complete(1).unwrap().labels().to_vec();
        labels.push("X".parse().unwrap());
        // n_X = 2 of m = 5 gives 2·4/5 − 1
        let e = SensingEnsemble::from_labels(labels).unwrap();
        assert!((e.full_rank_isometry_constant() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = SensingEnsemble::sample(3, 50, 9).unwrap();
        let b = SensingEnsemble::sample(3, 50, 9).unwrap();
        assert_eq!(a.labels(), b.labels());
        let c = SensingEnsemble::sample(3, 50, 10).unwrap();
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn hadamard6_protocol_size() {
        let e = SensingEnsemble::sample(6, 819, 1).unwrap();
        assert_eq!(e.len(), 819);
        assert_eq!(e.dim(), 64);
        assert!((e.scale() - (64.0f64 / 819.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_ensemble_rejected() {
        assert!(SensingEnsemble::sample(2, 0, 1).is_err());
        assert!(SensingEnsemble::from_labels(vec![]).is_err());
        let mixed = vec!["XX".parse().unwrap(), "X".parse().unwrap()];
        assert!(SensingEnsemble::from_labels(mixed).is_err());
    }

    #[test]
    fn without_replacement_is_distinct() {
        let e = SensingEnsemble::sample_with(2, 16, 4, Sampling::WithoutReplacement).unwrap();
        let set: std::collections::HashSet<_> = e.labels().iter().collect();
        assert_eq!(set.len(), 16);
        assert!(SensingEnsemble::sample_with(2, 17, 4, Sampling::WithoutReplacement).is_err());
    }

    #[test]
    fn uniform_label_frequencies() {
        // binomial concentration: each of 16 labels has p = 1/16
        let m = 100_000;
        let e = SensingEnsemble::sample(2, m, 2024).unwrap();
        let mut counts = [0usize; 16];
        for l in e.labels() {
            counts[l.index() as usize] += 1;
        }
        let band = 3.0 * 15f64.sqrt() / 16.0 / (m as f64).sqrt();
        for c in counts {
            let freq = c as f64 / m as f64;
            assert!((freq - 1.0 / 16.0).abs() <= band, "freq {freq}");
        }
    }

    #[test]
    fn forward_of_zero_and_identity() {
        let e = SensingEnsemble::sample(3, 20, 5).unwrap();
        let zero = RankRFactor::zeros(8, 2);
        assert_eq!(e.forward(&zero).unwrap(), DVector::zeros(20));

        let e = SensingEnsemble::from_labels(vec![PauliLabel::identity(3).unwrap()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_orthonormal(8, 2, &mut rng);
        let rho = RankRFactor::new(u, DVector::from_vec(vec![0.6, 0.4])).unwrap();
        let y = e.forward(&rho).unwrap();
        assert!((y[0] - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn forward_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = SensingEnsemble::sample(3, 20, 3).unwrap();
        let x = random_factor(8, 2, &mut rng);
        let dense = x.to_dense();
        let fast = e.forward(&x).unwrap();
        let via_dense = e.forward_dense(&dense).unwrap();
        for (i, label) in e.labels().iter().enumerate() {
            let oracle = e.scale() * (label.kron_dense() * &dense).trace().re;
            assert!((fast[i] - oracle).abs() < 1e-12);
            assert!((via_dense[i] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_zero_and_hermitian() {
        let e = SensingEnsemble::sample(3, 30, 8).unwrap();
        assert_eq!(e.adjoint(&DVector::zeros(30)).unwrap(), DMatrix::zeros(8, 8));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
        let m = e.adjoint(&y).unwrap();
        assert_eq!(crate::linalg::max_asymmetry(&m), 0.0);
        assert!(e.adjoint(&DVector::zeros(29)).is_err());
    }

    #[test]
    fn adjoint_matches_dense_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let e = SensingEnsemble::sample(2, 9, 8).unwrap();
        let y = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        let mut oracle = DMatrix::<C64>::zeros(4, 4);
        for (l, &yi) in e.labels().iter().zip(y.iter()) {
            oracle += l.kron_dense() * C64::new(e.scale() * yi, 0.0);
        }
        assert!((e.adjoint(&y).unwrap() - oracle).norm() < 1e-14);
    }

    #[test]
    fn adjointness_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 1..=3 {
            let e = SensingEnsemble::sample(k, 17, k as u64).unwrap();
            let d = 1 << k;
            let x = random_hermitian(d, &mut rng);
            let y = DVector::from_fn(17, |_, _| rng.random_range(-1.0..1.0));
            let lhs = e.forward_dense(&x).unwrap().dot(&y);
            let rhs = (&x * e.adjoint(&y).unwrap()).trace();
            assert!((lhs - rhs.re).abs() < 1e-12);
            assert!(rhs.im.abs() < 1e-12);
        }
    }

    #[test]
    fn complete_basis_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for k in 1..=3 {
            let e = SensingEnsemble::complete(k).unwrap();
            let d = 1 << k;
            let x = random_hermitian(d, &mut rng);
            let ax = e.forward_dense(&x).unwrap();
            assert!((ax.norm_squared() - x.norm_squared()).abs() < 1e-12 * x.norm_squared());
            let back = e.adjoint(&ax).unwrap();
            assert!((back - &x).norm() < 1e-12);
        }
    }

    #[test]
    fn record_round_trip_and_hash() {
        let e = SensingEnsemble::sample(4, 12, 77).unwrap();
        let rec = e.record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: EnsembleRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        let e2 = SensingEnsemble::from_record(&back).unwrap();
        assert_eq!(e2.labels(), e.labels());
        assert_eq!(e2.seed(), Some(77));
        assert_eq!(rec.hash(), e2.record().hash());
        assert_eq!(rec.hash().len(), 64);
    }

    #[test]
    fn rip_probe_complete_and_single() {
        let full = SensingEnsemble::complete(3).unwrap();
        let probe = rip_probe(&full, 2, 20, 1).unwrap();
        assert!(probe.delta_hat < 1e-12);
        assert_eq!(probe.samples.len(), 20);

        // a single Pauli captures one coefficient: ratio = d·Tr(SX)², far from 1
        let single = SensingEnsemble::sample(3, 1, 5).unwrap();
        let probe = rip_probe(&single, 1, 50, 2).unwrap();
        assert!(probe.delta_hat > 0.9, "{}", probe.delta_hat);
        assert!(rip_probe(&single, 1, 0, 2).is_err());
    }
}
