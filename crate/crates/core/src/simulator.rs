//! Shot-noise measurement simulation, counts decoding, and the measurement
//! noise bound.
//!
//! Each Pauli `S` is measured with the two-outcome POVM `{(I+S)/2, (I−S)/2}`;
//! `l` shots give the frequency average `f = (n₊ − n₋)/l` and the data entry
//! `y_i = √(d/m) f_i`. Every index draws from its own ChaCha stream
//! `(seed, i)`, so datasets do not depend on processing order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{CompiledPauli, Pauli, PauliLabel};
use crate::sensing::{EnsembleRecord, SensingEnsemble};
use crate::state::{DensityState, StateSpec};

const EXPECTATION_SLACK: f64 = 1e-9;

/// Exact expectations or `l` shots per Pauli.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Sampled(u64),
}

impl Shots {
    pub fn per_pauli(&self) -> Option<u64> {
        match self {
            Shots::Exact => None,
            Shots::Sampled(l) => Some(*l),
        }
    }
}

/// Number of `+1` and `−1` outcomes from `shots` two-outcome measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub plus: u64,
    pub minus: u64,
}

impl OutcomeCounts {
    pub fn frequency_average(&self) -> f64 {
        let total = self.plus + self.minus;
        (self.plus as f64 - self.minus as f64) / total as f64
    }
}

fn checked_expectation(state: &DensityState, pauli: &CompiledPauli) -> Result<f64> {
    checked_factor_expectation(state.factor(), pauli)
}

fn checked_factor_expectation(x: &crate::factor::RankRFactor, pauli: &CompiledPauli) -> Result<f64> {
    let t = pauli.expectation(x)?;
    if !t.is_finite() || t.abs() > 1.0 + EXPECTATION_SLACK {
        return Err(Error::InvalidExpectation(t));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// Draws `shots` i.i.d. outcomes with `P(+1) = (1 + Tr(Sρ))/2`. The number of
/// `+1`s is drawn directly from the binomial law.
pub fn sample_outcomes(
    state: &DensityState,
    pauli: &CompiledPauli,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<OutcomeCounts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots per Pauli must be at least 1".into()));
    }
    let t = checked_expectation(state, pauli)?;
    let p_plus = ((1.0 + t) / 2.0).clamp(0.0, 1.0);
    let plus = Binomial::new(shots, p_plus)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok(OutcomeCounts {
        plus,
        minus: shots - plus,
    })
}

/// Frequency average `f = (1/l) Σ_j z_j`, `z_j ∈ {±1}`; `E[f] = Tr(Sρ)`.
pub fn measure_pauli(state: &DensityState, pauli: &CompiledPauli, shots: u64, rng: &mut impl Rng) -> Result<f64> {
    Ok(sample_outcomes(state, pauli, shots, rng)?.frequency_average())
}

/// The RNG stream used for Pauli index `i` of a dataset with `seed`.
pub fn index_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub y: DVector<f64>,
    /// `None` for exact expectations.
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

impl MeasurementVector {
    pub fn is_exact(&self) -> bool {
        self.shots.is_none()
    }
}

/// `y = A(ρ)` (exact) or `y_i = √(d/m) f_i` (sampled).
pub fn build_measurement(
    state: &DensityState,
    ensemble: &SensingEnsemble,
    shots: Shots,
    seed: u64,
) -> Result<MeasurementVector> {
    if state.dim() != ensemble.dim() {
        return Err(Error::Dimension {
            expected: ensemble.dim(),
            actual: state.dim(),
        });
    }
    match shots {
        Shots::Exact => Ok(MeasurementVector {
            y: ensemble.forward(state.factor())?,
            shots: None,
            seed: None,
        }),
        Shots::Sampled(l) => {
            let scale = ensemble.scale();
            let y = ensemble
                .compiled()
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = index_rng(seed, i);
                    measure_pauli(state, p, l, &mut rng).map(|f| scale * f)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(MeasurementVector {
                y: DVector::from_vec(y),
                shots: Some(l),
                seed: Some(seed),
            })
        }
    }
}

/// Which computational-basis bit maps to the `+1` eigenvalue of a
/// non-identity factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Convention {
    /// `0 ↦ +1`, `1 ↦ −1`; the outcome sign is `(−1)^χ`.
    #[default]
    #[serde(rename = "std")]
    Standard,
    /// `1 ↦ +1`, `0 ↦ −1`; the outcome sign is `(−1)^(w − χ)` with `w` the
    /// label weight.
    #[serde(rename = "paper")]
    Flipped,
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" => Ok(Convention::Standard),
            "paper" => Ok(Convention::Flipped),
            other => Err(Error::InvalidArgument(format!(
                "unknown convention {other:?} (expected std or paper)"
            ))),
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Standard => "std",
            Convention::Flipped => "paper",
        })
    }
}

/// `χ(l)`: number of `1` bits on the non-identity positions of `label`.
/// Bit `i` of the string is qubit `i + 1` of the label.
fn chi(bits: &str, label: &PauliLabel) -> Result<u32> {
    if bits.len() != label.num_qubits() {
        return Err(Error::MalformedBitstring(bits.to_string()));
    }
    let mut chi = 0;
    for (b, p) in bits.chars().zip(label.word()) {
        let bit = match b {
            '0' => 0,
            '1' => 1,
            _ => return Err(Error::MalformedBitstring(bits.to_string())),
        };
        if *p != Pauli::I {
            chi += bit;
        }
    }
    Ok(chi)
}

/// Estimates `Tr(Sρ)` from bitstring counts:
/// `(1/N) Σ_l count(l) · sign(l)` with `N` the total count.
pub fn decode_counts(counts: &BTreeMap<String, u64>, label: &PauliLabel, convention: Convention) -> Result<f64> {
    let weight = label.weight() as u32;
    let mut total = 0u64;
    let mut signed = 0i128;
    for (bits, &count) in counts {
        let chi = chi(bits, label)?;
        let exponent = match convention {
            Convention::Standard => chi,
            Convention::Flipped => weight - chi,
        };
        let sign = if exponent % 2 == 0 { 1 } else { -1 };
        signed += sign * count as i128;
        total += count;
    }
    if total == 0 {
        return Err(Error::ZeroCounts);
    }
    Ok(signed as f64 / total as f64)
}

/// Resolves two-outcome results into per-qubit bitstrings that decode back
/// to the same frequency average.
pub fn outcomes_to_counts(
    outcomes: OutcomeCounts,
    label: &PauliLabel,
    convention: Convention,
) -> Result<BTreeMap<String, u64>> {
    let k = label.num_qubits();
    let plus_fill = match convention {
        Convention::Standard => '0',
        Convention::Flipped => '1',
    };
    let plus: String = label
        .word()
        .iter()
        .map(|p| if *p == Pauli::I { '0' } else { plus_fill })
        .collect();
    let mut counts = BTreeMap::new();
    if outcomes.plus > 0 {
        counts.insert(plus.clone(), outcomes.plus);
    }
    if outcomes.minus > 0 {
        let first = label
            .word()
            .iter()
            .position(|p| *p != Pauli::I)
            .ok_or_else(|| Error::InvalidArgument("identity observable cannot produce a −1 outcome".into()))?;
        let mut minus: Vec<char> = plus.chars().collect();
        minus[first] = if minus[first] == '0' { '1' } else { '0' };
        counts.insert(minus.into_iter().collect(), outcomes.minus);
    }
    debug_assert!(counts.keys().all(|b| b.len() == k));
    Ok(counts)
}

/// Noise level guaranteed (with probability `≥ 1 − d^(1−C)`) for
/// `‖A†(z)‖ ≤ λ`: `λ = √(C d (d+1) ln d / (m l))`.
pub fn noise_bound_lambda(d: usize, m: usize, shots: u64, c: f64) -> f64 {
    let d = d as f64;
    (c * d * (d + 1.0) * d.ln() / (m as f64 * shots as f64)).sqrt()
}

/// Smallest `l` with `noise_bound_lambda(d, m, l, c) ≤ lambda`.
pub fn shots_for_lambda(d: usize, m: usize, lambda: f64, c: f64) -> u64 {
    let df = d as f64;
    let l = (c * df * (df + 1.0) * df.ln() / (m as f64 * lambda * lambda)).ceil() as u64;
    l.max(1)
}

/// Failure probability `d^(1−C)` attached to the bound.
pub fn noise_bound_failure_probability(d: usize, c: f64) -> f64 {
    (d as f64).powf(1.0 - c)
}

/// A dataset on disk: measurements plus the ensemble that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub ensemble: EnsembleRecord,
    pub y: Vec<f64>,
    pub shots: Option<u64>,
    pub exact: bool,
    pub seed: Option<u64>,
    /// Ground truth, when the data was simulated.
    #[serde(default)]
    pub truth: Option<StateSpec>,
}

impl Dataset {
    pub fn new(ensemble: &SensingEnsemble, measurement: &MeasurementVector, truth: Option<StateSpec>) -> Self {
        Dataset {
            ensemble: ensemble.record(),
            y: measurement.y.iter().copied().collect(),
            shots: measurement.shots,
            exact: measurement.is_exact(),
            seed: measurement.seed,
            truth,
        }
    }

    /// Rebuilds the ensemble and the measurement vector.
    pub fn parts(&self) -> Result<(SensingEnsemble, MeasurementVector)> {
        let ensemble = SensingEnsemble::from_record(&self.ensemble)?;
        if self.y.len() != ensemble.len() {
            return Err(Error::Dimension {
                expected: ensemble.len(),
                actual: self.y.len(),
            });
        }
        let mv = MeasurementVector {
            y: DVector::from_column_slice(&self.y),
            shots: self.shots,
            seed: self.seed,
        };
        Ok((ensemble, mv))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One measured observable in a counts file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsEntry {
    pub label: String,
    pub counts: BTreeMap<String, u64>,
}

/// Ingestion format for externally collected bitstring counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub k: usize,
    pub shots: u64,
    #[serde(default)]
    pub convention: Convention,
    pub measurements: Vec<CountsEntry>,
}

impl CountsFile {
    /// Decodes every entry into `y_i = √(d/m) · estimate_i`.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let labels = self
            .measurements
            .iter()
            .map(|m| m.label.parse::<PauliLabel>())
            .collect::<Result<Vec<_>>>()?;
        let ensemble = SensingEnsemble::from_labels(labels)?;
        if ensemble.num_qubits() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                actual: ensemble.num_qubits(),
            });
        }
        let scale = ensemble.scale();
        let y = self
            .measurements
            .iter()
            .zip(ensemble.labels())
            .map(|(entry, label)| decode_counts(&entry.counts, label, self.convention).map(|f| scale * f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            ensemble: ensemble.record(),
            y,
            shots: Some(self.shots),
            exact: false,
            seed: None,
            truth: None,
        })
    }
}
