//! k-qubit Pauli observables as signed permutations.
//!
//! A Pauli word `P_1 ⊗ … ⊗ P_k` maps every computational basis vector to a
//! single basis vector times a phase in `{±1, ±i}`:
//!
//! ```text
//! W |j⟩ = φ(j) |j ⊕ flip_mask⟩
//! ```
//!
//! where `flip_mask` has a bit set for every `X` or `Y` factor and `φ(j)` is
//! the product of per-qubit phases (`Y|0⟩ = i|1⟩`, `Y|1⟩ = −i|0⟩`,
//! `Z|1⟩ = −|1⟩`). Qubit 1 (the leftmost symbol) is the most significant bit
//! of the basis index, matching the kron order `P_1 ⊗ … ⊗ P_k`.
//!
//! Nothing here materializes a `d × d` matrix except [`CompiledPauli::to_dense`],
//! which exists for cross-checks.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::C64;

/// Largest qubit count a label may have (basis indices are `u64`).
pub const MAX_QUBITS: usize = 30;

/// Default cap for [`enumerate_all`].
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidSymbol(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn index(self) -> u64 {
        self as u64
    }

    /// The 2×2 matrix of this factor.
    pub fn matrix(self) -> DMatrix<C64> {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[one, o, o, one]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
        }
    }
}

/// A Pauli word over `k ≥ 1` qubits, e.g. `"XZIY"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel {
    word: Vec<Pauli>,
}

impl PauliLabel {
    pub fn new(word: Vec<Pauli>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if word.len() > MAX_QUBITS {
            return Err(Error::QubitCap {
                k: word.len(),
                cap: MAX_QUBITS,
            });
        }
        Ok(PauliLabel { word })
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(vec![Pauli::I; k])
    }

    /// Decodes a base-4 index (`I=0, X=1, Y=2, Z=3`, qubit 1 most significant).
    pub fn from_index(k: usize, mut index: u64) -> Result<Self> {
        let mut word = vec![Pauli::I; k];
        for slot in word.iter_mut().rev() {
            *slot = Pauli::ALL[(index & 3) as usize];
            index >>= 2;
        }
        Self::new(word)
    }

    /// Base-4 index; the inverse of [`PauliLabel::from_index`].
    pub fn index(&self) -> u64 {
        self.word.iter().fold(0, |acc, p| (acc << 2) | p.index())
    }

    pub fn num_qubits(&self) -> usize {
        self.word.len()
    }

    pub fn dim(&self) -> usize {
        1usize << self.word.len()
    }

    pub fn word(&self) -> &[Pauli] {
        &self.word
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.word.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn compile(&self) -> CompiledPauli {
        compile(self)
    }

    /// Dense kron product of the 2×2 factors. Test and diagnostics only.
    pub fn kron_dense(&self) -> DMatrix<C64> {
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for p in &self.word {
            acc = acc.kronecker(&p.matrix());
        }
        acc
    }
}

impl FromStr for PauliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let word = s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        PauliLabel::new(word)
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.word {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Signed-permutation form of a Pauli word.
///
/// The phase is not tabulated: `φ(j) = i^(n_Y) · (−1)^popcount(j & phase_mask)`,
/// with `phase_mask` marking the `Y` and `Z` factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompiledPauli {
    k: u32,
    flip_mask: u64,
    phase_mask: u64,
    y_count: u32,
}

/// Multiplies `c` by `i^e`. Exact in floating point.
#[inline]
pub(crate) fn mul_i_pow(c: C64, e: u8) -> C64 {
    match e & 3 {
        0 => c,
        1 => C64::new(-c.im, c.re),
        2 => C64::new(-c.re, -c.im),
        _ => C64::new(c.im, -c.re),
    }
}

pub fn compile(label: &PauliLabel) -> CompiledPauli {
    let k = label.num_qubits();
    let mut flip_mask = 0u64;
    let mut phase_mask = 0u64;
    let mut y_count = 0u32;
    for (q, p) in label.word().iter().enumerate() {
        let bit = 1u64 << (k - 1 - q);
        match p {
            Pauli::I => {}
            Pauli::X => flip_mask |= bit,
            Pauli::Y => {
                flip_mask |= bit;
                phase_mask |= bit;
                y_count += 1;
            }
            Pauli::Z => phase_mask |= bit,
        }
    }
    CompiledPauli {
        k: k as u32,
        flip_mask,
        phase_mask,
        y_count,
    }
}

impl CompiledPauli {
    pub fn num_qubits(&self) -> usize {
        self.k as usize
    }

    pub fn dim(&self) -> usize {
        1usize << self.k
    }

    pub fn flip_mask(&self) -> u64 {
        self.flip_mask
    }

    /// Exponent `e` with `φ(j) = i^e`.
    #[inline]
    pub fn phase_exponent(&self, j: usize) -> u8 {
        let parity = ((j as u64) & self.phase_mask).count_ones() & 1;
        ((self.y_count + 2 * parity) & 3) as u8
    }

    #[inline]
    pub fn phase(&self, j: usize) -> C64 {
        mul_i_pow(C64::new(1.0, 0.0), self.phase_exponent(j))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// `W v` in O(d).
    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        self.check_len(v.len())?;
        let mut out = DVector::zeros(v.len());
        self.apply_into(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// Writes `W src` into `dst`; both slices must have length `d`.
    pub fn apply_into(&self, src: &[C64], dst: &mut [C64]) {
        let mask = self.flip_mask as usize;
        for (j, &v) in src.iter().enumerate() {
            dst[j ^ mask] = mul_i_pow(v, self.phase_exponent(j));
        }
    }

    /// `⟨left| W |right⟩ = Σ_j conj(left[j ⊕ mask]) φ(j) right[j]`.
    #[inline]
    pub fn sandwich(&self, left: &[C64], right: &[C64]) -> C64 {
        let mask = self.flip_mask as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (j, &r) in right.iter().enumerate() {
            acc += left[j ^ mask].conj() * mul_i_pow(r, self.phase_exponent(j));
        }
        acc
    }

    /// `Tr(W X) = Σ_i λ_i ⟨u_i|W|u_i⟩` in O(d·r).
    pub fn expectation(&self, x: &RankRFactor) -> Result<f64> {
        self.check_len(x.dim())?;
        let mut acc = C64::new(0.0, 0.0);
        for (i, &lambda) in x.lambdas().iter().enumerate() {
            let col = x.u().column(i);
            acc += self.sandwich(col.as_slice(), col.as_slice()) * lambda;
        }
        let bound: f64 = x.lambdas().iter().map(|l| l.abs()).sum::<f64>().max(1.0);
        debug_assert!(
            acc.im.abs() <= 1e-10 * bound,
            "imaginary part {} in Hermitian expectation",
            acc.im
        );
        Ok(acc.re)
    }

    /// Dense `d × d` matrix. Test and diagnostics only.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mask = self.flip_mask as usize;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            m[(j ^ mask, j)] = self.phase(j);
        }
        m
    }
}

/// All `4^k` labels in lexicographic order (`I < X < Y < Z`).
pub fn enumerate_all(k: usize) -> Result<Vec<PauliLabel>> {
    enumerate_all_capped(k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_all_capped(k: usize, cap: usize) -> Result<Vec<PauliLabel>> {
    if k == 0 {
        return Err(Error::EmptyLabel);
    }
    if k > cap.min(MAX_QUBITS) {
        return Err(Error::QubitCap { k, cap });
    }
    (0..(1u64 << (2 * k)))
        .map(|idx| PauliLabel::from_index(k, idx))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis(d: usize, j: usize) -> DVector<C64> {
        let mut v = DVector::zeros(d);
        v[j] = c(1.0, 0.0);
        v
    }

    fn random_vec(d: usize, rng: &mut impl Rng) -> DVector<C64> {
        DVector::from_fn(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn parse_and_display() {
        let label: PauliLabel = "XZIY".parse().unwrap();
        assert_eq!(label.to_string(), "XZIY");
        assert_eq!(label.num_qubits(), 4);
        assert_eq!(label.weight(), 3);
        assert!(matches!("XQ".parse::<PauliLabel>(), Err(Error::InvalidSymbol('Q'))));
        assert!(matches!("x".parse::<PauliLabel>(), Err(Error::InvalidSymbol('x'))));
        assert!(matches!("".parse::<PauliLabel>(), Err(Error::EmptyLabel)));
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..64 {
            let label = PauliLabel::from_index(3, idx).unwrap();
            assert_eq!(label.index(), idx);
        }
    }

    #[test]
    fn x_maps_e0_to_e1() {
        let p = compile(&"X".parse().unwrap());
        assert_eq!(p.flip_mask(), 1);
        assert_eq!(p.phase(0), c(1.0, 0.0));
        assert_eq!(p.apply(&basis(2, 0)).unwrap(), basis(2, 1));
    }

    #[test]
    fn identity_word_is_trivial() {
        let p = compile(&PauliLabel::identity(4).unwrap());
        assert_eq!(p.flip_mask(), 0);
        for j in 0..16 {
            assert_eq!(p.phase(j), c(1.0, 0.0));
        }
    }

    #[test]
    fn zz_negates_01() {
        let p = compile(&"ZZ".parse().unwrap());
        let out = p.apply(&basis(4, 0b01)).unwrap();
        assert_eq!(out, -basis(4, 0b01));
        // dense kron oracle
        let dense = PauliLabel::from_str("ZZ").unwrap().kron_dense();
        assert_eq!(dense[(1, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn y_maps_e0_to_i_e1() {
        let p = compile(&"Y".parse().unwrap());
        let out = p.apply(&basis(2, 0)).unwrap();
        assert_eq!(out[1], c(0.0, 1.0));
        assert_eq!(out[0], c(0.0, 0.0));
    }

    #[test]
    fn compiled_matches_kron_exactly() {
        for k in 1..=3 {
            for label in enumerate_all(k).unwrap() {
                let p = compile(&label);
                assert_eq!(p.to_dense(), label.kron_dense(), "label {label}");
            }
        }
    }

    #[test]
    fn hermitian_phase_symmetry() {
        for label in enumerate_all(3).unwrap() {
            let p = compile(&label);
            for j in 0..8 {
                let jm = j ^ p.flip_mask() as usize;
                assert_eq!(p.phase(jm), p.phase(j).conj());
            }
        }
    }

    #[test]
    fn apply_matches_dense_and_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for label in enumerate_all(3).unwrap() {
            let p = compile(&label);
            let v = random_vec(8, &mut rng);
            let fast = p.apply(&v).unwrap();
            let dense = label.kron_dense() * &v;
            assert!((&fast - &dense).norm() <= 1e-14 * v.norm());
            let back = p.apply(&fast).unwrap();
            assert!((&back - &v).norm() < 1e-14);
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let p = compile(&"XX".parse().unwrap());
        assert!(matches!(
            p.apply(&DVector::zeros(3)),
            Err(Error::Dimension { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn enumeration_counts_and_order() {
        let one: Vec<String> = enumerate_all(1).unwrap().iter().map(|l| l.to_string()).collect();
        assert_eq!(one, ["I", "X", "Y", "Z"]);
        let two = enumerate_all(2).unwrap();
        assert_eq!(two.len(), 16);
        assert!(two.windows(2).all(|w| w[0].to_string() < w[1].to_string()));
        let three = enumerate_all(3).unwrap();
        let unique: std::collections::HashSet<_> = three.iter().collect();
        assert_eq!(unique.len(), 64);
        assert!(matches!(enumerate_all(9), Err(Error::QubitCap { k: 9, cap: 8 })));
        assert!(enumerate_all(0).is_err());
    }

    #[test]
    fn orthogonality_relation() {
        for k in 1..=3 {
            let d = 1usize << k;
            let dense: Vec<_> = enumerate_all(k).unwrap().iter().map(|l| compile(l).to_dense()).collect();
            for (i, a) in dense.iter().enumerate() {
                for (j, b) in dense.iter().enumerate() {
                    let tr = (a * b).trace();
                    let expected = if i == j { d as f64 } else { 0.0 };
                    assert_eq!(tr, c(expected, 0.0));
                }
            }
        }
    }

    #[test]
    fn bell_state_expectations() {
        let s = 1.0 / 2f64.sqrt();
        let u = DMatrix::from_column_slice(4, 1, &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let bell = RankRFactor::new(u.clone(), DVector::from_element(1, 1.0)).unwrap();
        let rho = &u * u.adjoint();
        for (word, want) in [("XX", 1.0), ("YY", -1.0), ("ZZ", 1.0), ("ZI", 0.0), ("II", 1.0)] {
            let label: PauliLabel = word.parse().unwrap();
            let got = compile(&label).expectation(&bell).unwrap();
            let oracle = (label.kron_dense() * &rho).trace().re;
            assert!((oracle - want).abs() < 1e-15);
            assert!((got - want).abs() < 1e-15, "{word}: {got}");
        }
    }
}
