// Copyright 2026 The qgm Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Pauli-string algebra on bitmasks.
//!
//! A string on `n` qubits is stored as two masks `x` and `z`; the letter on qubit `q` is
//! `(x_q, z_q)`: `(0,0) = I`, `(1,0) = X`, `(1,1) = Y`, `(0,1) = Z`. Phases never live on the
//! string itself; products return them separately and sums keep them in real coefficients.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest register a [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 128;

/// Terms with a smaller absolute coefficient are removed from a [`PauliSum`].
pub const DROP_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{0} qubits exceeds the supported maximum of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("unsupported rotation generator: {0}")]
    UnsupportedGenerator(String),
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A power of `i`: `i^k` for `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u32 {
        u32::from(self.0)
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `(re, im)` of the phase.
    pub fn to_pair(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u32,
    x: u128,
    z: u128,
}

fn width_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self, PauliError> {
        Self::from_masks(n, 0, 0)
    }

    pub fn from_masks(n: usize, x: u128, z: u128) -> Result<Self, PauliError> {
        if n > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        let m = width_mask(n);
        if x & !m != 0 || z & !m != 0 {
            return Err(PauliError::Parse(format!(
                "masks {x:#x}/{z:#x} wider than {n} qubits"
            )));
        }
        Ok(Self { n: n as u32, x, z })
    }

    /// A string with `letter` on `qubit` and identity elsewhere.
    pub fn single(n: usize, qubit: usize, letter: Pauli) -> Result<Self, PauliError> {
        Self::from_letters(n, &[(qubit, letter)])
    }

    pub fn from_letters(n: usize, letters: &[(usize, Pauli)]) -> Result<Self, PauliError> {
        let mut p = Self::identity(n)?;
        for &(q, l) in letters {
            p.set(q, l)?;
        }
        Ok(p)
    }

    /// Parses sparse notation such as `"Z0 X3"` or `"Z0Z1"` (letter followed by qubit index).
    pub fn from_sparse(n: usize, label: &str) -> Result<Self, PauliError> {
        let err = || PauliError::Parse(label.to_string());
        let mut p = Self::identity(n)?;
        let chars: Vec<char> = label.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
        let mut i = 0;
        while i < chars.len() {
            let letter = Pauli::from_letter(chars[i]).ok_or_else(err)?;
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(err());
            }
            let q: usize = chars[start..i].iter().collect::<String>().parse().map_err(|_| err())?;
            if q < n && p.letter(q) != Pauli::I {
                return Err(err());
            }
            p.set(q, letter)?;
        }
        Ok(p)
    }

    /// Accepts either a dense letter string of length `n` or sparse notation.
    pub fn parse_label(n: usize, label: &str) -> Result<Self, PauliError> {
        let trimmed = label.trim();
        if trimmed.len() == n && trimmed.chars().all(|c| "IXYZ".contains(c)) {
            let p: PauliString = trimmed.parse()?;
            return Ok(p);
        }
        Self::from_sparse(n, trimmed)
    }

    pub fn set(&mut self, qubit: usize, letter: Pauli) -> Result<(), PauliError> {
        if qubit >= self.num_qubits() {
            return Err(PauliError::QubitOutOfRange { qubit, n: self.num_qubits() });
        }
        let bit = 1u128 << qubit;
        let (x, z) = letter.bits();
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u128 {
        self.x
    }

    pub fn z_mask(&self) -> u128 {
        self.z
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        let bit = 1u128 << qubit;
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn support_mask(&self) -> u128 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        let s = self.support_mask();
        (0..self.num_qubits()).filter(|q| s >> q & 1 == 1).collect()
    }

    pub fn weight(&self) -> u32 {
        self.support_mask().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    /// True when the string lies in `{I, Z}^n`, i.e. is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Number of `Y` letters; `P = i^{ny} X^x Z^z`.
    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn check_same(&self, other: &Self) -> Result<(), PauliError> {
        if self.n != other.n {
            return Err(PauliError::DimensionMismatch {
                left: self.num_qubits(),
                right: other.num_qubits(),
            });
        }
        Ok(())
    }

    /// Product `self * other = phase * R`.
    pub fn multiply(&self, other: &Self) -> Result<(Phase, PauliString), PauliError> {
        self.check_same(other)?;
        Ok(self.multiply_unchecked(other))
    }

    pub(crate) fn multiply_unchecked(&self, other: &Self) -> (Phase, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let r = PauliString { n: self.n, x, z };
        // X^a Z^b X^c Z^d = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        let swaps = (self.z & other.x).count_ones();
        let k = 4 * 128 + self.y_count() + other.y_count() + 2 * swaps - r.y_count();
        (Phase::from_power(k), r)
    }

    pub fn commutes(&self, other: &Self) -> Result<bool, PauliError> {
        self.check_same(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let sym = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        sym.is_multiple_of(2)
    }

    /// `CZ_{ab} P CZ_{ab}` as `(sign, P')`.
    pub fn conjugate_cz(&self, a: usize, b: usize) -> Result<(f64, PauliString), PauliError> {
        let n = self.num_qubits();
        for q in [a, b] {
            if q >= n {
                return Err(PauliError::QubitOutOfRange { qubit: q, n });
            }
        }
        if a == b {
            return Err(PauliError::UnsupportedGenerator(format!("CZ on a single qubit {a}")));
        }
        Ok(self.conjugate_cz_unchecked(a, b))
    }

    pub(crate) fn conjugate_cz_unchecked(&self, a: usize, b: usize) -> (f64, PauliString) {
        let xa = (self.x >> a) & 1;
        let xb = (self.x >> b) & 1;
        let za = (self.z >> a) & 1;
        let zb = (self.z >> b) & 1;
        let sign = if xa & xb & (za ^ zb) == 1 { -1.0 } else { 1.0 };
        let z = self.z ^ (xb << a) ^ (xa << b);
        (sign, PauliString { n: self.n, x: self.x, z })
    }

    /// Replaces every non-identity letter by `Z`.
    pub fn z_substitute(&self) -> PauliString {
        PauliString { n: self.n, x: 0, z: self.support_mask() }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.letter(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Vec<char> = s.chars().collect();
        let mut p = PauliString::identity(letters.len())?;
        for (q, c) in letters.into_iter().enumerate() {
            let l = Pauli::from_letter(c).ok_or_else(|| PauliError::Parse(s.to_string()))?;
            p.set(q, l)?;
        }
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A Pauli string with a real coefficient and the number of sine factors it has picked up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    #[serde(rename = "coeff")]
    pub coefficient: f64,
    #[serde(rename = "pauli")]
    pub string: PauliString,
    #[serde(rename = "sines")]
    pub sine_count: u32,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        Self { coefficient, string, sine_count: 0 }
    }
}

/// Real linear combination of Pauli strings, keyed by string.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: FxHashMap<PauliString, PauliTerm>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        Self { n, terms: FxHashMap::default() }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        let mut terms = FxHashMap::default();
        terms.reserve(capacity);
        Self { n, terms }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = PauliTerm>,
    {
        let mut sum = Self::new(n);
        for t in terms {
            sum.add_term(t)?;
        }
        Ok(sum)
    }

    pub fn single(coefficient: f64, string: PauliString) -> Self {
        let mut sum = Self::new(string.num_qubits());
        sum.insert_merge(PauliTerm::new(coefficient, string));
        sum
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, p: &PauliString) -> Option<&PauliTerm> {
        self.terms.get(p)
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).map_or(0.0, |t| t.coefficient)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PauliTerm> {
        self.terms.values()
    }

    /// Terms ordered by their letter string; the order used for serialization.
    pub fn sorted_terms(&self) -> Vec<PauliTerm> {
        let mut v: Vec<PauliTerm> = self.terms.values().copied().collect();
        v.sort_by_cached_key(|t| t.string.to_string());
        v
    }

    pub fn add_term(&mut self, term: PauliTerm) -> Result<(), PauliError> {
        if term.string.num_qubits() != self.n {
            return Err(PauliError::DimensionMismatch {
                left: self.n,
                right: term.string.num_qubits(),
            });
        }
        self.insert_merge(term);
        Ok(())
    }

    /// Adds `term`, summing coefficients on collision; merged sine count is the minimum.
    pub(crate) fn insert_merge(&mut self, term: PauliTerm) {
        use std::collections::hash_map::Entry;
        match self.terms.entry(term.string) {
            Entry::Occupied(mut e) => {
                let t = e.get_mut();
                t.coefficient += term.coefficient;
                t.sine_count = t.sine_count.min(term.sine_count);
                if t.coefficient.abs() < DROP_THRESHOLD {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if term.coefficient.abs() >= DROP_THRESHOLD {
                    e.insert(term);
                }
            }
        }
    }

    pub(crate) fn into_terms(self) -> impl Iterator<Item = PauliTerm> {
        self.terms.into_values()
    }

    pub(crate) fn retain<F: FnMut(&PauliTerm) -> bool>(&mut self, mut keep: F) {
        self.terms.retain(|_, t| keep(t));
    }

    pub(crate) fn retain_mut<F: FnMut(&mut PauliTerm) -> bool>(&mut self, mut keep: F) {
        self.terms.retain(|_, t| keep(t));
    }

    pub(crate) fn remove(&mut self, p: &PauliString) -> Option<PauliTerm> {
        self.terms.remove(p)
    }

    /// Σ c², the squared norm in the normalized Pauli inner product.
    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|t| t.coefficient * t.coefficient).sum()
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.values().map(|t| t.string.weight()).max().unwrap_or(0)
    }

    /// Conjugation by `CZ_{ab}`; a permutation of strings up to sign, so no merging occurs.
    pub fn conjugate_cz(&self, a: usize, b: usize) -> Result<PauliSum, PauliError> {
        let mut out = PauliSum::new(self.n);
        out.terms.reserve(self.terms.len());
        for t in self.terms.values() {
            let (sign, s) = t.string.conjugate_cz(a, b)?;
            out.terms.insert(s, PauliTerm { coefficient: sign * t.coefficient, string: s, sine_count: t.sine_count });
        }
        Ok(out)
    }

    /// Heisenberg conjugation `R(γ)† O R(γ)` with `R(γ) = exp(-iγG)`.
    ///
    /// Terms commuting with `G` are unchanged; an anticommuting `P` becomes
    /// `cos(2γ) P + sin(2γ) (iGP)` and the sine branch gains one sine factor.
    pub fn conjugate_rotation(&self, generator: &PauliString, angle: f64) -> Result<PauliSum, PauliError> {
        check_generator(self.n, generator)?;
        let (c, s) = ((2.0 * angle).cos(), (2.0 * angle).sin());
        let mut out = PauliSum::new(self.n);
        out.terms.reserve(self.terms.len() * 2);
        for t in self.terms.values() {
            for branch in split_term(t, generator, c, s).into_iter().flatten() {
                out.insert_merge(branch);
            }
        }
        Ok(out)
    }

    /// Σ of coefficients over diagonal strings: `⟨0…0| O |0…0⟩`.
    pub fn expectation_zero_state(&self) -> f64 {
        self.terms.values().filter(|t| t.string.is_diagonal()).map(|t| t.coefficient).sum()
    }
}

pub(crate) fn check_generator(n: usize, generator: &PauliString) -> Result<(), PauliError> {
    if generator.num_qubits() != n {
        return Err(PauliError::DimensionMismatch { left: n, right: generator.num_qubits() });
    }
    if generator.is_identity() {
        return Err(PauliError::UnsupportedGenerator("identity".into()));
    }
    Ok(())
}

/// Applies the rotation split rule to one term. Returns the cosine branch (or the unchanged
/// term) and, for anticommuting terms, the sine branch.
#[inline]
pub(crate) fn split_term(t: &PauliTerm, generator: &PauliString, cos2: f64, sin2: f64) -> [Option<PauliTerm>; 2] {
    if t.string.commutes_unchecked(generator) {
        return [Some(*t), None];
    }
    let (phase, r) = generator.multiply_unchecked(&t.string);
    // G and P anticommute, so GP = ±i R and iGP = ∓R is Hermitian.
    let sign = if phase == Phase::I { -1.0 } else { 1.0 };
    debug_assert!(!phase.is_real());
    [
        Some(PauliTerm { coefficient: t.coefficient * cos2, string: t.string, sine_count: t.sine_count }),
        Some(PauliTerm { coefficient: sign * t.coefficient * sin2, string: r, sine_count: t.sine_count + 1 }),
    ]
}

#[derive(Serialize, Deserialize)]
struct SumRepr(Vec<PauliTerm>);

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SumRepr(self.sorted_terms()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let SumRepr(terms) = SumRepr::deserialize(deserializer)?;
        let n = terms.first().map_or(0, |t| t.string.num_qubits());
        let mut sum = PauliSum::new(n);
        for t in terms {
            sum.add_term(t).map_err(serde::de::Error::custom)?;
        }
        Ok(sum)
    }
}
