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

//! Classical shadows from random single-qubit Pauli measurements.
//!
//! Each shot picks X, Y or Z uniformly per qubit, rotates the state into that basis and samples
//! one bitstring. Estimators are the usual inverse-channel ones: a Pauli `P` of weight `k` gets
//! `Π 3·outcome_q` when every basis matches `P`, and zero otherwise.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::dense::{single_qubit_matrix, CMat};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::propagation::{self, PropagationError};
use crate::rng;
use crate::statevector::{self, StateError, StateVector};

pub const DEFAULT_GROUPS: usize = 10;

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error("shadow set is empty")]
    Empty,
    #[error("cannot split {samples} samples into {groups} groups")]
    BadGroups { samples: usize, groups: usize },
    #[error("dimension mismatch: shadows on {shadows} qubits, operand on {operand}")]
    DimensionMismatch { shadows: usize, operand: usize },
    #[error("malformed shadow CSV: {0}")]
    Format(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowSample {
    pub bases: Vec<Pauli>,
    /// `+1` for outcome bit 0, `-1` for bit 1.
    pub outcomes: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowSet {
    pub n: usize,
    pub seed: u64,
    pub samples: Vec<ShadowSample>,
}

const BASES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// Unitary taking the `letter` eigenbasis to the computational basis.
fn basis_change(letter: Pauli) -> Option<[Complex64; 4]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| Complex64::new(v, 0.0);
    match letter {
        // H
        Pauli::X => Some([r(h), r(h), r(h), r(-h)]),
        // H S†
        Pauli::Y => Some([r(h), Complex64::new(0.0, -h), r(h), Complex64::new(0.0, h)]),
        _ => None,
    }
}

fn measure_once(state: &StateVector, shot_seed: u64) -> ShadowSample {
    let n = state.num_qubits();
    let mut rng = rng::rng_from_seed(shot_seed);
    let bases: Vec<Pauli> = (0..n).map(|_| BASES[rng.random_range(0..3)]).collect();
    let mut rotated = state.clone();
    for (q, &b) in bases.iter().enumerate() {
        if let Some(u) = basis_change(b) {
            rotated.apply_single_qubit(q, u).expect("qubit in range");
        }
    }
    let k = rotated.sample_index(&mut rng);
    let outcomes = (0..n).map(|q| if (k >> q) & 1 == 0 { 1 } else { -1 }).collect();
    ShadowSample { bases, outcomes }
}

/// Collects `samples` shots; shot `i` uses seed `derive_seed(seed, i)`.
pub fn collect_shadows(state: &StateVector, samples: usize, seed: u64) -> ShadowSet {
    let shots: Vec<ShadowSample> = (0..samples)
        .into_par_iter()
        .map(|i| measure_once(state, rng::derive_seed(seed, i as u64)))
        .collect();
    ShadowSet { n: state.num_qubits(), seed, samples: shots }
}

pub fn collect_circuit_shadows(circuit: &Circuit, samples: usize, seed: u64) -> Result<ShadowSet, ShadowError> {
    Ok(collect_shadows(&statevector::run(circuit)?, samples, seed))
}

impl ShadowSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn check(&self, p: &PauliString) -> Result<(), ShadowError> {
        if p.num_qubits() != self.n {
            return Err(ShadowError::DimensionMismatch { shadows: self.n, operand: p.num_qubits() });
        }
        Ok(())
    }

    /// Single-shot estimates of `⟨P⟩`.
    pub fn single_shot_values(&self, p: &PauliString) -> Result<Vec<f64>, ShadowError> {
        self.check(p)?;
        let support: Vec<(usize, Pauli)> = p.support().into_iter().map(|q| (q, p.letter(q))).collect();
        Ok(self
            .samples
            .iter()
            .map(|s| {
                support.iter().fold(1.0, |acc, &(q, l)| {
                    if s.bases[q] == l {
                        acc * 3.0 * f64::from(s.outcomes[q])
                    } else {
                        0.0
                    }
                })
            })
            .collect())
    }

    pub fn mean_estimate(&self, p: &PauliString) -> Result<f64, ShadowError> {
        if self.is_empty() {
            return Err(ShadowError::Empty);
        }
        let v = self.single_shot_values(p)?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Median of `groups` group means; group sizes differ by at most one.
    pub fn estimate_pauli(&self, p: &PauliString, groups: usize) -> Result<f64, ShadowError> {
        let v = self.single_shot_values(p)?;
        median_of_means(&v, groups)
    }

    /// Shadow estimate of the reduced state on `subsystem`: the mean of
    /// `⊗_q (3|b_q⟩⟨b_q| − Id)`. Hermitian with unit trace; not necessarily positive.
    pub fn estimate_rdm(&self, subsystem: &[usize]) -> Result<CMat, ShadowError> {
        let mut keep = subsystem.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&q) = keep.iter().find(|&&q| q >= self.n) {
            return Err(ShadowError::DimensionMismatch { shadows: self.n, operand: q + 1 });
        }
        if keep.is_empty() {
            return Ok(CMat::identity(1));
        }
        if self.is_empty() {
            return Err(ShadowError::Empty);
        }
        let mut patterns: BTreeMap<Vec<(Pauli, i8)>, usize> = BTreeMap::new();
        for s in &self.samples {
            let key = keep.iter().map(|&q| (s.bases[q], s.outcomes[q])).collect();
            *patterns.entry(key).or_default() += 1;
        }
        let d = 1usize << keep.len();
        let mut acc = CMat::zeros(d);
        let total = self.samples.len() as f64;
        for (key, count) in patterns {
            // local bit i is keep[i], so the last qubit is the leftmost Kronecker factor
            let mut m = CMat::identity(1);
            for &(basis, outcome) in key.iter().rev() {
                let factor = CMat::identity(2)
                    .add(&single_qubit_matrix(basis).scale(Complex64::new(3.0 * f64::from(outcome), 0.0)))
                    .scale(Complex64::new(0.5, 0.0));
                m = m.kron(&factor);
            }
            acc = acc.add(&m.scale(Complex64::new(count as f64 / total, 0.0)));
        }
        Ok(acc)
    }

    /// Estimates `⟨V† O V⟩` for a circuit `V` applied after the measured state, by expanding
    /// `V† O V` exactly as a Pauli sum and estimating each string.
    pub fn estimate_through(&self, after: &Circuit, observable: &PauliSum, groups: usize) -> Result<f64, ShadowError> {
        let heis = propagation::heisenberg_exact(after, observable)?;
        let mut total = 0.0;
        for t in heis.sorted_terms() {
            total += t.coefficient * self.estimate_pauli(&t.string, groups)?;
        }
        Ok(total)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ShadowError> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<String> =
            (0..self.n).map(|q| format!("basis_{q}")).chain((0..self.n).map(|q| format!("out_{q}"))).collect();
        out.write_record(&header)?;
        for s in &self.samples {
            let row: Vec<String> = s
                .bases
                .iter()
                .map(|b| b.letter().to_string())
                .chain(s.outcomes.iter().map(|o| o.to_string()))
                .collect();
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, seed: u64) -> Result<ShadowSet, ShadowError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() % 2 != 0 {
            return Err(ShadowError::Format("odd column count".into()));
        }
        let n = headers.len() / 2;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bases = (0..n)
                .map(|q| {
                    rec[q].chars().next().and_then(Pauli::from_letter).filter(|p| *p != Pauli::I)
                        .ok_or_else(|| ShadowError::Format(format!("bad basis {:?}", &rec[q])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let outcomes = (0..n)
                .map(|q| match &rec[n + q] {
                    "1" => Ok(1),
                    "-1" => Ok(-1),
                    other => Err(ShadowError::Format(format!("bad outcome {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            samples.push(ShadowSample { bases, outcomes });
        }
        Ok(ShadowSet { n, seed, samples })
    }
}

pub fn median_of_means(values: &[f64], groups: usize) -> Result<f64, ShadowError> {
    if values.is_empty() {
        return Err(ShadowError::Empty);
    }
    if groups == 0 || groups > values.len() {
        return Err(ShadowError::BadGroups { samples: values.len(), groups });
    }
    let base = values.len() / groups;
    let extra = values.len() % groups;
    let mut means = Vec::with_capacity(groups);
    let mut start = 0;
    for g in 0..groups {
        let len = base + usize::from(g < extra);
        let chunk = &values[start..start + len];
        means.push(chunk.iter().sum::<f64>() / len as f64);
        start += len;
    }
    means.sort_by(f64::total_cmp);
    Ok(if groups % 2 == 1 {
        means[groups / 2]
    } else {
        0.5 * (means[groups / 2 - 1] + means[groups / 2])
    })
}
