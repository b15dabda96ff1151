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

//! Dense statevector simulation. Qubit 0 is the least-significant bit of an amplitude index.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng as _;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::dense::CMat;
use crate::metrics::DensityMatrix;
use crate::pauli::{PauliError, PauliString, PauliSum};
use crate::rng::Rng;

pub const MAX_STATEVECTOR_QUBITS: usize = 24;
pub const MAX_RDM_QUBITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("{0} qubits exceeds the statevector limit of {MAX_STATEVECTOR_QUBITS}")]
    TooManyQubits(usize),
    #[error("dimension mismatch: state has {state} qubits, operand has {operand}")]
    DimensionMismatch { state: usize, operand: usize },
    #[error("subsystem of {0} qubits exceeds the limit of {MAX_RDM_QUBITS}")]
    SubsystemTooLarge(usize),
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("parameter index {index} out of range ({len} parameters)")]
    ParamOutOfRange { index: usize, len: usize },
    #[error("amplitude vector length {0} is not a power of two or is not normalized")]
    BadAmplitudes(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// `i^{#Y} (-1)^{|z & k|}`: the phase `P` applies to basis state `|k⟩`.
#[inline]
fn basis_phase(y_phase: Complex64, z: usize, k: usize) -> Complex64 {
    if (z & k).count_ones() % 2 == 1 {
        -y_phase
    } else {
        y_phase
    }
}

fn y_phase(p: &PauliString) -> Complex64 {
    match (p.x_mask() & p.z_mask()).count_ones() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self, StateError> {
        if n > MAX_STATEVECTOR_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(StateError::BadAmplitudes(len));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_STATEVECTOR_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let s = Self { n, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(StateError::BadAmplitudes(len));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_string(&self, p: &PauliString) -> Result<(), StateError> {
        if p.num_qubits() != self.n {
            return Err(StateError::DimensionMismatch { state: self.n, operand: p.num_qubits() });
        }
        Ok(())
    }

    /// `|ψ⟩ ← exp(-iγP)|ψ⟩ = cos γ |ψ⟩ − i sin γ P|ψ⟩`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, angle: f64) -> Result<(), StateError> {
        self.check_string(p)?;
        let (c, s) = (angle.cos(), angle.sin());
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let yp = y_phase(p);
        let minus_is = Complex64::new(0.0, -s);
        if x == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                *a *= c + minus_is * basis_phase(yp, z, k);
            }
            return Ok(());
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for k in 0..self.amps.len() {
            if k & high != 0 {
                continue;
            }
            let j = k ^ x;
            let (ak, aj) = (self.amps[k], self.amps[j]);
            self.amps[k] = ak * c + minus_is * basis_phase(yp, z, j) * aj;
            self.amps[j] = aj * c + minus_is * basis_phase(yp, z, k) * ak;
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<(), StateError> {
        for q in [a, b] {
            if q >= self.n {
                return Err(StateError::QubitOutOfRange { qubit: q, n: self.n });
            }
        }
        let mask = (1usize << a) | (1usize << b);
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if k & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Applies a 2×2 unitary `[u00, u01, u10, u11]` (row-major) to `qubit`.
    pub fn apply_single_qubit(&mut self, qubit: usize, u: [Complex64; 4]) -> Result<(), StateError> {
        if qubit >= self.n {
            return Err(StateError::QubitOutOfRange { qubit, n: self.n });
        }
        let bit = 1usize << qubit;
        for k in 0..self.amps.len() {
            if k & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[k], self.amps[k | bit]);
            self.amps[k] = u[0] * a0 + u[1] * a1;
            self.amps[k | bit] = u[2] * a0 + u[3] * a1;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), StateError> {
        match gate.kind {
            GateKind::CZ => self.apply_cz(gate.qubits[0], gate.qubits[1]),
            _ => {
                let g = gate.generator(self.n)?.expect("rotation has a generator");
                self.apply_pauli_rotation(&g, gate.angle.unwrap_or(0.0))
            }
        }
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation_string(&self, p: &PauliString) -> Result<f64, StateError> {
        self.check_string(p)?;
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let yp = y_phase(p);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            acc += self.amps[k ^ x].conj() * basis_phase(yp, z, k) * a;
        }
        Ok(acc.re)
    }

    pub fn expectation(&self, sum: &PauliSum) -> Result<f64, StateError> {
        sum.iter().map(|t| Ok(t.coefficient * self.expectation_string(&t.string)?)).sum()
    }

    /// Reduced state on `subsystem`; the `i`-th listed qubit (after sorting) is bit `i` of the
    /// local index.
    pub fn reduced_density_matrix(&self, subsystem: &[usize]) -> Result<DensityMatrix, StateError> {
        let mut keep: Vec<usize> = subsystem.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.len() > MAX_RDM_QUBITS {
            return Err(StateError::SubsystemTooLarge(keep.len()));
        }
        if let Some(&q) = keep.iter().find(|&&q| q >= self.n) {
            return Err(StateError::QubitOutOfRange { qubit: q, n: self.n });
        }
        let rest: Vec<usize> = (0..self.n).filter(|q| !keep.contains(q)).collect();
        let m = keep.len();
        let d = 1usize << m;
        let deposit = |bits: usize, qubits: &[usize]| -> usize {
            qubits.iter().enumerate().fold(0, |acc, (i, &q)| acc | (((bits >> i) & 1) << q))
        };
        let local_offsets: Vec<usize> = (0..d).map(|a| deposit(a, &keep)).collect();
        let mut rho = CMat::zeros(d);
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for r in 0..1usize << rest.len() {
            let base = deposit(r, &rest);
            for (a, off) in local_offsets.iter().enumerate() {
                v[a] = self.amps[base | off];
            }
            for i in 0..d {
                if v[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    rho[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        Ok(DensityMatrix::from_matrix_unchecked(rho))
    }

    /// Basis index drawn by inverse CDF over `|a_k|²`.
    pub fn sample_index(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return k;
            }
        }
        // rounding left u above the accumulated total; take the last nonzero amplitude
        self.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }

    /// `[re, im]` pairs for debugging dumps.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        serde_json::to_string(&pairs).expect("amplitudes serialize")
    }
}

/// Applies every gate of `circuit` to `|0…0⟩`.
pub fn run(circuit: &Circuit) -> Result<StateVector, StateError> {
    run_with_theta(circuit, &circuit.theta)
}

/// Like [`run`], with `theta` overriding the circuit's trainable parameters.
pub fn run_with_theta(circuit: &Circuit, theta: &[f64]) -> Result<StateVector, StateError> {
    let mut state = StateVector::zero(circuit.n)?;
    apply_circuit(&mut state, circuit, theta)?;
    Ok(state)
}

pub fn apply_circuit(state: &mut StateVector, circuit: &Circuit, theta: &[f64]) -> Result<(), StateError> {
    if theta.len() != circuit.theta.len() {
        return Err(StateError::ParamOutOfRange { index: theta.len(), len: circuit.theta.len() });
    }
    for g in circuit.gates_with(theta) {
        state.apply_gate(&g)?;
    }
    Ok(())
}

/// `f(θ_ν + π/4) − f(θ_ν − π/4)` with `f = ⟨O⟩`; exact for `exp(-iθG)` with Pauli `G`.
pub fn parameter_shift_gradient(circuit: &Circuit, index: usize, observable: &PauliSum) -> Result<f64, StateError> {
    shifted_difference(circuit, index, observable, FRAC_PI_4)
}

/// `(f(θ_ν + h) − f(θ_ν − h)) / (2h)`.
pub fn finite_difference_gradient(circuit: &Circuit, index: usize, observable: &PauliSum, step: f64) -> Result<f64, StateError> {
    Ok(shifted_difference(circuit, index, observable, step)? / (2.0 * step))
}

fn shifted_difference(circuit: &Circuit, index: usize, observable: &PauliSum, shift: f64) -> Result<f64, StateError> {
    let len = circuit.theta.len();
    if index >= len {
        return Err(StateError::ParamOutOfRange { index, len });
    }
    let mut theta = circuit.theta.clone();
    theta[index] += shift;
    let plus = run_with_theta(circuit, &theta)?.expectation(observable)?;
    theta[index] -= 2.0 * shift;
    let minus = run_with_theta(circuit, &theta)?.expectation(observable)?;
    Ok(plus - minus)
}

/// Gradient of `⟨O⟩` with respect to `θ_ν`, with the trainable part applied to a prepared
/// input state (the generative state is reused across both shifts).
pub fn parameter_shift_on_state(
    input: &StateVector,
    trainable: &Circuit,
    index: usize,
    observable: &PauliSum,
) -> Result<f64, StateError> {
    let len = trainable.theta.len();
    if index >= len {
        return Err(StateError::ParamOutOfRange { index, len });
    }
    let mut theta = trainable.theta.clone();
    let eval = |theta: &[f64]| -> Result<f64, StateError> {
        let mut s = input.clone();
        apply_circuit(&mut s, trainable, theta)?;
        s.expectation(observable)
    };
    theta[index] += FRAC_PI_4;
    let plus = eval(&theta)?;
    theta[index] -= 2.0 * FRAC_PI_4;
    let minus = eval(&theta)?;
    Ok(plus - minus)
}
