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

//! Subsystem metrics: distance from the maximally mixed state, von Neumann entropy (in bits),
//! the weak-subvolume gap `m − S`, and the Hilbert–Schmidt distance from the normalized identity.

use num_complex::Complex64;
use thiserror::Error;

use crate::dense::CMat;

/// Eigenvalues at or below this count as zero in the entropy.
pub const ENTROPY_EIGEN_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
}

/// Hermitian, unit-trace state on `m` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMat,
}

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self, MetricsError> {
        if !m.dim().is_power_of_two() {
            return Err(MetricsError::NotQubitDimension(m.dim()));
        }
        let herm = m.hermiticity_error();
        if herm > 1e-10 {
            return Err(MetricsError::NotHermitian(herm));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(MetricsError::BadTrace(tr));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let d = 1usize << qubits;
        Self { m: CMat::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0)) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn num_qubits(&self) -> usize {
        self.m.dim().trailing_zeros() as usize
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.m.hermitian_eigenvalues()
    }

    /// `ρ − Id/d`.
    pub fn deviation_from_mixed(&self) -> CMat {
        let d = self.dim();
        self.m.sub(&CMat::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0)))
    }
}

/// Schatten-1 norm of a Hermitian matrix.
pub fn trace_norm(a: &CMat) -> f64 {
    a.hermitian_eigenvalues().iter().map(|e| e.abs()).sum()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn operator_norm(a: &CMat) -> f64 {
    a.hermitian_eigenvalues().iter().map(|e| e.abs()).fold(0.0, f64::max)
}

/// `I_Λ(ρ) = ‖ρ − Id/2^m‖₁`, in `[0, 2]`.
pub fn distinguishability(rho: &DensityMatrix) -> f64 {
    trace_norm(&rho.deviation_from_mixed())
}

/// `−Σ λ log₂ λ` over eigenvalues above [`ENTROPY_EIGEN_CUTOFF`].
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > ENTROPY_EIGEN_CUTOFF)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// `m − S(ρ)` for a state on `m` qubits.
pub fn weak_subvolume_gap(rho: &DensityMatrix, qubits: usize) -> f64 {
    qubits as f64 - von_neumann_entropy(rho)
}

/// `ε(A) = ‖A − tr(A) Id / dim‖₂`.
pub fn hs_distance(a: &CMat) -> f64 {
    let d = a.dim();
    if d == 0 {
        return 0.0;
    }
    let shift = a.trace() / d as f64;
    a.sub(&CMat::identity(d).scale(shift)).frobenius_norm()
}

/// Second-order expansion of the gap near the maximally mixed state:
/// `m − S ≈ d / (2 ln 2) · ‖ρ − Id/d‖₂²`.
pub fn gap_quadratic_approximation(rho: &DensityMatrix) -> f64 {
    let d = rho.dim() as f64;
    let dev = rho.deviation_from_mixed().frobenius_norm();
    d / (2.0 * std::f64::consts::LN_2) * dev * dev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{pauli_matrix, single_qubit_matrix};
    use crate::pauli::Pauli;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pure_qubit() -> DensityMatrix {
        // |+⟩⟨+|
        DensityMatrix::new(CMat::from_fn(2, |_, _| c(0.5))).unwrap()
    }

    #[test]
    fn distinguishability_values() {
        assert!(distinguishability(&DensityMatrix::maximally_mixed(3)).abs() < 1e-10);
        assert!((distinguishability(&pure_qubit()) - 1.0).abs() < 1e-10);
        let d = DensityMatrix::new(CMat::from_real_diagonal(&[0.75, 0.25])).unwrap();
        assert!((distinguishability(&d) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn entropy_values() {
        assert!(von_neumann_entropy(&pure_qubit()).abs() < 1e-10);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(3)) - 3.0).abs() < 1e-10);
        let d = DensityMatrix::new(CMat::from_real_diagonal(&[0.75, 0.25])).unwrap();
        let closed_form = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((von_neumann_entropy(&d) - closed_form).abs() < 1e-10);
        assert!((von_neumann_entropy(&d) - 0.8112781245).abs() < 1e-10);
    }

    #[test]
    fn gap_values() {
        assert!(weak_subvolume_gap(&DensityMatrix::maximally_mixed(2), 2).abs() < 1e-10);
        assert!((weak_subvolume_gap(&pure_qubit(), 1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gap_near_mixed_matches_quadratic_form() {
        let eps = 0.01;
        let rho = DensityMatrix::new(CMat::from_real_diagonal(&[
            (1.0 + eps) / 4.0,
            (1.0 - eps) / 4.0,
            (1.0 + eps) / 4.0,
            (1.0 - eps) / 4.0,
        ]))
        .unwrap();
        let gap = weak_subvolume_gap(&rho, 2);
        let approx = gap_quadratic_approximation(&rho);
        assert!(gap >= 0.0);
        assert!((gap - approx).abs() <= 0.05 * approx, "{gap} vs {approx}");
    }

    #[test]
    fn hs_distance_values() {
        assert!(hs_distance(&CMat::identity(4)).abs() < 1e-15);
        let z = single_qubit_matrix(Pauli::Z);
        assert!((hs_distance(&z) - 2f64.sqrt()).abs() < 1e-15);
        assert!((hs_distance(pure_qubit().matrix()) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_states() {
        assert!(matches!(DensityMatrix::new(CMat::from_real_diagonal(&[0.5, 0.6])), Err(MetricsError::BadTrace(_))));
        assert!(DensityMatrix::new(CMat::identity(3)).is_err());
        let mut m = CMat::from_real_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c(0.2);
        assert!(matches!(DensityMatrix::new(m), Err(MetricsError::NotHermitian(_))));
    }

    #[test]
    fn pauli_duality_on_one_qubit() {
        // Bloch vector r: I = |r|, Tr(σρ) = r_σ
        let r = [0.3, -0.4, 0.5];
        let id = CMat::identity(2);
        let mut m = id.scale(c(0.5));
        for (k, l) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            m = m.add(&single_qubit_matrix(l).scale(c(r[k] / 2.0)));
        }
        let rho = DensityMatrix::new(m).unwrap();
        let norm = (r.iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!((distinguishability(&rho) - norm).abs() < 1e-12);
        let zz: crate::pauli::PauliString = "Z".parse().unwrap();
        assert!((pauli_matrix(&zz).trace_product(rho.matrix()).re - 0.5).abs() < 1e-12);
    }
}
