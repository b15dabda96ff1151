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

//! Small dense complex matrices and a cyclic Jacobi Hermitian eigensolver.
//!
//! Matrix constructors for Pauli operators here are built from Kronecker products of 2×2
//! blocks, independently of the bitmask algebra in [`crate::pauli`], so tests can use them
//! as an oracle. Qubit 0 is the least-significant bit of a row/column index.

use num_complex::Complex64;

use crate::pauli::{Pauli, PauliString, PauliSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    /// `self ⊗ other`, with `other` acting on the low-order index bits.
    pub fn kron(&self, other: &CMat) -> CMat {
        let (a, b) = (self.dim, other.dim);
        CMat::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        CMat { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        CMat { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &CMat) -> Complex64 {
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * other.data[k * d + i];
            }
        }
        acc
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

pub fn single_qubit_matrix(p: Pauli) -> CMat {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let data = match p {
        Pauli::I => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        Pauli::X => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        Pauli::Y => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        Pauli::Z => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
    };
    CMat { dim: 2, data: data.to_vec() }
}

/// Dense matrix of a Pauli string: `P_{n-1} ⊗ … ⊗ P_0`.
pub fn pauli_matrix(p: &PauliString) -> CMat {
    let mut m = CMat::identity(1);
    for q in (0..p.num_qubits()).rev() {
        m = m.kron(&single_qubit_matrix(p.letter(q)));
    }
    m
}

pub fn sum_matrix(sum: &PauliSum) -> CMat {
    let dim = 1usize << sum.num_qubits();
    sum.iter().fold(CMat::zeros(dim), |acc, t| {
        acc.add(&pauli_matrix(&t.string).scale(Complex64::new(t.coefficient, 0.0)))
    })
}

/// `exp(-iγP) = cos γ · I − i sin γ · P`.
pub fn pauli_rotation_matrix(p: &PauliString, gamma: f64) -> CMat {
    let dim = 1usize << p.num_qubits();
    CMat::identity(dim)
        .scale(Complex64::new(gamma.cos(), 0.0))
        .add(&pauli_matrix(p).scale(Complex64::new(0.0, -gamma.sin())))
}

pub fn cz_matrix(n: usize, a: usize, b: usize) -> CMat {
    let dim = 1usize << n;
    CMat::from_fn(dim, |i, j| {
        if i != j {
            ZERO
        } else if (i >> a) & 1 == 1 && (i >> b) & 1 == 1 {
            -ONE
        } else {
            ONE
        }
    })
}

/// Converged when the off-diagonal Frobenius norm falls below this, relative to `max(1, ‖A‖_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real symmetric embedding
/// `[[Re A, -Im A], [Im A, Re A]]`, whose spectrum is that of `A` with every value doubled.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let d = a.dim();
    if d == 0 {
        return Vec::new();
    }
    if d == 1 {
        return vec![a[(0, 0)].re];
    }
    let m = 2 * d;
    let mut s = vec![0.0; m * m];
    for i in 0..d {
        for j in 0..d {
            // symmetrize so a slightly non-Hermitian input still yields real eigenvalues
            let v = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            s[i * m + j] = v.re;
            s[(i + d) * m + (j + d)] = v.re;
            s[i * m + (j + d)] = -v.im;
            s[(i + d) * m + j] = v.im;
        }
    }
    let mut eig = symmetric_jacobi(&mut s, m);
    eig.sort_by(f64::total_cmp);
    eig.into_iter().step_by(2).collect()
}

fn off_diagonal_norm(s: &[f64], m: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                acc += s[i * m + j] * s[i * m + j];
            }
        }
    }
    acc.sqrt()
}

/// In-place cyclic Jacobi on a dense real symmetric `m × m` matrix; returns the diagonal.
fn symmetric_jacobi(s: &mut [f64], m: usize) -> Vec<f64> {
    let scale = s.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(s, m) < JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..m - 1 {
            for q in p + 1..m {
                let apq = s[p * m + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let akp = s[k * m + p];
                    let akq = s[k * m + q];
                    s[k * m + p] = c * akp - sn * akq;
                    s[k * m + q] = sn * akp + c * akq;
                }
                for k in 0..m {
                    let apk = s[p * m + k];
                    let aqk = s[q * m + k];
                    s[p * m + k] = c * apk - sn * aqk;
                    s[q * m + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| s[i * m + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMat {
        let g = CMat::from_fn(d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    #[test]
    fn pauli_matrices_little_endian() {
        // X on qubit 0 flips the least-significant bit
        let x0: PauliString = "XI".parse().unwrap();
        let m = pauli_matrix(&x0);
        assert_eq!(m[(1, 0)], ONE);
        assert_eq!(m[(2, 0)], ZERO);
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let z = single_qubit_matrix(Pauli::Z);
        assert_eq!(hermitian_eigenvalues(&z), vec![-1.0, 1.0]);
        let y = single_qubit_matrix(Pauli::Y);
        let e = hermitian_eigenvalues(&y);
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
        let d = CMat::from_real_diagonal(&[0.3, -2.0, 5.0]);
        let e = hermitian_eigenvalues(&d);
        assert!((e[0] + 2.0).abs() < 1e-14 && (e[1] - 0.3).abs() < 1e-14 && (e[2] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 3, 8, 16] {
            let a = random_hermitian(&mut rng, d);
            let e = hermitian_eigenvalues(&a);
            assert_eq!(e.len(), d);
            let tr: f64 = e.iter().sum();
            let fro: f64 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((tr - a.trace().re).abs() < 1e-10);
            assert!((fro - a.frobenius_norm()).abs() < 1e-10);
            // Tr A^3 as an independent moment check
            let a3 = a.matmul(&a).matmul(&a).trace().re;
            let e3: f64 = e.iter().map(|v| v * v * v).sum();
            assert!((a3 - e3).abs() < 1e-9);
        }
    }
}
