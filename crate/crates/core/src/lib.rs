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

//! Simulation and analysis kernels for a continuous quantum generative model built from a shallow
//! random generative circuit followed by a log-depth trainable brick ansatz.
//!
//! The crate provides:
//! * [`pauli`]: bitmask Pauli algebra, CZ conjugation and the rotation split rule;
//! * [`circuit`]: the layered circuit IR, model builders and light cones;
//! * [`statevector`]: dense exact simulation, reduced states and parameter-shift gradients;
//! * [`metrics`]: distinguishability, entropy and Hilbert–Schmidt distances of reduced states;
//! * [`propagation`]: Heisenberg-picture Pauli propagation with truncation;
//! * [`shadows`]: classical-shadow estimation from random Pauli measurements;
//! * [`graph`]: interaction graphs and treewidth brackets;
//! * [`experiments`]: reproducible experiment drivers writing CSV reports and manifests.
//!
//! Rotations everywhere are `exp(-iγG)` with a Pauli generator `G`, and qubit 0 is the
//! least-significant bit of a basis index.

pub mod circuit;
pub mod dense;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod pauli;
pub mod propagation;
pub mod rng;
pub mod shadows;
pub mod statevector;

pub use num_complex::Complex64;

pub use circuit::{Circuit, EdgeRule, GenerativeSpec, Layer, LayerGraph, ParamInit, Tau2Preset};
pub use dense::CMat;
pub use experiments::{ExperimentConfig, ExperimentError, ExperimentId};
pub use graph::{EliminationOrder, InteractionGraph};
pub use metrics::DensityMatrix;
pub use pauli::{Pauli, PauliString, PauliSum, PauliTerm};
pub use propagation::{PropagationReport, TruncationPolicy, TruncationRule};
pub use shadows::{ShadowSample, ShadowSet};
pub use statevector::StateVector;
