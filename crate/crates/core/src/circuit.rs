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

//! Layered circuit IR and the two circuit families of the model.
//!
//! The generative circuit is `L` repetitions of (RX layer, random CZ layer) followed by a final
//! RX layer and RY layer, every angle drawn i.i.d. from `N(0, τ²)`. The trainable circuit is a
//! 1-D brick ansatz of 15-parameter two-qubit blocks. Every rotation is `exp(-iγG)` for a Pauli
//! generator `G`.

use std::collections::BTreeSet;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Pauli, PauliError, PauliString};
use crate::rng::{self, Rng};

/// Parameters per brick.
pub const BRICK_PARAMS: usize = 15;

/// Largest τ² accepted by the presets; the model needs τ² strictly below 1/4.
pub const TAU2_CAP: f64 = 0.2499;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("invalid layer {layer}: {reason}")]
    InvalidLayer { layer: usize, reason: String },
    #[error("parameter {0} is out of range or used more than once")]
    BadParamId(usize),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "gen")]
    Generative,
    #[serde(rename = "train")]
    Trainable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    RotX,
    RotY,
    RotZ,
    RotXX,
    RotYY,
    RotZZ,
    CZ,
}

impl GateKind {
    fn rotation(axis: Axis) -> Self {
        match axis {
            Axis::X => GateKind::RotX,
            Axis::Y => GateKind::RotY,
            Axis::Z => GateKind::RotZ,
        }
    }

    fn letter(self) -> Option<Pauli> {
        match self {
            GateKind::RotX | GateKind::RotXX => Some(Pauli::X),
            GateKind::RotY | GateKind::RotYY => Some(Pauli::Y),
            GateKind::RotZ | GateKind::RotZZ => Some(Pauli::Z),
            GateKind::CZ => None,
        }
    }
}

/// A resolved gate in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// Radians; `None` for CZ.
    pub angle: Option<f64>,
    pub role: Role,
    pub param_id: Option<usize>,
}

impl Gate {
    /// Pauli generator `G` of a rotation `exp(-iγG)`; `None` for CZ.
    pub fn generator(&self, n: usize) -> Result<Option<PauliString>, PauliError> {
        let Some(letter) = self.kind.letter() else {
            return Ok(None);
        };
        let letters: Vec<(usize, Pauli)> = self.qubits.iter().map(|&q| (q, letter)).collect();
        PauliString::from_letters(n, &letters).map(Some)
    }

    pub fn is_rotation(&self) -> bool {
        self.kind != GateKind::CZ
    }
}

/// One layer of the circuit, serialized with a `"type"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Layer {
    #[serde(rename = "rot")]
    Rotation { axis: Axis, role: Role, angles: Vec<f64> },
    #[serde(rename = "cz")]
    Cz { edges: Vec<[usize; 2]> },
    #[serde(rename = "brick")]
    Brick { pairs: Vec<[usize; 2]>, param_ids: Vec<[usize; BRICK_PARAMS]> },
}

/// Circuit on `n` qubits acting on `|0…0⟩`; `theta` holds the trainable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub theta: Vec<f64>,
    pub layers: Vec<Layer>,
}

/// Expands one brick into its 15 rotations in time order:
/// `u⊗u`, then XX, YY, ZZ, then `u⊗u`, where `u` applies Z, Y, Z.
fn brick_gates(a: usize, b: usize, ids: &[usize; BRICK_PARAMS], theta: &[f64], out: &mut Vec<Gate>) {
    use GateKind::*;
    let local = |q: usize| [(RotZ, vec![q]), (RotY, vec![q]), (RotZ, vec![q])];
    let template = local(a)
        .into_iter()
        .chain(local(b))
        .chain([(RotXX, vec![a, b]), (RotYY, vec![a, b]), (RotZZ, vec![a, b])])
        .chain(local(a))
        .chain(local(b));
    for ((kind, qubits), &id) in template.zip(ids) {
        out.push(Gate { kind, qubits, angle: Some(theta[id]), role: Role::Trainable, param_id: Some(id) });
    }
}

impl Circuit {
    pub fn empty(n: usize) -> Self {
        Self { n, theta: Vec::new(), layers: Vec::new() }
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        Self { theta, ..self.clone() }
    }

    /// Gates in application order, with brick angles resolved from `theta`.
    pub fn gates(&self) -> Vec<Gate> {
        self.gates_with(&self.theta)
    }

    pub fn gates_with(&self, theta: &[f64]) -> Vec<Gate> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Rotation { axis, role, angles } => {
                    for (q, &g) in angles.iter().enumerate() {
                        out.push(Gate {
                            kind: GateKind::rotation(*axis),
                            qubits: vec![q],
                            angle: Some(g),
                            role: *role,
                            param_id: None,
                        });
                    }
                }
                Layer::Cz { edges } => {
                    for &[a, b] in edges {
                        out.push(Gate { kind: GateKind::CZ, qubits: vec![a, b], angle: None, role: Role::Generative, param_id: None });
                    }
                }
                Layer::Brick { pairs, param_ids } => {
                    for (&[a, b], ids) in pairs.iter().zip(param_ids) {
                        brick_gates(a, b, ids, theta, &mut out);
                    }
                }
            }
        }
        out
    }

    pub fn rotation_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Rotation { angles, .. } => angles.len(),
                Layer::Cz { .. } => 0,
                Layer::Brick { pairs, .. } => pairs.len() * BRICK_PARAMS,
            })
            .sum()
    }

    /// This circuit followed by `other`; `other`'s parameter ids are shifted past ours.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        if self.n != other.n {
            return Err(CircuitError::InvalidSpec(format!("cannot compose {} and {} qubit circuits", self.n, other.n)));
        }
        let offset = self.theta.len();
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().map(|l| match l {
            Layer::Brick { pairs, param_ids } => Layer::Brick {
                pairs: pairs.clone(),
                param_ids: param_ids.iter().map(|ids| ids.map(|i| i + offset)).collect(),
            },
            other => other.clone(),
        }));
        let mut theta = self.theta.clone();
        theta.extend_from_slice(&other.theta);
        Ok(Circuit { n: self.n, theta, layers })
    }

    /// Splits at the first layer holding trainable gates: `(generative prefix, trainable rest)`.
    /// The rest keeps the full `theta`, so parameter ids stay valid.
    pub fn split_trainable(&self) -> (Circuit, Circuit) {
        let cut = self
            .layers
            .iter()
            .position(|l| matches!(l, Layer::Brick { .. } | Layer::Rotation { role: Role::Trainable, .. }))
            .unwrap_or(self.layers.len());
        let head = Circuit { n: self.n, theta: Vec::new(), layers: self.layers[..cut].to_vec() };
        let tail = Circuit { n: self.n, theta: self.theta.clone(), layers: self.layers[cut..].to_vec() };
        (head, tail)
    }

    /// Redraws every generative rotation angle i.i.d. from `N(0, τ²)`, in layer order.
    pub fn resample_generative(&self, tau2: f64, rng: &mut Rng) -> Result<Circuit, CircuitError> {
        let normal = gaussian(tau2)?;
        let mut out = self.clone();
        for layer in &mut out.layers {
            if let Layer::Rotation { role: Role::Generative, angles, .. } = layer {
                for a in angles.iter_mut() {
                    *a = normal.sample(rng);
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.n;
        let check = |q: usize| if q < n { Ok(()) } else { Err(CircuitError::QubitOutOfRange { qubit: q, n }) };
        let mut used = vec![false; self.theta.len()];
        for (li, layer) in self.layers.iter().enumerate() {
            let bad = |reason: &str| CircuitError::InvalidLayer { layer: li, reason: reason.to_string() };
            match layer {
                Layer::Rotation { angles, .. } => {
                    if angles.len() != n {
                        return Err(bad("rotation layer needs one angle per qubit"));
                    }
                    if angles.iter().any(|a| !a.is_finite()) {
                        return Err(bad("non-finite angle"));
                    }
                }
                Layer::Cz { edges } => {
                    let mut seen = BTreeSet::new();
                    for &[a, b] in edges {
                        check(a)?;
                        check(b)?;
                        if a == b {
                            return Err(bad("self-loop"));
                        }
                        if !seen.insert((a.min(b), a.max(b))) {
                            return Err(bad("duplicate edge"));
                        }
                    }
                }
                Layer::Brick { pairs, param_ids } => {
                    if pairs.len() != param_ids.len() {
                        return Err(bad("pairs and param_ids differ in length"));
                    }
                    let mut touched = BTreeSet::new();
                    for &[a, b] in pairs {
                        check(a)?;
                        check(b)?;
                        if a == b || !touched.insert(a) || !touched.insert(b) {
                            return Err(bad("brick supports overlap"));
                        }
                    }
                    for &id in param_ids.iter().flatten() {
                        if id >= used.len() || used[id] {
                            return Err(CircuitError::BadParamId(id));
                        }
                        used[id] = true;
                    }
                }
            }
        }
        if let Some(id) = used.iter().position(|u| !u) {
            return Err(CircuitError::BadParamId(id));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Circuit, CircuitError> {
        let c: Circuit = serde_json::from_str(s).map_err(|e| CircuitError::InvalidSpec(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

fn gaussian(tau2: f64) -> Result<Normal<f64>, CircuitError> {
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(CircuitError::InvalidSpec(format!("tau2 must be positive, got {tau2}")));
    }
    Normal::new(0.0, tau2.sqrt()).map_err(|e| CircuitError::InvalidSpec(e.to_string()))
}

/// Simple undirected graph on `n` vertices; edges stored as sorted `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerGraph {
    pub n: usize,
    edges: Vec<(usize, usize)>,
}

impl LayerGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CircuitError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(CircuitError::QubitOutOfRange { qubit: a.max(b), n });
            }
            if a == b {
                return Err(CircuitError::InvalidSpec(format!("self-loop at {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set.into_iter().collect() })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self { n, edges }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn union(&self, other: &LayerGraph) -> LayerGraph {
        let set: BTreeSet<_> = self.edges.iter().chain(&other.edges).copied().collect();
        LayerGraph { n: self.n.max(other.n), edges: set.into_iter().collect() }
    }

    pub fn to_cz_layer(&self) -> Layer {
        Layer::Cz { edges: self.edges.iter().map(|&(a, b)| [a, b]).collect() }
    }
}

/// Erdős–Rényi `G(n, p)`; pairs are visited in lexicographic order, one Bernoulli draw each.
pub fn sample_er_graph_with(n: usize, p: f64, rng: &mut Rng) -> Result<LayerGraph, CircuitError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CircuitError::InvalidSpec(format!("edge probability {p} outside [0, 1]")));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Ok(LayerGraph { n, edges })
}

pub fn sample_er_graph(n: usize, p: f64, seed: u64) -> Result<LayerGraph, CircuitError> {
    sample_er_graph_with(n, p, &mut rng::rng_from_seed(seed))
}

/// `ln(n) / n`, clamped to `[0, 1]`.
pub fn log_edge_probability(n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        ((n as f64).ln() / n as f64).min(1.0)
    }
}

/// Edge probability as a function of `n`. Serialized as `"log"` or `{"value": p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    Log,
    Value(f64),
}

impl EdgeRule {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            EdgeRule::Log => log_edge_probability(n),
            EdgeRule::Value(p) => p,
        }
    }
}

/// `⌈ln n⌉`, at least 1.
pub fn log_layer_count(n: usize) -> usize {
    ((n.max(2) as f64).ln().ceil() as usize).max(1)
}

/// `⌈log₂ n⌉`; 0 for `n ≤ 1`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Choice of the generative angle variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tau2Preset {
    /// Largest constant variance below 1/4.
    Constant,
    /// `min(0.2499, ln n / (16 S (L + 2)))` for observable weight `S`.
    Theorem,
    Value(f64),
}

/// Resolved τ² and whether it had to be clamped to [`TAU2_CAP`].
pub fn resolve_tau2(preset: Tau2Preset, n: usize, layers: usize, weight: usize) -> (f64, bool) {
    match preset {
        Tau2Preset::Constant => (TAU2_CAP, false),
        Tau2Preset::Theorem => {
            let raw = (n.max(1) as f64).ln() / (16.0 * weight.max(1) as f64 * (layers as f64 + 2.0));
            if raw >= 0.25 {
                log::warn!("theorem tau2 {raw:.4} is not below 1/4; clamped to {TAU2_CAP}");
                (TAU2_CAP, true)
            } else {
                (raw.min(TAU2_CAP), false)
            }
        }
        Tau2Preset::Value(v) => (v, false),
    }
}

/// Sampling specification of a generative circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerativeSpec {
    pub n: usize,
    pub layers: usize,
    pub p: f64,
    pub tau2: f64,
    pub seed: u64,
}

impl GenerativeSpec {
    /// Spec with `p = ln n / n` and `L = ⌈ln n⌉`.
    pub fn standard(n: usize, tau2: f64, seed: u64) -> Self {
        Self { n, layers: log_layer_count(n), p: log_edge_probability(n), tau2, seed }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(CircuitError::InvalidSpec(format!("p = {} outside [0, 1]", self.p)));
        }
        if !(self.tau2 > 0.0) {
            return Err(CircuitError::InvalidSpec(format!("tau2 = {} must be positive", self.tau2)));
        }
        if self.n == 0 {
            return Err(CircuitError::InvalidSpec("n must be positive".into()));
        }
        Ok(())
    }
}

/// Builds `L × [RX(γ); CZ(G(n,p))]` followed by `RX(γ); RY(γ)`.
pub fn build_generative(spec: &GenerativeSpec) -> Result<Circuit, CircuitError> {
    spec.validate()?;
    let normal = gaussian(spec.tau2)?;
    let mut rng = rng::rng_from_seed(spec.seed);
    let n = spec.n;
    let draw = |rng: &mut Rng| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
    let mut layers = Vec::with_capacity(2 * spec.layers + 2);
    for _ in 0..spec.layers {
        let angles = draw(&mut rng);
        layers.push(Layer::Rotation { axis: Axis::X, role: Role::Generative, angles });
        layers.push(sample_er_graph_with(n, spec.p, &mut rng)?.to_cz_layer());
    }
    let rx = draw(&mut rng);
    layers.push(Layer::Rotation { axis: Axis::X, role: Role::Generative, angles: rx });
    let ry = draw(&mut rng);
    layers.push(Layer::Rotation { axis: Axis::Y, role: Role::Generative, angles: ry });
    Ok(Circuit { n, theta: Vec::new(), layers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamInit {
    Uniform,
    Zeros,
}

/// Default brick depth `⌈log₂ n⌉`.
pub fn default_brick_depth(n: usize) -> usize {
    ceil_log2(n)
}

/// Pairs of brick layer `layer`: even layers start at qubit 0, odd layers at qubit 1.
pub fn brick_pairs(n: usize, layer: usize) -> Vec<[usize; 2]> {
    (layer % 2..n.saturating_sub(1)).step_by(2).map(|a| [a, a + 1]).collect()
}

/// `depth` brick layers on a chain of `n` qubits.
pub fn build_trainable(n: usize, depth: usize, seed: u64, init: ParamInit) -> Circuit {
    let mut layers = Vec::with_capacity(depth);
    let mut next = 0usize;
    for l in 0..depth {
        let pairs = brick_pairs(n, l);
        let param_ids = pairs
            .iter()
            .map(|_| {
                let ids = std::array::from_fn(|k| next + k);
                next += BRICK_PARAMS;
                ids
            })
            .collect();
        layers.push(Layer::Brick { pairs, param_ids });
    }
    let theta = match init {
        ParamInit::Zeros => vec![0.0; next],
        ParamInit::Uniform => {
            let mut rng = rng::rng_from_seed(seed);
            (0..next).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
        }
    };
    Circuit { n, theta, layers }
}

/// Backward light cone of `support` through `depth` brick layers of the chain ansatz.
pub fn brick_lightcone(n: usize, depth: usize, support: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut cone = support.clone();
    for l in (0..depth).rev() {
        for [a, b] in brick_pairs(n, l) {
            if cone.contains(&a) || cone.contains(&b) {
                cone.insert(a);
                cone.insert(b);
            }
        }
    }
    cone
}

/// Light cone through a whole circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightCone {
    /// `per_layer[l]`: qubits in the cone at the input of layer `l`.
    pub per_layer: Vec<BTreeSet<usize>>,
    pub qubits: BTreeSet<usize>,
}

impl LightCone {
    pub fn fraction(&self, n: usize) -> f64 {
        self.qubits.len() as f64 / n as f64
    }
}

/// Walks layers from last to first. CZ layers add graph neighbours of the current set,
/// brick layers add partners of touched pairs, rotation layers add nothing.
pub fn backward_lightcone(circuit: &Circuit, support: &BTreeSet<usize>) -> LightCone {
    let mut cone = support.clone();
    let mut per_layer = vec![BTreeSet::new(); circuit.layers.len()];
    for (l, layer) in circuit.layers.iter().enumerate().rev() {
        match layer {
            Layer::Rotation { .. } => {}
            Layer::Cz { edges } => {
                let mut grown = cone.clone();
                for &[a, b] in edges {
                    if cone.contains(&a) {
                        grown.insert(b);
                    }
                    if cone.contains(&b) {
                        grown.insert(a);
                    }
                }
                cone = grown;
            }
            Layer::Brick { pairs, .. } => {
                for &[a, b] in pairs {
                    if cone.contains(&a) || cone.contains(&b) {
                        cone.insert(a);
                        cone.insert(b);
                    }
                }
            }
        }
        per_layer[l] = cone.clone();
    }
    LightCone { per_layer, qubits: cone }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn er_extremes() {
        assert_eq!(sample_er_graph(10, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(sample_er_graph(10, 1.0, 1).unwrap().edge_count(), 45);
        assert!(sample_er_graph(10, 1.5, 1).is_err());
    }

    #[test]
    fn er_mean_edge_count() {
        // Binomial(C(16,2), p): mean of 10 000 draws has sd sqrt(120 p (1-p) / 10 000)
        let n = 16;
        let p = log_edge_probability(n);
        let trials = 10_000;
        let total: usize = (0..trials).map(|s| sample_er_graph(n, p, rng::derive_seed(99, s)).unwrap().edge_count()).sum();
        let mean = total as f64 / trials as f64;
        let expected = p * 120.0;
        assert!((expected - 20.79).abs() < 0.01);
        let sd = (120.0 * p * (1.0 - p) / trials as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sd, "mean {mean} vs {expected}");
    }

    #[test]
    fn generative_gate_counts() {
        let spec = GenerativeSpec { n: 4, layers: 2, p: 0.5, tau2: 0.1, seed: 3 };
        let c = build_generative(&spec).unwrap();
        c.validate().unwrap();
        assert_eq!(c.rotation_count(), 16);
        assert_eq!(c.layers.iter().filter(|l| matches!(l, Layer::Cz { .. })).count(), 2);
        assert!(matches!(c.layers.last(), Some(Layer::Rotation { axis: Axis::Y, .. })));
        assert!(matches!(c.layers[c.layers.len() - 2], Layer::Rotation { axis: Axis::X, .. }));
    }

    #[test]
    fn generative_is_deterministic() {
        let spec = GenerativeSpec { n: 7, layers: 3, p: 0.4, tau2: 0.2, seed: 77 };
        assert_eq!(build_generative(&spec).unwrap().to_json(), build_generative(&spec).unwrap().to_json());
        let other = GenerativeSpec { seed: 78, ..spec };
        assert_ne!(build_generative(&spec).unwrap(), build_generative(&other).unwrap());
    }

    #[test]
    fn generative_angle_variance() {
        // variance estimator over k = 1000 * 32 draws has sd ≈ τ² sqrt(2 / k)
        let tau2 = 0.2;
        let mut angles = Vec::new();
        for s in 0..1000 {
            let c = build_generative(&GenerativeSpec { n: 8, layers: 2, p: 0.3, tau2, seed: s }).unwrap();
            for l in &c.layers {
                if let Layer::Rotation { angles: a, .. } = l {
                    angles.extend_from_slice(a);
                }
            }
        }
        let k = angles.len() as f64;
        let mean = angles.iter().sum::<f64>() / k;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0);
        assert!((var - tau2).abs() < 3.0 * tau2 * (2.0 / k).sqrt(), "{var}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_generative(&GenerativeSpec { n: 4, layers: 1, p: 1.2, tau2: 0.1, seed: 0 }).is_err());
        assert!(build_generative(&GenerativeSpec { n: 4, layers: 1, p: 0.2, tau2: 0.0, seed: 0 }).is_err());
    }

    #[test]
    fn tau2_presets() {
        assert_eq!(resolve_tau2(Tau2Preset::Constant, 8, 2, 1), (0.2499, false));
        let (t, clamped) = resolve_tau2(Tau2Preset::Theorem, 8, 2, 1);
        assert!(!clamped);
        assert!((t - 8f64.ln() / 64.0).abs() < 1e-15);
        // ln(1e6)/(16·1·2) ≈ 0.43 ≥ 1/4
        assert_eq!(resolve_tau2(Tau2Preset::Theorem, 1_000_000, 0, 1), (TAU2_CAP, true));
    }

    #[test]
    fn trainable_param_counts() {
        let c = build_trainable(4, 2, 0, ParamInit::Uniform);
        c.validate().unwrap();
        assert_eq!(c.num_params(), 45);
        let c = build_trainable(2, 1, 0, ParamInit::Uniform);
        assert_eq!(c.num_params(), 15);
        assert!(c.theta.iter().all(|t| (-std::f64::consts::PI..std::f64::consts::PI).contains(t)));
        let z = build_trainable(5, 3, 0, ParamInit::Zeros);
        assert!(z.theta.iter().all(|&t| t == 0.0));
        assert_eq!(default_brick_depth(8), 3);
        assert_eq!(default_brick_depth(9), 4);
    }

    #[test]
    fn brick_parity() {
        assert_eq!(brick_pairs(5, 0), vec![[0, 1], [2, 3]]);
        assert_eq!(brick_pairs(5, 1), vec![[1, 2], [3, 4]]);
        assert!(brick_pairs(1, 0).is_empty());
    }

    #[test]
    fn brick_lightcone_cases() {
        let s: BTreeSet<usize> = [5].into();
        assert_eq!(brick_lightcone(10, 0, &s), s);
        assert_eq!(brick_lightcone(10, 1, &s), [4, 5].into());
        assert_eq!(brick_lightcone(10, 2, &s), [4, 5, 6, 7].into());
    }

    #[test]
    fn lightcone_basic_cases() {
        let c = build_generative(&GenerativeSpec { n: 6, layers: 3, p: 0.0, tau2: 0.1, seed: 1 }).unwrap();
        let s: BTreeSet<usize> = [2].into();
        assert_eq!(backward_lightcone(&c, &s).qubits, s);
        // star centred at 0
        let star = LayerGraph::new(6, (1..6).map(|b| (0, b))).unwrap();
        let c = Circuit { n: 6, theta: vec![], layers: vec![star.to_cz_layer()] };
        let cone = backward_lightcone(&c, &[0].into());
        assert_eq!(cone.qubits.len(), 6);
        assert_eq!(cone.per_layer[0].len(), 6);
    }

    #[test]
    fn compose_shifts_param_ids() {
        let a = build_trainable(4, 1, 1, ParamInit::Uniform);
        let b = build_trainable(4, 2, 2, ParamInit::Uniform);
        let c = a.compose(&b).unwrap();
        c.validate().unwrap();
        assert_eq!(c.num_params(), a.num_params() + b.num_params());
        assert_eq!(c.gates().len(), a.gates().len() + b.gates().len());
    }

    #[test]
    fn validate_catches_broken_layers() {
        let mut c = build_trainable(4, 2, 1, ParamInit::Zeros);
        c.theta.pop();
        assert!(c.validate().is_err());
        let c = Circuit { n: 3, theta: vec![], layers: vec![Layer::Cz { edges: vec![[0, 1], [1, 0]] }] };
        assert!(c.validate().is_err());
        let c = Circuit { n: 3, theta: vec![], layers: vec![Layer::Cz { edges: vec![[2, 2]] }] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_schema_shape() {
        let c = Circuit {
            n: 2,
            theta: vec![],
            layers: vec![
                Layer::Rotation { axis: Axis::X, role: Role::Generative, angles: vec![0.5, -0.25] },
                Layer::Cz { edges: vec![[0, 1]] },
            ],
        };
        assert_eq!(
            c.to_json(),
            r#"{"n":2,"theta":[],"layers":[{"type":"rot","axis":"X","role":"gen","angles":[0.5,-0.25]},{"type":"cz","edges":[[0,1]]}]}"#
        );
        assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(log_layer_count(100), 5);
        assert_eq!(log_layer_count(16), 3);
    }

    /// Gate-scan light cone: walk gates backwards, adding a gate's support whenever it meets the cone.
    fn gate_scan_cone(c: &Circuit, support: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut cone = support.clone();
        // gates within one brick layer have disjoint supports, but within a CZ layer the
        // growth uses the set at the layer's output, so scan layer by layer
        for layer in c.layers.iter().rev() {
            let sub = Circuit { n: c.n, theta: c.theta.clone(), layers: vec![layer.clone()] };
            let before = cone.clone();
            for g in sub.gates() {
                if g.qubits.len() == 2 && g.qubits.iter().any(|q| before.contains(q)) {
                    cone.extend(g.qubits.iter().copied());
                }
            }
        }
        cone
    }

    proptest! {
        #[test]
        fn constructed_circuits_satisfy_invariants(n in 1usize..9, layers in 0usize..4, p in 0.0f64..1.0, seed in any::<u64>(), depth in 0usize..5) {
            let g = build_generative(&GenerativeSpec { n, layers, p, tau2: 0.2, seed }).unwrap();
            prop_assert!(g.validate().is_ok());
            let t = build_trainable(n, depth, seed, ParamInit::Uniform);
            prop_assert!(t.validate().is_ok());
            prop_assert!(g.compose(&t).unwrap().validate().is_ok());
        }

        #[test]
        fn brick_cone_matches_gate_scan(n in 2usize..14, depth in 0usize..5, start in 0usize..14, len in 1usize..4) {
            let support: BTreeSet<usize> = (start..start + len).filter(|&q| q < n).collect();
            prop_assume!(!support.is_empty());
            let t = build_trainable(n, depth, 0, ParamInit::Zeros);
            let cone = brick_lightcone(n, depth, &support);
            prop_assert_eq!(&cone, &gate_scan_cone(&t, &support));
            prop_assert_eq!(&cone, &backward_lightcone(&t, &support).qubits);
            prop_assert!(cone.is_superset(&support));
            prop_assert!(cone.len() <= support.len() + 2 * depth);
        }

        #[test]
        fn lightcone_is_monotone(n in 2usize..20, seed in any::<u64>(), a in 0usize..20, b in 0usize..20) {
            let c = build_generative(&GenerativeSpec { n, layers: 2, p: 0.15, tau2: 0.1, seed }).unwrap();
            let small: BTreeSet<usize> = [a % n].into();
            let big: BTreeSet<usize> = [a % n, b % n].into();
            let cs = backward_lightcone(&c, &small).qubits;
            let cb = backward_lightcone(&c, &big).qubits;
            prop_assert!(cb.is_superset(&cs));
            prop_assert_eq!(&cs, &gate_scan_cone(&c, &small));
        }
    }

    #[test]
    fn split_at_first_trainable_layer() {
        let g = build_generative(&GenerativeSpec::standard(6, 0.1, 1)).unwrap();
        let t = build_trainable(6, 2, 2, ParamInit::Uniform);
        let (head, tail) = g.compose(&t).unwrap().split_trainable();
        assert_eq!(head, g);
        assert_eq!(tail, t);
        let (head, tail) = g.split_trainable();
        assert_eq!(head, g);
        assert!(tail.layers.is_empty());
    }
}
