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

//! Heisenberg-picture Pauli propagation with truncation.
//!
//! The observable is conjugated gate by gate from the last gate of the circuit to the first,
//! so the result is `U† O U` expressed as a Pauli sum, and the expectation on `|0…0⟩` is the sum
//! of diagonal coefficients. Truncation is applied after every rotation gate. Step `k` of the
//! propagation processes the `k`-th gate counted from the end of the circuit; dynamic schedule
//! keys refer to these step indices.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, Circuit, GateKind, GenerativeSpec, ParamInit, Tau2Preset};
use crate::pauli::{check_generator, split_term, PauliError, PauliString, PauliSum, PauliTerm};
use crate::rng;
use crate::statevector::{self, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("term limit {limit} exceeded in exact mode after {} steps", partial.terms_per_step.len())]
    ResourceLimit { limit: usize, partial: Box<PropagationReport> },
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("observable coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
}

/// Truncation criteria; every `None` field is inactive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationRule {
    /// Drop terms with more than this many sine factors.
    pub sine_cutoff: Option<u32>,
    /// Drop terms with `|c|` below this.
    pub coeff_threshold: Option<f64>,
    /// Drop terms acting on more than this many qubits.
    pub weight_cutoff: Option<u32>,
    /// Keep only this many largest-`|c|` terms.
    pub max_terms: Option<usize>,
}

impl TruncationRule {
    pub fn is_empty(&self) -> bool {
        self.sine_cutoff.is_none() && self.coeff_threshold.is_none() && self.weight_cutoff.is_none() && self.max_terms.is_none()
    }

    fn drops(&self, t: &PauliTerm) -> bool {
        self.sine_cutoff.is_some_and(|m| t.sine_count > m)
            || self.coeff_threshold.is_some_and(|e| t.coefficient.abs() < e)
            || self.weight_cutoff.is_some_and(|w| t.string.weight() > w)
    }

    fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(m) = self.sine_cutoff {
            parts.push(format!("sines<={m}"));
        }
        if let Some(e) = self.coeff_threshold {
            parts.push(format!("coeff>={e:e}"));
        }
        if let Some(w) = self.weight_cutoff {
            parts.push(format!("weight<={w}"));
        }
        if let Some(k) = self.max_terms {
            parts.push(format!("terms<={k}"));
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// No truncation; `rule.max_terms`, if set, becomes a hard resource limit.
    pub exact: bool,
    #[serde(flatten)]
    pub rule: TruncationRule,
    /// Rule overrides, active from the keyed propagation step onwards.
    pub dynamic_schedule: BTreeMap<usize, TruncationRule>,
}

impl TruncationPolicy {
    pub fn exact() -> Self {
        Self { exact: true, ..Self::default() }
    }

    pub fn sine_cutoff(m: u32) -> Self {
        Self { rule: TruncationRule { sine_cutoff: Some(m), ..TruncationRule::default() }, ..Self::default() }
    }

    pub fn coeff_threshold(eps: f64) -> Self {
        Self { rule: TruncationRule { coeff_threshold: Some(eps), ..TruncationRule::default() }, ..Self::default() }
    }

    pub fn weight_cutoff(w: u32) -> Self {
        Self { rule: TruncationRule { weight_cutoff: Some(w), ..TruncationRule::default() }, ..Self::default() }
    }

    pub fn max_terms(k: usize) -> Self {
        Self { rule: TruncationRule { max_terms: Some(k), ..TruncationRule::default() }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        if self.exact {
            let has_truncation = self.rule.sine_cutoff.is_some()
                || self.rule.coeff_threshold.is_some()
                || self.rule.weight_cutoff.is_some()
                || !self.dynamic_schedule.is_empty();
            if has_truncation {
                return Err(PropagationError::InvalidPolicy("exact mode cannot carry truncation criteria".into()));
            }
            return Ok(());
        }
        if self.rule.is_empty() && self.dynamic_schedule.values().all(TruncationRule::is_empty) {
            return Err(PropagationError::InvalidPolicy("set at least one criterion or use exact mode".into()));
        }
        for r in std::iter::once(&self.rule).chain(self.dynamic_schedule.values()) {
            if r.coeff_threshold.is_some_and(|e| !(e >= 0.0)) {
                return Err(PropagationError::InvalidPolicy("coefficient threshold must be non-negative".into()));
            }
            if r.max_terms == Some(0) {
                return Err(PropagationError::InvalidPolicy("max_terms must be positive".into()));
            }
        }
        Ok(())
    }

    /// Rule in force at propagation step `step`.
    pub fn rule_at(&self, step: usize) -> &TruncationRule {
        self.dynamic_schedule.range(..=step).next_back().map_or(&self.rule, |(_, r)| r)
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        if self.exact {
            return match self.rule.max_terms {
                Some(k) => format!("exact(limit={k})"),
                None => "exact".into(),
            };
        }
        let mut id = self.rule.label();
        for (k, r) in &self.dynamic_schedule {
            id.push_str(&format!("|@{k}:{}", r.label()));
        }
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub expectation: f64,
    /// Term count after each propagation step.
    pub terms_per_step: Vec<usize>,
    pub peak_terms: usize,
    pub final_terms: usize,
    /// Σ|c| over every truncated term.
    pub dropped_mass: f64,
    pub wall_time: f64,
}

/// One propagation step: a rotation, or a run of consecutive CZ gates.
enum Step {
    Rotation { generator: PauliString, angle: f64 },
    CzBlock(Vec<(usize, usize)>),
}

fn steps_in_reverse(circuit: &Circuit) -> Result<Vec<(Step, usize)>, PropagationError> {
    // (step, number of gates it covers)
    let mut steps: Vec<(Step, usize)> = Vec::new();
    for gate in circuit.gates().into_iter().rev() {
        if gate.kind == GateKind::CZ {
            let edge = (gate.qubits[0], gate.qubits[1]);
            if edge.0 >= circuit.n || edge.1 >= circuit.n || edge.0 == edge.1 {
                return Err(PauliError::QubitOutOfRange { qubit: edge.0.max(edge.1), n: circuit.n }.into());
            }
            if let Some((Step::CzBlock(edges), count)) = steps.last_mut() {
                edges.push(edge);
                *count += 1;
            } else {
                steps.push((Step::CzBlock(vec![edge]), 1));
            }
        } else {
            let generator = gate.generator(circuit.n)?.expect("rotation has a generator");
            check_generator(circuit.n, &generator)?;
            steps.push((Step::Rotation { generator, angle: gate.angle.unwrap_or(0.0) }, 1));
        }
    }
    Ok(steps)
}

fn rotate_in_place(sum: &mut PauliSum, generator: &PauliString, angle: f64) {
    let (c, s) = ((2.0 * angle).cos(), (2.0 * angle).sin());
    let mut branches: Vec<PauliTerm> = Vec::new();
    // scale anticommuting terms by cos in place, then merge their sine branches; a branch
    // string iGP also anticommutes with G, so its own entry has already been scaled
    sum.retain_mut(|t| {
        if t.string.commutes_unchecked(generator) {
            return true;
        }
        if let [_, Some(sine)] = split_term(t, generator, c, s) {
            branches.push(sine);
        }
        t.coefficient *= c;
        t.coefficient.abs() >= crate::pauli::DROP_THRESHOLD
    });
    for b in branches {
        sum.insert_merge(b);
    }
}

fn apply_cz_block(sum: PauliSum, edges: &[(usize, usize)]) -> PauliSum {
    let n = sum.num_qubits();
    let mut out = PauliSum::with_capacity(n, sum.len());
    for t in sum.into_terms() {
        let mut coefficient = t.coefficient;
        let mut string = t.string;
        for &(a, b) in edges {
            let (sign, s) = string.conjugate_cz_unchecked(a, b);
            coefficient *= sign;
            string = s;
        }
        out.insert_merge(PauliTerm { coefficient, string, sine_count: t.sine_count });
    }
    out
}

/// Applies `rule`, returning the dropped mass.
fn truncate(sum: &mut PauliSum, rule: &TruncationRule) -> f64 {
    let mut dropped = 0.0;
    if rule.sine_cutoff.is_some() || rule.coeff_threshold.is_some() || rule.weight_cutoff.is_some() {
        sum.retain(|t| {
            if rule.drops(t) {
                dropped += t.coefficient.abs();
                false
            } else {
                true
            }
        });
    }
    if let Some(k) = rule.max_terms {
        if sum.len() > k {
            let mut order: Vec<(f64, PauliString)> = sum.iter().map(|t| (t.coefficient.abs(), t.string)).collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (abs, s) in &order[k..] {
                dropped += abs;
                sum.remove(s);
            }
        }
    }
    dropped
}

/// Propagates `observable` through `circuit` and evaluates it on `|0…0⟩`.
pub fn propagate(circuit: &Circuit, observable: &PauliSum, policy: &TruncationPolicy) -> Result<PropagationReport, PropagationError> {
    policy.validate()?;
    if observable.num_qubits() != circuit.n {
        return Err(PauliError::DimensionMismatch { left: circuit.n, right: observable.num_qubits() }.into());
    }
    if let Some(t) = observable.iter().find(|t| !t.coefficient.is_finite()) {
        return Err(PropagationError::NonFiniteCoefficient(t.coefficient));
    }
    let steps = steps_in_reverse(circuit)?;
    let start = Instant::now();
    let mut sum = observable.clone();
    let mut terms_per_step = Vec::with_capacity(circuit.gates().len());
    let mut peak = sum.len();
    let mut dropped_mass = 0.0;
    let mut gate_index = 0usize;
    for (step, covered) in steps {
        match step {
            Step::Rotation { generator, angle } => {
                rotate_in_place(&mut sum, &generator, angle);
                if policy.exact {
                    if let Some(limit) = policy.rule.max_terms {
                        if sum.len() > limit {
                            terms_per_step.push(sum.len());
                            let partial = PropagationReport {
                                expectation: sum.expectation_zero_state(),
                                peak_terms: peak.max(sum.len()),
                                final_terms: sum.len(),
                                terms_per_step,
                                dropped_mass,
                                wall_time: start.elapsed().as_secs_f64(),
                            };
                            return Err(PropagationError::ResourceLimit { limit, partial: Box::new(partial) });
                        }
                    }
                } else {
                    dropped_mass += truncate(&mut sum, policy.rule_at(gate_index));
                }
            }
            Step::CzBlock(edges) => {
                sum = apply_cz_block(sum, &edges);
            }
        }
        peak = peak.max(sum.len());
        for _ in 0..covered {
            terms_per_step.push(sum.len());
        }
        gate_index += covered;
    }
    Ok(PropagationReport {
        expectation: sum.expectation_zero_state(),
        peak_terms: peak,
        final_terms: sum.len(),
        terms_per_step,
        dropped_mass,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Like [`propagate`] in exact mode, returning the propagated sum `U† O U` itself.
pub fn heisenberg_exact(circuit: &Circuit, observable: &PauliSum) -> Result<PauliSum, PropagationError> {
    if observable.num_qubits() != circuit.n {
        return Err(PauliError::DimensionMismatch { left: circuit.n, right: observable.num_qubits() }.into());
    }
    let mut sum = observable.clone();
    for (step, _) in steps_in_reverse(circuit)? {
        match step {
            Step::Rotation { generator, angle } => rotate_in_place(&mut sum, &generator, angle),
            Step::CzBlock(edges) => sum = apply_cz_block(sum, &edges),
        }
    }
    Ok(sum)
}

/// Default sine-factor cutoff `⌈log₂ n⌉`.
pub fn sine_cutoff_default(n: usize) -> u32 {
    circuit::ceil_log2(n) as u32
}

/// Circuit family and observable used by [`benchmark_propagation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchTemplate {
    /// Generative layer count; `None` means `⌈ln n⌉`.
    pub layers: Option<usize>,
    /// Edge probability; `None` means `ln n / n`.
    pub p: Option<f64>,
    pub tau2: Tau2Preset,
    /// Brick layers appended after the generative circuit.
    pub trainable_depth: usize,
    /// Observable label, sparse (`"Z0"`) or dense.
    pub observable: String,
    /// Replace the policy's sine cutoff with `⌈log₂ n⌉`.
    pub auto_sine_cutoff: bool,
    /// Statevector reference is computed for `n` up to this size.
    pub exact_reference_max_n: usize,
    /// Record wall-clock time; when false the column is left empty so output is reproducible.
    pub record_time: bool,
}

impl Default for BenchTemplate {
    fn default() -> Self {
        Self {
            layers: None,
            p: None,
            tau2: Tau2Preset::Constant,
            trainable_depth: 0,
            observable: "Z0".into(),
            auto_sine_cutoff: false,
            exact_reference_max_n: 12,
            record_time: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub trial: usize,
    pub policy_id: String,
    pub expectation: f64,
    pub error_vs_exact: Option<f64>,
    pub peak_terms: usize,
    pub final_terms: usize,
    pub dropped_mass: f64,
    pub wall_time_s: Option<f64>,
}

/// Circuit for trial `seed` of the benchmark at size `n`.
pub fn bench_circuit(n: usize, template: &BenchTemplate, seed: u64) -> Result<Circuit, PropagationError> {
    let layers = template.layers.unwrap_or_else(|| circuit::log_layer_count(n));
    let p = template.p.unwrap_or_else(|| circuit::log_edge_probability(n));
    let weight = PauliString::parse_label(n, &template.observable)?.weight() as usize;
    let (tau2, _) = circuit::resolve_tau2(template.tau2, n, layers, weight);
    let gen = circuit::build_generative(&GenerativeSpec { n, layers, p, tau2, seed: rng::derive_seed(seed, 0) })?;
    if template.trainable_depth == 0 {
        return Ok(gen);
    }
    let train = circuit::build_trainable(n, template.trainable_depth, rng::derive_seed(seed, 1), ParamInit::Uniform);
    Ok(gen.compose(&train)?)
}

/// Runs `trials` propagations per size. Trial seeds are `derive_path(seed, [n, trial])`;
/// rows come back ordered by `(n, trial)`.
pub fn benchmark_propagation(
    sizes: &[usize],
    template: &BenchTemplate,
    policy: &TruncationPolicy,
    trials: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, PropagationError> {
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..trials).map(move |t| (n, t))).collect();
    jobs.par_iter()
        .map(|&(n, trial)| {
            let mut policy = policy.clone();
            if template.auto_sine_cutoff {
                policy.exact = false;
                policy.rule.sine_cutoff = Some(sine_cutoff_default(n));
            }
            let circuit = bench_circuit(n, template, rng::derive_path(seed, &[n as u64, trial as u64]))?;
            let observable = PauliSum::single(1.0, PauliString::parse_label(n, &template.observable)?);
            let report = propagate(&circuit, &observable, &policy)?;
            let error_vs_exact = if n <= template.exact_reference_max_n {
                let exact = statevector::run(&circuit)?.expectation(&observable)?;
                Some((report.expectation - exact).abs())
            } else {
                None
            };
            Ok(BenchRow {
                n,
                trial,
                policy_id: policy.id(),
                expectation: report.expectation,
                error_vs_exact,
                peak_terms: report.peak_terms,
                final_terms: report.final_terms,
                dropped_mass: report.dropped_mass,
                wall_time_s: template.record_time.then_some(report.wall_time),
            })
        })
        .collect()
}
