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

//! Experiment drivers. Each one is a pure function of its [`ExperimentConfig`]; trial `i` at size
//! `n` uses the seed `derive_path(seed, [n, i])` (the gradient study inserts the ansatz depth
//! between the two), and rows are ordered by `(n, trial)` whatever the thread count.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::circuit::{
    self, backward_lightcone, build_generative, build_trainable, default_brick_depth, resolve_tau2, sample_er_graph_with,
    Circuit, CircuitError, EdgeRule, GenerativeSpec, Layer, ParamInit, Tau2Preset,
};
use crate::graph::{self, TreewidthRow};
use crate::metrics::{distinguishability, weak_subvolume_gap};
use crate::pauli::{PauliError, PauliString, PauliSum};
use crate::propagation::{self, BenchRow, BenchTemplate, PropagationError, TruncationPolicy};
use crate::rng::{derive_path, derive_seed};
use crate::statevector::{self, StateError};

/// Version string written into manifests.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Keys every config must carry.
pub const REQUIRED_KEYS: [&str; 5] = ["experiment", "n_values", "samples", "seed", "output"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("missing config keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown experiment id {0:?}")]
    UnknownExperiment(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation failed: {0}")]
    Compute(String),
}

impl ExperimentError {
    /// Process exit code for this error class.
    pub fn code(&self) -> i32 {
        match self {
            ExperimentError::MissingKeys(_) | ExperimentError::Parse(_) => 2,
            ExperimentError::UnknownExperiment(_) => 3,
            ExperimentError::InvalidConfig(_) => 4,
            ExperimentError::Io { .. } => 5,
            ExperimentError::Compute(_) => 6,
        }
    }
}

macro_rules! compute_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                ExperimentError::Compute(e.to_string())
            }
        }
    )*};
}
compute_from!(StateError, PropagationError, CircuitError, PauliError, csv::Error);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Subvolume,
    GradientVariance,
    LightconeSpread,
    PropagationBench,
    TreewidthTrend,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Subvolume,
        ExperimentId::GradientVariance,
        ExperimentId::LightconeSpread,
        ExperimentId::PropagationBench,
        ExperimentId::TreewidthTrend,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Subvolume => "subvolume",
            ExperimentId::GradientVariance => "gradient_variance",
            ExperimentId::LightconeSpread => "lightcone_spread",
            ExperimentId::PropagationBench => "propagation_bench",
            ExperimentId::TreewidthTrend => "treewidth_trend",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }
}

fn default_edge_rule() -> EdgeRule {
    EdgeRule::Log
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n_values: Vec<usize>,
    /// Generative layers; `None` means `⌈ln n⌉`.
    #[serde(default)]
    pub layers: Option<usize>,
    #[serde(default = "default_edge_rule")]
    pub p: EdgeRule,
    /// `None` means the theorem preset.
    #[serde(default)]
    pub tau2: Option<Tau2Preset>,
    /// Λ for the subvolume study; `None` means the support of the observable.
    #[serde(default)]
    pub subsystem: Option<Vec<usize>>,
    /// Observable labels. Subvolume uses the first (default `Z0`); the gradient study defaults
    /// to `Z` on qubit `⌊n/2⌋`.
    #[serde(default)]
    pub observables: Vec<String>,
    /// Trainable depth; `None` means `⌈log₂ n⌉`.
    #[serde(default)]
    pub trainable_depth: Option<usize>,
    /// Depth of the control ansatz in the gradient study; `None` means `n`.
    #[serde(default)]
    pub control_depth: Option<usize>,
    /// Parameter index to differentiate; `None` picks the first RotZ of the layer-0 brick on the
    /// centre qubit.
    #[serde(default)]
    pub shifted_param: Option<usize>,
    /// Trials (seeds or draws) per size.
    pub samples: usize,
    pub seed: u64,
    /// CSV output path.
    pub output: String,
    #[serde(default)]
    pub bench: Option<BenchTemplate>,
    /// Propagation policy; `None` means the automatic `⌈log₂ n⌉` sine cutoff.
    #[serde(default)]
    pub policy: Option<TruncationPolicy>,
}

impl ExperimentConfig {
    /// Parses a JSON config, listing every missing required key in one error.
    pub fn from_value(value: &Value) -> Result<Self, ExperimentError> {
        let obj = value.as_object().ok_or_else(|| ExperimentError::Parse("config must be a JSON object".into()))?;
        let missing: Vec<String> = REQUIRED_KEYS.iter().filter(|k| !obj.contains_key(**k)).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(ExperimentError::MissingKeys(missing));
        }
        if let Some(id) = obj["experiment"].as_str() {
            if ExperimentId::parse(id).is_none() {
                return Err(ExperimentError::UnknownExperiment(id.to_string()));
            }
        }
        serde_json::from_value(value.clone()).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        Self::from_value(&value)
    }

    fn tau2_preset(&self) -> Tau2Preset {
        self.tau2.unwrap_or(Tau2Preset::Theorem)
    }

    fn layers_for(&self, n: usize) -> usize {
        self.layers.unwrap_or_else(|| circuit::log_layer_count(n))
    }

    fn sigma_label(&self) -> &str {
        self.observables.first().map(String::as_str).unwrap_or("Z0")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        let Some(&n_min) = self.n_values.iter().min() else {
            return bad("n_values is empty".into());
        };
        if n_min == 0 {
            return bad("n_values must be positive".into());
        }
        if let EdgeRule::Value(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("edge probability {p} outside [0, 1]"));
            }
        }
        if let Some(Tau2Preset::Value(t)) = self.tau2 {
            if !(t > 0.0 && t < 0.25) {
                return bad(format!("tau2 {t} outside (0, 1/4)"));
            }
        }
        for label in &self.observables {
            let s = PauliString::parse_label(n_min, label)
                .map_err(|e| ExperimentError::InvalidConfig(format!("observable {label:?}: {e}")))?;
            if s.is_identity() {
                return bad(format!("observable {label:?} is the identity"));
            }
        }
        if let Some(sub) = &self.subsystem {
            if let Some(&q) = sub.iter().find(|&&q| q >= n_min) {
                return bad(format!("subsystem qubit {q} not below min n = {n_min}"));
            }
        }
        match self.experiment {
            ExperimentId::Subvolume => {
                if self.observables.len() > 1 {
                    return bad("subvolume takes a single observable".into());
                }
                let sigma = PauliString::parse_label(n_min, self.sigma_label())
                    .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
                if let Some(sub) = &self.subsystem {
                    if sigma.support().iter().any(|q| !sub.contains(q)) {
                        return bad("subsystem must contain the observable support".into());
                    }
                    if sub.len() > statevector::MAX_RDM_QUBITS {
                        return bad(format!("subsystem larger than {} qubits", statevector::MAX_RDM_QUBITS));
                    }
                }
            }
            ExperimentId::GradientVariance => {
                if self.observables.len() > 1 {
                    return bad("gradient_variance takes a single observable".into());
                }
            }
            _ => {}
        }
        let statevector_bound = match self.experiment {
            ExperimentId::Subvolume | ExperimentId::GradientVariance => Some(statevector::MAX_STATEVECTOR_QUBITS),
            _ => None,
        };
        if let (Some(limit), Some(&n_max)) = (statevector_bound, self.n_values.iter().max()) {
            if n_max > limit {
                return bad(format!("n = {n_max} exceeds the statevector limit {limit}"));
            }
        }
        if let Some(policy) = &self.policy {
            policy.validate().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

/// `(4τ²)^S (1 − 4τ²)^{S(L+2)}` for `0 ≤ τ² ≤ 1/4`.
pub fn theorem_bound(s: u32, layers: u32, tau2: f64) -> Result<f64, ExperimentError> {
    if !(0.0..=0.25).contains(&tau2) {
        return Err(ExperimentError::InvalidConfig(format!("tau2 {tau2} outside [0, 1/4]")));
    }
    let a = 4.0 * tau2;
    Ok(a.powi(s as i32) * (1.0 - a).powi((s * (layers + 2)) as i32))
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and its standard error `sqrt((m4 − s⁴)/N)`.
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (var, ((m4 - var * var).max(0.0) / n).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SubvolumeRow {
    pub n: usize,
    pub L: usize,
    pub tau2: f64,
    pub S: usize,
    pub trials: usize,
    pub mean_tr_sq: f64,
    pub se_tr_sq: f64,
    pub mean_I2: f64,
    pub se_I2: f64,
    pub bound: f64,
    pub pass: bool,
    pub mean_gap: f64,
}

/// Per-trial values of the subvolume study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubvolumeTrial {
    pub tr_sq: f64,
    pub i_sq: f64,
    pub gap: f64,
}

fn trial_seeds(master: u64, n: usize, trials: usize) -> Vec<u64> {
    (0..trials).map(|i| derive_path(master, &[n as u64, i as u64])).collect()
}

/// Row and per-trial values for one size.
pub fn subvolume_trials(config: &ExperimentConfig, n: usize) -> Result<(SubvolumeRow, Vec<SubvolumeTrial>), ExperimentError> {
    let sigma = PauliString::parse_label(n, config.sigma_label())?;
    let weight = sigma.weight() as usize;
    let subsystem = config.subsystem.clone().unwrap_or_else(|| sigma.support());
    let layers = config.layers_for(n);
    let p = config.p.resolve(n);
    let (tau2, _) = resolve_tau2(config.tau2_preset(), n, layers, weight);
    let observable = PauliSum::single(1.0, sigma);
    let seeds = trial_seeds(config.seed, n, config.samples);
    let trials: Vec<SubvolumeTrial> = seeds
        .par_iter()
        .map(|&seed| -> Result<SubvolumeTrial, ExperimentError> {
            let c = build_generative(&GenerativeSpec { n, layers, p, tau2, seed })?;
            let state = statevector::run(&c)?;
            let tr = state.expectation(&observable)?;
            let rho = state.reduced_density_matrix(&subsystem)?;
            let i = distinguishability(&rho);
            Ok(SubvolumeTrial { tr_sq: tr * tr, i_sq: i * i, gap: weak_subvolume_gap(&rho, subsystem.len()) })
        })
        .collect::<Result<_, _>>()?;
    let (mean_tr_sq, se_tr_sq) = mean_se(&trials.iter().map(|t| t.tr_sq).collect::<Vec<_>>());
    let (mean_i2, se_i2) = mean_se(&trials.iter().map(|t| t.i_sq).collect::<Vec<_>>());
    let mean_gap = trials.iter().map(|t| t.gap).sum::<f64>() / trials.len() as f64;
    let bound = theorem_bound(weight as u32, layers as u32, tau2)?;
    let row = SubvolumeRow {
        n,
        L: layers,
        tau2,
        S: weight,
        trials: trials.len(),
        mean_tr_sq,
        se_tr_sq,
        mean_I2: mean_i2,
        se_I2: se_i2,
        bound,
        pass: mean_tr_sq + 2.0 * se_tr_sq >= bound,
        mean_gap,
    };
    Ok((row, trials))
}

pub fn subvolume_experiment(config: &ExperimentConfig) -> Result<Vec<SubvolumeRow>, ExperimentError> {
    config.n_values.iter().map(|&n| subvolume_trials(config, n).map(|(row, _)| row)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradVarRow {
    pub n: usize,
    pub depth: usize,
    pub trials: usize,
    pub variance: f64,
    pub se: f64,
    /// Slope of `log₂ variance` against `n` over all rows of the same ansatz family.
    pub slope_fit: f64,
}

/// First RotZ of the layer-0 brick acting on qubit `⌊n/2⌋`.
pub fn centre_param(trainable: &Circuit) -> Option<usize> {
    let centre = trainable.n / 2;
    let Some(Layer::Brick { pairs, param_ids }) = trainable.layers.first() else {
        return None;
    };
    let k = pairs.iter().position(|p| p.contains(&centre)).unwrap_or(0);
    param_ids.get(k).map(|ids| ids[0])
}

/// Parameter-shift gradients over `config.samples` random `(γ, θ)` draws.
pub fn gradient_samples(config: &ExperimentConfig, n: usize, depth: usize) -> Result<Vec<f64>, ExperimentError> {
    let label = config.observables.first().cloned().unwrap_or_else(|| format!("Z{}", n / 2));
    let observable = PauliSum::single(1.0, PauliString::parse_label(n, &label)?);
    let layers = config.layers_for(n);
    let p = config.p.resolve(n);
    let weight = observable.max_weight() as usize;
    let (tau2, _) = resolve_tau2(config.tau2_preset(), n, layers, weight);
    (0..config.samples)
        .into_par_iter()
        .map(|i| -> Result<f64, ExperimentError> {
            let seed = derive_path(config.seed, &[n as u64, depth as u64, i as u64]);
            let trainable = build_trainable(n, depth, derive_seed(seed, 1), ParamInit::Uniform);
            let nu = match config.shifted_param {
                Some(k) => Some(k),
                None => centre_param(&trainable),
            };
            let Some(nu) = nu.filter(|_| trainable.num_params() > 0) else {
                return Ok(0.0);
            };
            let gen = build_generative(&GenerativeSpec { n, layers, p, tau2, seed: derive_seed(seed, 0) })?;
            let input = statevector::run(&gen)?;
            Ok(statevector::parameter_shift_on_state(&input, &trainable, nu, &observable)?)
        })
        .collect()
}

pub fn gradient_variance_experiment(config: &ExperimentConfig) -> Result<Vec<GradVarRow>, ExperimentError> {
    let mut main = Vec::new();
    let mut control = Vec::new();
    for &n in &config.n_values {
        for (depth, out) in [
            (config.trainable_depth.unwrap_or_else(|| default_brick_depth(n)), &mut main),
            (config.control_depth.unwrap_or(n), &mut control),
        ] {
            let (variance, se) = variance_se(&gradient_samples(config, n, depth)?);
            out.push(GradVarRow { n, depth, trials: config.samples, variance, se, slope_fit: f64::NAN });
        }
    }
    for family in [&mut main, &mut control] {
        let x: Vec<f64> = family.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = family.iter().map(|r| r.variance.log2()).collect();
        let slope = if family.len() >= 2 { least_squares_slope(&x, &y) } else { f64::NAN };
        for r in family.iter_mut() {
            r.slope_fit = slope;
        }
    }
    Ok(main.into_iter().zip(control).flat_map(|(a, b)| [a, b]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LightconeRow {
    pub n: usize,
    pub L: usize,
    pub p: f64,
    pub trials: usize,
    pub mean_frac: f64,
    pub min_frac: f64,
}

/// Covered fraction of the backward cone of qubit 0 through `layers` fresh `G(n, p)` CZ layers.
pub fn lightcone_fraction(n: usize, layers: usize, p: f64, seed: u64) -> Result<f64, CircuitError> {
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut c = Circuit::empty(n);
    for _ in 0..layers {
        c.layers.push(sample_er_graph_with(n, p, &mut rng)?.to_cz_layer());
    }
    Ok(backward_lightcone(&c, &BTreeSet::from([0])).fraction(n))
}

pub fn lightcone_spread_experiment(config: &ExperimentConfig) -> Result<Vec<LightconeRow>, ExperimentError> {
    config
        .n_values
        .iter()
        .map(|&n| {
            let layers = config.layers_for(n);
            let p = config.p.resolve(n);
            let fracs: Vec<f64> = trial_seeds(config.seed, n, config.samples)
                .par_iter()
                .map(|&s| lightcone_fraction(n, layers, p, s))
                .collect::<Result<_, _>>()?;
            Ok(LightconeRow {
                n,
                L: layers,
                p,
                trials: fracs.len(),
                mean_frac: fracs.iter().sum::<f64>() / fracs.len() as f64,
                min_frac: fracs.iter().copied().fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

fn bench_inputs(config: &ExperimentConfig) -> (BenchTemplate, TruncationPolicy) {
    let mut template = config.bench.clone().unwrap_or_default();
    if config.layers.is_some() {
        template.layers = config.layers;
    }
    if let EdgeRule::Value(p) = config.p {
        template.p = Some(p);
    }
    if let Some(t) = config.tau2 {
        template.tau2 = t;
    }
    if let Some(o) = config.observables.first() {
        template.observable = o.clone();
    }
    if config.trainable_depth.is_some() {
        template.trainable_depth = config.trainable_depth.unwrap_or(0);
    }
    let policy = match &config.policy {
        Some(p) => p.clone(),
        None => {
            template.auto_sine_cutoff = true;
            TruncationPolicy::exact()
        }
    };
    (template, policy)
}

pub fn propagation_bench_experiment(config: &ExperimentConfig) -> Result<Vec<BenchRow>, ExperimentError> {
    let (template, policy) = bench_inputs(config);
    Ok(propagation::benchmark_propagation(&config.n_values, &template, &policy, config.samples, config.seed)?)
}

pub fn treewidth_experiment(config: &ExperimentConfig) -> Result<Vec<TreewidthRow>, ExperimentError> {
    Ok(graph::treewidth_trend(&config.n_values, config.p, config.samples, config.seed)?)
}

/// Rows of any experiment, ready for CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Subvolume(Vec<SubvolumeRow>),
    GradientVariance(Vec<GradVarRow>),
    Lightcone(Vec<LightconeRow>),
    PropagationBench(Vec<BenchRow>),
    Treewidth(Vec<TreewidthRow>),
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

impl Report {
    pub fn len(&self) -> usize {
        match self {
            Report::Subvolume(r) => r.len(),
            Report::GradientVariance(r) => r.len(),
            Report::Lightcone(r) => r.len(),
            Report::PropagationBench(r) => r.len(),
            Report::Treewidth(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        Ok(match self {
            Report::Subvolume(r) => rows_to_csv(r),
            Report::GradientVariance(r) => rows_to_csv(r),
            Report::Lightcone(r) => rows_to_csv(r),
            Report::PropagationBench(r) => rows_to_csv(r),
            Report::Treewidth(r) => rows_to_csv(r),
        }?)
    }
}

pub fn run_report(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    config.validate()?;
    Ok(match config.experiment {
        ExperimentId::Subvolume => Report::Subvolume(subvolume_experiment(config)?),
        ExperimentId::GradientVariance => Report::GradientVariance(gradient_variance_experiment(config)?),
        ExperimentId::LightconeSpread => Report::Lightcone(lightcone_spread_experiment(config)?),
        ExperimentId::PropagationBench => Report::PropagationBench(propagation_bench_experiment(config)?),
        ExperimentId::TreewidthTrend => Report::Treewidth(treewidth_experiment(config)?),
    })
}

/// Seed provenance for each CSV row, in row order.
fn provenance(config: &ExperimentConfig, report: &Report) -> Vec<Value> {
    let seeds = |prefix: &[u64]| -> Vec<u64> {
        (0..config.samples as u64).map(|t| derive_path(config.seed, &[prefix, &[t]].concat())).collect()
    };
    let per_trial = |n: usize, trial: usize| {
        json!({"n": n, "trial": trial, "seed": derive_path(config.seed, &[n as u64, trial as u64])})
    };
    let per_size = |n: usize| json!({"n": n, "rule": "derive_path(seed, [n, trial])", "seeds": seeds(&[n as u64])});
    match report {
        Report::Subvolume(rows) => rows.iter().map(|r| per_size(r.n)).collect(),
        Report::Lightcone(rows) => rows.iter().map(|r| per_size(r.n)).collect(),
        Report::GradientVariance(rows) => rows
            .iter()
            .map(|r| {
                json!({
                    "n": r.n,
                    "depth": r.depth,
                    "rule": "derive_path(seed, [n, depth, draw]); generative stream 0, trainable stream 1",
                    "seeds": seeds(&[r.n as u64, r.depth as u64]),
                })
            })
            .collect(),
        Report::PropagationBench(rows) => rows.iter().map(|r| per_trial(r.n, r.trial)).collect(),
        Report::Treewidth(rows) => rows.iter().map(|r| per_trial(r.n, r.trial)).collect(),
    }
}

fn resolved_tau2(config: &ExperimentConfig) -> Value {
    let preset = match config.experiment {
        ExperimentId::Subvolume | ExperimentId::GradientVariance => config.tau2_preset(),
        ExperimentId::PropagationBench => bench_inputs(config).0.tau2,
        _ => return Value::Null,
    };
    let mut map = serde_json::Map::new();
    for &n in &config.n_values {
        let weight = match config.experiment {
            ExperimentId::Subvolume => PauliString::parse_label(n, config.sigma_label()).map(|s| s.weight()).unwrap_or(1),
            _ => 1,
        } as usize;
        map.insert(n.to_string(), json!(resolve_tau2(preset, n, config.layers_for(n), weight).0));
    }
    Value::Object(map)
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// `<stem>.manifest.json` next to `csv`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    csv.with_file_name(format!("{stem}.manifest.json"))
}

/// Runs the experiment described by `raw` with top-level keys replaced by `overrides`. Both are
/// echoed verbatim into the manifest. With `out_dir`, the CSV goes there under the file name of
/// `output`.
pub fn run_experiment(
    raw: &Value,
    overrides: &serde_json::Map<String, Value>,
    out_dir: Option<&Path>,
) -> Result<RunOutput, ExperimentError> {
    let mut effective = raw.clone();
    if let Some(obj) = effective.as_object_mut() {
        obj.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    let config = ExperimentConfig::from_value(&effective)?;
    config.validate()?;
    let requested = PathBuf::from(&config.output);
    let csv_path = match out_dir {
        Some(dir) => dir.join(requested.file_name().ok_or_else(|| ExperimentError::InvalidConfig("output has no file name".into()))?),
        None => requested,
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    let report = run_report(&config)?;
    fs::write(&csv_path, report.to_csv()?).map_err(io(&csv_path))?;
    let mut manifest = json!({
        "version": VERSION,
        "experiment": config.experiment.as_str(),
        "master_seed": config.seed,
        "seed_mixing": "splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15), applied along the path",
        "resolved_tau2": resolved_tau2(&config),
        "config": raw,
        "overrides": overrides,
        "csv": csv_path.file_name().map(|s| s.to_string_lossy().into_owned()),
        "rows": provenance(&config, &report),
    });
    if let Report::GradientVariance(rows) = &report {
        let slope = |i: usize| rows.get(i).map(|r| r.slope_fit);
        manifest["calibration"] = json!({
            "slope_main": slope(0),
            "slope_control": slope(1),
            "note": "slopes of log2 variance vs n from this run; thresholds compare the two families only",
        });
    }
    let manifest_file = manifest_path(&csv_path);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| ExperimentError::Compute(e.to_string()))?;
    fs::write(&manifest_file, text + "\n").map_err(io(&manifest_file))?;
    Ok(RunOutput { csv: csv_path, manifest: manifest_file })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(experiment: &str, extra: Value) -> ExperimentConfig {
        let mut v = json!({"experiment": experiment, "n_values": [4], "samples": 20, "seed": 3, "output": "out.csv"});
        for (k, val) in extra.as_object().unwrap() {
            v[k] = val.clone();
        }
        ExperimentConfig::from_value(&v).unwrap()
    }

    #[test]
    fn bound_values() {
        assert!((theorem_bound(1, 2, 0.1).unwrap() - 0.05184).abs() < 1e-12);
        assert!((theorem_bound(2, 0, 0.05).unwrap() - 0.016384).abs() < 1e-12);
        assert_eq!(theorem_bound(1, 2, 0.0).unwrap(), 0.0);
        assert!(theorem_bound(1, 2, 0.3).is_err());
        let t = 8f64.ln() / 64.0;
        assert!((theorem_bound(1, 2, t).unwrap() - 0.0745).abs() < 5e-4);
    }

    #[test]
    fn missing_keys_listed_together() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "subvolume", "seed": 1}"#).unwrap_err();
        assert_eq!(err.to_string(), "missing config keys: n_values, samples, output");
        assert_eq!(err.code(), 2);
        let err = ExperimentConfig::from_json(r#"{"experiment": "nope", "n_values": [4], "samples": 1, "seed": 1, "output": "x"}"#)
            .unwrap_err();
        assert_eq!(err.code(), 3);
    }

    #[test]
    fn invariant_violations() {
        assert_eq!(config("subvolume", json!({"samples": 0})).validate().unwrap_err().code(), 4);
        assert!(config("subvolume", json!({"observables": ["Z7"]})).validate().is_err());
        assert!(config("subvolume", json!({"subsystem": [1], "observables": ["Z0"]})).validate().is_err());
        assert!(config("lightcone_spread", json!({"p": {"value": 1.5}})).validate().is_err());
        assert!(config("subvolume", json!({})).validate().is_ok());
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            let c = config(id.as_str(), json!({}));
            let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
            assert_eq!(ExperimentId::parse(id.as_str()), Some(id));
        }
    }

    #[test]
    fn tiny_tau2_gives_zero_state_values() {
        let c = config("subvolume", json!({"tau2": {"value": 1e-14}, "layers": 2}));
        let (row, trials) = subvolume_trials(&c, 4).unwrap();
        assert!((row.mean_tr_sq - 1.0).abs() < 1e-10);
        assert!((row.mean_I2 - 1.0).abs() < 1e-10);
        assert!(trials.iter().all(|t| t.i_sq + 1e-12 >= t.tr_sq));
    }

    #[test]
    fn chain_inequality_per_trial() {
        let c = config("subvolume", json!({"layers": 2, "subsystem": [0, 1]}));
        let (row, trials) = subvolume_trials(&c, 4).unwrap();
        assert!(trials.iter().all(|t| t.i_sq + 1e-12 >= t.tr_sq && t.tr_sq >= 0.0));
        assert!(row.mean_I2 + 1e-12 >= row.mean_tr_sq);
    }

    #[test]
    fn zero_depth_has_zero_variance() {
        let c = config("gradient_variance", json!({"trainable_depth": 0, "observables": ["Z0"]}));
        assert!(gradient_samples(&c, 4, 0).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn centre_parameter_choice() {
        let t = build_trainable(8, 3, 1, ParamInit::Zeros);
        // centre qubit 4 sits in the third layer-0 brick
        assert_eq!(centre_param(&t), Some(2 * circuit::BRICK_PARAMS));
        assert_eq!(centre_param(&Circuit::empty(8)), None);
    }

    #[test]
    fn lightcone_extremes() {
        let c = config("lightcone_spread", json!({"p": {"value": 0.0}, "n_values": [10]}));
        let rows = lightcone_spread_experiment(&c).unwrap();
        assert!((rows[0].mean_frac - 0.1).abs() < 1e-15);
        let c = config("lightcone_spread", json!({"p": {"value": 1.0}, "n_values": [10], "layers": 1}));
        assert_eq!(lightcone_spread_experiment(&c).unwrap()[0].min_frac, 1.0);
    }

    #[test]
    fn statistics_helpers() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((least_squares_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-15);
        let (v, _) = variance_se(&[1.0, -1.0, 1.0, -1.0]);
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let c = config("subvolume", json!({"layers": 1}));
        let rows = subvolume_experiment(&c).unwrap();
        let bytes = Report::Subvolume(rows.clone()).to_csv().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("n,L,tau2,S,trials,mean_tr_sq,se_tr_sq,mean_I2,se_I2,bound,pass,mean_gap\n"));
        let back: Vec<SubvolumeRow> = csv::Reader::from_reader(&bytes[..]).deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn run_writes_deterministic_files() {
        let dir = tempfile::tempdir().unwrap();
        let raw = json!({"experiment": "lightcone_spread", "n_values": [8, 12], "samples": 10, "seed": 5, "output": "lc.csv", "tau2": "theorem"});
        let none = serde_json::Map::new();
        let a = run_experiment(&raw, &none, Some(dir.path())).unwrap();
        let first = fs::read(&a.csv).unwrap();
        let b = run_experiment(&raw, &none, Some(dir.path())).unwrap();
        assert_eq!(first, fs::read(&b.csv).unwrap());
        let manifest: Value = serde_json::from_str(&fs::read_to_string(&a.manifest).unwrap()).unwrap();
        assert_eq!(manifest["config"], raw);
        assert_eq!(manifest["master_seed"], 5);
        assert_eq!(manifest["rows"].as_array().unwrap().len(), 2);
        assert!(a.manifest.ends_with("lc.manifest.json"));
        let err = run_experiment(&raw, &none, Some(&a.csv.join("sub"))).unwrap_err();
        assert_eq!(err.code(), 5);
        let mut seed = serde_json::Map::new();
        seed.insert("seed".into(), json!(6));
        let c = run_experiment(&raw, &seed, Some(dir.path())).unwrap();
        assert_ne!(first, fs::read(&c.csv).unwrap());
        let manifest: Value = serde_json::from_str(&fs::read_to_string(&c.manifest).unwrap()).unwrap();
        assert_eq!(manifest["config"], raw);
        assert_eq!(manifest["master_seed"], 6);
    }
}
