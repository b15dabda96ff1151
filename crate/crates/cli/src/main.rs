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

//! `qgm` command-line driver.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input (bad flags, malformed or incomplete
//! config, unreadable or empty input), 3 unknown experiment id, 4 config invariant violation,
//! 5 output not writable, 6 simulation failure.

mod plot;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use qgm_core::circuit::{self, build_generative, build_trainable, resolve_tau2, Circuit, EdgeRule, GenerativeSpec, ParamInit, Tau2Preset};
use qgm_core::experiments::{self, manifest_path, ExperimentError, VERSION};
use qgm_core::graph::{degeneracy, interaction_graph, min_fill_width, treewidth_trend};
use qgm_core::pauli::{PauliString, PauliSum};
use qgm_core::propagation::{self, BenchTemplate, TruncationPolicy, TruncationRule};
use qgm_core::rng::{derive_seed, rng_from_seed};
use qgm_core::shadows::{collect_shadows, DEFAULT_GROUPS};
use qgm_core::statevector;

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_WRITE: u8 = 5;
const EXIT_COMPUTE: u8 = 6;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }

    fn input(message: impl std::fmt::Display) -> Self {
        Self::new(EXIT_INPUT, message)
    }

    fn compute(message: impl std::fmt::Display) -> Self {
        Self::new(EXIT_COMPUTE, message)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Self::new(e.code() as u8, e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "qgm", version, about = "Quantum generative model toolkit")]
struct Cli {
    /// Master seed (default 0; overrides `seed` in experiment configs).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a generative circuit (optionally followed by trainable bricks) as JSON.
    Gen(GenArgs),
    /// Feature vectors for resampled generative angles.
    Features(FeaturesArgs),
    /// Run an experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Line chart of per-x means of a CSV column.
    Plot(PlotArgs),
    /// Pauli propagation benchmark over circuit sizes.
    #[command(name = "pauliprop-bench")]
    PauliPropBench(BenchArgs),
    /// Treewidth brackets of random layer graphs, or of one circuit's interaction graph.
    GraphStats(GraphArgs),
    /// Classical shadows of a circuit's generative state.
    Shadows(ShadowArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Constant,
    Theorem,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Generative layers (default ⌈ln n⌉).
    #[arg(long)]
    layers: Option<usize>,
    /// Edge probability (default ln n / n).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "constant")]
    tau2_preset: PresetArg,
    /// Explicit τ², overriding the preset.
    #[arg(long)]
    tau2: Option<f64>,
    /// Observable weight S used by the theorem preset.
    #[arg(long, default_value_t = 1)]
    weight: usize,
    /// Brick layers appended after the generative circuit.
    #[arg(long, default_value_t = 0)]
    trainable_depth: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    init: InitArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Uniform,
    Zeros,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Backend {
    Auto,
    Statevector,
    Propagation,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Comma-separated labels (`Z0`, `XIZ`, `Z0 Z1`) or the keywords `z` ({Z_i}) and `zz` ({Z_i Z_i+1}).
    #[arg(long, default_value = "z")]
    observables: String,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// τ² for resampling; defaults to the value in the circuit's manifest.
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    backend: Backend,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV and manifest (default: the config's `output` path).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides `samples` in the config.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,12,16,20")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "constant")]
    tau2_preset: PresetArg,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long, default_value = "Z0")]
    observable: String,
    #[arg(long, default_value_t = 0)]
    trainable_depth: usize,
    /// Sine-factor cutoff; `auto` means ⌈log₂ n⌉.
    #[arg(long, default_value = "auto")]
    sine_cutoff: String,
    #[arg(long)]
    coeff_threshold: Option<f64>,
    #[arg(long)]
    weight_cutoff: Option<u32>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// No truncation; `--max-terms` then acts as a resource limit.
    #[arg(long)]
    exact: bool,
    /// Statevector reference up to this size.
    #[arg(long, default_value_t = 12)]
    exact_reference_max_n: usize,
    /// Fill the wall_time_s column (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// `log` for ln n / n, or a number.
    #[arg(long, default_value = "log")]
    p: String,
    /// Analyse this circuit's interaction graph instead of random graphs (JSON output).
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Support qubits for `--circuit`.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    support: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ShadowArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Observables to estimate through the trainable part; printed to stdout as JSON.
    #[arg(long)]
    observables: Option<String>,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    groups: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, seed),
        Command::Features(a) => cmd_features(a, seed),
        Command::Experiment(a) => cmd_experiment(a, cli.seed),
        Command::Plot(a) => cmd_plot(a),
        Command::PauliPropBench(a) => cmd_bench(a, seed),
        Command::GraphStats(a) => cmd_graph(a, seed),
        Command::Shadows(a) => cmd_shadows(a, seed, cli.quiet),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::new(EXIT_WRITE, format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::new(EXIT_WRITE, format!("cannot write {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn read_circuit(path: &Path) -> CliResult<Circuit> {
    Circuit::from_json(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s.into_bytes()
}

fn check_p(p: Option<f64>) -> CliResult {
    match p {
        Some(p) if !(0.0..=1.0).contains(&p) => Err(Failure::input(format!("--p {p} outside [0, 1]"))),
        _ => Ok(()),
    }
}

fn preset(arg: PresetArg, value: Option<f64>) -> CliResult<Tau2Preset> {
    match value {
        Some(t) if !(t > 0.0 && t < 0.25) => Err(Failure::input(format!("--tau2 {t} outside (0, 1/4)"))),
        Some(t) => Ok(Tau2Preset::Value(t)),
        None => Ok(match arg {
            PresetArg::Constant => Tau2Preset::Constant,
            PresetArg::Theorem => Tau2Preset::Theorem,
        }),
    }
}

fn cmd_gen(a: &GenArgs, seed: u64) -> CliResult {
    if a.n == 0 || a.n > qgm_core::pauli::MAX_QUBITS {
        return Err(Failure::input(format!("--n must be in 1..={}", qgm_core::pauli::MAX_QUBITS)));
    }
    check_p(a.p)?;
    let preset = preset(a.tau2_preset, a.tau2)?;
    let layers = a.layers.unwrap_or_else(|| circuit::log_layer_count(a.n));
    let p = a.p.unwrap_or_else(|| circuit::log_edge_probability(a.n));
    let (tau2, clamped) = resolve_tau2(preset, a.n, layers, a.weight);
    let spec = GenerativeSpec { n: a.n, layers, p, tau2, seed: derive_seed(seed, 0) };
    let mut c = build_generative(&spec).map_err(Failure::input)?;
    let init = match a.init {
        InitArg::Uniform => ParamInit::Uniform,
        InitArg::Zeros => ParamInit::Zeros,
    };
    if a.trainable_depth > 0 {
        let t = build_trainable(a.n, a.trainable_depth, derive_seed(seed, 1), init);
        c = c.compose(&t).map_err(Failure::compute)?;
    }
    let mut text = c.to_json();
    text.push('\n');
    write_file(&a.out, text.as_bytes())?;
    let manifest = json!({
        "version": VERSION,
        "n": a.n,
        "layers": layers,
        "p": p,
        "tau2_preset": preset,
        "tau2": tau2,
        "tau2_clamped": clamped,
        "weight": a.weight,
        "seed": seed,
        "generative_seed": spec.seed,
        "trainable_depth": a.trainable_depth,
        "init": init,
    });
    write_file(&manifest_path(&a.out), &pretty(&manifest))
}

/// Observable labels and parsed strings.
fn parse_observables(spec: &str, n: usize) -> CliResult<Vec<(String, PauliString)>> {
    let labels: Vec<String> = match spec.trim() {
        "z" => (0..n).map(|i| format!("Z{i}")).collect(),
        "zz" => (0..n.saturating_sub(1)).map(|i| format!("Z{i} Z{}", i + 1)).collect(),
        other => other.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
    };
    if labels.is_empty() {
        return Err(Failure::input("no observables given"));
    }
    labels
        .into_iter()
        .map(|l| {
            let s = PauliString::parse_label(n, &l).map_err(|e| Failure::input(format!("observable {l:?}: {e}")))?;
            Ok((l, s))
        })
        .collect()
}

fn manifest_tau2(circuit_path: &Path) -> Option<f64> {
    let text = fs::read_to_string(manifest_path(circuit_path)).ok()?;
    serde_json::from_str::<Value>(&text).ok()?.get("tau2")?.as_f64()
}

fn cmd_features(a: &FeaturesArgs, seed: u64) -> CliResult {
    let c = read_circuit(&a.circuit)?;
    let observables = parse_observables(&a.observables, c.n)?;
    let tau2 = match a.tau2.or_else(|| manifest_tau2(&a.circuit)) {
        Some(t) if t > 0.0 && t < 0.25 => t,
        Some(t) => return Err(Failure::input(format!("tau2 {t} outside (0, 1/4)"))),
        None => return Err(Failure::input("no --tau2 given and no tau2 in the circuit manifest")),
    };
    if a.samples == 0 {
        return Err(Failure::input("--samples must be positive"));
    }
    let backend = match a.backend {
        Backend::Auto if c.n <= 20 => Backend::Statevector,
        Backend::Auto => Backend::Propagation,
        b => b,
    };
    if backend == Backend::Statevector && c.n > statevector::MAX_STATEVECTOR_QUBITS {
        return Err(Failure::input(format!("statevector backend supports at most {} qubits", statevector::MAX_STATEVECTOR_QUBITS)));
    }
    let sums: Vec<PauliSum> = observables.iter().map(|(_, s)| PauliSum::single(1.0, *s)).collect();
    let rows: Vec<Vec<f64>> = (0..a.samples)
        .into_par_iter()
        .map(|i| -> CliResult<Vec<f64>> {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let sample = c.resample_generative(tau2, &mut rng).map_err(Failure::compute)?;
            match backend {
                Backend::Propagation => sums
                    .iter()
                    .map(|o| {
                        propagation::propagate(&sample, o, &TruncationPolicy::exact())
                            .map(|r| r.expectation)
                            .map_err(Failure::compute)
                    })
                    .collect(),
                _ => {
                    let state = statevector::run(&sample).map_err(Failure::compute)?;
                    sums.iter().map(|o| state.expectation(o).map_err(Failure::compute)).collect()
                }
            }
        })
        .collect::<CliResult<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::new(EXIT_INTERNAL, e);
    w.write_record(observables.iter().map(|(l, _)| l.as_str())).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    write_file(&a.out, &bytes)
}

fn cmd_experiment(a: &ExperimentArgs, seed: Option<u64>) -> CliResult {
    let raw: Value = serde_json::from_str(&read_text(&a.config)?)
        .map_err(|e| Failure::input(format!("{}: {e}", a.config.display())))?;
    let mut overrides = Map::new();
    if let Some(s) = seed {
        overrides.insert("seed".into(), json!(s));
    }
    if let Some(s) = a.samples {
        overrides.insert("samples".into(), json!(s));
    }
    let out = experiments::run_experiment(&raw, &overrides, a.out_dir.as_deref())?;
    log::info!("wrote {} and {}", out.csv.display(), out.manifest.display());
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> CliResult {
    let file = fs::File::open(&a.csv).map_err(|e| Failure::input(format!("cannot read {}: {e}", a.csv.display())))?;
    let points = plot::read_series(file, &a.x, &a.y).map_err(Failure::input)?;
    write_file(&a.out, plot::render_svg(&points, &a.x, &a.y).as_bytes())
}

fn cmd_bench(a: &BenchArgs, seed: u64) -> CliResult {
    check_p(a.p)?;
    if a.n.is_empty() || a.n.contains(&0) || a.trials == 0 {
        return Err(Failure::input("--n values and --trials must be positive"));
    }
    let auto = a.sine_cutoff == "auto";
    let sine_cutoff = if auto {
        None
    } else {
        Some(a.sine_cutoff.parse::<u32>().map_err(|_| Failure::input(format!("bad --sine-cutoff {:?}", a.sine_cutoff)))?)
    };
    let template = BenchTemplate {
        layers: a.layers,
        p: a.p,
        tau2: preset(a.tau2_preset, a.tau2)?,
        trainable_depth: a.trainable_depth,
        observable: a.observable.clone(),
        auto_sine_cutoff: auto && !a.exact,
        exact_reference_max_n: a.exact_reference_max_n,
        record_time: a.timing,
    };
    let policy = if a.exact {
        TruncationPolicy { exact: true, rule: TruncationRule { max_terms: a.max_terms, ..Default::default() }, ..Default::default() }
    } else {
        TruncationPolicy {
            exact: false,
            rule: TruncationRule {
                sine_cutoff,
                coeff_threshold: a.coeff_threshold,
                weight_cutoff: a.weight_cutoff,
                max_terms: a.max_terms,
            },
            ..Default::default()
        }
    };
    if !template.auto_sine_cutoff {
        policy.validate().map_err(Failure::input)?;
    }
    for &n in &a.n {
        PauliString::parse_label(n, &a.observable).map_err(|e| Failure::input(format!("observable at n={n}: {e}")))?;
    }
    let rows = propagation::benchmark_propagation(&a.n, &template, &policy, a.trials, seed).map_err(Failure::compute)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    }
    write_file(&a.out, &w.into_inner().map_err(|e| Failure::new(EXIT_INTERNAL, e))?)
}

fn cmd_graph(a: &GraphArgs, seed: u64) -> CliResult {
    if let Some(path) = &a.circuit {
        let c = read_circuit(path)?;
        let support: BTreeSet<usize> = a.support.iter().copied().collect();
        let g = interaction_graph(&c, &support).map_err(Failure::input)?;
        let order = min_fill_width(&g.graph);
        let report = json!({
            "n": c.n,
            "support": support,
            "cone_qubits": g.qubits,
            "edges": g.graph.edge_count(),
            "degeneracy_lb": degeneracy(&g.graph),
            "minfill_ub": order.width,
            "elimination_order": order.order.iter().map(|&v| g.qubits[v]).collect::<Vec<_>>(),
        });
        return write_file(&a.out, &pretty(&report));
    }
    let rule = match a.p.as_str() {
        "log" => EdgeRule::Log,
        v => match v.parse::<f64>() {
            Ok(p) if (0.0..=1.0).contains(&p) => EdgeRule::Value(p),
            _ => return Err(Failure::input(format!("--p must be `log` or a probability, got {v:?}"))),
        },
    };
    if a.n.is_empty() || a.trials == 0 {
        return Err(Failure::input("--n and --trials must be non-empty and positive"));
    }
    let rows = treewidth_trend(&a.n, rule, a.trials, seed).map_err(Failure::compute)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    }
    write_file(&a.out, &w.into_inner().map_err(|e| Failure::new(EXIT_INTERNAL, e))?)
}

fn cmd_shadows(a: &ShadowArgs, seed: u64, quiet: bool) -> CliResult {
    let c = read_circuit(&a.circuit)?;
    if c.n > statevector::MAX_STATEVECTOR_QUBITS {
        return Err(Failure::input(format!("shadows need a statevector; at most {} qubits", statevector::MAX_STATEVECTOR_QUBITS)));
    }
    let observables = a.observables.as_deref().map(|s| parse_observables(s, c.n)).transpose()?;
    if a.groups == 0 || (observables.is_some() && a.groups > a.samples) {
        return Err(Failure::input(format!("--groups {} incompatible with --samples {}", a.groups, a.samples)));
    }
    let (generative, trainable) = c.split_trainable();
    let state = statevector::run(&generative).map_err(Failure::compute)?;
    let set = collect_shadows(&state, a.samples, seed);
    let mut buf = Vec::new();
    set.write_csv(&mut buf).map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    write_file(&a.out, &buf)?;
    if let Some(obs) = observables {
        let mut estimates = Map::new();
        for (label, s) in obs {
            let v = set
                .estimate_through(&trainable, &PauliSum::single(1.0, s), a.groups)
                .map_err(Failure::compute)?;
            estimates.insert(label, json!(v));
        }
        if !quiet {
            println!("{}", Value::Object(estimates));
        }
    }
    Ok(())
}
