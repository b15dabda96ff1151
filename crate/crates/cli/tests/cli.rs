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

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = qgm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Runs `make(dir)` once per thread count into separate directories and returns the output
/// files of each run (relative path, bytes).
fn runs(make: impl Fn(&Path, &str) -> Vec<String>) -> Vec<Vec<(String, Vec<u8>)>> {
    ["1", "4", "4"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            let mut args = make(dir.path(), threads);
            args.extend(["--threads".to_string(), threads.to_string()]);
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            ok(&refs);
            let mut files: Vec<(String, Vec<u8>)> = walk(dir.path())
                .into_iter()
                .map(|p| (p.strip_prefix(dir.path()).unwrap().display().to_string(), fs::read(&p).unwrap()))
                .collect();
            files.sort();
            files
        })
        .collect()
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn assert_deterministic(name: &str, make: impl Fn(&Path, &str) -> Vec<String>) {
    let r = runs(make);
    assert!(!r[0].is_empty(), "{name}: no output files");
    assert_eq!(r[0], r[1], "{name}: output differs between 1 and 4 threads");
    assert_eq!(r[1], r[2], "{name}: output differs between reruns");
}

fn circuit_file(dir: &Path, extra: &[&str]) -> PathBuf {
    let p = dir.join("c.json");
    let mut args = vec!["gen", "--n", "6", "--layers", "2", "--seed", "3", "--out", s(&p)];
    args.extend_from_slice(extra);
    ok(&args);
    p
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

#[test]
fn every_command_is_deterministic() {
    let fixtures = tempfile::tempdir().unwrap();
    let circuit = circuit_file(fixtures.path(), &["--trainable-depth", "2", "--tau2-preset", "theorem"]);
    let cfg = fixtures.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": "subvolume", "n_values": [4, 5], "layers": 2, "samples": 50, "seed": 9, "output": "sv.csv"}"#).unwrap();
    let bench_csv = fixtures.path().join("bench.csv");
    ok(&["pauliprop-bench", "--n", "6,8", "--trials", "3", "--out", s(&bench_csv)]);

    assert_deterministic("gen", |d, _| {
        strings(&["gen", "--n", "8", "--layers", "2", "--seed", "7", "--trainable-depth", "3", "--out", s(&d.join("g.json"))])
    });
    assert_deterministic("features", |d, _| {
        strings(&["features", "--circuit", s(&circuit), "--samples", "20", "--observables", "zz", "--seed", "4", "--out", s(&d.join("f.csv"))])
    });
    assert_deterministic("experiment", |d, _| {
        strings(&["experiment", "--config", s(&cfg), "--out-dir", s(d)])
    });
    assert_deterministic("plot", |d, _| {
        strings(&["plot", "--csv", s(&bench_csv), "--x", "n", "--y", "peak_terms", "--out", s(&d.join("p.svg"))])
    });
    assert_deterministic("pauliprop-bench", |d, _| {
        strings(&["pauliprop-bench", "--n", "6,8,10", "--trials", "4", "--seed", "2", "--out", s(&d.join("b.csv"))])
    });
    assert_deterministic("graph-stats", |d, _| {
        strings(&["graph-stats", "--n", "30,40", "--trials", "3", "--seed", "2", "--out", s(&d.join("g.csv"))])
    });
    assert_deterministic("graph-stats --circuit", |d, _| {
        strings(&["graph-stats", "--circuit", s(&circuit), "--support", "2", "--out", s(&d.join("g.json"))])
    });
    assert_deterministic("shadows", |d, _| {
        strings(&["shadows", "--circuit", s(&circuit), "--samples", "500", "--seed", "5", "--out", s(&d.join("s.csv"))])
    });
}

#[test]
fn gen_examples() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("t.json");
    ok(&["gen", "--n", "8", "--layers", "2", "--tau2-preset", "theorem", "--out", s(&out)]);
    let m = json(&d.path().join("t.manifest.json"));
    assert!((m["tau2"].as_f64().unwrap() - 8f64.ln() / 64.0).abs() < 1e-15);
    ok(&["gen", "--n", "8", "--layers", "2", "--p", "0", "--out", s(&out)]);
    let c = json(&out);
    let cz: Vec<&Value> = c["layers"].as_array().unwrap().iter().filter(|l| l["type"] == "cz").collect();
    assert_eq!(cz.len(), 2);
    assert!(cz.iter().all(|l| l["edges"].as_array().unwrap().is_empty()));
}

#[test]
fn features_examples() {
    let d = tempfile::tempdir().unwrap();
    let c = circuit_file(d.path(), &["--trainable-depth", "2"]);
    let (a, b) = (d.path().join("a.csv"), d.path().join("b.csv"));
    ok(&["features", "--circuit", s(&c), "--samples", "10", "--backend", "statevector", "--out", s(&a)]);
    ok(&["features", "--circuit", s(&c), "--samples", "10", "--backend", "propagation", "--out", s(&b)]);
    let parse = |p: &Path| -> Vec<Vec<f64>> {
        csv::Reader::from_path(p).unwrap().records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect()
    };
    let (va, vb) = (parse(&a), parse(&b));
    assert_eq!(va.len(), 10);
    for (ra, rb) in va.iter().zip(&vb) {
        assert_eq!(ra.len(), 6);
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    // vanishing angles: every Z_i feature of the bare generative circuit is one
    let g = circuit_file(d.path(), &[]);
    ok(&["features", "--circuit", s(&g), "--samples", "5", "--tau2", "1e-30", "--out", s(&a)]);
    assert!(parse(&a).iter().flatten().all(|&v| (v - 1.0).abs() < 1e-12));
    let miss = qgm(&["features", "--circuit", s(&d.path().join("none.json")), "--out", s(&a)]);
    assert_eq!(miss.status.code(), Some(2));
}

#[test]
fn experiment_errors_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": "subvolume"}"#).unwrap();
    let out = qgm(&["experiment", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing config keys: n_values, samples, seed, output"));

    fs::write(&cfg, r#"{"experiment": "bogus", "n_values": [4], "samples": 2, "seed": 1, "output": "x.csv"}"#).unwrap();
    assert_eq!(qgm(&["experiment", "--config", s(&cfg)]).status.code(), Some(3));
    fs::write(&cfg, r#"{"experiment": "subvolume", "n_values": [4], "samples": 0, "seed": 1, "output": "x.csv"}"#).unwrap();
    assert_eq!(qgm(&["experiment", "--config", s(&cfg), "--out-dir", s(d.path())]).status.code(), Some(4));
    let text = r#"{"experiment": "treewidth_trend", "n_values": [20], "samples": 2, "seed": 1, "output": "tw.csv"}"#;
    fs::write(&cfg, text).unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(qgm(&["experiment", "--config", s(&cfg), "--out-dir", s(&blocker.join("x"))]).status.code(), Some(5));

    ok(&["experiment", "--config", s(&cfg), "--out-dir", s(d.path()), "--seed", "11"]);
    let m = json(&d.path().join("tw.manifest.json"));
    assert_eq!(m["config"], serde_json::from_str::<Value>(text).unwrap());
    assert_eq!(m["master_seed"], 11);
    let header = fs::read_to_string(d.path().join("tw.csv")).unwrap();
    assert!(header.starts_with("n,trial,layers,edges,degeneracy_lb,minfill_ub\n"));
}

#[test]
fn plot_errors() {
    let d = tempfile::tempdir().unwrap();
    let empty = d.path().join("e.csv");
    fs::write(&empty, "n,y\n").unwrap();
    let out = qgm(&["plot", "--csv", s(&empty), "--x", "n", "--y", "y", "--out", s(&d.path().join("e.svg"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no rows"));
    assert!(!d.path().join("e.svg").exists());
    fs::write(&empty, "n,y\n1,x\n").unwrap();
    let out = qgm(&["plot", "--csv", s(&empty), "--x", "n", "--y", "y", "--out", s(&d.path().join("e.svg"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_plot_is_monotone() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("b.csv");
    ok(&["pauliprop-bench", "--n", "8,12,16", "--trials", "3", "--timing", "--out", s(&csv)]);
    let rows: Vec<csv::StringRecord> = csv::Reader::from_path(&csv).unwrap().records().map(Result::unwrap).collect();
    assert!(rows.iter().all(|r| !r[8].is_empty()));
    let svg = d.path().join("b.svg");
    ok(&["plot", "--csv", s(&csv), "--x", "n", "--y", "peak_terms", "--out", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    let line = text.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let ys: Vec<f64> = line
        .split('"')
        .nth(1)
        .unwrap()
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // SVG y grows downwards
    assert!(ys.windows(2).all(|w| w[1] < w[0]), "{ys:?}");
}

#[test]
fn shadows_estimates_print() {
    let d = tempfile::tempdir().unwrap();
    let c = circuit_file(d.path(), &["--tau2", "1e-12"]);
    let out = qgm(&["shadows", "--circuit", s(&c), "--samples", "4000", "--observables", "Z0", "--out", s(&d.path().join("s.csv"))]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["Z0"].as_f64().unwrap() - 1.0).abs() < 0.1);
}
