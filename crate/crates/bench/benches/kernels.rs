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

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgm_bench::{model_circuit, union_graph};
use qgm_core::graph::min_fill_width;
use qgm_core::pauli::{PauliString, PauliSum};
use qgm_core::propagation::{propagate, TruncationPolicy};
use qgm_core::statevector::StateVector;

fn statevector_rotation(c: &mut Criterion) {
    let mut group = c.benchmark_group("statevector_rotation");
    for n in [10usize, 14, 18] {
        let g = PauliString::from_sparse(n, "X0 Y3").unwrap();
        let mut state = StateVector::zero(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| state.apply_pauli_rotation(black_box(&g), black_box(0.3)).unwrap())
        });
    }
    group.finish();
}

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagation_sine_cutoff");
    group.sample_size(20);
    for n in [8usize, 12, 16] {
        let circuit = model_circuit(n, 0, 1);
        let obs = PauliSum::single(1.0, PauliString::from_sparse(n, "Z0").unwrap());
        let policy = TruncationPolicy::sine_cutoff(qgm_core::propagation::sine_cutoff_default(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| propagate(black_box(&circuit), &obs, &policy).unwrap().expectation)
        });
    }
    group.finish();
}

fn min_fill(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_fill");
    group.sample_size(10);
    for n in [50usize, 100, 200] {
        let g = union_graph(n, 1, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| min_fill_width(black_box(&g)).width));
    }
    group.finish();
}

criterion_group!(benches, statevector_rotation, propagation, min_fill);
criterion_main!(benches);
