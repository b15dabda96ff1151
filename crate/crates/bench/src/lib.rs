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

//! Fixtures shared by the criterion benchmarks in `benches/`.

use qgm_core::circuit::{build_generative, build_trainable, Circuit, GenerativeSpec, LayerGraph, ParamInit, TAU2_CAP};
use qgm_core::circuit::sample_er_graph;

/// Generative circuit with the standard `L` and `p` followed by `depth` brick layers.
pub fn model_circuit(n: usize, depth: usize, seed: u64) -> Circuit {
    let g = build_generative(&GenerativeSpec::standard(n, TAU2_CAP, seed)).expect("valid spec");
    g.compose(&build_trainable(n, depth, seed ^ 0xA5A5, ParamInit::Uniform)).expect("same width")
}

/// Union of `layers` independent `G(n, ln n / n)` graphs.
pub fn union_graph(n: usize, layers: usize, seed: u64) -> LayerGraph {
    let p = qgm_core::circuit::log_edge_probability(n);
    (0..layers)
        .map(|l| sample_er_graph(n, p, seed.wrapping_add(l as u64)).expect("valid p"))
        .fold(LayerGraph::empty(n), |acc, g| acc.union(&g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shape() {
        let c = model_circuit(6, 2, 1);
        assert_eq!(c.n, 6);
        assert_eq!(c.num_params(), 5 * 15);
        assert_eq!(union_graph(10, 3, 1).n, 10);
    }
}
