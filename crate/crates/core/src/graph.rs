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

//! Interaction graphs and treewidth brackets.
//!
//! Treewidth itself is not computed. Degeneracy gives a lower bound and the greedy min-fill
//! elimination order gives an upper bound.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{backward_lightcone, log_layer_count, sample_er_graph_with, Circuit, CircuitError, EdgeRule, Layer, LayerGraph};
use crate::rng;

/// Interaction graph relabelled onto the light-cone qubits: vertex `i` is qubit `qubits[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    pub qubits: Vec<usize>,
    pub graph: LayerGraph,
}

/// Union of CZ edges whose endpoints both lie in the backward light cone of `support`.
pub fn interaction_graph(circuit: &Circuit, support: &BTreeSet<usize>) -> Result<InteractionGraph, CircuitError> {
    if let Some(&q) = support.iter().find(|&&q| q >= circuit.n) {
        return Err(CircuitError::QubitOutOfRange { qubit: q, n: circuit.n });
    }
    let cone = backward_lightcone(circuit, support);
    let qubits: Vec<usize> = cone.qubits.iter().copied().collect();
    let mut index = vec![usize::MAX; circuit.n];
    for (i, &q) in qubits.iter().enumerate() {
        index[q] = i;
    }
    let mut edges = Vec::new();
    for layer in &circuit.layers {
        if let Layer::Cz { edges: layer_edges } = layer {
            for &[a, b] in layer_edges {
                if index[a] != usize::MAX && index[b] != usize::MAX {
                    edges.push((index[a], index[b]));
                }
            }
        }
    }
    let graph = LayerGraph::new(qubits.len(), edges)?;
    Ok(InteractionGraph { qubits, graph })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationOrder {
    pub order: Vec<usize>,
    /// Largest number of remaining neighbours at elimination time.
    pub width: usize,
}

fn bitsets(graph: &LayerGraph) -> Vec<FixedBitSet> {
    let mut adj = vec![FixedBitSet::with_capacity(graph.n); graph.n];
    for &(a, b) in graph.edges() {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    adj
}

/// Greedy min-fill elimination; ties go to the lowest vertex index.
pub fn min_fill_width(graph: &LayerGraph) -> EliminationOrder {
    let n = graph.n;
    let mut adj = bitsets(graph);
    let mut alive = FixedBitSet::with_capacity(n);
    alive.insert_range(..);
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in alive.ones() {
            // ordered pairs of non-adjacent neighbours, halved
            let mut missing = 0;
            for u in adj[v].ones() {
                let mut others = adj[v].clone();
                others.difference_with(&adj[u]);
                others.set(u, false);
                missing += others.count_ones(..);
            }
            let fill = missing / 2;
            if best.is_none_or(|(_, f)| fill < f) {
                best = Some((v, fill));
            }
        }
        let (v, _) = best.expect("a vertex remains");
        let nbrs: Vec<usize> = adj[v].ones().collect();
        width = width.max(nbrs.len());
        let clique = adj[v].clone();
        for &u in &nbrs {
            adj[u].union_with(&clique);
            adj[u].set(u, false);
            adj[u].set(v, false);
        }
        adj[v].clear();
        alive.set(v, false);
        order.push(v);
    }
    EliminationOrder { order, width }
}

/// Largest minimum degree seen while repeatedly deleting a minimum-degree vertex.
pub fn degeneracy(graph: &LayerGraph) -> usize {
    let adj = graph.adjacency();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; graph.n];
    let mut best = 0;
    for _ in 0..graph.n {
        let v = (0..graph.n).filter(|&v| !removed[v]).min_by_key(|&v| degree[v]).expect("a vertex remains");
        best = best.max(degree[v]);
        removed[v] = true;
        for &u in &adj[v] {
            if !removed[u] {
                degree[u] -= 1;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreewidthRow {
    pub n: usize,
    pub trial: usize,
    pub layers: usize,
    pub edges: usize,
    pub degeneracy_lb: usize,
    pub minfill_ub: usize,
}

/// For each `(n, trial)`: one row for a single `G(n, p)` layer and one for the union of
/// `⌈ln n⌉` layers (the first of which is the single layer). Trial seeds are
/// `derive_path(seed, [n, trial])`.
pub fn treewidth_trend(ns: &[usize], rule: EdgeRule, trials: usize, seed: u64) -> Result<Vec<TreewidthRow>, CircuitError> {
    let jobs: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..trials).map(move |t| (n, t))).collect();
    let rows: Result<Vec<Vec<TreewidthRow>>, CircuitError> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let mut rng = rng::rng_from_seed(rng::derive_path(seed, &[n as u64, trial as u64]));
            let p = rule.resolve(n);
            let layers = log_layer_count(n);
            let first = sample_er_graph_with(n, p, &mut rng)?;
            let mut union = first.clone();
            for _ in 1..layers {
                union = union.union(&sample_er_graph_with(n, p, &mut rng)?);
            }
            let row = |g: &LayerGraph, layers| TreewidthRow {
                n,
                trial,
                layers,
                edges: g.edge_count(),
                degeneracy_lb: degeneracy(g),
                minfill_ub: min_fill_width(g).width,
            };
            let mut out = vec![row(&first, 1)];
            if layers > 1 {
                out.push(row(&union, layers));
            }
            Ok(out)
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}
