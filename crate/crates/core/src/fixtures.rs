//! Small named graphs and models used by tests, examples and the README.

use crate::graph::{DirectedEdge, NodeId, TttGraph};
use crate::model::{EdgeWeights, MaxLinearModel};

pub fn graph(n: u32, edges: &[(u32, u32)]) -> TttGraph {
    TttGraph::build(
        (1..=n).map(NodeId),
        edges.iter().map(|&(a, b)| DirectedEdge::new(a, b)),
    )
    .expect("fixture graph is a valid ttt")
}

pub fn weights(w: &[(u32, u32, f64)]) -> EdgeWeights {
    EdgeWeights::from_triples(w.iter().map(|&(a, b, c)| (NodeId(a), NodeId(b), c)))
}

pub fn model(n: u32, w: &[(u32, u32, f64)]) -> MaxLinearModel {
    let edges: Vec<(u32, u32)> = w.iter().map(|&(a, b, _)| (a, b)).collect();
    MaxLinearModel::new(graph(n, &edges), weights(w)).expect("fixture weights are valid")
}

/// Eight nodes, four tournaments, sources 1, 4 and 8.
pub const MULTI_SOURCE_EIGHT: [(u32, u32); 11] = [
    (1, 2),
    (1, 3),
    (3, 2),
    (3, 5),
    (3, 7),
    (3, 6),
    (5, 6),
    (5, 7),
    (4, 3),
    (8, 7),
    (7, 6),
];

/// Same skeleton re-oriented so that node 4 is the only source.
pub const SINGLE_SOURCE_EIGHT: [(u32, u32); 11] = [
    (1, 2),
    (3, 1),
    (3, 2),
    (3, 5),
    (3, 7),
    (3, 6),
    (5, 6),
    (5, 7),
    (4, 3),
    (7, 8),
    (7, 6),
];

/// Same skeleton re-oriented so that node 8 is the only source.
pub const SINK_SOURCE_EIGHT: [(u32, u32); 11] = [
    (1, 2),
    (3, 1),
    (3, 2),
    (3, 5),
    (7, 3),
    (3, 6),
    (5, 6),
    (7, 5),
    (3, 4),
    (8, 7),
    (7, 6),
];

/// Same skeleton with node 1 the only source; used for latent-variable examples.
pub const LATENT_EIGHT: [(u32, u32); 11] = [
    (1, 2),
    (1, 3),
    (3, 2),
    (3, 5),
    (3, 7),
    (3, 6),
    (5, 6),
    (5, 7),
    (3, 4),
    (7, 8),
    (7, 6),
];

pub fn multi_source_eight() -> TttGraph {
    graph(8, &MULTI_SOURCE_EIGHT)
}

pub fn single_source_eight() -> TttGraph {
    graph(8, &SINGLE_SOURCE_EIGHT)
}

pub fn sink_conditioned_eight() -> TttGraph {
    graph(8, &SINK_SOURCE_EIGHT)
}

pub fn latent_eight() -> TttGraph {
    graph(8, &LATENT_EIGHT)
}

/// Chain 1→2→3 with c12 = 0.5, c23 = 0.4.
pub fn chain3() -> MaxLinearModel {
    model(3, &[(1, 2, 0.5), (2, 3, 0.4)])
}

/// Tournament on {1,2,3} with c12 = 0.5, c23 = 0.4, c13 = 0.3.
pub fn tournament3() -> MaxLinearModel {
    model(3, &[(1, 2, 0.5), (2, 3, 0.4), (1, 3, 0.3)])
}

/// V-structure 1→3←2 with c13 = 0.4, c23 = 0.5.
pub fn v_structure3() -> MaxLinearModel {
    model(3, &[(1, 3, 0.4), (2, 3, 0.5)])
}

/// Chain 2→1→3 with c21 = 0.8, c13 = 0.5; atoms of its angular measure have
/// pairwise distinct zero patterns.
pub fn zero_pattern3() -> MaxLinearModel {
    model(3, &[(2, 1, 0.8), (1, 3, 0.5)])
}
