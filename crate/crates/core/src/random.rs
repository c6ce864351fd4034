//! Random ttts, weights and latent sets for property tests and benchmarks.
//!
//! Graphs grow by gluing a fresh transitive tournament onto an existing node.
//! When that node is always the source of the new tournament the graph keeps
//! a single source; gluing it in a later position creates a v-structure.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{DirectedEdge, NodeId, TttGraph};
use crate::model::{validate_theta, EdgeWeights, MaxLinearModel};

const MAX_TOURNAMENT: usize = 4;

struct Builder {
    n: usize,
    edges: Vec<(usize, usize)>,
    has_parent: Vec<bool>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            n: 1,
            edges: Vec::new(),
            has_parent: vec![false],
        }
    }

    /// Glues a tournament of `size` nodes at `anchor`, which takes position `pos`
    /// in the new tournament's order.
    fn glue(&mut self, anchor: usize, size: usize, pos: usize) {
        let mut order: Vec<usize> = (0..size - 1).map(|k| self.n + k).collect();
        self.n += size - 1;
        self.has_parent.resize(self.n, false);
        order.insert(pos, anchor);
        for (x, &a) in order.iter().enumerate() {
            for &b in &order[x + 1..] {
                self.edges.push((a, b));
                self.has_parent[b] = true;
            }
        }
    }

    fn finish<R: Rng>(self, rng: &mut R) -> TttGraph {
        let mut labels: Vec<u32> = (1..=self.n as u32).collect();
        labels.shuffle(rng);
        TttGraph::build(
            labels.iter().map(|&l| NodeId(l)),
            self.edges
                .iter()
                .map(|&(a, b)| DirectedEdge::new(labels[a], labels[b])),
        )
        .expect("glued tournaments form a ttt")
    }
}

fn grow<R: Rng>(rng: &mut R, b: &mut Builder, target: usize) {
    while b.n < target {
        let room = (target - b.n + 1).min(MAX_TOURNAMENT);
        let size = rng.gen_range(2..=room);
        let anchor = rng.gen_range(0..b.n);
        b.glue(anchor, size, 0);
    }
}

/// A random ttt with a single source and between 1 and `max_nodes` nodes.
pub fn unique_source_ttt<R: Rng>(rng: &mut R, max_nodes: usize) -> TttGraph {
    let target = rng.gen_range(1..=max_nodes.max(1));
    let mut b = Builder::new();
    grow(rng, &mut b, target);
    b.finish(rng)
}

/// A random ttt with at least two sources and at most `max_nodes` nodes
/// (`max_nodes ≥ 3`).
pub fn multi_source_ttt<R: Rng>(rng: &mut R, max_nodes: usize) -> TttGraph {
    assert!(max_nodes >= 3, "a v-structure needs three nodes");
    let target = rng.gen_range(3..=max_nodes);
    let mut b = Builder::new();
    let first = rng.gen_range(2..=(target - 1).min(MAX_TOURNAMENT));
    b.glue(0, first, 0);
    let with_parent: Vec<usize> = (0..b.n).filter(|&v| b.has_parent[v]).collect();
    let anchor = *with_parent
        .choose(rng)
        .expect("tournament has a non-source");
    let size = rng.gen_range(2..=(target - b.n + 1).min(MAX_TOURNAMENT));
    let pos = rng.gen_range(1..size);
    b.glue(anchor, size, pos);
    grow(rng, &mut b, target);
    b.finish(rng)
}

/// Draws weights uniformly from `[lo, hi]` until they lie in the critical
/// parameter space. Panics after `tries` failures.
pub fn theta_in<R: Rng>(rng: &mut R, g: &TttGraph, lo: f64, hi: f64, tries: usize) -> EdgeWeights {
    for _ in 0..tries {
        let w = EdgeWeights::from_triples(
            g.edges()
                .into_iter()
                .map(|e| (e.from, e.to, rng.gen_range(lo..hi))),
        );
        if validate_theta(g, &w).is_ok() {
            return w;
        }
    }
    panic!("no valid weights found in {tries} draws");
}

/// Valid random weights with every `c_e` in `[0.05, 0.6)`.
pub fn theta<R: Rng>(rng: &mut R, g: &TttGraph) -> EdgeWeights {
    theta_in(rng, g, 0.05, 0.6, 100_000)
}

pub fn model<R: Rng>(rng: &mut R, g: TttGraph) -> MaxLinearModel {
    let w = theta(rng, &g);
    MaxLinearModel::new(g, w).expect("validated weights")
}

/// Random latent set meeting the identifiability criterion; each eligible
/// node is made latent with probability one half.
pub fn latent_set<R: Rng>(rng: &mut R, g: &TttGraph) -> BTreeSet<NodeId> {
    (0..g.node_count())
        .filter(|&v| {
            g.children_idx(v).len() >= 2
                && g.tournaments_of_idx(v)
                    .iter()
                    .any(|&t| g.tournament_idx(t)[0] == v)
        })
        .filter(|_| rng.gen_bool(0.5))
        .map(|v| g.label(v))
        .collect()
}
