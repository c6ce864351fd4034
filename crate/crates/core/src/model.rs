//! Max-linear structural equation models on a ttt.
//!
//! `X_v = max_i b_vi Z_i` with independent unit-Fréchet `Z_i`. Under
//! criticality every coefficient is a product along the unique shortest path:
//! `b_vi = c_ii · c_p(i,v)` for ancestors `i` of `v`, and `c_vv` is fixed by
//! requiring unit row sums.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{DirectedEdge, GraphError, NodeId, TttGraph, DEFAULT_PATH_BUDGET};

/// Default margin below which a competing path counts as a tie.
pub const DEFAULT_CRIT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {0} has no weight")]
    MissingWeight(DirectedEdge),
    #[error("weight given for {0}, which is not an edge of the graph")]
    UnexpectedWeight(DirectedEdge),
    #[error("weight {value} on edge {edge} is outside (0, 1)")]
    WeightOutOfRange { edge: DirectedEdge, value: f64 },
    #[error("path {competing_path:?} from {from} to {to} has weight {competing} >= shortest path weight {shortest}")]
    CriticalityViolated {
        from: NodeId,
        to: NodeId,
        shortest: f64,
        competing_path: Vec<NodeId>,
        competing: f64,
    },
    #[error("path {competing_path:?} from {from} to {to} ties the shortest path weight {shortest} (competing {competing})")]
    CriticalityTie {
        from: NodeId,
        to: NodeId,
        shortest: f64,
        competing_path: Vec<NodeId>,
        competing: f64,
    },
    #[error("diagonal coefficient of node {node} is {value}, not positive")]
    NonPositiveDiagonal { node: NodeId, value: f64 },
    #[error("graph has {} sources ({sources:?}); a unique source is required", sources.len())]
    NotUniqueSource { sources: Vec<NodeId> },
    #[error("input coordinate for node {node} is negative ({value})")]
    NegativeInput { node: NodeId, value: f64 },
    #[error("threshold for node {node} is {value}, not positive")]
    NonPositiveThreshold { node: NodeId, value: f64 },
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} has {children} children; exactly one is required")]
    NotSingleChild { node: NodeId, children: usize },
    #[error("scaling by {lambda} leaves the parameter space: {reason}")]
    LeavesParameterSpace { lambda: f64, reason: String },
}

/// Edge weights `θ = (c_e)`, keyed by `(from, to)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeWeights {
    map: BTreeMap<(NodeId, NodeId), f64>,
}

impl EdgeWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Self {
        EdgeWeights {
            map: triples.into_iter().map(|(a, b, c)| ((a, b), c)).collect(),
        }
    }

    pub fn insert(&mut self, from: NodeId, to: NodeId, c: f64) {
        self.map.insert((from, to), c);
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.map.get(&(from, to)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Weights in edge order.
    pub fn iter(&self) -> impl Iterator<Item = (DirectedEdge, f64)> + '_ {
        self.map
            .iter()
            .map(|(&(a, b), &c)| (DirectedEdge { from: a, to: b }, c))
    }

    /// Largest coordinatewise difference, or `None` when edge sets differ.
    pub fn max_abs_diff(&self, other: &EdgeWeights) -> Option<f64> {
        if self.map.len() != other.map.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (k, &c) in &self.map {
            worst = worst.max((c - other.map.get(k)?).abs());
        }
        Some(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub crit_eps: f64,
    pub path_budget: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            crit_eps: DEFAULT_CRIT_EPS,
            path_budget: DEFAULT_PATH_BUDGET,
        }
    }
}

/// Edge weights confirmed to lie in the critical parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedTheta {
    weights: EdgeWeights,
    // dense c[a][b] for edges a→b, zero elsewhere
    c: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl ValidatedTheta {
    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    /// `c_vv` by dense index.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

fn dense_weights(g: &TttGraph, theta: &EdgeWeights) -> Result<Vec<Vec<f64>>, ModelError> {
    let n = g.node_count();
    let mut c = vec![vec![0.0; n]; n];
    for (e, value) in theta.iter() {
        let (a, b) = match (g.index_of(e.from), g.index_of(e.to)) {
            (Ok(a), Ok(b)) if g.has_edge_idx(a, b) => (a, b),
            _ => return Err(ModelError::UnexpectedWeight(e)),
        };
        if !(value > 0.0 && value < 1.0) {
            return Err(ModelError::WeightOutOfRange { edge: e, value });
        }
        c[a][b] = value;
    }
    for &(a, b) in g.edges_idx() {
        if c[a][b] == 0.0 {
            return Err(ModelError::MissingWeight(DirectedEdge::new(
                g.label(a),
                g.label(b),
            )));
        }
    }
    Ok(c)
}

fn seq_product(c: &[Vec<f64>], seq: &[usize]) -> f64 {
    seq.windows(2).map(|w| c[w[0]][w[1]]).product()
}

pub fn validate_theta(g: &TttGraph, theta: &EdgeWeights) -> Result<ValidatedTheta, ModelError> {
    validate_theta_with(g, theta, ValidationOptions::default())
}

/// Checks weights in (0,1), strict criticality of every shortest path, and
/// positivity of every `c_vv`.
pub fn validate_theta_with(
    g: &TttGraph,
    theta: &EdgeWeights,
    opts: ValidationOptions,
) -> Result<ValidatedTheta, ModelError> {
    let c = dense_weights(g, theta)?;
    let n = g.node_count();
    let labels = |seq: &[usize]| seq.iter().map(|&k| g.label(k)).collect::<Vec<_>>();

    for i in 0..n {
        for v in 0..n {
            if i == v || !g.reaches_idx(i, v) {
                continue;
            }
            let sp = g.shortest_path_idx(i, v).expect("reachable");
            let shortest = seq_product(&c, &sp);
            for p in g.all_paths_idx(i, v, opts.path_budget)? {
                if p == sp {
                    continue;
                }
                let competing = seq_product(&c, &p);
                let (from, to) = (g.label(i), g.label(v));
                if competing > shortest + opts.crit_eps {
                    return Err(ModelError::CriticalityViolated {
                        from,
                        to,
                        shortest,
                        competing_path: labels(&p),
                        competing,
                    });
                }
                if competing >= shortest - opts.crit_eps {
                    return Err(ModelError::CriticalityTie {
                        from,
                        to,
                        shortest,
                        competing_path: labels(&p),
                        competing,
                    });
                }
            }
        }
    }

    let mut diag = vec![0.0; n];
    for &v in g.topological_order_idx() {
        let mut s = 1.0;
        for i in 0..n {
            if i != v && g.reaches_idx(i, v) {
                let sp = g.shortest_path_idx(i, v).expect("reachable");
                s -= diag[i] * seq_product(&c, &sp);
            }
        }
        if s <= 0.0 {
            return Err(ModelError::NonPositiveDiagonal {
                node: g.label(v),
                value: s,
            });
        }
        diag[v] = s;
    }

    Ok(ValidatedTheta {
        weights: theta.clone(),
        c,
        diag,
    })
}

#[derive(Debug, Clone)]
pub struct MaxLinearModel {
    graph: TttGraph,
    theta: EdgeWeights,
    c: Vec<Vec<f64>>,
    // cp[i][v] = c_p(i,v); 1 on the diagonal, 0 when v is not reachable
    cp: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

/// Builds the coefficient matrix from validated weights.
pub fn coefficient_matrix(g: &TttGraph, theta: ValidatedTheta) -> MaxLinearModel {
    let n = g.node_count();
    let mut cp = vec![vec![0.0; n]; n];
    for (i, row) in cp.iter_mut().enumerate() {
        for (v, slot) in row.iter_mut().enumerate() {
            if let Some(sp) = g.shortest_path_idx(i, v) {
                *slot = seq_product(&theta.c, &sp);
            }
        }
    }
    let mut b = vec![vec![0.0; n]; n];
    for v in 0..n {
        for i in 0..n {
            b[v][i] = theta.diag[i] * cp[i][v];
        }
    }
    MaxLinearModel {
        graph: g.clone(),
        theta: theta.weights,
        c: theta.c,
        cp,
        b,
        diag: theta.diag,
    }
}

impl MaxLinearModel {
    pub fn new(graph: TttGraph, theta: EdgeWeights) -> Result<Self, ModelError> {
        Self::with_options(graph, theta, ValidationOptions::default())
    }

    pub fn with_options(
        graph: TttGraph,
        theta: EdgeWeights,
        opts: ValidationOptions,
    ) -> Result<Self, ModelError> {
        let v = validate_theta_with(&graph, &theta, opts)?;
        Ok(coefficient_matrix(&graph, v))
    }

    pub fn graph(&self) -> &TttGraph {
        &self.graph
    }

    pub fn theta(&self) -> &EdgeWeights {
        &self.theta
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// `B` by dense indices: `b()[v][i] = b_vi`.
    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn b_at(&self, v: NodeId, i: NodeId) -> Result<f64, ModelError> {
        Ok(self.b[self.graph.index_of(v)?][self.graph.index_of(i)?])
    }

    /// `c_vv` by dense index.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Edge weight by dense indices; zero when there is no edge.
    pub fn weight_idx(&self, a: usize, b: usize) -> f64 {
        self.c[a][b]
    }

    /// `c_p(i,v)` by dense indices; 1 when `i == v`, 0 when unreachable.
    pub fn path_weight_idx(&self, i: usize, v: usize) -> f64 {
        self.cp[i][v]
    }

    pub fn path_weight(&self, i: NodeId, v: NodeId) -> Result<f64, ModelError> {
        Ok(self.cp[self.graph.index_of(i)?][self.graph.index_of(v)?])
    }

    fn check_len(&self, len: usize) -> Result<(), ModelError> {
        if len != self.node_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.node_count(),
                got: len,
            });
        }
        Ok(())
    }

    /// `l(x) = Σ_i max_v b_vi x_v`, with `x` indexed in label order.
    pub fn stdf(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_len(x.len())?;
        if let Some(k) = x.iter().position(|&v| !(v >= 0.0)) {
            return Err(ModelError::NegativeInput {
                node: self.graph.label(k),
                value: x[k],
            });
        }
        Ok(self.stdf_unchecked(x))
    }

    pub(crate) fn stdf_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.node_count();
        (0..n)
            .map(|i| (0..n).map(|v| self.b[v][i] * x[v]).fold(0.0, f64::max))
            .sum()
    }

    /// `P(X ≤ z) = exp(−l(1/z))`; infinite coordinates are unconstrained.
    pub fn joint_cdf(&self, z: &[f64]) -> Result<f64, ModelError> {
        self.check_len(z.len())?;
        if let Some(k) = z.iter().position(|&v| !(v > 0.0)) {
            return Err(ModelError::NonPositiveThreshold {
                node: self.graph.label(k),
                value: z[k],
            });
        }
        let inv: Vec<f64> = z.iter().map(|&v| 1.0 / v).collect();
        Ok((-self.stdf_unchecked(&inv)).exp())
    }

    /// `b_vv` from the weights of the tournament in which `v` has its parents,
    /// by forward substitution in `(I + C) b = 1`.
    pub fn bvv_via_tournament(&self, v: NodeId) -> Result<f64, ModelError> {
        let g = &self.graph;
        if !g.has_unique_source() {
            return Err(ModelError::NotUniqueSource {
                sources: g.sources().into_iter().collect(),
            });
        }
        let vi = g.index_of(v)?;
        let Some(&parent) = g.parents_idx(vi).first() else {
            return Ok(1.0);
        };
        let t = g
            .tournament_of_pair_idx(parent, vi)
            .expect("parent and child share a tournament");
        let nodes = g.tournament_idx(t);
        let mut b = Vec::with_capacity(nodes.len());
        for (m, &x) in nodes.iter().enumerate() {
            let s: f64 = (0..m).map(|l| self.c[nodes[l]][x] * b[l]).sum();
            b.push(1.0 - s);
            if x == vi {
                return Ok(b[m]);
            }
        }
        unreachable!("v belongs to its parent tournament")
    }

    /// The alternative weights of the scaling construction at `u`:
    /// incoming edges of `u` scaled by `λ`, its single outgoing edge by `1/λ`.
    pub fn scale_witness(&self, u: NodeId, lambda: f64) -> Result<EdgeWeights, ModelError> {
        let g = &self.graph;
        let ui = g.index_of(u)?;
        let ch = g.children_idx(ui);
        if ch.len() != 1 {
            return Err(ModelError::NotSingleChild {
                node: u,
                children: ch.len(),
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ModelError::LeavesParameterSpace {
                lambda,
                reason: "lambda must be positive and finite".into(),
            });
        }
        let w = g.label(ch[0]);
        let mut theta = self.theta.clone();
        for &j in g.parents_idx(ui) {
            let j = g.label(j);
            let c = theta.get(j, u).expect("edge weight");
            theta.insert(j, u, lambda * c);
        }
        let c = theta.get(u, w).expect("edge weight");
        theta.insert(u, w, c / lambda);
        validate_theta(g, &theta).map_err(|e| ModelError::LeavesParameterSpace {
            lambda,
            reason: e.to_string(),
        })?;
        Ok(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tournament_coefficients() {
        let m = fixtures::tournament3();
        let expected = [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.3, 0.2, 0.5]];
        for v in 0..3 {
            for i in 0..3 {
                assert!((m.b()[v][i] - expected[v][i]).abs() < 1e-15, "b[{v}][{i}]");
            }
        }
    }

    #[test]
    fn criticality_violation_and_range() {
        let g = fixtures::graph(3, &[(1, 2), (2, 3), (1, 3)]);
        let w = fixtures::weights(&[(1, 2, 0.5), (2, 3, 0.4), (1, 3, 0.1)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::CriticalityViolated { .. })
        ));
        let w = fixtures::weights(&[(1, 2, 0.5), (2, 3, 0.4), (1, 3, 0.2)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::CriticalityTie { .. })
        ));
        let g = fixtures::graph(3, &[(1, 2), (2, 3)]);
        let w = fixtures::weights(&[(1, 2, 1.0), (2, 3, 0.4)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::WeightOutOfRange { .. })
        ));
        let w = fixtures::weights(&[(1, 2, 0.5)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::MissingWeight(_))
        ));
        let w = fixtures::weights(&[(1, 2, 0.5), (2, 3, 0.4), (1, 3, 0.1)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::UnexpectedWeight(_))
        ));
    }

    #[test]
    fn non_positive_diagonal() {
        // three parents in one tournament with large weights
        let g = fixtures::graph(3, &[(1, 3), (2, 3)]);
        let w = fixtures::weights(&[(1, 3, 0.6), (2, 3, 0.5)]);
        assert!(matches!(
            validate_theta(&g, &w),
            Err(ModelError::NonPositiveDiagonal { .. })
        ));
    }

    #[test]
    fn unique_parent_identity_and_source_row() {
        let m = fixtures::chain3();
        assert_eq!(m.b()[0], vec![1.0, 0.0, 0.0]);
        assert!((m.diag()[1] - 0.5).abs() < 1e-15);
        assert!((m.diag()[2] - 0.6).abs() < 1e-15);
        assert!((m.b()[2][0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bvv_tournament_formula() {
        let m = fixtures::tournament3();
        assert!((m.bvv_via_tournament(NodeId(3)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(m.bvv_via_tournament(NodeId(1)).unwrap(), 1.0);
        let m = fixtures::chain3();
        assert!((m.bvv_via_tournament(NodeId(3)).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(
            fixtures::v_structure3().bvv_via_tournament(NodeId(3)),
            Err(ModelError::NotUniqueSource { .. })
        ));
    }

    #[test]
    fn stdf_and_cdf() {
        let m = fixtures::tournament3();
        assert!((m.stdf(&[1.0, 1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.stdf(&[0.0, 1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.stdf(&[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(
            m.stdf(&[-1.0, 0.0, 0.0]),
            Err(ModelError::NegativeInput { .. })
        ));
        let inf = f64::INFINITY;
        assert!((m.joint_cdf(&[inf, 1.0, inf]).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((m.joint_cdf(&[1.0; 3]).unwrap() - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(m.joint_cdf(&[inf; 3]).unwrap(), 1.0);
        assert!(matches!(
            m.joint_cdf(&[0.0, 1.0, 1.0]),
            Err(ModelError::NonPositiveThreshold { .. })
        ));
    }

    #[test]
    fn scaling_construction() {
        let m = fixtures::chain3();
        let w = m.scale_witness(NodeId(2), 1.1).unwrap();
        assert!((w.get(NodeId(1), NodeId(2)).unwrap() - 0.55).abs() < 1e-15);
        assert!((w.get(NodeId(2), NodeId(3)).unwrap() - 0.4 / 1.1).abs() < 1e-15);
        assert_eq!(&m.scale_witness(NodeId(2), 1.0).unwrap(), m.theta());
        assert!(matches!(
            m.scale_witness(NodeId(2), 10.0),
            Err(ModelError::LeavesParameterSpace { .. })
        ));
        assert!(matches!(
            m.scale_witness(NodeId(3), 1.1),
            Err(ModelError::NotSingleChild { .. })
        ));
    }
}
