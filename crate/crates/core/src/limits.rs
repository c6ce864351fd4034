//! Conditional tail limits given one large component.
//!
//! For a node `u`, `(X_v / X_u)_{v≠u}` given `X_u > t` converges as `t → ∞`
//! to a discrete law `A^{(u)}`. [`direct_limit`] computes it from the
//! coefficient matrix. [`factorized_limit`] builds the law of products of
//! independent per-tournament increments along the shortest trails from `u`;
//! the two agree exactly when the graph has a single source.

use thiserror::Error;

use crate::graph::{GraphError, NodeId, TrailShape, TttGraph};
use crate::law::{DiscreteLaw, LawError, LIMIT_ATOM_TOL};
use crate::model::MaxLinearModel;

/// Default cap on the number of joint atoms held during factorized enumeration.
pub const DEFAULT_ENUM_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("factorized enumeration needs more than {budget} joint atoms")]
    EnumerationBudgetExceeded { budget: usize },
    #[error("no closed form applies to ({u}, {v}): {reason}")]
    NoApplicableCase {
        u: NodeId,
        v: NodeId,
        reason: String,
    },
    #[error("conditioning node and target node coincide ({0})")]
    SameNode(NodeId),
    #[error("nodes {u} and {v} are not adjacent")]
    NotAdjacent { u: NodeId, v: NodeId },
}

/// Limit law of `(A_uv)_{v≠u}`; coordinates are all other nodes in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLaw {
    pub u: NodeId,
    pub law: DiscreteLaw,
}

/// Joint law of the increments `(M_{w,j})_{j ∈ τ, j ≠ w}` of one tournament,
/// anchored at the tournament node `w` closest to `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    pub tournament: usize,
    pub anchor: NodeId,
    pub law: DiscreteLaw,
}

/// Which closed form a single increment `M_wv` follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementCase {
    /// Edge `w → v`, `w` the tournament source: degenerate at `c_wv`.
    ForwardFromSource,
    /// Edge `w → v`, `w` not the source.
    Forward,
    /// Edge `v → w`, `v` the tournament source.
    BackwardFromSource,
    /// Edge `v → w`, `v` not the source.
    Backward,
}

/// Which closed form a marginal `A_uv` follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalCase {
    ForwardFromSource,
    Forward,
    BackwardToSource,
    Backward,
    ApexSourceBoth,
    ApexSourceTowardU,
    ApexSourceTowardV,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLimit {
    pub case: MarginalCase,
    pub law: DiscreteLaw,
}

fn other_coords(g: &TttGraph, u: usize) -> (Vec<usize>, Vec<NodeId>) {
    let idx: Vec<usize> = (0..g.node_count()).filter(|&v| v != u).collect();
    let labels = idx.iter().map(|&v| g.label(v)).collect();
    (idx, labels)
}

/// `Σ_{j∈An(u)} b_uj δ((b_vj / b_uj)_{v≠u})`.
pub fn direct_limit(model: &MaxLinearModel, u: NodeId) -> Result<LimitLaw, LimitError> {
    let g = model.graph();
    let ui = g.index_of(u)?;
    let (idx, labels) = other_coords(g, ui);
    let b = model.b();
    let pairs = (0..g.node_count())
        .filter(|&j| g.reaches_idx(j, ui))
        .map(|j| {
            let atom = idx.iter().map(|&v| b[v][j] / b[ui][j]).collect();
            (atom, b[ui][j])
        })
        .collect();
    Ok(LimitLaw {
        u,
        law: DiscreteLaw::from_parts(labels, pairs).canonicalize(LIMIT_ATOM_TOL),
    })
}

type Pairs = Vec<(Vec<f64>, f64)>;

fn increment_block_idx(model: &MaxLinearModel, ui: usize, t: usize) -> (usize, Vec<usize>, Pairs) {
    let g = model.graph();
    let w = g.closest_tournament_node_idx(ui, t);
    let js: Vec<usize> = g
        .tournament_idx(t)
        .iter()
        .copied()
        .filter(|&j| j != w)
        .collect();
    let b = model.b();
    let atoms = (0..g.node_count())
        .filter(|&k| g.reaches_idx(k, w))
        .map(|k| {
            let ckw = model.path_weight_idx(k, w);
            let atom = js
                .iter()
                .map(|&j| model.path_weight_idx(k, j) / ckw)
                .collect();
            (atom, b[w][k])
        })
        .collect();
    (w, js, atoms)
}

/// Joint law of the increments of tournament `tau` as seen from `u`:
/// `Σ_{k∈An(w)} b_wk δ((c_p(k,j) / c_p(k,w))_j)`.
pub fn increment_block(
    model: &MaxLinearModel,
    u: NodeId,
    tau: usize,
) -> Result<IncrementBlock, LimitError> {
    let g = model.graph();
    let ui = g.index_of(u)?;
    assert!(tau < g.tournaments().len(), "tournament index out of range");
    let (w, js, atoms) = increment_block_idx(model, ui, tau);
    let labels = js.iter().map(|&j| g.label(j)).collect();
    Ok(IncrementBlock {
        tournament: tau,
        anchor: g.label(w),
        law: DiscreteLaw::from_parts(labels, atoms).canonicalize(LIMIT_ATOM_TOL),
    })
}

/// Closed form of the single increment `M_wv` for adjacent `w`, `v`.
pub fn increment_marginal(
    model: &MaxLinearModel,
    w: NodeId,
    v: NodeId,
) -> Result<(IncrementCase, DiscreteLaw), LimitError> {
    let g = model.graph();
    let (wi, vi) = (g.index_of(w)?, g.index_of(v)?);
    let t = g
        .tournament_of_pair_idx(wi, vi)
        .filter(|_| wi != vi)
        .ok_or(LimitError::NotAdjacent { u: w, v })?;
    let src = g.tournament_idx(t)[0];
    let b = model.b();
    let cp = |a: usize, z: usize| model.path_weight_idx(a, z);
    let an = |x: usize| (0..g.node_count()).filter(move |&j| g.reaches_idx(j, x));
    let (case, pairs): (IncrementCase, Vec<(Vec<f64>, f64)>) = if g.has_edge_idx(wi, vi) {
        if src == wi {
            (
                IncrementCase::ForwardFromSource,
                vec![(vec![cp(wi, vi)], 1.0)],
            )
        } else {
            let pairs = an(wi)
                .map(|j| (vec![cp(j, vi) / cp(j, wi)], b[wi][j]))
                .collect();
            (IncrementCase::Forward, pairs)
        }
    } else if src == vi {
        let c = cp(vi, wi);
        (
            IncrementCase::BackwardFromSource,
            vec![(vec![1.0 / c], c), (vec![0.0], 1.0 - c)],
        )
    } else {
        let mut pairs: Vec<(Vec<f64>, f64)> = an(vi)
            .map(|j| (vec![cp(j, vi) / cp(j, wi)], b[wi][j]))
            .collect();
        pairs.extend(
            an(wi)
                .filter(|&j| !g.reaches_idx(j, vi))
                .map(|j| (vec![0.0], b[wi][j])),
        );
        (IncrementCase::Backward, pairs)
    };
    Ok((
        case,
        DiscreteLaw::from_parts(vec![v], pairs).canonicalize(LIMIT_ATOM_TOL),
    ))
}

/// Exact law of `A_uv = Π_{e ∈ t_u(u,v)} M_e` with independent increment blocks.
pub fn factorized_limit(model: &MaxLinearModel, u: NodeId) -> Result<LimitLaw, LimitError> {
    factorized_limit_with_budget(model, u, DEFAULT_ENUM_BUDGET)
}

pub fn factorized_limit_with_budget(
    model: &MaxLinearModel,
    u: NodeId,
    budget: usize,
) -> Result<LimitLaw, LimitError> {
    let g = model.graph();
    let ui = g.index_of(u)?;
    let n = g.node_count();

    // tournaments ordered so that every anchor is assigned before it is used
    let mut order: Vec<(usize, usize)> = (0..g.tournaments().len())
        .map(|t| {
            (
                g.trail_length_idx(ui, g.closest_tournament_node_idx(ui, t)),
                t,
            )
        })
        .collect();
    order.sort_unstable();

    let all: Vec<NodeId> = g.labels().to_vec();
    let mut start = vec![0.0; n];
    start[ui] = 1.0;
    let mut states: Vec<(Vec<f64>, f64)> = vec![(start, 1.0)];
    for (_, t) in order {
        let (w, js, block) = increment_block_idx(model, ui, t);
        let block = DiscreteLaw::from_parts(js.iter().map(|&j| g.label(j)).collect(), block)
            .canonicalize(LIMIT_ATOM_TOL);
        if states.len().saturating_mul(block.len()) > budget {
            return Err(LimitError::EnumerationBudgetExceeded { budget });
        }
        let mut next = Vec::with_capacity(states.len() * block.len());
        for (s, ms) in &states {
            for (m, mb) in block.iter() {
                let mut a = s.clone();
                for (&j, &mj) in js.iter().zip(m) {
                    a[j] = s[w] * mj;
                }
                next.push((a, ms * mb));
            }
        }
        states = DiscreteLaw::from_parts(all.clone(), next)
            .canonicalize(LIMIT_ATOM_TOL)
            .iter()
            .map(|(a, m)| (a.to_vec(), m))
            .collect();
    }

    let (idx, labels) = other_coords(g, ui);
    let pairs = states
        .into_iter()
        .map(|(a, m)| (idx.iter().map(|&v| a[v]).collect(), m))
        .collect();
    Ok(LimitLaw {
        u,
        law: DiscreteLaw::from_parts(labels, pairs).canonicalize(LIMIT_ATOM_TOL),
    })
}

/// Closed form of the marginal law of `A_uv`, selected from the shape of the
/// shortest trail between `u` and `v` and the source status of its nodes.
pub fn marginal_limit(
    model: &MaxLinearModel,
    u: NodeId,
    v: NodeId,
) -> Result<MarginalLimit, LimitError> {
    let g = model.graph();
    let (ui, vi) = (g.index_of(u)?, g.index_of(v)?);
    if ui == vi {
        return Err(LimitError::SameNode(u));
    }
    let seq = g.shortest_trail_idx(ui, vi);
    let shape = g.shortest_trail(u, v)?.shape;
    let b = model.b();
    let cp = |a: usize, z: usize| model.path_weight_idx(a, z);
    let an: Vec<Vec<usize>> = (0..g.node_count())
        .map(|x| {
            (0..g.node_count())
                .filter(|&j| g.reaches_idx(j, x))
                .collect()
        })
        .collect();
    let is_src = |x: usize, y: usize| {
        let t = g.tournament_of_pair_idx(x, y).expect("adjacent on a trail");
        g.tournament_idx(t)[0] == x
    };
    let zeros_outside = |keep: usize| -> Vec<(Vec<f64>, f64)> {
        an[ui]
            .iter()
            .filter(|&&j| !g.reaches_idx(j, keep))
            .map(|&j| (vec![0.0], b[ui][j]))
            .collect()
    };

    let (case, pairs): (MarginalCase, Vec<(Vec<f64>, f64)>) = match shape {
        TrailShape::Forward => {
            let r = seq[1];
            if is_src(ui, r) {
                (
                    MarginalCase::ForwardFromSource,
                    vec![(vec![cp(ui, vi)], 1.0)],
                )
            } else {
                let pairs = an[ui]
                    .iter()
                    .map(|&j| (vec![cp(j, r) / cp(j, ui) * cp(r, vi)], b[ui][j]))
                    .collect();
                (MarginalCase::Forward, pairs)
            }
        }
        TrailShape::Backward => {
            let r = seq[seq.len() - 2];
            if is_src(vi, r) {
                let c = cp(vi, ui);
                (
                    MarginalCase::BackwardToSource,
                    vec![(vec![1.0 / c], c), (vec![0.0], 1.0 - c)],
                )
            } else {
                let mut pairs: Vec<(Vec<f64>, f64)> = an[vi]
                    .iter()
                    .map(|&j| {
                        (
                            vec![cp(j, vi) / (cp(j, r) * cp(r, ui))],
                            cp(r, ui) * b[r][j],
                        )
                    })
                    .collect();
                pairs.extend(zeros_outside(vi));
                (MarginalCase::Backward, pairs)
            }
        }
        TrailShape::Apex(_) | TrailShape::Mixed if !g.has_unique_source() => {
            return Err(LimitError::NoApplicableCase {
                u,
                v,
                reason: "trail through an apex needs a graph with a single source".into(),
            })
        }
        TrailShape::Mixed => unreachable!("single-source graphs have no colliders on trails"),
        TrailShape::Apex(r) => {
            let r = g.index_of(r)?;
            let k = seq.iter().position(|&x| x == r).expect("apex on trail");
            let (m, nn) = (seq[k - 1], seq[k + 1]);
            match (is_src(r, m), is_src(r, nn)) {
                (true, true) => {
                    let c = cp(r, ui);
                    (
                        MarginalCase::ApexSourceBoth,
                        vec![(vec![cp(r, vi) / c], c), (vec![0.0], 1.0 - c)],
                    )
                }
                (true, false) => {
                    let mut pairs: Vec<(Vec<f64>, f64)> = an[r]
                        .iter()
                        .map(|&j| {
                            (
                                vec![cp(j, nn) * cp(nn, vi) / (cp(j, r) * cp(r, ui))],
                                cp(r, ui) * b[r][j],
                            )
                        })
                        .collect();
                    pairs.extend(zeros_outside(r));
                    (MarginalCase::ApexSourceTowardU, pairs)
                }
                (false, true) => {
                    let mut pairs: Vec<(Vec<f64>, f64)> = an[r]
                        .iter()
                        .map(|&j| {
                            (
                                vec![cp(j, r) * cp(r, vi) / (cp(j, m) * cp(m, ui))],
                                cp(m, ui) * b[m][j],
                            )
                        })
                        .collect();
                    pairs.extend(zeros_outside(r));
                    (MarginalCase::ApexSourceTowardV, pairs)
                }
                (false, false) => {
                    return Err(LimitError::NoApplicableCase {
                        u,
                        v,
                        reason: format!("apex {} is a source of neither tournament", g.label(r)),
                    })
                }
            }
        }
    };
    Ok(MarginalLimit {
        case,
        law: DiscreteLaw::from_parts(vec![v], pairs).canonicalize(LIMIT_ATOM_TOL),
    })
}

/// The tail-limit factorization and the skeleton Markov property hold
/// exactly when the graph has a single source.
pub fn is_global_markov(g: &TttGraph) -> bool {
    g.has_unique_source()
}

/// Nodes `u` at which the direct and factorized limits differ by more than `tol`.
pub fn factorization_failures(
    model: &MaxLinearModel,
    tol: f64,
) -> Result<Vec<(NodeId, f64)>, LimitError> {
    let mut out = Vec::new();
    for &u in model.graph().labels() {
        let d = direct_limit(model, u)?;
        let f = factorized_limit(model, u)?;
        let tv = d.law.tv_distance(&f.law, LIMIT_ATOM_TOL)?;
        if tv > tol {
            out.push((u, tv));
        }
    }
    Ok(out)
}
