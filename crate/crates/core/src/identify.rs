//! Identifiability of edge weights when some nodes are latent.
//!
//! With latent set `Ū` and observed set `U = V ∖ Ū`, all edge weights are
//! recoverable from the law of `X_U` exactly when every latent node has at
//! least two children and is the source of some tournament. Recovery runs in
//! two steps: [`match_subatoms`] assigns each atom of the sub-vector angular
//! measure to its generating node, giving the columns `(b_vi)_{v∈U}`;
//! [`recover_theta`] then solves for the weights, pushing through chains of
//! latent nodes via their exit paths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, NodeId, Trail, TttGraph};
use crate::model::{validate_theta, EdgeWeights, MaxLinearModel, ModelError};
use crate::spectral::{support_pattern, AngularMeasure};

/// Relative margin the two ratios of a disambiguation must exceed.
pub const RATIO_MARGIN: f64 = 1e-10;
/// Largest discrepancy tolerated between the table and the rebuilt model.
pub const TABLE_CONSISTENCY_TOL: f64 = 1e-8;
/// Grid size and seed of the witness certificate.
pub const WITNESS_GRID_POINTS: usize = 100;
pub const WITNESS_GRID_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("graph has sources {0:?}; the criterion needs a single source")]
    NotUniqueSource(Vec<NodeId>),
    #[error("no observed node left")]
    NoObservedNodes,
    #[error("latent set fails the criterion: {}", describe(.0))]
    CriterionViolated(Vec<Violation>),
    #[error("node {0} has no exit path to an observed node")]
    NoExitPath(NodeId),
    #[error("measure coordinates {got:?} differ from the observed nodes {expected:?}")]
    CoordinateMismatch {
        expected: Vec<NodeId>,
        got: Vec<NodeId>,
    },
    #[error("{detail}")]
    AtomCountMismatch { detail: String },
    #[error("atom support {support:?} matches no node's observed descendants")]
    UnmatchedSupport { support: Vec<NodeId> },
    #[error("nodes {a} and {b} share a descendant pattern but {detail}")]
    DescendantPatternViolated {
        a: NodeId,
        b: NodeId,
        detail: String,
    },
    #[error("ratio test between {parent} and {child} is inconclusive ({r1} vs {r2})")]
    UnresolvableTie {
        parent: NodeId,
        child: NodeId,
        r1: f64,
        r2: f64,
    },
    #[error("coefficient table is inconsistent with any valid model: {0}")]
    InconsistentTable(String),
    #[error("node {0} satisfies both conditions; no witness exists")]
    CriterionSatisfied(NodeId),
}

fn describe(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("{} {}", x.node, x.condition.describe()))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    /// At least two children.
    TwoChildren,
    /// Source of some tournament.
    TournamentSource,
}

impl Condition {
    pub fn describe(self) -> &'static str {
        match self {
            Condition::TwoChildren => "has fewer than two children",
            Condition::TournamentSource => "is not the source of any tournament",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Condition::TwoChildren => "I1",
            Condition::TournamentSource => "I2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub node: NodeId,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

fn is_tournament_source(g: &TttGraph, v: usize) -> bool {
    g.tournaments_of_idx(v)
        .iter()
        .any(|&t| g.tournament_idx(t)[0] == v)
}

fn node_violations(g: &TttGraph, v: usize) -> Vec<Condition> {
    let mut out = Vec::new();
    if g.children_idx(v).len() < 2 {
        out.push(Condition::TwoChildren);
    }
    if !is_tournament_source(g, v) {
        out.push(Condition::TournamentSource);
    }
    out
}

fn require_unique_source(g: &TttGraph) -> Result<(), IdentifyError> {
    if g.has_unique_source() {
        Ok(())
    } else {
        Err(IdentifyError::NotUniqueSource(
            g.sources().into_iter().collect(),
        ))
    }
}

fn latent_mask(g: &TttGraph, ubar: &BTreeSet<NodeId>) -> Result<Vec<bool>, IdentifyError> {
    let mut mask = vec![false; g.node_count()];
    for &v in ubar {
        mask[g.index_of(v)?] = true;
    }
    if mask.iter().all(|&m| m) {
        return Err(IdentifyError::NoObservedNodes);
    }
    Ok(mask)
}

/// Checks every latent node for at least two children and being the source
/// of some tournament.
pub fn identifiability_check(
    g: &TttGraph,
    ubar: &BTreeSet<NodeId>,
) -> Result<CriterionReport, IdentifyError> {
    require_unique_source(g)?;
    latent_mask(g, ubar)?;
    let mut violations = Vec::new();
    for &v in ubar {
        for condition in node_violations(g, g.index_of(v)?) {
            violations.push(Violation { node: v, condition });
        }
    }
    Ok(CriterionReport {
        ok: violations.is_empty(),
        violations,
    })
}

fn ensure_criterion(g: &TttGraph, ubar: &BTreeSet<NodeId>) -> Result<Vec<bool>, IdentifyError> {
    let report = identifiability_check(g, ubar)?;
    if !report.ok {
        return Err(IdentifyError::CriterionViolated(report.violations));
    }
    latent_mask(g, ubar)
}

/// Breadth-first search along children whose only parent is the current node,
/// stopping at the first observed node; neighbours are visited in label order.
fn exit_path_idx(g: &TttGraph, start: usize, latent: &[bool]) -> Option<Vec<usize>> {
    if !latent[start] {
        return Some(vec![start]);
    }
    let mut pred = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &c in g.children_idx(x) {
            if g.parents_idx(c) != [x] || pred[c] != usize::MAX {
                continue;
            }
            pred[c] = x;
            if !latent[c] {
                let mut seq = vec![c];
                let mut cur = c;
                while cur != start {
                    cur = pred[cur];
                    seq.push(cur);
                }
                seq.reverse();
                return Some(seq);
            }
            queue.push_back(c);
        }
    }
    None
}

/// Directed path from a latent node to an observed node through latent
/// nodes, every node after the first having a single parent.
pub fn exit_path(
    g: &TttGraph,
    ubar_node: NodeId,
    ubar: &BTreeSet<NodeId>,
) -> Result<Trail, IdentifyError> {
    let latent = latent_mask(g, ubar)?;
    let start = g.index_of(ubar_node)?;
    let seq = exit_path_idx(g, start, &latent).ok_or(IdentifyError::NoExitPath(ubar_node))?;
    let end = *seq.last().expect("nonempty");
    Ok(g.shortest_path(ubar_node, g.label(end))?
        .expect("exit path is a directed path"))
}

/// A pair of nodes with the same observed descendants, separated by the ratio test.
#[derive(Debug, Clone, PartialEq)]
pub struct Disambiguation {
    pub parent: NodeId,
    pub child: NodeId,
    pub common_child: NodeId,
    pub u_proxy: NodeId,
    pub j_proxy: NodeId,
    /// `β_{u′} / β_{j′}` of the atom assigned to the parent.
    pub parent_ratio: f64,
    /// The same ratio for the atom assigned to the child.
    pub child_ratio: f64,
}

/// The columns `(b_vi)_{v∈U}` for every node `i`, as read off the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub observed: Vec<NodeId>,
    pub columns: Vec<NodeId>,
    /// `rows[k][i] = b_{observed[k], columns[i]}`.
    pub rows: Vec<Vec<f64>>,
    /// Generating node of each atom of the input measure.
    pub atom_assignment: Vec<NodeId>,
    pub diagnostics: Vec<Disambiguation>,
}

impl CoefficientTable {
    pub fn get(&self, v: NodeId, i: NodeId) -> Option<f64> {
        let r = self.observed.iter().position(|&x| x == v)?;
        let c = self.columns.iter().position(|&x| x == i)?;
        Some(self.rows[r][c])
    }
}

/// Assigns each mass-scaled atom of a sub-vector angular measure to the node
/// whose column of observed coefficients it equals.
pub fn match_subatoms(
    h: &AngularMeasure,
    g: &TttGraph,
    ubar: &BTreeSet<NodeId>,
) -> Result<CoefficientTable, IdentifyError> {
    let latent = ensure_criterion(g, ubar)?;
    let n = g.node_count();
    let observed: Vec<usize> = (0..n).filter(|&v| !latent[v]).collect();
    let observed_labels: Vec<NodeId> = observed.iter().map(|&v| g.label(v)).collect();
    if h.coords() != observed_labels.as_slice() {
        return Err(IdentifyError::CoordinateMismatch {
            expected: observed_labels,
            got: h.coords().to_vec(),
        });
    }
    let beta = h.scaled_atoms();
    if beta.len() != n {
        return Err(IdentifyError::AtomCountMismatch {
            detail: format!("measure has {} atoms, graph has {} nodes", beta.len(), n),
        });
    }

    let mut nodes_by_pattern: BTreeMap<BTreeSet<NodeId>, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let desc = g.desc_mask_idx(i);
        let pat = observed
            .iter()
            .filter(|&&v| desc[v])
            .map(|&v| g.label(v))
            .collect();
        nodes_by_pattern.entry(pat).or_default().push(i);
    }
    let mut atoms_by_pattern: BTreeMap<BTreeSet<NodeId>, Vec<usize>> = BTreeMap::new();
    for (r, a) in h.law.atoms().iter().enumerate() {
        atoms_by_pattern
            .entry(support_pattern(a, h.coords()))
            .or_default()
            .push(r);
    }
    for pat in atoms_by_pattern.keys() {
        if !nodes_by_pattern.contains_key(pat) {
            return Err(IdentifyError::UnmatchedSupport {
                support: pat.iter().copied().collect(),
            });
        }
    }

    let pos_of = |v: usize| observed.iter().position(|&x| x == v).expect("observed");
    let mut assignment = vec![usize::MAX; beta.len()];
    let mut diagnostics = Vec::new();
    for (pat, nodes) in &nodes_by_pattern {
        let atoms = atoms_by_pattern.get(pat).cloned().unwrap_or_default();
        if atoms.len() != nodes.len() {
            return Err(IdentifyError::AtomCountMismatch {
                detail: format!(
                    "{} atoms but {} nodes have observed descendants {:?}",
                    atoms.len(),
                    nodes.len(),
                    pat
                ),
            });
        }
        match nodes.as_slice() {
            [i] => assignment[atoms[0]] = *i,
            [a, b] => {
                let (i, j) = check_pattern_pair(g, &latent, *a, *b, pat)?;
                let u = *g
                    .children_idx(i)
                    .iter()
                    .find(|c| g.has_edge_idx(j, **c))
                    .expect("checked above");
                let u_proxy = exit_terminal(g, u, &latent)?;
                let j_proxy = exit_terminal(g, j, &latent)?;
                let (pu, pj) = (pos_of(u_proxy), pos_of(j_proxy));
                let ratio = |r: usize| beta[r][pu] / beta[r][pj];
                let (r0, r1) = (ratio(atoms[0]), ratio(atoms[1]));
                if (r0 - r1).abs() <= RATIO_MARGIN * r0.max(r1) {
                    return Err(IdentifyError::UnresolvableTie {
                        parent: g.label(i),
                        child: g.label(j),
                        r1: r0,
                        r2: r1,
                    });
                }
                let (pi_atom, ch_atom) = if r0 > r1 {
                    (atoms[0], atoms[1])
                } else {
                    (atoms[1], atoms[0])
                };
                assignment[pi_atom] = i;
                assignment[ch_atom] = j;
                diagnostics.push(Disambiguation {
                    parent: g.label(i),
                    child: g.label(j),
                    common_child: g.label(u),
                    u_proxy: g.label(u_proxy),
                    j_proxy: g.label(j_proxy),
                    parent_ratio: r0.max(r1),
                    child_ratio: r0.min(r1),
                });
            }
            _ => {
                return Err(IdentifyError::AtomCountMismatch {
                    detail: format!("{} nodes share observed descendants {:?}", nodes.len(), pat),
                })
            }
        }
    }

    let mut rows = vec![vec![0.0; n]; observed.len()];
    for (r, &i) in assignment.iter().enumerate() {
        for (k, row) in rows.iter_mut().enumerate() {
            row[i] = beta[r][k];
        }
    }
    Ok(CoefficientTable {
        observed: observed_labels,
        columns: g.labels().to_vec(),
        rows,
        atom_assignment: assignment.iter().map(|&i| g.label(i)).collect(),
        diagnostics,
    })
}

/// Checks the structure forced on two nodes with equal observed descendants
/// and returns them as (parent, child).
fn check_pattern_pair(
    g: &TttGraph,
    latent: &[bool],
    a: usize,
    b: usize,
    pat: &BTreeSet<NodeId>,
) -> Result<(usize, usize), IdentifyError> {
    let fail = |detail: &str| IdentifyError::DescendantPatternViolated {
        a: g.label(a),
        b: g.label(b),
        detail: detail.into(),
    };
    let (i, j) = if g.parents_idx(b) == [a] {
        (a, b)
    } else if g.parents_idx(a) == [b] {
        (b, a)
    } else {
        return Err(fail("neither is the only parent of the other"));
    };
    if !latent[i] {
        return Err(fail("the parent is observed"));
    }
    if !g.children_idx(i).iter().any(|&c| g.has_edge_idx(j, c)) {
        return Err(fail("they have no common child"));
    }
    if pat.len() < 2 {
        return Err(fail("fewer than two observed descendants"));
    }
    Ok((i, j))
}

fn exit_terminal(g: &TttGraph, v: usize, latent: &[bool]) -> Result<usize, IdentifyError> {
    exit_path_idx(g, v, latent)
        .and_then(|p| p.last().copied())
        .ok_or(IdentifyError::NoExitPath(g.label(v)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub theta_hat: EdgeWeights,
    /// `c_vv` for every node.
    pub diag: BTreeMap<NodeId, f64>,
    pub atom_assignment: Vec<NodeId>,
    pub diagnostics: Vec<Disambiguation>,
    /// Exit path of each latent node.
    pub exit_paths: BTreeMap<NodeId, Vec<NodeId>>,
}

/// Recovers every edge weight from the coefficient table.
pub fn recover_theta(
    table: &CoefficientTable,
    g: &TttGraph,
    ubar: &BTreeSet<NodeId>,
) -> Result<ReconstructionReport, IdentifyError> {
    let latent = ensure_criterion(g, ubar)?;
    let n = g.node_count();
    if table.columns != g.labels() {
        return Err(IdentifyError::InconsistentTable(
            "table columns differ from the graph's nodes".into(),
        ));
    }
    let mut b: Vec<Option<Vec<f64>>> = vec![None; n];
    for (k, &v) in table.observed.iter().enumerate() {
        b[g.index_of(v)?] = Some(table.rows[k].clone());
    }
    let bad = |msg: String| IdentifyError::InconsistentTable(msg);

    let mut exit_paths = BTreeMap::new();
    for &v in g.topological_order_idx() {
        if !latent[v] {
            continue;
        }
        let path = exit_path_idx(g, v, &latent).ok_or(IdentifyError::NoExitPath(g.label(v)))?;
        let s = *path.last().expect("nonempty");
        let bs = b[s].clone().expect("observed row");
        // walk back from s: c_{v_{k-1} v_k} = 1 − b_{v_k v_k}, b_{v_k v_k} = b_{s v_k} / c_p(v_k, s)
        let mut cp_to_s = 1.0;
        for k in (1..path.len()).rev() {
            let vk = path[k];
            let bkk = if k == path.len() - 1 {
                bs[s]
            } else {
                bs[vk] / cp_to_s
            };
            let c = 1.0 - bkk;
            if !(c > 0.0 && c < 1.0) {
                return Err(bad(format!(
                    "weight {c} on edge {}->{} from exit-path cascade",
                    g.label(path[k - 1]),
                    g.label(vk)
                )));
            }
            cp_to_s *= c;
        }
        let row = (0..n)
            .map(|i| {
                if g.reaches_idx(i, v) {
                    bs[i] / cp_to_s
                } else {
                    0.0
                }
            })
            .collect();
        b[v] = Some(row);
        exit_paths.insert(
            g.label(v),
            path.iter().map(|&x| g.label(x)).collect::<Vec<_>>(),
        );
    }
    let b: Vec<Vec<f64>> = b
        .into_iter()
        .map(|r| r.expect("every row filled"))
        .collect();

    let mut theta_hat = EdgeWeights::new();
    for &(i, v) in g.edges_idx() {
        theta_hat.insert(g.label(i), g.label(v), b[v][i] / b[i][i]);
    }
    let model = MaxLinearModel::new(g.clone(), theta_hat.clone())
        .map_err(|e| bad(format!("recovered weights are invalid: {e}")))?;
    for (k, &v) in table.observed.iter().enumerate() {
        let vi = g.index_of(v)?;
        for i in 0..n {
            let d = (model.b()[vi][i] - table.rows[k][i]).abs();
            if d > TABLE_CONSISTENCY_TOL {
                return Err(bad(format!(
                    "rebuilt coefficient b[{v}][{}] differs from the table by {d}",
                    g.label(i)
                )));
            }
        }
    }
    Ok(ReconstructionReport {
        theta_hat,
        diag: (0..n).map(|i| (g.label(i), model.diag()[i])).collect(),
        atom_assignment: table.atom_assignment.clone(),
        diagnostics: table.diagnostics.clone(),
        exit_paths,
    })
}

/// [`match_subatoms`] followed by [`recover_theta`].
pub fn reconstruct(
    h: &AngularMeasure,
    g: &TttGraph,
    ubar: &BTreeSet<NodeId>,
) -> Result<ReconstructionReport, IdentifyError> {
    let table = match_subatoms(h, g, ubar)?;
    recover_theta(&table, g, ubar)
}

/// An alternative parameter giving the same law of `X_{V∖u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub node: NodeId,
    pub lambda: f64,
    pub theta_prime: EdgeWeights,
    /// Largest `|l_θ(x) − l_θ′(x)|` over the grid with `x_u = 0`.
    pub max_stdf_diff: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessOutcome {
    Found(Witness),
    /// No explicit construction is available for this node.
    NonConstructive {
        node: NodeId,
        diagnostic: String,
    },
}

/// Largest stdf difference between two models over seeded grid points in
/// `[0,1]^V` with the coordinate of `u` set to zero.
pub fn sub_stdf_difference(
    a: &MaxLinearModel,
    b: &MaxLinearModel,
    u: NodeId,
    points: usize,
    seed: u64,
) -> Result<f64, IdentifyError> {
    let ui = a.graph().index_of(u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let mut x: Vec<f64> = (0..a.node_count()).map(|_| rng.gen::<f64>()).collect();
        x[ui] = 0.0;
        worst = worst.max((a.stdf(&x)? - b.stdf(&x)?).abs());
    }
    Ok(worst)
}

/// Exhibits non-identifiability at a node that fails the criterion.
///
/// A tournament source with a single child admits the scaling construction:
/// incoming weights times `λ`, outgoing weight divided by `λ`, with `λ`
/// starting at 1.05 and moved halfway towards 1 until the result is valid.
/// Nodes that are the source of no tournament get a non-constructive answer.
pub fn non_identifiability_witness(
    model: &MaxLinearModel,
    u: NodeId,
) -> Result<WitnessOutcome, IdentifyError> {
    let g = model.graph();
    let ui = g.index_of(u)?;
    let fails = node_violations(g, ui);
    if fails.is_empty() {
        return Err(IdentifyError::CriterionSatisfied(u));
    }
    if fails.contains(&Condition::TournamentSource) {
        return Ok(WitnessOutcome::NonConstructive {
            node: u,
            diagnostic: format!(
                "node {u} is not the source of any tournament; alternative weights inside its \
                 tournament exist but are not given by an explicit construction"
            ),
        });
    }
    let mut step = 0.05;
    let mut last_err = None;
    for _ in 0..60 {
        for lambda in [1.0 + step, 1.0 - step] {
            match model.scale_witness(u, lambda) {
                Ok(theta_prime) => {
                    validate_theta(g, &theta_prime)?;
                    let other = MaxLinearModel::new(g.clone(), theta_prime.clone())?;
                    let max_stdf_diff = sub_stdf_difference(
                        model,
                        &other,
                        u,
                        WITNESS_GRID_POINTS,
                        WITNESS_GRID_SEED,
                    )?;
                    return Ok(WitnessOutcome::Found(Witness {
                        node: u,
                        lambda,
                        theta_prime,
                        max_stdf_diff,
                        grid_points: WITNESS_GRID_POINTS,
                    }));
                }
                Err(e) => last_err = Some(e),
            }
        }
        step /= 2.0;
    }
    Err(last_err.expect("at least one attempt").into())
}
