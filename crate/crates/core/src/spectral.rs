//! Angular (spectral) measures.
//!
//! The angular measure of a max-linear model is discrete with one atom per
//! node: `a_i = (b_vi / m_i)_v`, mass `m_i = Σ_v b_vi`. For a sub-vector on
//! `U` the masses become `m_{i,U} = Σ_{v∈U} b_vi`, zero masses are dropped
//! and coinciding atoms are merged.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{GraphError, NodeId, TttGraph};
use crate::law::DiscreteLaw;
use crate::model::{EdgeWeights, MaxLinearModel};

/// Coordinates at or below this value count as zero in support patterns.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Sub-vector masses at or below this value are dropped.
pub const ZERO_MASS_TOL: f64 = 1e-12;
/// Merge tolerance for atoms of angular measures.
pub const ANGULAR_ATOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("observed node set is empty")]
    EmptyU,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("measure coordinates {got:?} do not cover the node set {expected:?}")]
    CoordinateMismatch {
        expected: Vec<NodeId>,
        got: Vec<NodeId>,
    },
    #[error("atom {atom} has support {support:?}, which does not single out one node")]
    AmbiguousSupport { atom: usize, support: Vec<NodeId> },
    #[error("input coordinate {index} is negative ({value})")]
    NegativeInput { index: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularMeasure {
    pub law: DiscreteLaw,
    /// The generating node of each atom, when known.
    pub node_of_atom: Option<Vec<NodeId>>,
}

impl AngularMeasure {
    pub fn coords(&self) -> &[NodeId] {
        self.law.coords()
    }

    pub fn total_mass(&self) -> f64 {
        self.law.total_mass()
    }

    /// Mass-scaled atoms `β_r = μ_r ω_r`.
    pub fn scaled_atoms(&self) -> Vec<Vec<f64>> {
        self.law
            .iter()
            .map(|(a, m)| a.iter().map(|x| x * m).collect())
            .collect()
    }
}

/// Labels of the strictly positive coordinates of `atom`.
pub fn support_pattern(atom: &[f64], coords: &[NodeId]) -> BTreeSet<NodeId> {
    atom.iter()
        .zip(coords)
        .filter(|(&x, _)| x > SUPPORT_TOL)
        .map(|(_, &v)| v)
        .collect()
}

/// Angular measure of the full vector, atoms matched to their nodes.
pub fn angular_measure(model: &MaxLinearModel) -> AngularMeasure {
    let labels = model.graph().labels().to_vec();
    let mut h = subvector_measure(model, &labels).expect("full node set is valid");
    let nodes = match_atoms_full(&h, model.graph()).expect("full measure atoms are distinct");
    h.node_of_atom = Some(nodes);
    h
}

/// Angular measure of the sub-vector on `u`.
pub fn subvector_measure(
    model: &MaxLinearModel,
    u: &[NodeId],
) -> Result<AngularMeasure, SpectralError> {
    let g = model.graph();
    let set: BTreeSet<NodeId> = u.iter().copied().collect();
    if set.is_empty() {
        return Err(SpectralError::EmptyU);
    }
    let coords: Vec<NodeId> = set.into_iter().collect();
    let rows: Vec<usize> = coords
        .iter()
        .map(|&v| g.index_of(v))
        .collect::<Result<_, _>>()?;
    let b = model.b();
    let mut pairs = Vec::new();
    for i in 0..g.node_count() {
        let m: f64 = rows.iter().map(|&v| b[v][i]).sum();
        if m > ZERO_MASS_TOL {
            pairs.push((rows.iter().map(|&v| b[v][i] / m).collect(), m));
        }
    }
    Ok(AngularMeasure {
        law: DiscreteLaw::from_parts(coords, pairs).canonicalize(ANGULAR_ATOM_TOL),
        node_of_atom: None,
    })
}

/// Matches each atom of a full-vector measure to the node whose descendant
/// set equals the atom's support.
pub fn match_atoms_full(h: &AngularMeasure, g: &TttGraph) -> Result<Vec<NodeId>, SpectralError> {
    if h.coords() != g.labels() {
        return Err(SpectralError::CoordinateMismatch {
            expected: g.labels().to_vec(),
            got: h.coords().to_vec(),
        });
    }
    let mut by_desc: BTreeMap<BTreeSet<NodeId>, NodeId> = BTreeMap::new();
    for i in 0..g.node_count() {
        by_desc.insert(g.relatives(g.label(i))?.desc_incl, g.label(i));
    }
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(h.law.len());
    for (k, atom) in h.law.atoms().iter().enumerate() {
        let s = support_pattern(atom, h.coords());
        match by_desc.get(&s) {
            Some(&node) if used.insert(node) => out.push(node),
            _ => {
                return Err(SpectralError::AmbiguousSupport {
                    atom: k,
                    support: s.into_iter().collect(),
                })
            }
        }
    }
    Ok(out)
}

/// Weights and diagonal recovered from a full-vector measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRecovery {
    pub weights: EdgeWeights,
    pub diag: BTreeMap<NodeId, f64>,
    pub node_of_atom: Vec<NodeId>,
}

/// `c_iv = a_vi / a_ii` for every edge and `c_ii = μ_i a_ii`.
pub fn recover_from_full_measure(
    h: &AngularMeasure,
    g: &TttGraph,
) -> Result<FullRecovery, SpectralError> {
    let nodes = match_atoms_full(h, g)?;
    let beta = h.scaled_atoms();
    let mut col = vec![0; g.node_count()];
    for (k, node) in nodes.iter().enumerate() {
        col[g.index_of(*node)?] = k;
    }
    let mut weights = EdgeWeights::new();
    for &(i, v) in g.edges_idx() {
        let a = &beta[col[i]];
        weights.insert(g.label(i), g.label(v), a[v] / a[i]);
    }
    let diag = (0..g.node_count())
        .map(|i| (g.label(i), beta[col[i]][i]))
        .collect();
    Ok(FullRecovery {
        weights,
        diag,
        node_of_atom: nodes,
    })
}

/// `Σ_r μ_r max_v ω_{r,v} x_v`.
pub fn stdf_from_measure(h: &AngularMeasure, x: &[f64]) -> Result<f64, SpectralError> {
    if x.len() != h.law.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: h.law.dim(),
            got: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|&v| !(v >= 0.0)) {
        return Err(SpectralError::NegativeInput {
            index,
            value: x[index],
        });
    }
    Ok(h.law
        .iter()
        .map(|(a, m)| m * a.iter().zip(x).map(|(w, y)| w * y).fold(0.0, f64::max))
        .sum())
}
