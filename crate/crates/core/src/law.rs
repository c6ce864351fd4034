//! Finitely supported measures on labelled real vectors.
//!
//! One type covers angular measures (masses summing to the total mass) and
//! probability laws (masses summing to 1). Atoms that agree up to a tolerance
//! are merged by [`DiscreteLaw::canonicalize`]; comparison is by total
//! variation over the merged supports.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::NodeId;

/// Default merge tolerance for limit laws.
pub const LIMIT_ATOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error("coordinate labels differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: Vec<NodeId>,
        right: Vec<NodeId>,
    },
    #[error("atom {index} has {got} coordinates, expected {expected}")]
    AtomLength {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("mass {mass} of atom {index} is not a positive finite number")]
    BadMass { index: usize, mass: f64 },
    #[error("coordinate {0} is not present in the law")]
    UnknownCoordinate(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    coords: Vec<NodeId>,
    atoms: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

/// Result of [`laws_equal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawComparison {
    pub equal: bool,
    pub tv_distance: f64,
}

/// Scale-aware closeness: absolute below 1, relative above.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn close_vec(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(&x, &y)| close(x, y, tol))
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl DiscreteLaw {
    pub fn new(
        coords: Vec<NodeId>,
        atoms: Vec<Vec<f64>>,
        masses: Vec<f64>,
    ) -> Result<Self, LawError> {
        assert_eq!(atoms.len(), masses.len(), "one mass per atom");
        for (index, a) in atoms.iter().enumerate() {
            if a.len() != coords.len() {
                return Err(LawError::AtomLength {
                    index,
                    got: a.len(),
                    expected: coords.len(),
                });
            }
        }
        for (index, &mass) in masses.iter().enumerate() {
            if !(mass.is_finite() && mass > 0.0) {
                return Err(LawError::BadMass { index, mass });
            }
        }
        Ok(DiscreteLaw {
            coords,
            atoms,
            masses,
        })
    }

    /// Builds from pairs already known to be well formed.
    pub(crate) fn from_parts(coords: Vec<NodeId>, pairs: Vec<(Vec<f64>, f64)>) -> Self {
        let (atoms, masses) = pairs.into_iter().unzip();
        DiscreteLaw {
            coords,
            atoms,
            masses,
        }
    }

    pub fn coords(&self) -> &[NodeId] {
        &self.coords
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.atoms
            .iter()
            .map(Vec::as_slice)
            .zip(self.masses.iter().copied())
    }

    /// Merges atoms within `tol` of each other (coordinatewise, scale-aware)
    /// and sorts atoms lexicographically. The representative of a merged group
    /// is its lexicographically smallest member.
    pub fn canonicalize(&self, tol: f64) -> DiscreteLaw {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex(&self.atoms[a], &self.atoms[b]));
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
        for k in order {
            let atom = &self.atoms[k];
            match merged.iter_mut().find(|(rep, _)| close_vec(rep, atom, tol)) {
                Some((_, m)) => *m += self.masses[k],
                None => merged.push((atom.clone(), self.masses[k])),
            }
        }
        merged.sort_by(|a, b| lex(&a.0, &b.0));
        DiscreteLaw::from_parts(self.coords.clone(), merged)
    }

    /// Total mass of atoms within `tol` of `point`.
    pub fn mass_near(&self, point: &[f64], tol: f64) -> f64 {
        self.iter()
            .filter(|(a, _)| close_vec(a, point, tol))
            .map(|(_, m)| m)
            .sum()
    }

    /// Law of the sub-vector on `keep` (in the given order), canonicalized.
    pub fn project(&self, keep: &[NodeId], tol: f64) -> Result<DiscreteLaw, LawError> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|v| {
                self.coords
                    .iter()
                    .position(|c| c == v)
                    .ok_or(LawError::UnknownCoordinate(*v))
            })
            .collect::<Result<_, _>>()?;
        let pairs = self
            .iter()
            .map(|(a, m)| (pos.iter().map(|&p| a[p]).collect(), m))
            .collect();
        Ok(DiscreteLaw::from_parts(keep.to_vec(), pairs).canonicalize(tol))
    }

    pub fn marginal(&self, v: NodeId, tol: f64) -> Result<DiscreteLaw, LawError> {
        self.project(&[v], tol)
    }

    /// Total variation distance `½ Σ |m₁ − m₂|` over the union of supports,
    /// with atoms identified up to `tol`.
    pub fn tv_distance(&self, other: &DiscreteLaw, tol: f64) -> Result<f64, LawError> {
        if self.coords != other.coords {
            return Err(LawError::DimensionMismatch {
                left: self.coords.clone(),
                right: other.coords.clone(),
            });
        }
        let a = self.canonicalize(tol);
        let b = other.canonicalize(tol);
        let mut used = vec![false; b.len()];
        let mut diff = 0.0;
        for (atom, m) in a.iter() {
            let hit = (0..b.len()).find(|&k| !used[k] && close_vec(&b.atoms[k], atom, tol));
            match hit {
                Some(k) => {
                    used[k] = true;
                    diff += (m - b.masses[k]).abs();
                }
                None => diff += m,
            }
        }
        diff += b
            .masses
            .iter()
            .zip(&used)
            .filter(|(_, &u)| !u)
            .map(|(m, _)| m)
            .sum::<f64>();
        Ok(0.5 * diff)
    }
}

/// Compares two laws: atoms are identified within [`LIMIT_ATOM_TOL`], and the
/// laws count as equal when their TV distance is at most `tol`.
pub fn laws_equal(l1: &DiscreteLaw, l2: &DiscreteLaw, tol: f64) -> Result<LawComparison, LawError> {
    let tv = l1.tv_distance(l2, LIMIT_ATOM_TOL)?;
    Ok(LawComparison {
        equal: tv <= tol,
        tv_distance: tv,
    })
}
