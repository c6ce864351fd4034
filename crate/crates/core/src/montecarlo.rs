//! Seeded simulation of the model and empirical counterparts of its limits.
//!
//! Replicate `r` draws its factors from a ChaCha8 stream selected by `r`
//! under the batch seed, so output is bit-identical for a given
//! `(model, n, seed)` regardless of how rows are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{GraphError, NodeId};
use crate::law::{DiscreteLaw, LawError};
use crate::limits::{direct_limit, LimitError};
use crate::model::MaxLinearModel;

/// Fewest exceedances accepted by the empirical estimators.
pub const MIN_EXCEEDANCES: usize = 100;
/// Max-norm distance beyond which a point is not attributed to any atom.
pub const STRAY_DISTANCE: f64 = 0.1;
/// Radius quantile used for angular-measure checks.
pub const ANGULAR_RADIUS_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("quantile {0} is not in (0, 1)")]
    BadQuantile(f64),
    #[error("only {got} exceedances, at least {needed} required")]
    TooFewExceedances { got: usize, needed: usize },
    #[error("batch has {got} columns, model has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub labels: Vec<NodeId>,
    pub n: usize,
    pub seed: u64,
    /// Row-major `n × |V|`.
    data: Vec<f64>,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let d = self.dim();
        &self.data[r * d..(r + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim())
    }

    pub fn column(&self, v: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[v])
    }
}

fn open_unit(u: f64) -> f64 {
    u.clamp(0f64.next_up(), 1f64.next_down())
}

/// Draws `n` replicates of `X_v = max_i b_vi Z_i` with `Z_i = −1/ln U_i`.
pub fn sample(model: &MaxLinearModel, n: usize, seed: u64) -> Result<SampleBatch, McError> {
    if n == 0 {
        return Err(McError::EmptySample);
    }
    let d = model.node_count();
    let b = model.b();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let z: Vec<f64> = (0..d)
            .map(|_| -1.0 / open_unit(rng.gen::<f64>()).ln())
            .collect();
        for (v, x) in row.iter_mut().enumerate() {
            *x = (0..d).map(|i| b[v][i] * z[i]).fold(0.0, f64::max);
        }
    });
    Ok(SampleBatch {
        labels: model.graph().labels().to_vec(),
        n,
        seed,
        data,
    })
}

/// Kolmogorov–Smirnov distance of column `v` from the unit-Fréchet law.
pub fn ks_unit_frechet(batch: &SampleBatch, v: usize) -> f64 {
    let mut xs: Vec<f64> = batch.column(v).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = (-1.0 / x).exp();
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Index of the nearest atom in max-norm; ties go to the earlier atom, and
/// atoms of a canonical law are in lexicographic order.
fn nearest(atoms: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, a) in atoms.iter().enumerate() {
        let d = max_dist(a, p);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Empirical conditional law given `X_u` above its `q` quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConditional {
    /// Exceedance frequencies attributed to atoms of the exact law.
    pub law: DiscreteLaw,
    /// The exact limit the points were attributed to.
    pub exact: DiscreteLaw,
    pub exceedances: usize,
    /// Fraction of exceedances farther than [`STRAY_DISTANCE`] from every atom.
    pub stray_mass: f64,
    pub threshold: f64,
}

impl EmpiricalConditional {
    /// Stray replicates count as mass placed away from every exact atom.
    pub fn tv_to_exact(&self) -> Result<f64, McError> {
        Ok((tv_to_law(&self.law, &self.exact)? + 0.5 * self.stray_mass).min(1.0))
    }
}

/// Ratios `(X_v / X_u)_{v≠u}` over replicates with `X_u > −1/ln q`, each
/// attributed to the nearest atom of the exact limit.
pub fn empirical_conditional(
    batch: &SampleBatch,
    model: &MaxLinearModel,
    u: NodeId,
    q: f64,
) -> Result<EmpiricalConditional, McError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(McError::BadQuantile(q));
    }
    if batch.dim() != model.node_count() {
        return Err(McError::DimensionMismatch {
            expected: model.node_count(),
            got: batch.dim(),
        });
    }
    let ui = model.graph().index_of(u)?;
    let exact = direct_limit(model, u)?.law;
    let threshold = -1.0 / q.ln();
    let mut counts = vec![0usize; exact.len()];
    let mut stray = 0usize;
    let mut exceedances = 0usize;
    for row in batch.rows() {
        if row[ui] <= threshold {
            continue;
        }
        exceedances += 1;
        let ratio: Vec<f64> = (0..row.len())
            .filter(|&v| v != ui)
            .map(|v| row[v] / row[ui])
            .collect();
        let (k, d) = nearest(exact.atoms(), &ratio);
        if d > STRAY_DISTANCE {
            stray += 1;
        } else {
            counts[k] += 1;
        }
    }
    if exceedances < MIN_EXCEEDANCES {
        return Err(McError::TooFewExceedances {
            got: exceedances,
            needed: MIN_EXCEEDANCES,
        });
    }
    let total = exceedances as f64;
    let pairs = exact
        .atoms()
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(a, &c)| (a.clone(), c as f64 / total))
        .collect();
    Ok(EmpiricalConditional {
        law: DiscreteLaw::from_parts(exact.coords().to_vec(), pairs),
        exact,
        exceedances,
        stray_mass: stray as f64 / total,
        threshold,
    })
}

/// Points `X / ‖X‖₁` for replicates whose L1 norm exceeds its empirical
/// `radius_quantile`. With unit-Fréchet margins the angular measure has
/// total mass `d`, so each of the `k` points carries weight `d / k`.
pub fn empirical_angular(
    batch: &SampleBatch,
    radius_quantile: f64,
) -> Result<Vec<(Vec<f64>, f64)>, McError> {
    if !(radius_quantile > 0.0 && radius_quantile < 1.0) {
        return Err(McError::BadQuantile(radius_quantile));
    }
    let norms: Vec<f64> = batch.rows().map(|r| r.iter().sum()).collect();
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let k = ((radius_quantile * batch.n as f64).ceil() as usize).clamp(1, batch.n) - 1;
    let r_q = sorted[k];
    let mut points: Vec<(Vec<f64>, f64)> = batch
        .rows()
        .zip(&norms)
        .filter(|(_, &r)| r > r_q)
        .map(|(row, &r)| (row.iter().map(|x| x / r).collect(), 0.0))
        .collect();
    let weight = batch.dim() as f64 / points.len().max(1) as f64;
    for p in &mut points {
        p.1 = weight;
    }
    if points.len() < MIN_EXCEEDANCES {
        return Err(McError::TooFewExceedances {
            got: points.len(),
            needed: MIN_EXCEEDANCES,
        });
    }
    Ok(points)
}

/// Weighted points grouped around the nearest of a set of reference atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub reference: Vec<f64>,
    /// Weighted mean of the attributed points.
    pub center: Vec<f64>,
    pub mass: f64,
    pub count: usize,
}

/// Groups points by nearest reference atom (max-norm). Points farther than
/// [`STRAY_DISTANCE`] from every atom are returned as stray weight.
pub fn cluster_to_atoms(points: &[(Vec<f64>, f64)], atoms: &[Vec<f64>]) -> (Vec<Cluster>, f64) {
    let dim = atoms.first().map_or(0, Vec::len);
    let mut clusters: Vec<Cluster> = atoms
        .iter()
        .map(|a| Cluster {
            reference: a.clone(),
            center: vec![0.0; dim],
            mass: 0.0,
            count: 0,
        })
        .collect();
    let mut stray = 0.0;
    for (p, w) in points {
        let (k, d) = nearest(atoms, p);
        if d > STRAY_DISTANCE {
            stray += w;
            continue;
        }
        let c = &mut clusters[k];
        for (s, x) in c.center.iter_mut().zip(p) {
            *s += w * x;
        }
        c.mass += w;
        c.count += 1;
    }
    for c in &mut clusters {
        if c.mass > 0.0 {
            for s in &mut c.center {
                *s /= c.mass;
            }
        }
    }
    (clusters, stray)
}

/// TV distance after moving each empirical atom onto its nearest exact atom;
/// empirical atoms farther than [`STRAY_DISTANCE`] stay unmatched.
pub fn tv_to_law(empirical: &DiscreteLaw, exact: &DiscreteLaw) -> Result<f64, McError> {
    if empirical.coords() != exact.coords() {
        return Err(LawError::DimensionMismatch {
            left: empirical.coords().to_vec(),
            right: exact.coords().to_vec(),
        }
        .into());
    }
    let mut moved = vec![0.0; exact.len()];
    let mut unmatched = 0.0;
    for (a, m) in empirical.iter() {
        let (k, d) = nearest(exact.atoms(), a);
        if exact.is_empty() || d > STRAY_DISTANCE {
            unmatched += m;
        } else {
            moved[k] += m;
        }
    }
    let diff: f64 = moved
        .iter()
        .zip(exact.masses())
        .map(|(e, x)| (e - x).abs())
        .sum();
    Ok((0.5 * (diff + unmatched)).min(1.0))
}
