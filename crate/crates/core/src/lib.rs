//! Recursive max-linear models on trees of transitive tournaments.
//!
//! Modules, bottom up:
//! - [`graph`]: validation of the graph class and structural queries.
//! - [`model`]: edge weights, the critical parameter space, coefficient matrix, stdf.
//! - [`law`]: finitely supported laws on real vectors, canonicalization and TV distance.
//! - [`spectral`]: angular measures of the full vector and of sub-vectors.
//! - [`limits`]: conditional tail limits, increment blocks and the factorized form.
//! - [`identify`]: the latent-variable identifiability criterion and reconstruction.
//! - [`montecarlo`]: seeded simulation and empirical checks.
//! - [`random`]: random graphs and parameters for property tests.
//! - [`cli`]: the `ttt` command line front end.

pub mod cli;
pub mod fixtures;
pub mod graph;
pub mod identify;
pub mod law;
pub mod limits;
pub mod model;
pub mod montecarlo;
pub mod random;
pub mod spectral;

pub use graph::{DirectedEdge, GraphError, NodeId, Tournament, Trail, TrailShape, TttGraph};
pub use law::DiscreteLaw;
pub use model::{EdgeWeights, MaxLinearModel, ModelError};

use thiserror::Error;

/// Union of all domain errors, used by the CLI to report a stable error kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Law(#[from] law::LawError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Limits(#[from] limits::LimitError),
    #[error(transparent)]
    Identify(#[from] identify::IdentifyError),
    #[error(transparent)]
    MonteCarlo(#[from] montecarlo::McError),
}
