//! Bayesian structure learning for Gaussian reciprocal graphical models.
//!
//! The model couples gene expression `Y` with DNA-level measurements `X`
//! (copy number and methylation) through a simultaneous equation model
//! `Y = AY + BX + E`, whose path diagram is a reciprocal graph: directed
//! edges, directed cycles (feedback loops), and known-direction anchor
//! edges from `X` to `Y`. Sparse estimates of `A` and `B` — and hence the
//! network — come from MCMC under thresholded normal priors, followed by
//! edge selection (median-probability model, posterior-expected-FDR
//! control, or highest-posterior-probability model) and network analytics.
//!
//! Modules:
//! - [`graph`]: reciprocal graphs and Markov queries (moralization,
//!   separation, implied independencies, Markov equivalence).
//! - [`sem`]: the Gaussian SEM — density evaluation, conditional moments,
//!   path diagrams.
//! - [`sim`]: the three simulation-scenario generators.
//! - [`inference`]: thresholded priors and the Metropolis-within-Gibbs
//!   sampler.
//! - [`selection`]: edge probabilities and graph selection rules.
//! - [`evaluation`]: recovery metrics, ROC curves, motifs, degree
//!   posteriors, ordering scores.
//! - [`io`]: CSV/JSON readers and writers for datasets, sample bundles and
//!   tables.

pub mod error;
pub mod evaluation;
pub mod graph;
pub mod inference;
pub mod io;
pub mod selection;
pub mod sem;
pub mod sim;

pub use error::{Result, RgmError};
