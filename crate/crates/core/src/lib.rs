//! Simulation and analysis toolkit for EPRB (Einstein–Podolsky–Rosen–Bohm)
//! polarization experiments.
//!
//! The crate is split along the lines of the experiment:
//!
//! - [`quantum`]: exact 2- and 4-dimensional density operators, polarizer
//!   observables, dephasing and one-particle measurement channels.
//! - [`lhv`]: local hidden-variable models, their exact correlations and a
//!   shot sampler.
//! - [`consistency`]: equal/unequal event probabilities, the sixteen
//!   three-term consistency inequalities, the eight CHSH facets derived from
//!   them and local-polytope membership.
//! - [`harness`]: configuration, shot generation and persistence, and
//!   correlation estimation.
//! - [`report`]: report bundles in JSON and CSV.
//!
//! Angles follow the photon convention: an analyzer at `θ` measures
//! `cos 2θ·Z + sin 2θ·X`, so the Bell-state correlation is `cos 2(θa − θb)`.

pub mod consistency;
pub mod error;
pub mod harness;
pub mod labels;
pub mod lhv;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod sig17;

pub use error::{Error, Result};
pub use labels::{Outcome, Pair, Setting};
