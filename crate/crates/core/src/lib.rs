//! Numerical laboratory for Gibbs-Markov dynamics.
//!
//! The crate covers the whole chain from a concrete dynamical system to a
//! distributional verdict:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`systems`] | Gauss map and finite-state Markov shifts, itineraries, the separation metric, invariant sampling |
//! | [`transfer`] | Galerkin (Ulam) transfer operators, spectral gap, twisted operators, asymptotic variance |
//! | [`observables`] | Observables, centering, Hölder estimates, the lesser-regularity continued-fraction example |
//! | [`arrays`] | Dynamical arrays, block decompositions and the hypothesis ledger |
//! | [`clt`] | Kolmogorov-Smirnov testing of normalized sums against N(0,1) |
//! | [`wilcoxon`] | Two-sample rank sums on dynamical series and their four-term decomposition |
//! | [`scenarios`] | End-to-end runs shared by the CLI and the acceptance suite |
//!
//! All Monte Carlo work is seeded per sample index (see [`streams`]), so
//! results do not depend on the size of the rayon pool.

pub mod arrays;
pub mod clt;
pub mod error;
pub mod observables;
pub mod quad;
pub mod report;
pub mod scenarios;
pub mod stats;
pub mod streams;
pub mod systems;
pub mod transfer;
pub mod wilcoxon;

pub use error::{Error, Result};
pub use observables::Observable;
pub use systems::{GibbsMarkovSystem, Point, SystemKind, Trajectory};
