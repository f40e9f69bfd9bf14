//! Infers overdamped Langevin dynamics from a single cross-sectional sample.
//!
//! The observed distribution is taken as the Boltzmann equilibrium of an
//! unknown free-energy landscape `F(x) = -log p(x)`. The landscape comes from a
//! Gaussian KDE; the noise strength `sigma` is fitted so that a discretised
//! Markov chain of the dynamics reproduces the observed density. The fitted
//! model can be simulated, tilted to study interventions, and scored against
//! follow-up measurements.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod intervene;
pub mod io;
pub mod kde;
pub mod landscape;
pub mod markov;
pub mod pipeline;
pub mod quad;
pub mod sde;
pub mod spline;
pub mod stats;
pub mod surrogate;
pub mod validate;

pub use error::{Error, Result};
pub use kde::{CrossSection, DensityModel};
pub use landscape::{EnergyLandscape, LandscapeFeatures, Potential};
pub use markov::{DiscreteChain, Grid, LangevinModel};
pub use pipeline::{fit, FitConfig, FittedModel};
