//! Mesh-free solver for Naghdi (Reissner-Mindlin) shells on curved charts.
//!
//! A neural field over the two reference coordinates represents the five
//! shell unknowns (three displacements, two rotations). The field is trained
//! against either the potential-energy functional (weak form) or the
//! pointwise equilibrium residuals (strong form), sampled at low-discrepancy
//! collocation points. A second field over the thickness enables
//! compliance-minimizing topology optimization under an augmented-Lagrangian
//! volume/equilibrium constraint loop.

pub mod autodiff;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod fieldio;
pub mod geometry;
pub mod kinematics;
pub mod network;
pub mod presets;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod statics;
pub mod topopt;
pub mod training;

pub use error::{Error, Result};
