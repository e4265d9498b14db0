//! Schmidt decompositions and entanglement quantifiers for biphoton states.
//!
//! Two families of states are covered:
//!
//! * polarization qutrits `C₁|2_H⟩ + C₂|1_H,1_V⟩ + C₃|2_V⟩` ([`qutrit`]);
//! * angular wave functions of non-collinear, frequency-degenerate type-I
//!   SPDC ([`amplitude`]), whose Schmidt decomposition is built from
//!   Hermite-Gaussian modes ([`schmidt_analytic`]) and cross-checked by a
//!   quadrature-weighted SVD ([`schmidt_numeric`]).
//!
//! [`pipeline`] replays the polarization-flip / merge / 45° split / unmerge
//! sequence that turns the angular state into its Schmidt form, as exact
//! operations on sums of tagged Gaussians. [`cli`] holds the configuration
//! model and the runners behind the `biphoton` binary.

pub mod amplitude;
pub mod cli;
pub mod error;
pub mod pipeline;
pub mod quadrature;
pub mod qutrit;
pub mod schmidt_analytic;
pub mod schmidt_numeric;
pub mod special;

pub use error::{Error, Result};
