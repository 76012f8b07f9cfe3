//! Numerical holonomy engine for the polynomial foliation family
//! `ker(dH + ε ω₁ + a ω₂)` with `H = x² + y²`, `ω₁ = (H - 1)(y dx - x dy)`
//! and `ω₂ = y dH`.
//!
//! The crate computes return maps along the real circle `H = 1`, multi-fold
//! periodic orbits of those maps, their Melnikov integrals, zero counts by
//! the argument principle, and continuation of orbit families toward `ε = 0`.

// `!(x > 0.0)` is how NaN gets rejected along with the nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod config;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod holonomy;
pub mod melnikov;
pub mod orbits;
pub mod quadrature;

pub use algebra::Complex;
pub use config::{EngineConfig, IntegratorConfig};
pub use error::{Error, Result};
pub use holonomy::{Coupling, FamilyParams};
