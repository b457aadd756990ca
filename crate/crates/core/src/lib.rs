//! Numerical tools for entropy solutions of the two-dimensional Eikonal equation
//! `|m| = 1`, `div m = 0`.
//!
//! The crate builds test fields on rectangular grids, the Jin-Kohn and
//! `Phi_f` entropy families with their radial and harmonic extensions,
//! mollified entropy productions, kinetic measures, Besov difference
//! quotients and the interaction functional `Delta_alpha`.

pub mod circle;
pub mod entropy;
pub mod error;
pub mod factorization;
pub mod fields;
pub mod kinetic;
pub mod production;
pub mod quad;
pub mod regularity;

pub use circle::CircleFunction;
pub use error::{Error, Result};
pub use fields::{AngleField, FieldSpec, Grid2, Mollifier, ScalarField, VecField};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
