//! Compositional splitting `γ = β∘α⁻¹` of near-identity holomorphic maps on
//! planar Cartan pairs, with parameter families and continuity diagnostics.

pub mod cli;
pub mod cutoff;
pub mod dbar;
pub mod error;
pub mod geometry;
pub mod holo;
pub mod iteration;
pub mod lattice;
pub mod splitting;

pub use error::{Error, Result};
