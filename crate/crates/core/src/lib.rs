//! Diffusion coefficient of an intermittent map with a neutral fixed point.
//!
//! The variance `σ²(α)` in the central limit theorem for `f_α` is computed
//! through the first-return map `F_α` on `Y = (1/2, 1]`: a Green–Kubo sum of
//! correlations of the induced observable under the induced transfer
//! operator gives `σ̃²(α)`, and Kac's lemma converts it into
//! `σ²(α) = σ̃²(α) / ∫τ dμ_α`.

pub mod clt_stats;
pub mod error;
pub mod green_kubo;
pub mod inducing;
pub mod map_core;
pub mod observable;
pub mod sim;
pub mod sweep;
pub mod transfer;

pub use error::{Error, Result};
pub use map_core::MapParams;
pub use observable::Observable;
