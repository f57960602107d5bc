//! Vapor-liquid equilibrium flash calculations on the SRK equation of
//! state, with every Newton derivative available either exactly through
//! forward-mode automatic differentiation or approximately through finite
//! differences, so the two can be compared like for like.
//!
//! Crate layout:
//!
//! - [`dual`]: dual scalars, the derivative carrier
//! - [`scalar`]: the trait that lets the whole stack run on `f64` or duals
//! - [`components`]: pure-species constants and ideal-gas properties
//! - [`eos`]: SRK parameters, cubic roots, fugacities, departures, K-values
//! - [`flash`]: PT / PV / PH solvers with iteration diagnostics
//! - [`findiff`]: the finite-difference baseline and the Richardson oracle
//! - [`experiments`]: seeded scenario runners producing CSV/JSON reports

pub mod components;
pub mod dual;
pub mod eos;
pub mod experiments;
pub mod findiff;
pub mod flash;
pub mod scalar;

pub use components::{Component, ComponentSet, PropertyError, R};
pub use dual::{seed, Dual, DualError};
pub use eos::{EosError, EosEvaluation, MixtureState, Phase, RootCount};
pub use flash::{
    flash_ph, flash_pt, flash_pv, DerivativeMode, FlashError, FlashResult, FlashSpec, FlashTarget,
    SolverConfig,
};
pub use scalar::Scalar;
