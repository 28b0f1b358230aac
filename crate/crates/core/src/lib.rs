//! Simulation and numerical verification for Lambda-Wright-Fisher processes with frequency
//! dependent selection in a random environment, and for their Siegmund duals.
//!
//! Every process is driven by one explicit Poisson background ([`random_background`]), so the
//! forward process, its dual, coupled copies and the bounding Lévy processes can all be run
//! on the same realisation.

pub mod config;
pub mod dual_process;
mod error;
pub mod estimators;
pub mod flow;
pub mod forward_process;
pub mod levy_bounds;
pub mod measure_spec;
pub mod quadrature;
pub mod random_background;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};

/// Version tag recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
