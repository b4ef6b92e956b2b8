//! Experiment runner for the `freestream-core` library: configuration,
//! parallel Monte Carlo for the diffuse-wall semigroup, the acceptance suite
//! and CSV/SVG report emission.

pub mod mc;
pub mod config;
pub mod output;
pub mod suite;
