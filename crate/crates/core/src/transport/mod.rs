//! Time-domain evolution: free streaming, boundary arrival fluxes and
//! their renewal (the Dyson–Phillips classes), decay-rate fits.

pub mod decay;
pub mod flux;
pub mod free;

pub use decay::{fit_rate, DecayCurve, RateFit};
pub use flux::{dyson_class_mass, dyson_iterate_on_grid, first_exit_flux, lift, lift_table, FlightKernel, FluxQuadrature, FluxTable, SurvivalTable};
pub use free::{evolve_free, free_decay_checks, free_norm, free_time_integral, FreeDecayCheck};
