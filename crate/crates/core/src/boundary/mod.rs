//! Diffuse boundary kernels and the flow operators `M_λ`, `G_λ`, `Ξ_λ`, `R_λ`.

pub mod cell;
pub mod kernel;
pub mod nodal;
pub mod split;

pub use cell::{apply_g, apply_m, apply_r, apply_xi, boundary_integral, boundary_norm, OperatorKind, OperatorMatrix, WallModel};
pub use kernel::{KernelSpec, Profile, RadialLaw, ThetaField};
pub use nodal::{Hop, NodalKernel};
pub use split::{small_velocity_split, weighted_norms, VelocitySplit, WeightedOperatorNorm};
