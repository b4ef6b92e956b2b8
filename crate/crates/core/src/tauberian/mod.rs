//! Frequency-domain side of the bounce expansion: the resolvent series,
//! `Υ_n(λ)`, the boundary function `Ψ_n(η)` with its `η = 0` branch, and
//! Fourier inversion back to the remainder `S_n(t)f`.

pub mod inversion;
pub mod resolvent;
pub mod surrogate;
pub mod zero;

pub use inversion::{filon_weights, fourier_invert, theta_modulus, time_domain_remainder, truncation_bound, InversionControls, InversionPoint};
pub use resolvent::{upsilon_n, ResolventBundle};
pub use surrogate::{eta_grid, psi_n_profile, select_eta_max, zero_mean_flux, BoundaryFunctionSample, NodalSurrogate};
pub use zero::{check_zero_mean, phi_eta, phi_lambda, phi_zero_extrapolated, ZeroFrequency, ZERO_MEAN_TOL};
#[cfg(test)]
pub(crate) mod fixtures {
    use crate::boundary::cell::WallModel;
    use crate::boundary::kernel::KernelSpec;
    use crate::geometry::{Domain, Vec3};
    use crate::measure::{BoundaryGrid, DirectionRule, PhaseGrid, PhaseGridFunction, VelocityMeasure};
    use num_complex::Complex64 as C64;

    pub fn small() -> (WallModel, PhaseGrid) {
        let vm = VelocityMeasure::canonical(2, 8.0, 24).unwrap();
        let g = BoundaryGrid::new(Domain::unit_disk(), 16, 8, vm, DirectionRule::Gauss).unwrap();
        (WallModel::new(&KernelSpec::maxwell(2, 1.0), &g).unwrap(), PhaseGrid::new(g, 2))
    }

    pub fn bump(x0: [f64; 2], width: f64, temp: f64) -> impl Fn(Vec3, Vec3) -> f64 {
        move |x: Vec3, v: Vec3| {
            let r2 = (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2);
            let s2 = v[0] * v[0] + v[1] * v[1];
            libm::exp(-r2 / width - s2 / (2.0 * temp))
        }
    }

    /// Difference of two bumps with the grid mass removed exactly.
    pub fn zero_mean(pg: &PhaseGrid) -> PhaseGridFunction {
        let a = pg.sample(&bump([0.3, 0.1], 0.2, 1.0));
        let b = pg.sample(&bump([-0.2, -0.4], 0.3, 0.6));
        let c = pg.integral(&a) / pg.integral(&b);
        a.sub(&b.scale(c))
    }

    pub fn positive(pg: &PhaseGrid) -> PhaseGridFunction {
        pg.sample(&bump([0.3, 0.1], 0.2, 1.0))
    }

    pub fn rel(pg: &PhaseGrid, a: &PhaseGridFunction, b: &PhaseGridFunction) -> f64 {
        pg.norm(&a.sub(b), 0) / pg.norm(b, 0)
    }

    pub fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }
}
