//! Free streaming `U₀(t)f(x,v) = f(x − tv, v) 𝟙{t < t₋(x,v)}` on the chord grid.
//!
//! On a chord entered at `z` with velocity `v`, the point at time-since-entry
//! `s` goes back to time-since-entry `s − t`, so `U₀(t)` is a shift along
//! chords and its norms are one-dimensional integrals per cell.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry as geo;
use crate::measure::{speed_weight, split_rule, PhaseFunction, PhaseGrid, PhaseGridFunction, Side};
use crate::numeric::gauss::pairwise_sum;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Parameter { what: "time must be finite and nonnegative" });
    }
    Ok(())
}

/// `U₀(t)f` sampled on the phase grid.
pub fn evolve_free<F: PhaseFunction + ?Sized>(pg: &PhaseGrid, f: &F, t: f64) -> Result<PhaseGridFunction> {
    check_time(t)?;
    let grid = &pg.grid;
    let mut values = Vec::with_capacity(pg.len());
    for c in 0..grid.n_cells() {
        let (i, j, l) = grid.cell_parts(c);
        let z = grid.nodes[i].x;
        let v = grid.velocity_at(i, j, l, Side::Minus);
        for k in 0..pg.n_along() {
            let s = pg.s(c, k);
            let val = if s > t { f.eval(geo::axpy(z, s - t, v), v) } else { 0.0 };
            values.push(C64::new(val, 0.0));
        }
    }
    Ok(PhaseGridFunction { values })
}

/// Per-cell `∫_0^{τ_c − t} |f(z_c + u v, v)| du` with `n`-point panels split
/// at the function's time breaks.
fn chord_tail<F: PhaseFunction + ?Sized>(pg: &PhaseGrid, f: &F, c: usize, t: f64, breaks: &[f64], n: usize) -> f64 {
    let grid = &pg.grid;
    let len = pg.tau[c] - t;
    if len <= 0.0 {
        return 0.0;
    }
    let (i, j, l) = grid.cell_parts(c);
    let z = grid.nodes[i].x;
    let v = grid.velocity_at(i, j, l, Side::Minus);
    split_rule(0.0, len, breaks, n).iter().map(|(u, w)| w * f.eval(geo::axpy(z, u, v), v).abs()).sum()
}

/// `‖U₀(t)f‖_{𝕏_k}`.
pub fn free_norm<F: PhaseFunction + ?Sized>(pg: &PhaseGrid, f: &F, t: f64, k: u32, n: usize) -> Result<f64> {
    check_time(t)?;
    let grid = &pg.grid;
    let breaks = f.time_breaks();
    let terms: Vec<f64> = (0..grid.n_cells())
        .map(|c| {
            let w = grid.mu(c) * speed_weight(grid.speed(grid.cell_parts(c).2), k);
            w * chord_tail(pg, f, c, t, &breaks, n)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `∫_0^∞ ‖U₀(t)f‖_{𝕏_k} dt` by time quadrature (per chord the integrand
/// vanishes beyond `τ_c`).
pub fn free_time_integral<F: PhaseFunction + ?Sized>(pg: &PhaseGrid, f: &F, k: u32, n: usize) -> Result<f64> {
    let grid = &pg.grid;
    let breaks = f.time_breaks();
    let terms: Vec<f64> = (0..grid.n_cells())
        .map(|c| {
            let tau = pg.tau[c];
            // the inner integral kinks where τ − t crosses a time break
            let tcuts: Vec<f64> = breaks.iter().map(|b| tau - b).collect();
            let inner: f64 = split_rule(0.0, tau, &tcuts, n).iter().map(|(t, w)| w * chord_tail(pg, f, c, t, &breaks, n)).sum();
            grid.mu(c) * speed_weight(grid.speed(grid.cell_parts(c).2), k) * inner
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// One instance of the free decay bound `t^k‖U₀(t)f‖_{𝕏₀} ≤ D^k‖f‖_{𝕏_k}`.
#[derive(Clone, Copy, Debug)]
pub struct FreeDecayCheck {
    pub k: u32,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl FreeDecayCheck {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

pub fn free_decay_checks<F: PhaseFunction + ?Sized>(pg: &PhaseGrid, f: &F, ks: &[u32], times: &[f64], n: usize) -> Result<Vec<FreeDecayCheck>> {
    let d = pg.grid.domain.diameter();
    let mut out = Vec::new();
    for &k in ks {
        let rhs = libm::pow(d, k as f64) * free_norm(pg, f, 0.0, k, n)?;
        for &t in times {
            let lhs = libm::pow(t, k as f64) * free_norm(pg, f, t, 0, n)?;
            out.push(FreeDecayCheck { k, t, lhs, rhs });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Vec3};
    use crate::measure::{BoundaryGrid, DirectionRule, VelocityMeasure};

    fn pg() -> PhaseGrid {
        let vm = VelocityMeasure::canonical(2, 8.0, 24).unwrap();
        PhaseGrid::new(BoundaryGrid::new(Domain::unit_disk(), 16, 8, vm, DirectionRule::Gauss).unwrap(), 4)
    }

    struct Ring;
    impl PhaseFunction for Ring {
        fn eval(&self, _x: Vec3, v: Vec3) -> f64 {
            let r = geo::norm(v);
            if (0.5..=1.5).contains(&r) {
                libm::exp(-r * r / 2.0)
            } else {
                0.0
            }
        }
    }

    #[test]
    fn identity_at_zero_and_absorption() {
        let g = pg();
        let f = |_x: Vec3, v: Vec3| libm::exp(-geo::dot(v, v));
        let u0 = evolve_free(&g, &f, 0.0).unwrap();
        assert_eq!(u0, g.sample(&f));
        // speeds ≥ 0.5 leave the unit disk by t = 4
        assert_eq!(free_norm(&g, &Ring, 4.0 + 1e-9, 0, 8).unwrap(), 0.0);
        assert!(free_norm(&g, &Ring, 1.0, 0, 8).unwrap() > 0.0);
        assert!(evolve_free(&g, &f, -1.0).is_err());
    }

    #[test]
    fn norm_at_zero_matches_sampled_integral() {
        let g = pg();
        let f = |_x: Vec3, v: Vec3| libm::exp(-geo::dot(v, v));
        let a = free_norm(&g, &f, 0.0, 0, 8).unwrap();
        let b = g.norm(&g.sample(&f), 0);
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_integral_is_exit_time_moment() {
        // ∫_0^∞‖U₀(t)f‖dt = ∫ t₊ f, i.e. Σ μ_c ∫_0^τ (τ − u) f du on chords
        let g = pg();
        let f = |_x: Vec3, v: Vec3| libm::exp(-geo::dot(v, v));
        let lhs = free_time_integral(&g, &f, 0, 8).unwrap();
        let mut rhs = 0.0;
        for c in 0..g.grid.n_cells() {
            let (i, j, l) = g.grid.cell_parts(c);
            let v = g.grid.velocity_at(i, j, l, Side::Minus);
            let tau = g.tau[c];
            rhs += g.grid.mu(c) * f(g.grid.nodes[i].x, v) * tau * tau / 2.0;
        }
        assert!((lhs / rhs - 1.0).abs() < 1e-12);
        let checks = free_decay_checks(&g, &Ring, &[1, 2], &[1.0, 2.0, 5.0, 10.0], 8).unwrap();
        assert!(checks.iter().all(|c| c.ratio() <= 1.0));
    }
}
