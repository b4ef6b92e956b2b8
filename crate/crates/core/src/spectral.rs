//! Perron data, leading eigenvalue `ν(λ)`, eigenprojections and norm
//! profiles of `M_λH`.
//!
//! All eigen-computations run on the reduced node matrix `K_λ` (node fluxes
//! or node masses); eigenvectors on cells are recovered by one emission.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::boundary::cell::{apply_m, apply_xi, boundary_integral, boundary_norm, OperatorMatrix, WallModel};
use crate::boundary::nodal::NodalKernel;
use crate::error::{Error, Result};
use crate::geometry::{self as geo};
use crate::measure::{BoundaryGrid, PhaseGrid, PhaseGridFunction, Side};
use crate::numeric::linalg::{dot, CMatrix};
use crate::numeric::stats::ols;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;
pub const DENSE_LIMIT: usize = 4000;

/// Perron fixed point of `M₀H`.
#[derive(Clone, Debug)]
pub struct PerronData {
    /// Node fluxes of `φ₀` (right eigenvector of the node matrix).
    pub node: Vec<f64>,
    /// `φ₀` on Γ₊ cells, `∫φ₀ dμ₊ = 1`.
    pub phi0: Vec<C64>,
    /// `φ₀* ≡ 1`.
    pub dual: Vec<f64>,
    /// Modulus of the second eigenvalue.
    pub gap: f64,
    pub residual: f64,
    pub iterations: usize,
    pub positive: bool,
}

/// Power iteration for the Perron vector of a nonnegative matrix,
/// normalized by `Σ w_i a_i = 1`.
pub fn perron_vector(k: &CMatrix, weights: &[f64]) -> Result<(Vec<f64>, usize)> {
    let n = k.rows();
    let re: Vec<f64> = k.as_slice().iter().map(|z| z.re).collect();
    let mut a = alloc::vec![1.0; n];
    let norm = |a: &mut [f64]| {
        let s: f64 = a.iter().zip(weights).map(|(x, w)| x * w).sum();
        a.iter_mut().for_each(|x| *x /= s);
    };
    norm(&mut a);
    let mut next = alloc::vec![0.0; n];
    let mut last_change = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        for (i, out) in next.iter_mut().enumerate() {
            *out = re[i * n..(i + 1) * n].iter().zip(&a).map(|(x, y)| x * y).sum();
        }
        norm(&mut next);
        let change = next.iter().zip(&a).map(|(x, y)| (x - y).abs() / y.abs().max(1e-300)).fold(0.0, f64::max);
        core::mem::swap(&mut a, &mut next);
        if change < POWER_TOL {
            return Ok((a, it));
        }
        last_change = change;
    }
    Err(Error::GapTooSmall { second: last_change })
}

fn second_modulus(k: &CMatrix) -> Result<f64> {
    if k.rows() > DENSE_LIMIT {
        return Err(Error::Unsupported { what: "dense eigensolve beyond 4000 nodes" });
    }
    let mut m: Vec<f64> = k.eigenvalues()?.iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(if m.len() > 1 { m[1] } else { 0.0 })
}

/// Perron data of an assembled `M₀H`.
pub fn perron_fixed_point(op: &OperatorMatrix, grid: &BoundaryGrid) -> Result<PerronData> {
    if op.lambda != ZERO {
        return Err(Error::Parameter { what: "Perron data needs λ = 0" });
    }
    let k = op.node_matrix();
    let weights: Vec<f64> = grid.nodes.iter().map(|n| n.weight).collect();
    let (node, iterations) = perron_vector(&k, &weights)?;
    let a: Vec<C64> = node.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut phi0 = op.emit_nodes(&a);
    let mass = boundary_integral(grid, &phi0).re;
    phi0.iter_mut().for_each(|z| *z /= mass);
    let image = op.apply(&phi0)?;
    let diff: Vec<C64> = image.iter().zip(&phi0).map(|(x, y)| x - y).collect();
    let residual = boundary_norm(grid, &diff);
    let gap = second_modulus(&k)?;
    let positive = phi0.iter().all(|z| z.re > 0.0);
    Ok(PerronData { node, phi0, dual: alloc::vec![1.0; grid.n_cells()], gap, residual, iterations, positive })
}

/// Leading eigenvalue of `K_λ` with right/left eigenvectors.
#[derive(Clone, Debug)]
pub struct LeadingEigen {
    pub lambda: C64,
    pub nu: C64,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// Distance from `ν` to the rest of the spectrum.
    pub separation: f64,
    pub simple: bool,
    pub residual: f64,
}

fn inverse_iteration(k: &CMatrix, nu: C64) -> Result<Vec<C64>> {
    let n = k.rows();
    let shift = nu + C64::new(1e-13, 1e-13) * nu.norm().max(1e-3);
    let a = CMatrix::from_fn(n, n, |i, j| if i == j { k[(i, j)] - shift } else { k[(i, j)] });
    let lu = a.lu()?;
    let mut x = alloc::vec![ONE; n];
    for _ in 0..3 {
        x = lu.solve(&x);
        let s = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        x.iter_mut().for_each(|z| *z /= s);
    }
    Ok(x)
}

fn transpose(k: &CMatrix) -> CMatrix {
    CMatrix::from_fn(k.cols(), k.rows(), |i, j| k[(j, i)])
}

/// Largest-modulus eigenvalue of `k` (the continuation of `ν(0) = 1` in the
/// closed right half-plane) with eigenvectors normalized by `⟨left, right⟩ = 1`.
pub fn leading_eigen(k: &CMatrix, lambda: C64) -> Result<LeadingEigen> {
    if k.rows() > DENSE_LIMIT {
        return Err(Error::Unsupported { what: "dense eigensolve beyond 4000 nodes" });
    }
    let ev = k.eigenvalues()?;
    let (idx, _) = ev.iter().enumerate().fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let nu0 = ev[idx];
    let separation = ev.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, z)| (z - nu0).norm()).fold(f64::INFINITY, f64::min);
    let right = inverse_iteration(k, nu0)?;
    let mut left = inverse_iteration(&transpose(k), nu0)?;
    let kr = k.matvec(&right);
    let scale = dot(&left, &right);
    left.iter_mut().for_each(|z| *z /= scale);
    // Rayleigh quotient refinement
    let nu = dot(&left, &kr);
    let res: f64 = kr.iter().zip(&right).map(|(a, b)| (a - nu * b).norm()).fold(0.0, f64::max)
        / right.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(LeadingEigen { lambda, nu, right, left, separation, simple: separation >= 1e-6, residual: res })
}

/// Rank-one eigenprojection `P = r ⊗ l` (with `⟨l, r⟩ = 1`).
pub fn projector(le: &LeadingEigen) -> CMatrix {
    let n = le.right.len();
    CMatrix::from_fn(n, n, |i, j| le.right[i] * le.left[j])
}

/// One-sided second-order derivative at 0 along the real axis:
/// `(4F(h) − F(2h) − 3F(0)) / 2h`.
pub fn one_sided_derivative(f0: C64, fh: C64, f2h: C64, h: f64) -> C64 {
    (fh * 4.0 - f2h - f0 * 3.0) / (2.0 * h)
}

/// `P′(0)` by the one-sided difference of the rank-one projector of
/// `K_λ`, `λ ∈ {0, h, 2h}`.
pub fn projector_derivative<F: Fn(C64) -> Result<CMatrix>>(kmat: F, h: f64) -> Result<CMatrix> {
    let p0 = projector(&leading_eigen(&kmat(ZERO)?, ZERO)?);
    let p1 = projector(&leading_eigen(&kmat(C64::new(h, 0.0))?, C64::new(h, 0.0))?);
    let p2 = projector(&leading_eigen(&kmat(C64::new(2.0 * h, 0.0))?, C64::new(2.0 * h, 0.0))?);
    let n = p0.rows();
    Ok(CMatrix::from_fn(n, n, |i, j| one_sided_derivative(p0[(i, j)], p1[(i, j)], p2[(i, j)], h)))
}

/// `ν′(0) = −∫_{Γ₊} τ₋ φ₀ dμ₊` on the cell grid.
pub fn nu_prime_quadrature(grid: &BoundaryGrid, perron: &PerronData) -> f64 {
    let mut acc = Vec::with_capacity(grid.n_cells());
    for c in 0..grid.n_cells() {
        let (i, _, _) = grid.cell_parts(c);
        let v = grid.velocity_of(c, Side::Plus);
        let tau = grid.domain.chord_from(grid.nodes[i].x, geo::scale(v, -1.0));
        acc.push(grid.mu(c) * tau * perron.phi0[c].re);
    }
    -crate::numeric::gauss::pairwise_sum(&acc)
}

/// `ν′(0) = −⟨1, K^{[1]}_0 c₀⟩ / ⟨1, c₀⟩` for a node kernel in mass coordinates.
pub fn nu_prime_nodal(nk: &NodalKernel) -> Result<f64> {
    let k0 = nk.matrix(ZERO, 0)?;
    let ones = alloc::vec![1.0; nk.len()];
    let (c0, _) = perron_vector(&k0, &ones)?;
    let k1 = nk.matrix(ZERO, 1)?;
    let c: Vec<C64> = c0.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(-k1.matvec(&c).iter().map(|z| z.re).sum::<f64>())
}

/// Default step of the one-sided `ν′(0)` difference.
pub const NU_PRIME_STEP: f64 = 1e-3;

/// One-sided second-order slope of `ν(ε)` at `0` from `ε ∈ {h, 2h}`.
pub fn nu_prime_finite_difference(wall: &WallModel, pg: &PhaseGrid, h: f64) -> Result<f64> {
    let nu = |e: f64| -> Result<C64> {
        let lam = C64::new(e, 0.0);
        let k = OperatorMatrix::m_lambda_h(wall, pg, lam)?.node_matrix();
        Ok(leading_eigen(&k, lam)?.nu)
    };
    Ok(one_sided_derivative(nu(0.0)?, nu(h)?, nu(2.0 * h)?, h).re)
}

/// `Ψ_H = Ξ₀Hφ₀` normalized in `𝕏₀`, with its trace defect
/// `‖H(Ψ|Γ₊) − Ψ|Γ₋‖ / ‖Ψ|Γ₋‖`.
#[derive(Clone, Debug)]
pub struct InvariantDensity {
    pub psi: PhaseGridFunction,
    /// `Ψ|Γ₋` (constant along each chord).
    pub inflow: Vec<C64>,
    pub trace_defect: f64,
}

pub fn invariant_density(wall: &WallModel, pg: &PhaseGrid, perron: &PerronData) -> Result<InvariantDensity> {
    if perron.residual > 1e-8 {
        return Err(Error::NoConvergence { what: "Perron residual above tolerance" });
    }
    let grid = &pg.grid;
    let mut inflow = wall.apply_h(grid, &perron.phi0)?;
    let mut psi = apply_xi(pg, ZERO, &inflow, true)?;
    let mass = pg.norm(&psi, 0);
    psi = psi.scale(C64::new(1.0 / mass, 0.0));
    inflow.iter_mut().for_each(|z| *z /= mass);
    let outflow = apply_m(pg, ZERO, &inflow)?;
    let back = wall.apply_h(grid, &outflow)?;
    let diff: Vec<C64> = back.iter().zip(&inflow).map(|(a, b)| a - b).collect();
    let trace_defect = boundary_norm(grid, &diff) / boundary_norm(grid, &inflow);
    Ok(InvariantDensity { psi, inflow, trace_defect })
}

/// `‖(M_{iη}H)^p‖` sampled along the imaginary axis, with a log-log fit.
#[derive(Clone, Debug)]
pub struct NormProfile {
    pub p: usize,
    pub eta: Vec<f64>,
    pub norms: Vec<f64>,
}

impl NormProfile {
    /// Least-squares log-log slope over `[lo, hi]`.
    pub fn slope(&self, lo: f64, hi: f64) -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .eta
            .iter()
            .zip(&self.norms)
            .filter(|(e, n)| **e >= lo && **e <= hi && **n > 0.0)
            .map(|(e, n)| (libm::log(*e), libm::log(*n)))
            .unzip();
        if x.len() < 2 {
            return Err(Error::InsufficientSignal { what: "fewer than two points in the fit window" });
        }
        let w = alloc::vec![1.0; x.len()];
        Ok(ols(&x, &y, &w).0)
    }
}

/// Cell-grid profile: the μ-weighted operator norm of the assembled powers.
pub fn power_norm_profile_cells(
    wall: &crate::boundary::cell::WallModel,
    pg: &crate::measure::PhaseGrid,
    p: usize,
    eta: &[f64],
) -> Result<NormProfile> {
    let mut norms = Vec::with_capacity(eta.len());
    for &e in eta {
        let op = OperatorMatrix::m_lambda_h(wall, pg, C64::new(0.0, e))?;
        norms.push(op.power_norm(&pg.grid, p));
    }
    Ok(NormProfile { p, eta: eta.to_vec(), norms })
}

/// Node-kernel profile: `‖(M_{iη}H)^p‖ = ‖K_{iη}^{p−1}‖₁` since `H` integrates
/// out velocities and `M_{iη}` preserves moduli.
pub fn power_norm_profile_nodal(nk: &NodalKernel, p: usize, eta: &[f64]) -> Result<NormProfile> {
    if p == 0 {
        return Err(Error::Parameter { what: "power must be at least 1" });
    }
    let mut norms = Vec::with_capacity(eta.len());
    for &e in eta {
        norms.push(nk.power_norm(C64::new(0.0, e), p - 1)?);
    }
    Ok(NormProfile { p, eta: eta.to_vec(), norms })
}

/// `∫_{W/2}^{W} ‖(M_{iη}H)^p‖ dη`, the tail proxy used to pick `η_max`.
pub fn tail_integral<F: FnMut(f64) -> Result<f64>>(mut norm: F, window: f64, n: usize) -> Result<f64> {
    let r = crate::numeric::gauss::Rule::on_interval(n, window / 2.0, window);
    let mut acc = 0.0;
    for (e, w) in r.iter() {
        acc += w * norm(e)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::kernel::{KernelSpec, ThetaField};
    use crate::geometry::Domain;
    use crate::measure::{DirectionRule, VelocityMeasure};
    use core::f64::consts::PI;

    fn setup(spec: &KernelSpec, n: usize, nd: usize) -> (WallModel, PhaseGrid) {
        let vm = VelocityMeasure::canonical(2, 8.0, 24).unwrap();
        let g = BoundaryGrid::new(Domain::unit_disk(), n, nd, vm, DirectionRule::Gauss).unwrap();
        (WallModel::new(spec, &g).unwrap(), PhaseGrid::new(g, 2))
    }

    #[test]
    fn perron_is_position_independent_maxwellian() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let (wall, pg) = setup(&spec, 16, 8);
        let g = &pg.grid;
        let op = OperatorMatrix::m_lambda_h(&wall, &pg, ZERO).unwrap();
        let pd = perron_fixed_point(&op, g).unwrap();
        assert!(pd.residual < 1e-10 && pd.positive && pd.gap < 1.0, "{} {} {}", pd.residual, pd.positive, pd.gap);
        for c in 0..g.n_cells() {
            let want = spec.g(1.0, g.speed(g.cell_parts(c).2)) / (2.0 * PI * wall.gamma[0]);
            assert!((pd.phi0[c].re / want - 1.0).abs() < 1e-10);
        }
        // discrete ν′(0) equals the one-sided slope of ν(ε)
        let q = nu_prime_quadrature(g, &pd);
        let fd = nu_prime_finite_difference(&wall, &pg, NU_PRIME_STEP).unwrap();
        assert!((fd / q - 1.0).abs() < 1e-4, "{fd} {q}");
    }

    #[test]
    fn varying_temperature_matches_dense_eigensolve() {
        let th: Vec<f64> = (0..16).map(|k| 1.0 + 0.5 * libm::cos(2.0 * PI * k as f64 / 16.0)).collect();
        let spec = KernelSpec { dim: 2, profile: crate::boundary::kernel::Profile::Maxwell, theta: ThetaField::Angular(th) };
        let (wall, pg) = setup(&spec, 16, 8);
        let op = OperatorMatrix::m_lambda_h(&wall, &pg, ZERO).unwrap();
        let pd = perron_fixed_point(&op, &pg.grid).unwrap();
        assert!(pd.residual < 1e-10);
        let le = leading_eigen(&op.node_matrix(), ZERO).unwrap();
        assert!((le.nu - ONE).norm() < 1e-10, "{}", le.nu);
        let r0 = le.right[0].re / pd.node[0];
        for i in 0..16 {
            assert!((le.right[i].re / pd.node[i] - r0).abs() < 1e-8 * r0.abs());
        }
    }

    #[test]
    fn projector_properties_and_axis_bound() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 32, 4).unwrap();
        for &lam in &[C64::new(0.1, 0.0), C64::new(0.0, 0.5), C64::new(0.3, 2.0)] {
            let k = nk.matrix(lam, 0).unwrap();
            let le = leading_eigen(&k, lam).unwrap();
            assert!(le.nu.norm() < 1.0 && le.residual < 1e-9);
            let p = projector(&le);
            assert!(p.matmul(&p).sub(&p).max_abs() < 1e-10);
            assert!(p.matmul(&k).sub(&k.matmul(&p)).max_abs() < 1e-9);
            if lam.im == 0.0 {
                assert!(le.nu.im.abs() < 1e-12 && le.nu.re > 0.0);
            }
        }
        // ν′(0) of the continuum-velocity kernel: −|Ω| / (|∂Ω| γ) = −√(2π)/2
        let d = nu_prime_nodal(&nk).unwrap();
        assert!((d / (-libm::sqrt(2.0 * PI) / 2.0) - 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn invariant_density_is_uniform_maxwellian() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let (wall, pg) = setup(&spec, 16, 8);
        let op = OperatorMatrix::m_lambda_h(&wall, &pg, ZERO).unwrap();
        let pd = perron_fixed_point(&op, &pg.grid).unwrap();
        let inv = invariant_density(&wall, &pg, &pd).unwrap();
        assert!(inv.trace_defect < 1e-6, "{}", inv.trace_defect);
        assert!((pg.norm(&inv.psi, 0) - 1.0).abs() < 1e-12);
        // Ψ_H = M₁/|Ω|; the scale carries the grid's quadrature of |Ω|
        let g = &pg.grid;
        let scale = inv.psi.values[0].re / (spec.g(1.0, g.speed(0)) / PI);
        assert!((scale - 1.0).abs() < 1e-3, "{scale}");
        for c in 0..g.n_cells() {
            let want = scale * spec.g(1.0, g.speed(g.cell_parts(c).2)) / PI;
            for k in 0..pg.n_along() {
                let z = inv.psi.values[c * pg.n_along() + k];
                assert!((z.re / want - 1.0).abs() < 1e-6 && z.im == 0.0);
            }
        }
    }
}
