//! `Φ(η) f = R(1, M_{iη}H) G_{iη} f` on the cell grid, with the removable
//! singularity at `η = 0` resolved through the Perron eigenprojection.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use super::resolvent::ResolventBundle;
use crate::boundary::cell::{apply_g, OperatorMatrix, WallModel};
use crate::error::{Error, Result};
use crate::measure::{PhaseGrid, PhaseGridFunction};
use crate::numeric::linalg::{dot, CMatrix, Lu};
use crate::spectral::{leading_eigen, nu_prime_quadrature, one_sided_derivative, perron_fixed_point, LeadingEigen, NU_PRIME_STEP};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative size of `ρ_f` below which `f` counts as zero-mean.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// `ρ_f` checked against [`ZERO_MEAN_TOL`].
pub fn check_zero_mean(pg: &PhaseGrid, f: &PhaseGridFunction) -> Result<()> {
    let mass = pg.integral(f).re;
    if mass.abs() > ZERO_MEAN_TOL * pg.norm(f, 0) {
        return Err(Error::ZeroMeanRequired { mass });
    }
    Ok(())
}

/// `R(1, M_λH) G_λ f` for `λ ≠ 0`.
pub fn phi_lambda(wall: &WallModel, pg: &PhaseGrid, lambda: C64, f: &PhaseGridFunction) -> Result<Vec<C64>> {
    let b = ResolventBundle::new(wall, pg, lambda)?;
    b.boundary_resolvent(&b.collect_inflow(f)?)
}

/// The `η = 0` data: `M₀H` with its leading eigenpair, `ν′(0)` and the
/// factored `R(1, M₀H(I − P(0)))`.
pub struct ZeroFrequency<'a> {
    pub pg: &'a PhaseGrid,
    pub nu_prime: f64,
    pub step: f64,
    ops: [OperatorMatrix; 3],
    eig: [LeadingEigen; 3],
    /// `I − K₀ + r l`.
    lu: Lu,
}

impl<'a> ZeroFrequency<'a> {
    pub fn new(wall: &'a WallModel, pg: &'a PhaseGrid) -> Result<Self> {
        let h = NU_PRIME_STEP;
        let lam = |m: f64| C64::new(m * h, 0.0);
        let ops = [
            OperatorMatrix::m_lambda_h(wall, pg, lam(0.0))?,
            OperatorMatrix::m_lambda_h(wall, pg, lam(1.0))?,
            OperatorMatrix::m_lambda_h(wall, pg, lam(2.0))?,
        ];
        let k0 = ops[0].node_matrix();
        let eig = [leading_eigen(&k0, lam(0.0))?, leading_eigen(&ops[1].node_matrix(), lam(1.0))?, leading_eigen(&ops[2].node_matrix(), lam(2.0))?];
        let perron = perron_fixed_point(&ops[0], &pg.grid)?;
        let nu_prime = nu_prime_quadrature(&pg.grid, &perron);
        let (r, l) = (&eig[0].right, &eig[0].left);
        let n = k0.rows();
        let lu = CMatrix::from_fn(n, n, |i, j| (if i == j { C64::new(1.0, 0.0) } else { ZERO }) - k0[(i, j)] + r[i] * l[j]).lu()?;
        Ok(ZeroFrequency { pg, nu_prime, step: h, ops, eig, lu })
    }

    /// `P(λ) b = E_λ r_λ ⟨l_λ, C b⟩ / ν_λ` at `λ = m·h`, `m ∈ {0, 1, 2}`.
    fn project(&self, m: usize, b: &[C64]) -> Result<Vec<C64>> {
        let e = &self.eig[m];
        let s = dot(&e.left, &self.ops[m].collect(b)?) / e.nu;
        let a: Vec<C64> = e.right.iter().map(|x| x * s).collect();
        Ok(self.ops[m].emit_nodes(&a))
    }

    /// `P(0) b`.
    pub fn projection(&self, b: &[C64]) -> Result<Vec<C64>> {
        self.project(0, b)
    }

    /// `P′(0) b` by the one-sided difference over `λ ∈ {0, h, 2h}`.
    pub fn projection_derivative(&self, b: &[C64]) -> Result<Vec<C64>> {
        let (p0, p1, p2) = (self.project(0, b)?, self.project(1, b)?, self.project(2, b)?);
        Ok((0..b.len()).map(|c| one_sided_derivative(p0[c], p1[c], p2[c], self.step)).collect())
    }

    /// `R(1, M₀H(I − P(0))) b = b + E (I − K₀ + r l)⁻¹ (I − r l) C b`.
    pub fn reduced_resolvent(&self, b: &[C64]) -> Result<Vec<C64>> {
        let (r, l) = (&self.eig[0].right, &self.eig[0].left);
        let mut a = self.ops[0].collect(b)?;
        let s = dot(l, &a);
        a.iter_mut().zip(r).for_each(|(x, y)| *x -= y * s);
        let e = self.ops[0].emit_nodes(&self.lu.solve(&a));
        Ok(b.iter().zip(&e).map(|(x, y)| x + y).collect())
    }

    /// `Φ(0) f = R(1, M₀H(I−P)) G₀f − [P′(0) G₀f + P(0) G′₀f] / ν′(0)`,
    /// `G′₀ f = −G₀(t₊ f)`.
    pub fn phi(&self, f: &PhaseGridFunction) -> Result<Vec<C64>> {
        check_zero_mean(self.pg, f)?;
        let pg = self.pg;
        let b = apply_g(pg, ZERO, f)?;
        let na = pg.n_along();
        let weighted = PhaseGridFunction {
            values: f.values.iter().enumerate().map(|(q, v)| v * -(pg.tau[q / na] - pg.s(q / na, q % na))).collect(),
        };
        let db = apply_g(pg, ZERO, &weighted)?;
        let main = self.reduced_resolvent(&b)?;
        let pp = self.projection_derivative(&b)?;
        let pd = self.projection(&db)?;
        Ok((0..b.len()).map(|c| main[c] - (pp[c] + pd[c]) / self.nu_prime).collect())
    }
}

/// `Φ(η) f` on Γ₊; the `η = 0` branch requires `ρ_f = 0`.
pub fn phi_eta(wall: &WallModel, pg: &PhaseGrid, eta: f64, f: &PhaseGridFunction) -> Result<Vec<C64>> {
    if eta == 0.0 {
        ZeroFrequency::new(wall, pg)?.phi(f)
    } else {
        phi_lambda(wall, pg, C64::new(0.0, eta), f)
    }
}

/// Linear Richardson extrapolation of `R(1, M_εH) G_ε f` to `ε = 0` from
/// `ε₁ > ε₂`; returns the limit and `‖limit − Φ(ε₂)‖_μ / ‖limit‖_μ`.
pub fn phi_zero_extrapolated(wall: &WallModel, pg: &PhaseGrid, f: &PhaseGridFunction, e1: f64, e2: f64) -> Result<(Vec<C64>, f64)> {
    if !(e1 > e2 && e2 > 0.0) {
        return Err(Error::Parameter { what: "Richardson steps must satisfy ε₁ > ε₂ > 0" });
    }
    let a = phi_lambda(wall, pg, C64::new(e1, 0.0), f)?;
    let b = phi_lambda(wall, pg, C64::new(e2, 0.0), f)?;
    let w = e2 / (e1 - e2);
    let lim: Vec<C64> = a.iter().zip(&b).map(|(x, y)| y + (y - x) * w).collect();
    let diff: Vec<C64> = lim.iter().zip(&b).map(|(x, y)| x - y).collect();
    let g = &pg.grid;
    let residual = crate::boundary::cell::boundary_norm(g, &diff) / crate::boundary::cell::boundary_norm(g, &lim);
    Ok((lim, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::cell::boundary_norm;
    use crate::tauberian::fixtures::{c, positive, small, zero_mean};

    fn brel(pg: &PhaseGrid, a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        boundary_norm(&pg.grid, &d) / boundary_norm(&pg.grid, b)
    }

    #[test]
    fn nonzero_frequency_is_a_plain_solve() {
        let (wall, pg) = small();
        let f = positive(&pg);
        let got = phi_eta(&wall, &pg, 5.0, &f).unwrap();
        let lam = c(0.0, 5.0);
        let a = OperatorMatrix::m_lambda_h(&wall, &pg, lam).unwrap().to_dense().unwrap();
        let n = a.rows();
        let m = CMatrix::from_fn(n, n, |i, j| (if i == j { C64::new(1.0, 0.0) } else { ZERO }) - a[(i, j)]);
        let want = m.solve(&apply_g(&pg, lam, &f).unwrap()).unwrap();
        assert!(brel(&pg, &got, &want) < 1e-10);
    }

    #[test]
    fn zero_branch_is_the_small_epsilon_limit() {
        let (wall, pg) = small();
        let f = zero_mean(&pg);
        let z = ZeroFrequency::new(&wall, &pg).unwrap();
        let g0 = apply_g(&pg, ZERO, &f).unwrap();
        let p = z.projection(&g0).unwrap();
        assert!(boundary_norm(&pg.grid, &p) <= 1e-10 * boundary_norm(&pg.grid, &g0));
        let phi0 = z.phi(&f).unwrap();
        let (lim, _) = phi_zero_extrapolated(&wall, &pg, &f, 1e-2, 1e-3).unwrap();
        let d = brel(&pg, &lim, &phi0);
        assert!(d < 1e-3, "{d}");
        for eta in [1e-3, -1e-3] {
            let j = brel(&pg, &phi_eta(&wall, &pg, eta, &f).unwrap(), &phi0);
            assert!(j < 1e-2, "{eta} {j}");
        }
        assert!(matches!(z.phi(&positive(&pg)), Err(Error::ZeroMeanRequired { .. })));
    }
}
