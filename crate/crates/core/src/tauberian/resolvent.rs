//! `R(λ, T_H)` through the boundary resolvent `R(1, M_λH)` and the Laplace
//! transform `Υ_n(λ)` of the bounce remainder, on the cell grid.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::boundary::cell::{apply_g, apply_r, apply_xi, boundary_norm, check_lambda, OperatorMatrix, WallModel};
use crate::error::{Error, Result};
use crate::measure::{PhaseGrid, PhaseGridFunction};
use crate::numeric::linalg::{CMatrix, Lu};

const ZERO: C64 = C64::new(0.0, 0.0);

/// The operators behind `R(λ, T_H) = R_λ + Ξ_λH R(1, M_λH) G_λ` at one `λ`.
///
/// `R(1, M_λH)` is solved through the node factorization
/// `M_λH = E C` (emission after collection):
/// `R(1, EC) = I + E (I − CE)⁻¹ C` with `CE = K_λ` the node matrix.
pub struct ResolventBundle<'a> {
    pub lambda: C64,
    pub pg: &'a PhaseGrid,
    pub wall: &'a WallModel,
    pub m_h: OperatorMatrix,
    lu: Lu,
}

impl<'a> ResolventBundle<'a> {
    /// Fails with [`Error::Singular`] when `1` is an eigenvalue of `M_λH`
    /// (always at `λ = 0`).
    pub fn new(wall: &'a WallModel, pg: &'a PhaseGrid, lambda: C64) -> Result<Self> {
        check_lambda(lambda)?;
        if lambda == ZERO {
            return Err(Error::Singular);
        }
        let m_h = OperatorMatrix::m_lambda_h(wall, pg, lambda)?;
        let k = m_h.node_matrix();
        let n = k.rows();
        let lu = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) - k[(i, j)] } else { -k[(i, j)] }).lu()?;
        Ok(ResolventBundle { lambda, pg, wall, m_h, lu })
    }

    /// `G_λ f`.
    pub fn collect_inflow(&self, f: &PhaseGridFunction) -> Result<Vec<C64>> {
        apply_g(self.pg, self.lambda, f)
    }

    /// `R(1, M_λH) b` for `b` on Γ₊.
    pub fn boundary_resolvent(&self, b: &[C64]) -> Result<Vec<C64>> {
        let a = self.lu.solve(&self.m_h.collect(b)?);
        let e = self.m_h.emit_nodes(&a);
        Ok(b.iter().zip(&e).map(|(x, y)| x + y).collect())
    }

    /// `Ξ_λ H u` for `u` on Γ₊.
    pub fn lift(&self, u: &[C64]) -> Result<PhaseGridFunction> {
        let inflow = self.wall.apply_h(&self.pg.grid, u)?;
        apply_xi(self.pg, self.lambda, &inflow, false)
    }

    /// `R(λ, T₀) f = R_λ f`.
    pub fn free(&self, f: &PhaseGridFunction) -> Result<PhaseGridFunction> {
        apply_r(self.pg, self.lambda, f)
    }

    /// `R(λ, T_H) f` in solved form.
    pub fn resolvent(&self, f: &PhaseGridFunction) -> Result<PhaseGridFunction> {
        let b = self.boundary_resolvent(&self.collect_inflow(f)?)?;
        Ok(self.free(f)?.add(&self.lift(&b)?))
    }

    /// `R_λ f + Σ_{k ≤ K} Ξ_λH (M_λH)^k G_λ f`.
    pub fn series(&self, f: &PhaseGridFunction, k_max: usize) -> Result<PhaseGridFunction> {
        let mut b = self.collect_inflow(f)?;
        let mut acc = b.clone();
        for _ in 0..k_max {
            b = self.m_h.apply(&b)?;
            acc.iter_mut().zip(&b).for_each(|(a, x)| *a += x);
        }
        Ok(self.free(f)?.add(&self.lift(&acc)?))
    }

    /// `s_n(λ) f = Σ_{p=0}^{n} Ξ_λH (M_λH)^p G_λ f`.
    pub fn partial_sum(&self, f: &PhaseGridFunction, n: usize) -> Result<PhaseGridFunction> {
        Ok(self.series(f, n)?.sub(&self.free(f)?))
    }

    /// `Υ_n(λ) f = Ξ_λH R(1, M_λH) (M_λH)^n G_λ f` (tail of the series).
    pub fn upsilon_tail(&self, f: &PhaseGridFunction, n: usize) -> Result<PhaseGridFunction> {
        let mut b = self.collect_inflow(f)?;
        for _ in 0..n {
            b = self.m_h.apply(&b)?;
        }
        self.lift(&self.boundary_resolvent(&b)?)
    }

    /// `Υ_n(λ) f = R(λ, T_H) f − R(λ, T₀) f − Σ_{k<n} Ξ_λH (M_λH)^k G_λ f`.
    pub fn upsilon_difference(&self, f: &PhaseGridFunction, n: usize) -> Result<PhaseGridFunction> {
        let total = self.resolvent(f)?.sub(&self.free(f)?);
        if n == 0 {
            return Ok(total);
        }
        Ok(total.sub(&self.partial_sum(f, n - 1)?))
    }

    /// `‖Ξ_λH‖_{𝕐₊ → 𝕏₀}`: columns depend only on the input node.
    pub fn lift_norm(&self) -> Result<f64> {
        let grid = &self.pg.grid;
        let mut best: f64 = 0.0;
        let mut a = alloc::vec![ZERO; grid.n_nodes()];
        for i in 0..grid.n_nodes() {
            a[i] = C64::new(1.0, 0.0);
            let u = self.wall.emit(grid, &a);
            a[i] = ZERO;
            let lifted = apply_xi(self.pg, self.lambda, &u, false)?;
            best = best.max(self.pg.norm(&lifted, 0) / grid.nodes[i].weight);
        }
        Ok(best)
    }

    /// Upper bound `1 + max_i ‖E (I − K_λ)⁻¹ e_i‖ / π_i` for `‖R(1, M_λH)‖`.
    pub fn boundary_resolvent_norm(&self) -> f64 {
        let grid = &self.pg.grid;
        let n = grid.n_nodes();
        let mut best: f64 = 0.0;
        for i in 0..n {
            let mut e = alloc::vec![ZERO; n];
            e[i] = C64::new(1.0, 0.0);
            let col = self.m_h.emit_nodes(&self.lu.solve(&e));
            best = best.max(boundary_norm(grid, &col) / grid.nodes[i].weight);
        }
        1.0 + best
    }

    /// `‖Ξ_λH‖ ‖(M_λH)^n‖ ‖R(1, M_λH)‖ ‖G_λ‖ ‖f‖` with `‖G_λ‖ ≤ 1`.
    pub fn upsilon_bound(&self, f: &PhaseGridFunction, n: usize) -> Result<f64> {
        let pn = if n == 0 { 1.0 } else { self.m_h.power_norm(&self.pg.grid, n) };
        Ok(self.lift_norm()? * pn * self.boundary_resolvent_norm() * self.pg.norm(f, 0))
    }
}

/// `Υ_n(λ) f` by the tail form, after checking it against the difference
/// form (`1e-9` relative).
pub fn upsilon_n(bundle: &ResolventBundle, n: usize, f: &PhaseGridFunction) -> Result<PhaseGridFunction> {
    let tail = bundle.upsilon_tail(f, n)?;
    let diff = bundle.upsilon_difference(f, n)?;
    let gap = bundle.pg.norm(&tail.sub(&diff), 0);
    if gap > 1e-9 * bundle.pg.norm(&tail, 0) {
        return Err(Error::NoConvergence { what: "series and difference forms of Υ_n disagree" });
    }
    Ok(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tauberian::fixtures::{c, positive, rel, small};

    #[test]
    fn solved_resolvent_matches_long_series() {
        let (wall, pg) = small();
        let f = positive(&pg);
        let b = ResolventBundle::new(&wall, &pg, c(1.0, 0.0)).unwrap();
        let d = rel(&pg, &b.resolvent(&f).unwrap(), &b.series(&f, 200).unwrap());
        assert!(d < 1e-9, "{d}");
        assert!(matches!(ResolventBundle::new(&wall, &pg, ZERO), Err(Error::Singular)));
    }

    #[test]
    fn upsilon_forms_agree_and_obey_the_norm_bound() {
        let (wall, pg) = small();
        let f = positive(&pg);
        let b = ResolventBundle::new(&wall, &pg, c(0.5, 3.0)).unwrap();
        let u = upsilon_n(&b, 2, &f).unwrap();
        assert!(pg.norm(&u, 0) <= b.upsilon_bound(&f, 2).unwrap());
        let zero = PhaseGridFunction::zeros(pg.len());
        assert_eq!(pg.norm(&upsilon_n(&b, 2, &zero).unwrap(), 0), 0.0);
        // n = 0: the whole perturbation R(λ,T_H) − R(λ,T₀)
        let b1 = ResolventBundle::new(&wall, &pg, c(1.0, 0.0)).unwrap();
        let u0 = upsilon_n(&b1, 0, &f).unwrap();
        let whole = b1.resolvent(&f).unwrap().sub(&b1.free(&f).unwrap());
        assert!(rel(&pg, &u0, &whole) < 1e-12);
    }
}
