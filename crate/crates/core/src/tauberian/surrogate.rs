//! `Ψ_n(η)` on the node-reduced surrogate.
//!
//! With the velocity integral done through the emitted speed law, the
//! boundary data of `Ψ_n(η) f = Ξ_{iη}H (M_{iη}H)^n Φ(η) f` are the node
//! masses `ĵ_{>n}(η) = K_{iη}^n (I − K_{iη})⁻¹ ĝ(η)`, where `ĝ` is the Fourier
//! transform of the first-exit flux. The phase function at time-since-emission
//! `s` is `e^{−iηs}` times the emission profile, so
//! `‖Ψ_n(η)f‖_{𝕏₀} = Σ_i |ĵ_i| E[T_i]`.
//!
//! `η`-derivatives are assembled analytically: `d^j K_{iη}/dη^j = (−i)^j K^{[j]}`
//! and `d^k ĝ/dη^k = i^k ĝ^{(k)}_λ`, combined by Leibniz's rule.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use super::zero::ZERO_MEAN_TOL;
use crate::boundary::nodal::NodalKernel;
use crate::error::{Error, Result};
use crate::numeric::gauss::Rule;
use crate::numeric::linalg::{CMatrix, Lu};
use crate::spectral::{leading_eigen, nu_prime_nodal, projector, projector_derivative, NU_PRIME_STEP};
use crate::transport::flux::FluxTable;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Half-width of the symmetric pair averaged for derivatives at `η = 0`.
pub const ZERO_DERIVATIVE_OFFSET: f64 = 1e-4;
/// `‖Ψ_n(η_max)‖` must be below this fraction of the peak.
pub const TAIL_TOL: f64 = 1e-3;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn lu_of_shifted(k: &CMatrix, extra: Option<&CMatrix>) -> Result<Lu> {
    let n = k.rows();
    CMatrix::from_fn(n, n, |i, j| (if i == j { ONE } else { ZERO }) - k[(i, j)] + extra.map_or(ZERO, |p| p[(i, j)])).lu()
}

/// `J₁ − (ρ_J / ρ_R) R`: removes the total mass of a flux table using a
/// reference table of nonzero mass (`ρ_f = 0` on the surrogate).
pub fn zero_mean_flux(j: &FluxTable, reference: &FluxTable) -> Result<FluxTable> {
    let r = reference.total();
    if r == 0.0 || j.n_nodes != reference.n_nodes || j.values.len() != reference.values.len() {
        return Err(Error::GridMismatch { what: "reference flux must match and carry mass" });
    }
    let c = j.total() / r;
    let mut out = j.clone();
    out.values.iter_mut().zip(&reference.values).for_each(|(a, b)| *a -= c * b);
    Ok(out)
}

/// The surrogate `η ↦ ĵ_{>n}(η)` with derivatives up to `order`.
pub struct NodalSurrogate<'a> {
    pub nk: &'a NodalKernel,
    pub flux: &'a FluxTable,
    pub n: usize,
    pub order: usize,
    pub nu_prime: f64,
    /// `E[T_i]` per node.
    pub mean_flight: Vec<f64>,
    zero: Vec<C64>,
}

impl<'a> NodalSurrogate<'a> {
    /// Requires a zero-mean flux (`|ρ| ≤ 1e-10 ‖J‖₁`).
    pub fn new(nk: &'a NodalKernel, flux: &'a FluxTable, n: usize, order: usize) -> Result<Self> {
        if flux.n_nodes != nk.len() {
            return Err(Error::GridMismatch { what: "flux table nodes differ from the kernel" });
        }
        let mass = flux.total();
        if mass.abs() > ZERO_MEAN_TOL * flux.l1() {
            return Err(Error::ZeroMeanRequired { mass });
        }
        let nu_prime = nu_prime_nodal(nk)?;
        let mean_flight = (0..nk.len()).map(|i| nk.mean_flight(i)).collect();
        let mut s = NodalSurrogate { nk, flux, n, order, nu_prime, mean_flight, zero: Vec::new() };
        s.zero = s.phi_zero()?;
        Ok(s)
    }

    /// `Φ(0) = (I − K₀ + P)⁻¹ ĝ(0) − [P′(0) ĝ(0) + P(0) ĝ′(0)] / ν′(0)`.
    fn phi_zero(&self) -> Result<Vec<C64>> {
        let k0 = self.nk.matrix(ZERO, 0)?;
        let p = projector(&leading_eigen(&k0, ZERO)?);
        let dp = projector_derivative(|l| self.nk.matrix(l, 0), NU_PRIME_STEP)?;
        let b = self.flux.transform(ZERO, 0)?;
        let db = self.flux.transform(ZERO, 1)?;
        let main = lu_of_shifted(&k0, Some(&p))?.solve(&b);
        let (u, v) = (dp.matvec(&b), p.matvec(&db));
        Ok((0..b.len()).map(|i| main[i] - (u[i] + v[i]) / self.nu_prime).collect())
    }

    /// `Φ^{(k)}(η)`, `k = 0..=order`, for `η ≠ 0`.
    fn phi_derivatives(&self, eta: f64, km: &[CMatrix]) -> Result<Vec<Vec<C64>>> {
        let lam = C64::new(0.0, eta);
        let lu = lu_of_shifted(&km[0], None)?;
        let mut y: Vec<Vec<C64>> = Vec::with_capacity(self.order + 1);
        for k in 0..=self.order {
            let mut rhs: Vec<C64> = self.flux.transform(lam, k)?.iter().map(|z| z * I.powu(k as u32)).collect();
            for j in 1..=k {
                let t = km[j].matvec(&y[k - j]);
                let c = binomial(k, j);
                rhs.iter_mut().zip(&t).for_each(|(r, x)| *r += x * c);
            }
            y.push(lu.solve(&rhs));
        }
        Ok(y)
    }

    /// `(−i)^j K^{[j]}_{iη}`, `j = 0..=order`.
    fn kernels(&self, eta: f64) -> Result<Vec<CMatrix>> {
        let lam = C64::new(0.0, eta);
        (0..=self.order).map(|j| Ok(self.nk.matrix(lam, j)?.scale((-I).powu(j as u32)))).collect()
    }

    /// `d^k/dη^k ĵ_{>n}(η)`, `k = 0..=order`.
    pub fn eval(&self, eta: f64) -> Result<Vec<Vec<C64>>> {
        if eta == 0.0 {
            let (a, b) = (self.eval(ZERO_DERIVATIVE_OFFSET)?, self.eval(-ZERO_DERIVATIVE_OFFSET)?);
            let mut z = self.zero.clone();
            for _ in 0..self.n {
                z = self.nk.matrix(ZERO, 0)?.matvec(&z);
            }
            let mut out = alloc::vec![z];
            for k in 1..=self.order {
                out.push(a[k].iter().zip(&b[k]).map(|(x, y)| (x + y) * 0.5).collect());
            }
            return Ok(out);
        }
        let km = self.kernels(eta)?;
        let mut z = self.phi_derivatives(eta, &km)?;
        for _ in 0..self.n {
            let mut next = Vec::with_capacity(self.order + 1);
            for k in 0..=self.order {
                let mut acc = alloc::vec![ZERO; self.nk.len()];
                for j in 0..=k {
                    let t = km[j].matvec(&z[k - j]);
                    let c = binomial(k, j);
                    acc.iter_mut().zip(&t).for_each(|(a, x)| *a += x * c);
                }
                next.push(acc);
            }
            z = next;
        }
        Ok(z)
    }

    /// `Φ(η)` itself (order 0), including the `η = 0` branch.
    pub fn phi(&self, eta: f64) -> Result<Vec<C64>> {
        if eta == 0.0 {
            return Ok(self.zero.clone());
        }
        Ok(self.phi_derivatives(eta, &self.kernels(eta)?)?.swap_remove(0))
    }

    /// `‖Ψ_n(η)‖_{𝕏₀}` of node masses.
    pub fn phase_norm(&self, nodes: &[C64]) -> f64 {
        nodes.iter().zip(&self.mean_flight).map(|(z, m)| z.norm() * m).sum()
    }
}

/// Symmetric grid: `0`, geometric from `smallest` to `1` (ratio `1 + step`),
/// then uniform `step` up to `eta_max`, mirrored.
pub fn eta_grid(eta_max: f64, smallest: f64, step: f64) -> Result<Vec<f64>> {
    if !(smallest > 0.0 && smallest < 1.0 && step > 0.0 && eta_max > 1.0) {
        return Err(Error::Parameter { what: "η grid sizes" });
    }
    let mut pos = Vec::new();
    let mut e = smallest;
    while e < 1.0 {
        pos.push(e);
        e *= 1.0 + step;
    }
    let m = libm::ceil((eta_max - 1.0) / step) as usize;
    for q in 0..=m {
        pos.push((1.0 + q as f64 * step).min(eta_max));
    }
    pos.dedup();
    let mut out: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    out.push(0.0);
    out.extend(pos);
    Ok(out)
}

/// Smallest window `W = W₀·2^k` whose tail proxy `∫_{W/2}^W ‖(M_{iη}H)^p‖ dη`
/// is below `tol` times `∫_0^W`. Returns `(W, tail, total)`.
pub fn select_eta_max(nk: &NodalKernel, p: usize, start: f64, tol: f64, max_doublings: usize) -> Result<(f64, f64, f64)> {
    if p == 0 || !(start > 0.0) {
        return Err(Error::Parameter { what: "η_max search" });
    }
    let norm = |e: f64| nk.power_norm(C64::new(0.0, e), p - 1);
    let panel = |a: f64, b: f64| -> Result<f64> {
        let mut s = 0.0;
        for (e, w) in Rule::on_interval(16, a, b).iter() {
            s += w * norm(e)?;
        }
        Ok(s)
    };
    let mut w = start;
    let mut total = panel(0.0, w)?;
    for _ in 0..=max_doublings {
        let tail = panel(w / 2.0, w)?;
        if tail <= tol * total {
            return Ok((w, tail, total));
        }
        total += panel(w, 2.0 * w)?;
        w *= 2.0;
    }
    Err(Error::EtaMaxTooSmall { suggested: w })
}

/// `Ψ_n(η)f` sampled on a symmetric grid: `values[m][k]` holds the node
/// masses of the `k`-th derivative at `eta[m]`.
#[derive(Clone, Debug)]
pub struct BoundaryFunctionSample {
    pub eta: Vec<f64>,
    pub values: Vec<Vec<Vec<C64>>>,
    pub order: usize,
    pub n: usize,
    pub zero_mean: bool,
    /// `E[T_i]`, turning node masses into `𝕏₀` norms.
    pub mean_flight: Vec<f64>,
}

impl BoundaryFunctionSample {
    /// `‖d^kΨ_n(η_m)/dη^k‖` counted on emission data only (no `s` factors).
    pub fn norm(&self, m: usize, k: usize) -> f64 {
        self.values[m][k].iter().zip(&self.mean_flight).map(|(z, t)| z.norm() * t).sum()
    }

    pub fn eta_max(&self) -> f64 {
        self.eta.last().copied().unwrap_or(0.0)
    }

    /// `max(‖Ψ(±η_max)‖) / max_η ‖Ψ(η)‖`.
    pub fn tail_ratio(&self) -> f64 {
        let peak = (0..self.eta.len()).map(|m| self.norm(m, 0)).fold(0.0, f64::max);
        let last = self.norm(self.eta.len() - 1, 0).max(self.norm(0, 0));
        last / peak
    }
}

/// Evaluates the surrogate on the nonnegative half of a symmetric grid and
/// fills the other half by Hermitian symmetry,
/// `d^kΨ(−η)/dη^k = (−1)^k conj(d^kΨ(η)/dη^k)`.
pub fn psi_n_profile(s: &NodalSurrogate, eta: &[f64]) -> Result<BoundaryFunctionSample> {
    let m = eta.len();
    if m % 2 == 0 || (0..m).any(|q| (eta[q] + eta[m - 1 - q]).abs() > 1e-14 * eta[q].abs().max(1.0)) || eta[m / 2] != 0.0 {
        return Err(Error::Parameter { what: "η grid must be symmetric with 0 in the middle" });
    }
    let mut values: Vec<Vec<Vec<C64>>> = alloc::vec![Vec::new(); m];
    for q in m / 2..m {
        values[q] = s.eval(eta[q])?;
    }
    for q in 0..m / 2 {
        let src = &values[m - 1 - q];
        values[q] = (0..=s.order)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                src[k].iter().map(|z| z.conj() * sign).collect()
            })
            .collect();
    }
    Ok(BoundaryFunctionSample { eta: eta.to_vec(), values, order: s.order, n: s.n, zero_mean: true, mean_flight: s.mean_flight.clone() })
}
