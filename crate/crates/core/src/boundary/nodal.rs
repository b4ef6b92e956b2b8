//! Boundary-to-boundary kernel of `M_λH` with the velocity integral done
//! exactly through the emitted speed law.
//!
//! Integrating `HM_λH` over velocities gives, in mass coordinates on
//! boundary arcs,
//!
//! `K_λ[i′][i] = ∫_{arc i′} 𝒥(x_i, y) c_d⁻¹ E_{f_i}[e^{−λ|x_i−y|/ρ}] dπ(y)`,
//!
//! with `f_i` the emitted speed density at `x_i`. Moments
//! `K^{[k]}` carry the extra factor `(|x_i−y|/ρ)^k`, i.e. the flight time to
//! the power `k`; they give the `λ`-derivatives, `d^k K_λ / dλ^k = (−1)^k K^{[k]}_λ`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

use super::kernel::{KernelSpec, RadialLaw};
use crate::error::{Error, Result};
use crate::geometry::{self as geo, Domain, Shape, Vec3};
use crate::measure::{hemisphere_flux, jacobian};
use crate::numeric::fft::fft_in_place;
use crate::numeric::gauss::Rule;
use crate::numeric::linalg::CMatrix;

/// A destination sub-point: chord length and weight `𝒥 dπ / c_d`.
#[derive(Clone, Copy, Debug)]
pub struct Hop {
    pub len: f64,
    pub weight: f64,
}

#[derive(Debug)]
pub struct NodalKernel {
    pub domain: Domain,
    pub spec: KernelSpec,
    pub nodes: Vec<Vec3>,
    /// Arc (patch) measure of each node.
    pub arc: Vec<f64>,
    /// Parameter box of each arc: `[φ₀, φ₁, ·, ·]` (disk) or `[z₀, z₁, φ₀, φ₁]` (ball).
    boxes: Vec<[f64; 4]>,
    laws: Vec<RadialLaw>,
    law_of: Vec<usize>,
    /// Constant θ on the disk: `hops[d]` for offset `d = i′ − i mod N`.
    circulant: bool,
    /// `hops[i′ * n + i]`, or `hops[d]` when circulant.
    hops: Vec<Vec<Hop>>,
}

impl NodalKernel {
    /// `n` nodes (disk: equispaced from angle 0; ball: `n/2` Gauss bands ×
    /// `n` azimuths as in [`crate::measure::BoundaryGrid`]) and `m`-point
    /// Gauss sub-rules per arc.
    pub fn new(domain: &Domain, spec: &KernelSpec, n: usize, m: usize) -> Result<Self> {
        spec.validate(domain)?;
        if n < 2 || m < 1 {
            return Err(Error::Parameter { what: "nodal kernel sizes" });
        }
        let cd = hemisphere_flux(domain.dim());
        let r = domain.radius;
        let mut nodes = Vec::new();
        let mut arc = Vec::new();
        // patch parameter boxes: (z or φ ranges)
        let mut boxes: Vec<[f64; 4]> = Vec::new();
        match domain.shape {
            Shape::Disk => {
                let h = 2.0 * PI / n as f64;
                for i in 0..n {
                    nodes.push(domain.disk_point(h * i as f64));
                    arc.push(h * r);
                    boxes.push([h * (i as f64 - 0.5), h * (i as f64 + 0.5), 0.0, 0.0]);
                }
            }
            Shape::Ball => {
                let n_pol = (n / 2).max(1);
                let rz = Rule::on_interval(n_pol, -1.0, 1.0);
                let h = 2.0 * PI / n as f64;
                let mut e = -1.0;
                for (z, w) in rz.iter() {
                    for k in 0..n {
                        nodes.push(domain.sphere_point(z, h * (k as f64 + 0.5)));
                        arc.push(w * h * r * r);
                        boxes.push([e, e + w, h * k as f64, h * (k as f64 + 1.0)]);
                    }
                    e += w;
                }
            }
        }
        let nn = nodes.len();
        let circulant = domain.shape == Shape::Disk && spec.is_constant();
        let base = Rule::gauss_legendre(m);
        let sub_points = |src: usize, dst: usize| -> Result<Vec<Hop>> {
            let x = nodes[src];
            let bx = boxes[dst];
            let mut out = Vec::new();
            let mut push = |y: Vec3, w: f64| -> Result<()> {
                let l = geo::norm(geo::sub(x, y));
                if l > 0.0 {
                    let j = jacobian(domain, y, x)?;
                    out.push(Hop { len: l, weight: j * w / cd });
                }
                Ok(())
            };
            match domain.shape {
                Shape::Disk => {
                    let phi_x = 2.0 * PI * src as f64 / nn as f64;
                    let (a, b) = (bx[0], bx[1]);
                    // unwrap the source angle into this arc's range
                    let mut ps = phi_x;
                    while ps < a - PI {
                        ps += 2.0 * PI;
                    }
                    while ps > b + PI {
                        ps -= 2.0 * PI;
                    }
                    let cuts: Vec<(f64, f64)> = if ps > a && ps < b { alloc::vec![(a, ps), (ps, b)] } else { alloc::vec![(a, b)] };
                    for (lo, hi) in cuts {
                        for (t, w) in base.mapped(lo, hi).iter() {
                            push(domain.disk_point(t), w * r)?;
                        }
                    }
                }
                Shape::Ball => {
                    let rel = geo::sub(x, domain.center);
                    let zs = rel[2] / geo::norm(rel);
                    let ps = geo::wrap_angle(libm::atan2(rel[1], rel[0]));
                    let zc: Vec<(f64, f64)> =
                        if zs > bx[0] && zs < bx[1] { alloc::vec![(bx[0], zs), (zs, bx[1])] } else { alloc::vec![(bx[0], bx[1])] };
                    let pc: Vec<(f64, f64)> =
                        if ps > bx[2] && ps < bx[3] { alloc::vec![(bx[2], ps), (ps, bx[3])] } else { alloc::vec![(bx[2], bx[3])] };
                    for &(z0, z1) in &zc {
                        for &(p0, p1) in &pc {
                            for (z, wz) in base.mapped(z0, z1).iter() {
                                for (p, wp) in base.mapped(p0, p1).iter() {
                                    push(domain.sphere_point(z, p), wz * wp * r * r)?;
                                }
                            }
                        }
                    }
                }
            }
            Ok(out)
        };
        let mut hops = Vec::new();
        if circulant {
            for d in 0..nn {
                hops.push(sub_points(0, d)?);
            }
        } else {
            for ip in 0..nn {
                for i in 0..nn {
                    hops.push(sub_points(i, ip)?);
                }
            }
        }
        let (laws, law_of) = if spec.is_constant() {
            (alloc::vec![spec.radial_law(spec.theta_max())], alloc::vec![0; nn])
        } else {
            let laws = nodes.iter().map(|&x| spec.radial_law(spec.theta_at(domain, x))).collect();
            (laws, (0..nn).collect())
        };
        Ok(NodalKernel { domain: domain.clone(), spec: spec.clone(), nodes, arc, boxes, laws, law_of, circulant, hops })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_circulant(&self) -> bool {
        self.circulant
    }

    pub fn law(&self, i: usize) -> &RadialLaw {
        &self.laws[self.law_of[i]]
    }

    /// Sub-points of the pair `(destination i′, source i)`.
    pub fn hops(&self, ip: usize, i: usize) -> &[Hop] {
        let n = self.len();
        if self.circulant {
            &self.hops[(ip + n - i) % n]
        } else {
            &self.hops[ip * n + i]
        }
    }

    /// Gauss points `(y, dπ)` covering arc `i` (`m` per parameter direction).
    pub fn arc_points(&self, i: usize, m: usize) -> Vec<(Vec3, f64)> {
        let b = self.boxes[i];
        let r = self.domain.radius;
        let base = Rule::gauss_legendre(m);
        match self.domain.shape {
            Shape::Disk => base.mapped(b[0], b[1]).iter().map(|(t, w)| (self.domain.disk_point(t), w * r)).collect(),
            Shape::Ball => {
                let mut out = Vec::with_capacity(m * m);
                for (z, wz) in base.mapped(b[0], b[1]).iter() {
                    for (p, wp) in base.mapped(b[2], b[3]).iter() {
                        out.push((self.domain.sphere_point(z, p), wz * wp * r * r));
                    }
                }
                out
            }
        }
    }

    fn entry(&self, ip: usize, i: usize, lambda: C64, k: usize) -> C64 {
        let law = self.law(i);
        self.hops(ip, i)
            .iter()
            .map(|h| law.transform(lambda * h.len, k) * (h.weight * libm::pow(h.len, k as f64)))
            .sum()
    }

    /// First column of the circulant `K^{[k]}_λ` (entry `d` is offset `d`).
    pub fn column(&self, lambda: C64, k: usize) -> Result<Vec<C64>> {
        if !self.circulant {
            return Err(Error::Unsupported { what: "column form needs a circulant kernel" });
        }
        Ok((0..self.len()).map(|d| self.entry(d, 0, lambda, k)).collect())
    }

    /// Dense `K^{[k]}_λ` in mass coordinates.
    pub fn matrix(&self, lambda: C64, k: usize) -> Result<CMatrix> {
        super::cell::check_lambda(lambda)?;
        let n = self.len();
        if self.circulant {
            let col = self.column(lambda, k)?;
            Ok(CMatrix::from_fn(n, n, |ip, i| col[(ip + n - i) % n]))
        } else {
            Ok(CMatrix::from_fn(n, n, |ip, i| self.entry(ip, i, lambda, k)))
        }
    }

    /// `‖K_λ^p‖₁` (column-sum norm in mass coordinates), `p ≥ 0`.
    pub fn power_norm(&self, lambda: C64, p: usize) -> Result<f64> {
        super::cell::check_lambda(lambda)?;
        if p == 0 {
            return Ok(1.0);
        }
        let n = self.len();
        if self.circulant && n.is_power_of_two() {
            let mut col = self.column(lambda, 0)?;
            fft_in_place(&mut col, false);
            for z in col.iter_mut() {
                *z = z.powu(p as u32);
            }
            fft_in_place(&mut col, true);
            return Ok(col.iter().map(|z| z.norm()).sum::<f64>() / n as f64);
        }
        Ok(self.matrix(lambda, 0)?.powi(p).norm_1())
    }

    /// `E[flight time from x_i] = ∫_0^∞ P(T > s) ds`.
    pub fn mean_flight(&self, i: usize) -> f64 {
        let m = self.law(i).mean_inverse();
        (0..self.len()).map(|ip| self.hops(ip, i).iter().map(|h| h.weight * h.len).sum::<f64>()).sum::<f64>() * m
    }

    /// `P(flight time from x_i > s)`.
    pub fn survival(&self, i: usize, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        let law = self.law(i);
        let n = self.len();
        (0..n).map(|ip| self.hops(ip, i).iter().map(|h| h.weight * law.cdf(h.len / s)).sum::<f64>()).sum()
    }

    /// Hat-function weights of the flight time from `x_i` to arc `i′`:
    /// `ω_q = E[Λ(T/Δt − q)]`, `q = 0..n_lag`, `Λ` the unit hat.
    pub fn hat_weights(&self, ip: usize, i: usize, dt: f64, n_lag: usize) -> Vec<f64> {
        let (left, right) = self.half_hat_weights(ip, i, dt, n_lag);
        left.iter().zip(&right).map(|(a, b)| a + b).collect()
    }

    /// The rising (`T ≤ qΔt`) and falling (`T > qΔt`) halves of
    /// [`Self::hat_weights`].
    pub fn half_hat_weights(&self, ip: usize, i: usize, dt: f64, n_lag: usize) -> (Vec<f64>, Vec<f64>) {
        let law = self.law(i);
        let mut left = alloc::vec![0.0; n_lag];
        let mut right = alloc::vec![0.0; n_lag];
        for h in self.hops(ip, i) {
            let l = h.len;
            // P(a < T ≤ b) and E[T; a < T ≤ b] from the speed tables
            let cdf_t = |t: f64| if t <= 0.0 { 0.0 } else { 1.0 - law.cdf(l / t) };
            let mom_t = |t: f64| if t <= 0.0 { 0.0 } else { l * law.inverse_tail(l / t) };
            let mut p_prev = 0.0;
            let mut m_prev = 0.0;
            for q in 0..n_lag {
                let b = (q as f64 + 1.0) * dt;
                let (p_b, m_b) = (cdf_t(b), mom_t(b));
                let (p, m) = (p_b - p_prev, m_b - m_prev);
                let a = q as f64 * dt;
                // falling half of hat q and rising half of hat q + 1 on (a, b]
                right[q] += h.weight * ((b * p - m) / dt);
                if q + 1 < n_lag {
                    left[q + 1] += h.weight * ((m - a * p) / dt);
                }
                p_prev = p_b;
                m_prev = m_b;
            }
        }
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::kernel::ThetaField;

    #[test]
    fn column_stochastic_at_zero() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 32, 6).unwrap();
        let k = nk.matrix(C64::new(0.0, 0.0), 0).unwrap();
        for i in 0..32 {
            let s: f64 = (0..32).map(|ip| k[(ip, i)].re).sum();
            assert!((s - 1.0).abs() < 1e-9, "{s}");
        }
        assert!((nk.power_norm(C64::new(0.0, 0.0), 3).unwrap() - 1.0).abs() < 1e-9);
        let spec3 = KernelSpec::maxwell(3, 1.0);
        let nk3 = NodalKernel::new(&Domain::unit_ball(), &spec3, 8, 4).unwrap();
        let k3 = nk3.matrix(C64::new(0.0, 0.0), 0).unwrap();
        for i in 0..nk3.len() {
            let s: f64 = (0..nk3.len()).map(|ip| k3[(ip, i)].re).sum();
            assert!((s - 1.0).abs() < 2e-3, "{s}");
        }
    }

    #[test]
    fn mean_flight_time_matches_cauchy_formula() {
        // E[chord] under the cosine law is π|Ω|/|∂Ω| = π/2; E[1/ρ] = √(2/π)
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 64, 6).unwrap();
        let k1 = nk.column(C64::new(0.0, 0.0), 1).unwrap();
        let mean: f64 = k1.iter().map(|z| z.re).sum();
        let want = PI / 2.0 * libm::sqrt(2.0 / PI);
        assert!((mean / want - 1.0).abs() < 1e-6, "{mean} {want}");
    }

    #[test]
    fn power_norm_fft_matches_dense() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 32, 4).unwrap();
        let lam = C64::new(0.0, 7.0);
        let fast = nk.power_norm(lam, 2).unwrap();
        let dense = nk.matrix(lam, 0).unwrap().powi(2).norm_1();
        assert!((fast - dense).abs() < 1e-12);
    }

    #[test]
    fn survival_and_hat_weights_are_consistent() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 16, 4).unwrap();
        let dt = 0.05;
        let n_lag = 4000;
        let total: f64 = (0..16).map(|ip| nk.hat_weights(ip, 0, dt, n_lag).iter().sum::<f64>()).sum();
        assert!((total - (1.0 - nk.survival(0, dt * (n_lag - 1) as f64))).abs() < 1e-3);
        assert!((nk.survival(0, 1e-9) - 1.0).abs() < 1e-6);
        // varying temperature: still stochastic
        let sp = KernelSpec {
            dim: 2,
            profile: crate::boundary::kernel::Profile::Maxwell,
            theta: ThetaField::Angular((0..16).map(|k| 1.0 + 0.5 * libm::cos(2.0 * PI * k as f64 / 16.0)).collect()),
        };
        let nv = NodalKernel::new(&Domain::unit_disk(), &sp, 16, 4).unwrap();
        let k = nv.matrix(C64::new(0.0, 0.0), 0).unwrap();
        for i in 0..16 {
            let s: f64 = (0..16).map(|ip| k[(ip, i)].re).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
