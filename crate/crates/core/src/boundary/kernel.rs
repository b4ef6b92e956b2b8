//! Diffuse boundary kernels and the radial laws they induce.
//!
//! A kernel is `𝒌(x, v, v') = G(x, |v|) / γ(x)` with `G` either the wall
//! Maxwellian `M_θ(x)` or a speed-weighted variant `|v|^p M_θ(x)`. Emitted
//! particles then have speed density `f(ρ) ∝ ρ^{d+p} e^{-ρ²/2θ}` and cosine-law
//! directions.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{self as geo, Domain, Shape, Vec3};
use crate::measure::hemisphere_flux;
use crate::numeric::gauss::{geometric_breaks, legendre_values, Rule};

/// Radial shape of `G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `G = M_θ`.
    Maxwell,
    /// `G ∝ |v|^p M_θ`, `p ≥ 0`.
    SpeedWeighted { power: f64 },
}

/// Wall temperature.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaField {
    Constant(f64),
    /// Samples at equispaced polar angles `2πk/n` of the disk, interpolated linearly.
    Angular(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub dim: usize,
    pub profile: Profile,
    pub theta: ThetaField,
}

impl KernelSpec {
    pub fn maxwell(dim: usize, theta: f64) -> Self {
        KernelSpec { dim, profile: Profile::Maxwell, theta: ThetaField::Constant(theta) }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if self.dim != domain.dim() {
            return Err(Error::Parameter { what: "kernel dimension" });
        }
        if let Profile::SpeedWeighted { power } = self.profile {
            if !(power >= 0.0) {
                return Err(Error::Parameter { what: "profile power must be nonnegative" });
            }
        }
        match &self.theta {
            ThetaField::Constant(t) if !(*t > 0.0) => Err(Error::Parameter { what: "temperature must be positive" }),
            ThetaField::Angular(v) if domain.shape != Shape::Disk => {
                let _ = v;
                Err(Error::Unsupported { what: "angular temperature fields need the disk" })
            }
            ThetaField::Angular(v) if v.is_empty() || v.iter().any(|t| !(*t > 0.0)) => {
                Err(Error::Parameter { what: "temperature samples must be positive" })
            }
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.theta, ThetaField::Constant(_))
    }

    /// θ at a boundary point.
    pub fn theta_at(&self, domain: &Domain, x: Vec3) -> f64 {
        match &self.theta {
            ThetaField::Constant(t) => *t,
            ThetaField::Angular(s) => {
                let n = s.len();
                let phi = geo::wrap_angle(libm::atan2(x[1] - domain.center[1], x[0] - domain.center[0]));
                let u = phi / (2.0 * PI) * n as f64;
                let k = (u as usize).min(n - 1);
                let w = u - k as f64;
                s[k] * (1.0 - w) + s[(k + 1) % n] * w
            }
        }
    }

    pub fn theta_max(&self) -> f64 {
        match &self.theta {
            ThetaField::Constant(t) => *t,
            ThetaField::Angular(s) => s.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Default speed cutoff `8 √θ_max`.
    pub fn default_rho_max(&self) -> f64 {
        8.0 * libm::sqrt(self.theta_max())
    }

    fn power(&self) -> f64 {
        match self.profile {
            Profile::Maxwell => 0.0,
            Profile::SpeedWeighted { power } => power,
        }
    }

    /// `G(x, v)` as a function of `θ(x)` and `|v|`.
    pub fn g(&self, theta: f64, rho: f64) -> f64 {
        let m = libm::pow(2.0 * PI * theta, -(self.dim as f64) / 2.0) * libm::exp(-rho * rho / (2.0 * theta));
        match self.profile {
            Profile::Maxwell => m,
            Profile::SpeedWeighted { power } => libm::pow(rho, power) * m,
        }
    }

    /// `γ = ∫_{Γ₋(x)} G |v·n| dv = c_d ∫₀^∞ ρ^d G dρ` in closed form.
    pub fn gamma(&self, theta: f64) -> f64 {
        let a = (self.dim as f64 + self.power() + 1.0) / 2.0;
        hemisphere_flux(self.dim) * libm::pow(2.0 * PI * theta, -(self.dim as f64) / 2.0) * 0.5 * libm::pow(2.0 * theta, a) * libm::tgamma(a)
    }

    /// Speed density of emitted particles, `c_d ρ^d G(ρ) / γ`.
    pub fn flux_speed_density(&self, theta: f64, rho: f64) -> f64 {
        hemisphere_flux(self.dim) * libm::pow(rho, self.dim as f64) * self.g(theta, rho) / self.gamma(theta)
    }

    /// Exponent `d + p` of the emitted speed density at `ρ → 0`.
    pub fn small_speed_exponent(&self) -> f64 {
        self.dim as f64 + self.power()
    }

    pub fn radial_law(&self, theta: f64) -> RadialLaw {
        RadialLaw::new(self, theta)
    }
}

const PANEL_POINTS: usize = 12;
const MAX_MOMENT: usize = 3;
const FILON_SWITCH: f64 = 8.0;

struct UPanel {
    a: f64,
    h: f64,
    nodes: [f64; PANEL_POINTS],
    /// Gauss weights times amplitude times `u^k`, per moment `k`.
    wamp: [[f64; PANEL_POINTS]; MAX_MOMENT + 1],
    /// Legendre coefficients of amplitude times `u^k` on `[-1, 1]`.
    coef: [[f64; PANEL_POINTS]; MAX_MOMENT + 1],
}

/// Speed law of emitted particles at one wall temperature, with its
/// Laplace-type transforms `E[ρ^{-k} e^{-z/ρ}]` and cumulative tables.
pub struct RadialLaw {
    pub theta: f64,
    pub exponent: f64,
    spec: KernelSpec,
    norm: f64,
    panels: Vec<UPanel>,
    /// Geometric speed grid for the cumulative tables.
    grid: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    /// `∫_ρ^∞ f(r)/r dr`.
    inv_tail: Vec<f64>,
    mean_inv: f64,
}

impl core::fmt::Debug for RadialLaw {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RadialLaw").field("theta", &self.theta).field("panels", &self.panels.len()).finish()
    }
}

impl RadialLaw {
    pub fn new(spec: &KernelSpec, theta: f64) -> Self {
        let dens = |r: f64| spec.flux_speed_density(theta, r);
        let st = libm::sqrt(theta);
        let a = (spec.small_speed_exponent() + 1.0) / 2.0;
        let rho_cut = libm::sqrt(2.0 * theta) * (libm::sqrt(a) + 7.5);
        let u_lo = 1.0 / rho_cut;
        let u_hi = 1e10 / st;
        let base = Rule::gauss_legendre(PANEL_POINTS);
        let mut panels = Vec::new();
        let mut pv = [0.0; PANEL_POINTS];
        for w in geometric_breaks(u_lo, u_hi, 1.5).windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let h = 0.5 * (hi - lo);
            let c = 0.5 * (hi + lo);
            let mut nodes = [0.0; PANEL_POINTS];
            let mut wamp = [[0.0; PANEL_POINTS]; MAX_MOMENT + 1];
            let mut coef = [[0.0; PANEL_POINTS]; MAX_MOMENT + 1];
            for q in 0..PANEL_POINTS {
                let x = base.nodes[q];
                let u = c + h * x;
                nodes[q] = u;
                let amp = dens(1.0 / u) / (u * u);
                legendre_values(PANEL_POINTS, x, &mut pv);
                let mut uk = 1.0;
                for k in 0..=MAX_MOMENT {
                    let val = amp * uk;
                    wamp[k][q] = base.weights[q] * h * val;
                    for m in 0..PANEL_POINTS {
                        coef[k][m] += (2.0 * m as f64 + 1.0) / 2.0 * base.weights[q] * val * pv[m];
                    }
                    uk *= u;
                }
            }
            panels.push(UPanel { a: lo, h, nodes, wamp, coef });
        }
        // cumulative tables on a geometric speed grid, Gauss–integrated cell by cell
        let mut grid = alloc::vec![0.0];
        let mut r = 1e-7 * st;
        while r < rho_cut {
            grid.push(r);
            r *= 1.01;
        }
        grid.push(rho_cut);
        let density: Vec<f64> = grid.iter().map(|&r| dens(r)).collect();
        let g8 = Rule::gauss_legendre(8);
        let mut cdf = alloc::vec![0.0; grid.len()];
        let mut inc_inv = alloc::vec![0.0; grid.len()];
        for k in 1..grid.len() {
            let cell = g8.mapped(grid[k - 1], grid[k]);
            cdf[k] = cdf[k - 1] + cell.integrate(dens);
            inc_inv[k] = inc_inv[k - 1] + cell.integrate(|x| dens(x) / x);
        }
        let total = cdf[grid.len() - 1];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let mean_inv = inc_inv[grid.len() - 1] / total;
        let inv_tail: Vec<f64> = inc_inv.iter().map(|&s| mean_inv - s / total).collect();
        let density = density.iter().map(|d| d / total).collect();
        RadialLaw {
            theta,
            exponent: spec.small_speed_exponent(),
            spec: spec.clone(),
            norm: total,
            panels,
            grid,
            density,
            cdf,
            inv_tail,
            mean_inv,
        }
    }

    /// `E[ρ^{-k} e^{-z/ρ}]` for `Re z ≥ 0`, `k ≤ 3`.
    pub fn transform(&self, z: C64, k: usize) -> C64 {
        assert!(k <= MAX_MOMENT, "moment order too high");
        let mut acc = C64::new(0.0, 0.0);
        let mut kk = [C64::new(0.0, 0.0); PANEL_POINTS];
        for p in &self.panels {
            if z.re * p.a > 745.0 {
                break;
            }
            let s = z * p.h;
            if s.norm() < FILON_SWITCH {
                for q in 0..PANEL_POINTS {
                    acc += (-z * p.nodes[q]).exp() * p.wamp[k][q];
                }
            } else {
                let e2 = (-2.0 * s).exp();
                kk[0] = (1.0 - e2) / s;
                kk[1] = (-(1.0 + e2) + kk[0]) / s;
                for m in 1..PANEL_POINTS - 1 {
                    kk[m + 1] = kk[m - 1] + kk[m] * (2.0 * m as f64 + 1.0) / s;
                }
                let sum: C64 = (0..PANEL_POINTS).map(|m| kk[m] * p.coef[k][m]).sum();
                acc += (-z * p.a).exp() * p.h * sum;
            }
        }
        acc
    }

    fn interp(&self, table: &[f64], deriv: impl Fn(usize) -> f64, rho: f64) -> f64 {
        let n = self.grid.len();
        if rho >= self.grid[n - 1] {
            return table[n - 1];
        }
        let k = match self.grid.binary_search_by(|g| g.partial_cmp(&rho).unwrap()) {
            Ok(k) => return table[k],
            Err(k) => k,
        };
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let h = x1 - x0;
        let t = (rho - x0) / h;
        let (y0, y1) = (table[k - 1], table[k]);
        let (d0, d1) = (deriv(k - 1) * h, deriv(k) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
    }

    /// Emitted speed density (normalized).
    pub fn density(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.spec.flux_speed_density(self.theta, rho) / self.norm
    }

    /// `P(ρ ≤ r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.grid[1] {
            // power-law head
            return self.cdf[1] * libm::pow(r / self.grid[1], self.exponent + 1.0);
        }
        self.interp(&self.cdf, |k| self.density[k], r).clamp(0.0, 1.0)
    }

    /// `E[ρ^{-1}; ρ ≥ r]`.
    pub fn inverse_tail(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.mean_inv;
        }
        if r < self.grid[1] {
            let head = self.mean_inv - self.inv_tail[1];
            return self.mean_inv - head * libm::pow(r / self.grid[1], self.exponent);
        }
        self.interp(&self.inv_tail, |k| -self.density[k] / self.grid[k], r).max(0.0)
    }

    /// `E[ρ^{-1}]`.
    pub fn mean_inverse(&self) -> f64 {
        self.mean_inv
    }

    /// Largest speed carrying mass above double precision.
    pub fn speed_cut(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_closed_form() {
        let s = KernelSpec::maxwell(2, 1.0);
        assert!((s.gamma(1.0) - 1.0 / libm::sqrt(2.0 * PI)).abs() < 1e-15);
        let r = Rule::composite(&geometric_breaks(1e-6, 12.0, 1.5), 12);
        let num = 2.0 * r.integrate(|p| p * p * s.g(1.0, p));
        assert!((num / s.gamma(1.0) - 1.0).abs() < 1e-12);
        let s3 = KernelSpec { dim: 3, profile: Profile::SpeedWeighted { power: 1.0 }, theta: ThetaField::Constant(2.0) };
        let num = PI * r.integrate(|p| p * p * p * s3.g(2.0, p));
        assert!((num / s3.gamma(2.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn transform_matches_direct_quadrature() {
        let s = KernelSpec::maxwell(2, 1.0);
        let law = s.radial_law(1.0);
        // z = 0: E[1] = 1, E[1/ρ] = √(2/π), E[ρ^{-2}] = 1 for the law ∝ ρ² e^{-ρ²/2}
        let zero = C64::new(0.0, 0.0);
        assert!((law.transform(zero, 0).re - 1.0).abs() < 1e-12);
        assert!((law.transform(zero, 1).re - libm::sqrt(2.0 / PI)).abs() < 1e-12);
        assert!((law.transform(zero, 2).re - 1.0).abs() < 1e-9);
        // z ≠ 0: brute force in u = 1/ρ with panels shorter than the oscillation
        for &(re, im) in &[(1.0, 0.0), (0.3, 2.0), (0.0, 5.0), (0.0, -3.0)] {
            let z = C64::new(re, im);
            let mut breaks = geometric_breaks(1.0 / 12.0, 1.0, 1.2);
            let step = 0.5 / z.norm();
            let mut u = 1.0;
            while u < 1e4 {
                u += step.min(0.2 * u);
                breaks.push(u);
            }
            let r = Rule::composite(&breaks, 8);
            for k in 0..=2 {
                let direct: C64 = r
                    .iter()
                    .map(|(u, w)| (-z * u).exp() * libm::pow(u, k as f64 - 2.0) * s.flux_speed_density(1.0, 1.0 / u) * w)
                    .sum();
                let got = law.transform(z, k);
                // the brute force drops u > 1e4, which is O(1e-8/|z|) for k = 2
                let tol = if k == 2 { 5e-9 } else { 1e-10 };
                assert!((got - direct).norm() < tol, "z={z} k={k} got={got} direct={direct}");
            }
        }
    }

    #[test]
    fn oscillatory_transform_stays_small() {
        let law = KernelSpec::maxwell(2, 1.0).radial_law(1.0);
        let v = law.transform(C64::new(0.0, 400.0), 0).norm();
        assert!(v < 1e-9, "{v}");
    }

    #[test]
    fn cumulative_tables() {
        let s = KernelSpec::maxwell(2, 1.0);
        let law = s.radial_law(1.0);
        // speed law ∝ ρ² e^{-ρ²/2}: P(ρ ≤ r) = erf(r/√2) − √(2/π) r e^{-r²/2}
        for &r in &[0.01, 0.3, 1.0, 2.5, 5.0] {
            let exact = libm::erf(r / libm::sqrt(2.0)) - libm::sqrt(2.0 / PI) * r * libm::exp(-r * r / 2.0);
            assert!((law.cdf(r) - exact).abs() < 1e-10, "r={r}");
            // E[1/ρ; ρ ≥ r] = √(2/π) e^{-r²/2}
            let t = libm::sqrt(2.0 / PI) * libm::exp(-r * r / 2.0);
            assert!((law.inverse_tail(r) - t).abs() < 1e-10, "r={r}");
        }
    }
}
