//! Boundary arrival fluxes in time, their renewal through the flight
//! kernel, and the lift back to phase space.
//!
//! A [`FluxTable`] holds `J_i(t_q)`, the mass per unit time arriving on
//! arc `i` (equivalently, re-emitted from node `i`), on a uniform time grid
//! `t_q = qΔt`, and is read as piecewise linear in `t`. Class `k ≥ 1` of
//! the Dyson–Phillips expansion is the lift of the class-`k` emission flux:
//! a particle emitted from node `i` at time `t − s` is still in flight with
//! probability `Surv_i(s)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

use crate::boundary::cell::{check_lambda, WallModel};
use crate::boundary::nodal::NodalKernel;
use crate::error::{Error, Result};
use crate::geometry::{self as geo, Vec3};
use crate::measure::{PhaseFunction, PhaseGrid, PhaseGridFunction};
use crate::numeric::fft::fft_in_place;
use crate::numeric::gauss::Rule;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `J_i(t_q)`, stored `q * n_nodes + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxTable {
    pub dt: f64,
    pub n_nodes: usize,
    pub values: Vec<f64>,
}

/// `∫_S x^j e^{−zx} (1 − |x|) dx` for the falling (`[0, 1]`) and rising
/// (`[−1, 0]`) halves of the unit hat, `j = 0..=k`.
fn half_hat_moments(z: C64, k: usize) -> (Vec<C64>, Vec<C64>) {
    let n = 16 + (4.0 * z.norm()) as usize;
    let rule = Rule::on_interval(n, 0.0, 1.0);
    let mut fall = alloc::vec![ZERO; k + 1];
    let mut rise = alloc::vec![ZERO; k + 1];
    for (x, w) in rule.iter() {
        let base = w * (1.0 - x);
        let (ef, er) = ((-z * x).exp() * base, (z * x).exp() * base);
        let mut p = 1.0;
        for j in 0..=k {
            fall[j] += ef * p;
            rise[j] += er * if j % 2 == 0 { p } else { -p };
            p *= x;
        }
    }
    (fall, rise)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl FluxTable {
    pub fn zeros(dt: f64, n_t: usize, n_nodes: usize) -> Self {
        FluxTable { dt, n_nodes, values: alloc::vec![0.0; n_t * n_nodes] }
    }

    pub fn n_t(&self) -> usize {
        self.values.len() / self.n_nodes.max(1)
    }

    /// Last time covered by the table.
    pub fn horizon(&self) -> f64 {
        (self.n_t() as f64 - 1.0) * self.dt
    }

    #[inline]
    pub fn at(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_nodes + i]
    }

    /// Piecewise-linear value; zero outside `[0, horizon]`.
    pub fn eval(&self, t: f64, i: usize) -> f64 {
        if t < 0.0 || t > self.horizon() {
            return 0.0;
        }
        let x = t / self.dt;
        let q = (x as usize).min(self.n_t().saturating_sub(2));
        let r = x - q as f64;
        self.at(q, i) * (1.0 - r) + self.at(q + 1, i) * r
    }

    pub fn add_assign(&mut self, other: &FluxTable) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    /// `∫ Σ_i |J_i| dt` (trapezoid; exact for sign-definite data).
    pub fn l1(&self) -> f64 {
        let nt = self.n_t();
        let mut s = 0.0;
        for q in 0..nt {
            let w = if q == 0 || q + 1 == nt { 0.5 } else { 1.0 };
            s += w * (0..self.n_nodes).map(|i| self.at(q, i).abs()).sum::<f64>();
        }
        s * self.dt
    }

    /// `∫ Σ_i J_i dt`.
    pub fn total(&self) -> f64 {
        let nt = self.n_t();
        let mut s = 0.0;
        for q in 0..nt {
            let w = if q == 0 || q + 1 == nt { 0.5 } else { 1.0 };
            s += w * (0..self.n_nodes).map(|i| self.at(q, i)).sum::<f64>();
        }
        s * self.dt
    }

    /// `d^k/dλ^k ∫_0^∞ e^{−λt} J_i(t) dt = ∫ (−t)^k e^{−λt} J_i(t) dt`,
    /// exact for the piecewise-linear table.
    pub fn transform(&self, lambda: C64, k: usize) -> Result<Vec<C64>> {
        check_lambda(lambda)?;
        let nt = self.n_t();
        let n = self.n_nodes;
        let dt = self.dt;
        let (fall, rise) = half_hat_moments(lambda * dt, k);
        // per node: Σ_q J_q e^{−λt_q} (−t_q)^m, split into first / interior / last hats
        let mut inner = alloc::vec![ZERO; (k + 1) * n];
        let mut ends = alloc::vec![ZERO; 2 * (k + 1) * n];
        for q in 0..nt {
            let tq = q as f64 * dt;
            let e = (-lambda * tq).exp();
            let mut p = 1.0;
            for m in 0..=k {
                let em = e * p;
                for i in 0..n {
                    let v = em * self.at(q, i);
                    if q == 0 {
                        ends[m * n + i] += v;
                    } else if q + 1 == nt {
                        ends[(k + 1) * n + m * n + i] += v;
                    } else {
                        inner[m * n + i] += v;
                    }
                }
                p *= -tq;
            }
        }
        let mut out = alloc::vec![ZERO; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for j in 0..=k {
                let c = binomial(k, j) * libm::pow(-dt, j as f64);
                let m = k - j;
                acc += (inner[m * n + i] * (fall[j] + rise[j]) + ends[m * n + i] * fall[j] + ends[(k + 1) * n + m * n + i] * rise[j]) * c;
            }
            *o = acc * dt;
        }
        Ok(out)
    }
}

/// Quadrature controls for [`first_exit_flux`].
#[derive(Clone, Copy, Debug)]
pub struct FluxQuadrature {
    pub dt: f64,
    pub n_t: usize,
    /// Gauss points per arc (per parameter direction).
    pub arc_points: usize,
    /// Direction panels (per parameter direction) and points per panel.
    pub dir_panels: usize,
    pub dir_points: usize,
    /// Speed panels and points per panel on `[0, min(ℓ/t, ρ_max)]`.
    pub speed_panels: usize,
    pub speed_points: usize,
    /// Speed beyond which `f` vanishes.
    pub rho_max: f64,
}

impl Default for FluxQuadrature {
    fn default() -> Self {
        FluxQuadrature { dt: 0.01, n_t: 1001, arc_points: 2, dir_panels: 8, dir_points: 6, speed_panels: 4, speed_points: 6, rho_max: 8.0 }
    }
}

/// `j₁(t, y) = ∫_{v·n(y)>0} f(y − tv, v) 𝟙{t < t₋(y,v)} v·n(y) dv` at a boundary point.
fn point_flux<F: PhaseFunction + ?Sized>(nk: &NodalKernel, f: &F, y: Vec3, t: f64, q: &FluxQuadrature, sbreaks: &[f64], tbreaks: &[f64]) -> f64 {
    let dom = &nk.domain;
    let n = dom.normal(y);
    let (t1, t2) = dom.tangent_frame(y);
    let d = dom.dim();
    let speed_part = |sigma: Vec3, cosa: f64| -> f64 {
        let ell = dom.chord_from(y, geo::scale(sigma, -1.0));
        let top = if t > 0.0 { (ell / t).min(q.rho_max) } else { q.rho_max };
        if top <= 0.0 {
            return 0.0;
        }
        let mut cuts: Vec<f64> = sbreaks.to_vec();
        cuts.extend(tbreaks.iter().map(|b| ell / (t + b)));
        cuts.extend((1..q.speed_panels).map(|k| top * k as f64 / q.speed_panels as f64));
        let rule = crate::measure::split_rule(0.0, top, &cuts, q.speed_points);
        let mut acc = 0.0;
        for (r, w) in rule.iter() {
            let v = geo::scale(sigma, r);
            acc += w * f.eval(geo::axpy(y, -t, v), v) * libm::pow(r, d as f64);
        }
        cosa * acc
    };
    let base = Rule::gauss_legendre(q.dir_points);
    let panels = |a: f64, b: f64| -> Rule {
        let br: Vec<f64> = (0..=q.dir_panels).map(|k| a + (b - a) * k as f64 / q.dir_panels as f64).collect();
        let mut out = Rule { nodes: Vec::new(), weights: Vec::new() };
        for w in br.windows(2) {
            out.append(&base.mapped(w[0], w[1]));
        }
        out
    };
    if d == 2 {
        panels(-PI / 2.0, PI / 2.0)
            .iter()
            .map(|(a, w)| {
                let sigma = geo::add(geo::scale(n, libm::cos(a)), geo::scale(t1, libm::sin(a)));
                w * speed_part(sigma, libm::cos(a))
            })
            .sum()
    } else {
        let rc = panels(0.0, 1.0);
        let rp = panels(0.0, 2.0 * PI);
        let mut acc = 0.0;
        for (c, wc) in rc.iter() {
            let sn = libm::sqrt((1.0 - c * c).max(0.0));
            for (p, wp) in rp.iter() {
                let tang = geo::add(geo::scale(t1, libm::cos(p)), geo::scale(t2, libm::sin(p)));
                let sigma = geo::add(geo::scale(n, c), geo::scale(tang, sn));
                acc += wc * wp * speed_part(sigma, c);
            }
        }
        acc
    }
}

/// Class-0 arrival flux `J_i(t) = ∫_{arc i} j₁(t, y) dπ(y)` of an initial
/// density `f`.
pub fn first_exit_flux<F: PhaseFunction + ?Sized>(nk: &NodalKernel, f: &F, q: &FluxQuadrature) -> Result<FluxTable> {
    if !(q.dt > 0.0) || q.n_t < 2 || q.rho_max <= 0.0 {
        return Err(Error::Parameter { what: "flux table sizes" });
    }
    let sb = f.speed_breaks();
    let tb = f.time_breaks();
    let n = nk.len();
    let pts: Vec<Vec<(Vec3, f64)>> = (0..n).map(|i| nk.arc_points(i, q.arc_points)).collect();
    let mut table = FluxTable::zeros(q.dt, q.n_t, n);
    for step in 0..q.n_t {
        let t = step as f64 * q.dt;
        for (i, arc) in pts.iter().enumerate() {
            table.values[step * n + i] = arc.iter().map(|&(y, w)| w * point_flux(nk, f, y, t, q, &sb, &tb)).sum();
        }
    }
    Ok(table)
}

/// Hat-weight discretization of the flight-time kernel between arcs.
#[derive(Clone, Debug)]
pub struct FlightKernel {
    pub dt: f64,
    pub n_lag: usize,
    n_nodes: usize,
    circulant: bool,
    /// Full and rising-half weights, `[pair][lag]` with `pair = d` (circulant)
    /// or `ip * n + i`.
    full: Vec<Vec<f64>>,
    rise: Vec<Vec<f64>>,
}

impl FlightKernel {
    pub fn new(nk: &NodalKernel, dt: f64, n_lag: usize) -> Result<Self> {
        if !(dt > 0.0) || n_lag < 2 {
            return Err(Error::Parameter { what: "flight kernel sizes" });
        }
        let n = nk.len();
        let pairs: Vec<(usize, usize)> = if nk.is_circulant() { (0..n).map(|d| (d, 0)).collect() } else { (0..n * n).map(|p| (p / n, p % n)).collect() };
        let mut full = Vec::with_capacity(pairs.len());
        let mut rise = Vec::with_capacity(pairs.len());
        for (ip, i) in pairs {
            let (l, r) = nk.half_hat_weights(ip, i, dt, n_lag);
            full.push(l.iter().zip(&r).map(|(a, b)| a + b).collect());
            rise.push(l);
        }
        Ok(FlightKernel { dt, n_lag, n_nodes: n, circulant: nk.is_circulant(), full, rise })
    }

    fn pair(&self, ip: usize, i: usize) -> usize {
        if self.circulant {
            (ip + self.n_nodes - i) % self.n_nodes
        } else {
            ip * self.n_nodes + i
        }
    }

    /// Arrivals after one more flight:
    /// `J′_{i′}(t_q) = Σ_i [Σ_{m≥1} J_i(t_m) ω_{q−m} + J_i(0) ω⁻_q]`.
    pub fn apply(&self, j: &FluxTable) -> Result<FluxTable> {
        if j.n_nodes != self.n_nodes || (j.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::GridMismatch { what: "flux table and flight kernel differ" });
        }
        let nt = j.n_t();
        let n = self.n_nodes;
        let lags = self.n_lag.min(nt);
        let len = (nt + lags).next_power_of_two();
        let spectrum = |w: &[f64]| -> Vec<C64> {
            let mut a: Vec<C64> = (0..len).map(|q| C64::new(if q < lags { w[q] } else { 0.0 }, 0.0)).collect();
            fft_in_place(&mut a, false);
            a
        };
        // source spectra: interior samples and the t = 0 sample separately
        let mut src = Vec::with_capacity(n);
        for i in 0..n {
            let mut a: Vec<C64> = (0..len).map(|q| C64::new(if q >= 1 && q < nt { j.at(q, i) } else { 0.0 }, 0.0)).collect();
            fft_in_place(&mut a, false);
            src.push(a);
        }
        let wf: Vec<Vec<C64>> = self.full.iter().map(|w| spectrum(w)).collect();
        let mut out = FluxTable::zeros(j.dt, nt, n);
        for ip in 0..n {
            let mut acc = alloc::vec![ZERO; len];
            for i in 0..n {
                let w = &wf[self.pair(ip, i)];
                for (a, (x, y)) in acc.iter_mut().zip(src[i].iter().zip(w)) {
                    *a += x * y;
                }
            }
            fft_in_place(&mut acc, true);
            for q in 0..nt {
                let mut v = acc[q].re / len as f64;
                for i in 0..n {
                    if q < lags {
                        v += j.at(0, i) * self.rise[self.pair(ip, i)][q];
                    }
                }
                out.values[q * n + ip] = v;
            }
        }
        Ok(out)
    }

    /// `Σ_{k>skip} J_k` given `J_1`, summing orders until the increment's
    /// `L¹` norm drops below `tol`. Returns the sum and the last order used.
    pub fn remainder(&self, j1: &FluxTable, skip: usize, tol: f64) -> Result<(FluxTable, usize)> {
        let mut cur = j1.clone();
        let mut sum = FluxTable::zeros(j1.dt, j1.n_t(), j1.n_nodes);
        let mut order = 1;
        loop {
            if order > skip {
                sum.add_assign(&cur);
            }
            if cur.l1() < tol {
                return Ok((sum, order));
            }
            if order >= 100_000 {
                return Err(Error::NoConvergence { what: "bounce series" });
            }
            cur = self.apply(&cur)?;
            order += 1;
        }
    }

    /// `J_k` for `k ≥ 1` from `J_1`.
    pub fn class(&self, j1: &FluxTable, k: usize) -> Result<FluxTable> {
        if k == 0 {
            return Err(Error::Parameter { what: "class flux starts at k = 1" });
        }
        let mut cur = j1.clone();
        for _ in 1..k {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

/// `Surv_i(s) = P(flight from x_i lasts longer than s)` on a uniform grid.
#[derive(Clone, Debug)]
pub struct SurvivalTable {
    pub ds: f64,
    n_s: usize,
    shared: bool,
    values: Vec<f64>,
}

impl SurvivalTable {
    pub fn new(nk: &NodalKernel, s_max: f64, ds: f64) -> Result<Self> {
        if !(ds > 0.0) || !(s_max > 0.0) {
            return Err(Error::Parameter { what: "survival table sizes" });
        }
        let n_s = libm::ceil(s_max / ds) as usize + 2;
        let shared = nk.is_circulant();
        let rows = if shared { 1 } else { nk.len() };
        let mut values = Vec::with_capacity(rows * n_s);
        for i in 0..rows {
            for m in 0..n_s {
                values.push(nk.survival(i, m as f64 * ds));
            }
        }
        Ok(SurvivalTable { ds, n_s, shared, values })
    }

    /// Last tabulated time-since-emission.
    pub fn horizon(&self) -> f64 {
        (self.n_s - 1) as f64 * self.ds
    }

    pub fn at(&self, i: usize, s: f64) -> f64 {
        let row = if self.shared { 0 } else { i };
        let x = (s / self.ds).max(0.0);
        let m = (x as usize).min(self.n_s - 2);
        let r = (x - m as f64).min(1.0);
        let v = &self.values[row * self.n_s..(row + 1) * self.n_s];
        v[m] * (1.0 - r) + v[m + 1] * r
    }
}

/// Phase-space mass and `L¹` norm of the lift
/// `Σ_i ∫_0^t J_i(t − s) Surv_i(s) ds` of an emission flux given pointwise.
///
/// `kinks` lists the spacing of kinks of `J` in its argument (the table
/// step), so panels are aligned with them.
pub fn lift<J: FnMut(f64, &mut [C64])>(mut j: J, n_nodes: usize, surv: &SurvivalTable, t: f64, step: f64, n_gl: usize) -> (C64, f64) {
    if t <= 0.0 {
        return (ZERO, 0.0);
    }
    let base = Rule::gauss_legendre(n_gl);
    // kinks of J(t − s) sit at s = t − qΔ
    let first = t - libm::floor(t / step) * step;
    let mut edges = alloc::vec![0.0];
    let mut e = first;
    while e < t - 1e-12 * step {
        if e > 1e-12 * step {
            edges.push(e);
        }
        e += step;
    }
    edges.push(t);
    let mut buf = alloc::vec![ZERO; n_nodes];
    let (mut mass, mut norm) = (ZERO, 0.0);
    for w in edges.windows(2) {
        for (s, ws) in base.mapped(w[0], w[1]).iter() {
            j(t - s, &mut buf);
            for (i, z) in buf.iter().enumerate() {
                let sv = surv.at(i, s) * ws;
                mass += z * sv;
                norm += z.norm() * sv;
            }
        }
    }
    (mass, norm)
}

/// Lift of a real flux table at time `t`.
pub fn lift_table(table: &FluxTable, surv: &SurvivalTable, t: f64) -> (f64, f64) {
    let (m, n) = lift(
        |u, out: &mut [C64]| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = C64::new(table.eval(u, i), 0.0);
            }
        },
        table.n_nodes,
        surv,
        t,
        table.dt,
        4,
    );
    (m.re, n)
}

/// Mass of the Dyson–Phillips iterate `U_k(t)f`, `k ∈ {1, 2}`, by quadrature
/// of the nested flight integrals.
pub fn dyson_class_mass(kernel: &FlightKernel, surv: &SurvivalTable, j1: &FluxTable, k: usize, t: f64) -> Result<f64> {
    if k == 0 || k > 2 {
        return Err(Error::Unsupported { what: "Dyson quadrature beyond two bounces" });
    }
    let jk = kernel.class(j1, k)?;
    Ok(lift_table(&jk, surv, t).0)
}

/// `U_k(t)f` on the phase grid from its emission flux table:
/// `𝒌(x_i, v) J_k(t − s, i) / π_i` at time-since-entry `s < t`.
pub fn dyson_iterate_on_grid(pg: &PhaseGrid, wall: &WallModel, jk: &FluxTable, t: f64) -> Result<PhaseGridFunction> {
    let grid = &pg.grid;
    if jk.n_nodes != grid.n_nodes() {
        return Err(Error::GridMismatch { what: "flux table nodes differ from the boundary grid" });
    }
    let mut values = Vec::with_capacity(pg.len());
    for c in 0..grid.n_cells() {
        let (i, _, l) = grid.cell_parts(c);
        let scale = wall.kernel(i, l) / grid.nodes[i].weight;
        for k in 0..pg.n_along() {
            let s = pg.s(c, k);
            values.push(C64::new(if s < t { scale * jk.eval(t - s, i) } else { 0.0 }, 0.0));
        }
    }
    Ok(PhaseGridFunction { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::kernel::KernelSpec;
    use crate::geometry::Domain;

    fn tri(dt: f64) -> FluxTable {
        // a tent on [0.2, 1.0] plus a nonzero t = 0 sample, 2 nodes
        let nt = (1.5 / dt) as usize + 1;
        let mut t = FluxTable::zeros(dt, nt, 2);
        for q in 0..nt {
            let x = q as f64 * dt;
            let v = if x < 0.2 || x > 1.0 { 0.0 } else { 1.0 - (x - 0.6).abs() / 0.4 };
            t.values[q * 2] = v + if q == 0 { 0.7 } else { 0.0 };
            t.values[q * 2 + 1] = -0.5 * v;
        }
        t
    }

    #[test]
    fn transform_is_exact_for_piecewise_linear() {
        let t = tri(0.05);
        for (lam, k) in [(C64::new(0.0, 0.0), 0), (C64::new(1.0, 3.0), 0), (C64::new(0.0, 7.0), 1), (C64::new(0.3, 2.0), 2)] {
            let got = t.transform(lam, k).unwrap();
            // oracle: dense Gauss quadrature of the interpolant
            let rule = Rule::composite(&(0..=30).map(|q| q as f64 * 0.05).collect::<Vec<_>>(), 12);
            for i in 0..2 {
                let want: C64 = rule.iter().map(|(x, w)| (-lam * x).exp() * libm::pow(-x, k as f64) * (w * t.eval(x, i))).sum();
                assert!((got[i] - want).norm() < 1e-12, "{lam} {k}: {} {}", got[i], want);
            }
        }
        // t = 0 transform is the total
        let z = t.transform(ZERO, 0).unwrap();
        assert!((z[0].re + z[1].re - t.total()).abs() < 1e-14);
    }

    #[test]
    fn flight_kernel_conserves_mass_and_matches_direct_sum() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 8, 4).unwrap();
        let dt = 0.05;
        let fk = FlightKernel::new(&nk, dt, 400).unwrap();
        let j = tri(dt);
        let mut j8 = FluxTable::zeros(dt, 400, 8);
        for q in 0..j.n_t() {
            j8.values[q * 8] = j.at(q, 0);
            j8.values[q * 8 + 3] = j.at(q, 1).abs();
        }
        let out = fk.apply(&j8).unwrap();
        // direct evaluation of the same discrete convolution
        let (full, rise): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..8)
            .map(|d| {
                let (l, r) = nk.half_hat_weights(d, 0, dt, 400);
                (l.iter().zip(&r).map(|(a, b)| a + b).collect(), l)
            })
            .unzip();
        for q in [0usize, 1, 7, 30, 150] {
            for ip in 0..8 {
                let mut want = 0.0;
                for i in 0..8 {
                    let d = (ip + 8 - i) % 8;
                    want += j8.at(0, i) * rise[d][q];
                    for m in 1..=q {
                        want += j8.at(m, i) * full[d][q - m];
                    }
                }
                assert!((out.at(q, ip) - want).abs() < 1e-12, "{q} {ip}");
            }
        }
        // every arrival is re-emitted and lands again: mass moves, not lost
        assert!((out.total() / j8.total() - 1.0).abs() < 2e-3, "{} {}", out.total(), j8.total());
    }

    #[test]
    fn lift_of_a_pulse_is_the_survival() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 8, 4).unwrap();
        let surv = SurvivalTable::new(&nk, 5.0, 1e-3).unwrap();
        // a unit-mass pulse of width 2Δt at time 0 on node 0
        let dt = 1e-3;
        let mut j = FluxTable::zeros(dt, 4000, 8);
        j.values[8] = 1.0 / dt;
        let t = 1.5;
        let (m, n) = lift_table(&j, &surv, t);
        assert!((m - n).abs() < 1e-15);
        assert!((m - nk.survival(0, t - dt)).abs() < 1e-5, "{m} {}", nk.survival(0, t));
        assert!(dyson_class_mass(&FlightKernel::new(&nk, dt, 10).unwrap(), &surv, &j, 3, t).is_err());
    }

    #[test]
    fn first_exit_flux_balances_free_decay() {
        let spec = KernelSpec::maxwell(2, 1.0);
        let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 8, 4).unwrap();
        let f = |_x: Vec3, v: Vec3| libm::exp(-geo::dot(v, v) / 2.0) / (2.0 * PI * PI);
        let q = FluxQuadrature { dt: 0.02, n_t: 101, ..FluxQuadrature::default() };
        let j = first_exit_flux(&nk, &f, &q).unwrap();
        // at t = 0 the outgoing flux of M₁/π is |∂Ω|/(π√(2π))
        let j0: f64 = (0..8).map(|i| j.at(0, i)).sum();
        assert!((j0 - 2.0 / libm::sqrt(2.0 * PI)).abs() < 1e-6, "{j0}");
        // class-0 mass lost by t = 2 equals the time-integrated efflux
        let vm = crate::measure::VelocityMeasure::canonical(2, 8.0, 48).unwrap();
        let g = crate::measure::BoundaryGrid::new(Domain::unit_disk(), 32, 32, vm, crate::measure::DirectionRule::Gauss).unwrap();
        let pg = PhaseGrid::new(g, 4);
        let lost = crate::transport::free_norm(&pg, &f, 0.0, 0, 8).unwrap() - crate::transport::free_norm(&pg, &f, 2.0, 0, 8).unwrap();
        assert!((j.total() / lost - 1.0).abs() < 1e-3, "{} {lost}", j.total());
    }
}
