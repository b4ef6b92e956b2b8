//! Fourier inversion of a [`BoundaryFunctionSample`] back to `S_n(t)f`, and
//! the modulus of continuity of `Θ_f = d^{N}Ψ_n/dη^{N}`.
//!
//! `ĵ(η)` is read as piecewise linear between grid points and integrated
//! against `e^{iηu}` exactly (Filon), giving the emission flux
//! `J(u) = (2π)⁻¹ ∫ e^{iηu} ĵ(η) dη`; the phase function at time-since-emission
//! `s` is `J(t − s)`, lifted with the survival probability. The by-parts form
//! uses `∫ e^{iηt} Ψ dη = (i/t)^N ∫ e^{iηt} Ψ^{(N)} dη` with
//! `Ψ^{(N)} = Σ_k C(N,k) (−is)^{N−k} e^{−iηs} ĵ^{(k)}`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

use super::surrogate::{BoundaryFunctionSample, TAIL_TOL};
use crate::error::{Error, Result};
use crate::numeric::gauss::Rule;
use crate::numeric::stats::ols;
use crate::transport::flux::{FluxTable, SurvivalTable};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `(∫_0^1 e^{iθx}(1−x) dx, ∫_0^1 e^{iθx} x dx)` given `e^{iθ}`.
fn filon_pair(theta: f64, e: C64) -> (C64, C64) {
    if theta.abs() < 1.0 {
        let (mut e0, mut b) = (ZERO, ZERO);
        let mut term = C64::new(1.0, 0.0);
        for k in 0..24 {
            e0 += term / (k as f64 + 1.0);
            b += term / (k as f64 + 2.0);
            term *= I * theta / (k as f64 + 1.0);
        }
        (e0 - b, b)
    } else {
        let it = I * theta;
        let e0 = (e - 1.0) / it;
        let b = e / it + (e - 1.0) / (theta * theta);
        (e0 - b, b)
    }
}

/// Weights `c_m(u)` with `∫ e^{iηu} L(η) dη = Σ_m c_m L(η_m)` for the
/// piecewise-linear interpolant `L` on `eta`.
pub fn filon_weights(eta: &[f64], u: f64) -> Vec<C64> {
    let m = eta.len();
    let mut c = alloc::vec![ZERO; m];
    let ex: Vec<C64> = eta.iter().map(|e| C64::new(0.0, e * u).exp()).collect();
    for q in 0..m.saturating_sub(1) {
        let h = eta[q + 1] - eta[q];
        let (a, b) = filon_pair(u * h, ex[q + 1] * ex[q].conj());
        c[q] += ex[q] * a * h;
        c[q + 1] += ex[q] * b * h;
    }
    c
}

/// Controls of the lift quadrature in time-since-emission.
#[derive(Clone, Copy, Debug)]
pub struct InversionControls {
    /// Panel width (align with the flux-table step).
    pub step: f64,
    pub n_gl: usize,
    /// The by-parts form is evaluated for `t ≥ by_parts_from`.
    pub by_parts_from: f64,
}

impl Default for InversionControls {
    fn default() -> Self {
        InversionControls { step: 0.01, n_gl: 4, by_parts_from: 1.0 }
    }
}

/// `S_n(t)f` from the frequency side at one time.
#[derive(Clone, Debug)]
pub struct InversionPoint {
    pub t: f64,
    pub direct_mass: f64,
    pub direct_norm: f64,
    /// `‖by-parts‖` and `‖by-parts − direct‖`.
    pub by_parts: Option<(f64, f64)>,
    /// `‖time-domain reference‖` and `‖direct − reference‖`.
    pub reference: Option<(f64, f64)>,
    /// `‖Im S‖ / ‖Re S‖` of the direct form.
    pub imag_ratio: f64,
    /// `π⁻¹ ∫_{η_max}^∞ ‖Ψ_n(η)‖ dη` from a power-law tail fit.
    pub truncation: f64,
}

/// Power-law exponent of `‖Ψ_n‖` over `[η_max/2, η_max]` (`‖Ψ‖ ~ η^{−a}`).
pub fn tail_exponent(sample: &BoundaryFunctionSample) -> f64 {
    let top = sample.eta_max();
    let (x, y): (Vec<f64>, Vec<f64>) = (0..sample.eta.len())
        .filter(|&m| sample.eta[m] >= top / 2.0)
        .map(|m| (libm::log(sample.eta[m]), libm::log(sample.norm(m, 0).max(f64::MIN_POSITIVE))))
        .unzip();
    if x.len() < 2 {
        return 0.0;
    }
    -ols(&x, &y, &alloc::vec![1.0; x.len()]).0
}

/// `π⁻¹ ∫_{η_max}^∞ ‖Ψ_n(η)‖ dη` (both sides) for a power-law tail.
pub fn truncation_bound(sample: &BoundaryFunctionSample) -> f64 {
    let a = tail_exponent(sample);
    if a <= 1.0 {
        return f64::INFINITY;
    }
    let last = sample.norm(sample.eta.len() - 1, 0);
    last * sample.eta_max() / (a - 1.0) / PI
}

/// `S_n(t)f` for each `t`, in direct and (for `t ≥ by_parts_from`) by-parts
/// form, optionally against a time-domain emission flux `reference`.
pub fn fourier_invert(
    sample: &BoundaryFunctionSample,
    surv: &SurvivalTable,
    times: &[f64],
    ctl: &InversionControls,
    reference: Option<&FluxTable>,
) -> Result<Vec<InversionPoint>> {
    let ratio = sample.tail_ratio();
    if !(ratio <= TAIL_TOL) {
        let a = tail_exponent(sample).max(0.5);
        return Err(Error::EtaMaxTooSmall { suggested: sample.eta_max() * libm::pow(ratio / TAIL_TOL, 1.0 / a) });
    }
    let nn = sample.mean_flight.len();
    let order = sample.order;
    let truncation = truncation_bound(sample);
    let base = Rule::gauss_legendre(ctl.n_gl);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let parts = order >= 1 && t >= ctl.by_parts_from && t > 0.0;
        let (mut mass, mut norm, mut im, mut re) = (0.0, 0.0, 0.0, 0.0);
        let (mut bp_norm, mut bp_gap, mut ref_norm, mut ref_gap) = (0.0, 0.0, 0.0, 0.0);
        if t > 0.0 {
            // panel edges at s = t − qΔ so kinks of J(t − s) sit on edges
            let mut edges = alloc::vec![0.0];
            let mut e = t - libm::floor(t / ctl.step) * ctl.step;
            while e < t - 1e-12 * ctl.step {
                if e > 1e-12 * ctl.step {
                    edges.push(e);
                }
                e += ctl.step;
            }
            edges.push(t);
            let pref = if parts { (I / t).powu(order as u32) } else { ZERO };
            for w in edges.windows(2) {
                for (s, ws) in base.mapped(w[0], w[1]).iter() {
                    let u = t - s;
                    let c = filon_weights(&sample.eta, u);
                    let ks = if parts { order } else { 0 };
                    let mut jk = alloc::vec![alloc::vec![ZERO; nn]; ks + 1];
                    for (m, cm) in c.iter().enumerate() {
                        for (k, row) in jk.iter_mut().enumerate() {
                            for (acc, v) in row.iter_mut().zip(&sample.values[m][k]) {
                                *acc += cm * v;
                            }
                        }
                    }
                    let inv = 1.0 / (2.0 * PI);
                    for i in 0..nn {
                        let sv = surv.at(i, s) * ws;
                        let d = jk[0][i] * inv;
                        mass += d.re * sv;
                        norm += d.norm() * sv;
                        im += d.im.abs() * sv;
                        re += d.re.abs() * sv;
                        if parts {
                            let mut b = ZERO;
                            for k in 0..=order {
                                b += (-I * s).powu((order - k) as u32) * jk[k][i] * binomial(order, k);
                            }
                            b *= pref * inv;
                            bp_norm += b.norm() * sv;
                            bp_gap += (b - d).norm() * sv;
                        }
                        if let Some(r) = reference {
                            let x = r.eval(u, i);
                            ref_norm += x.abs() * sv;
                            ref_gap += (d.re - x).abs() * sv;
                        }
                    }
                }
            }
        }
        out.push(InversionPoint {
            t,
            direct_mass: mass,
            direct_norm: norm,
            by_parts: if parts { Some((bp_norm, bp_gap)) } else { None },
            reference: reference.map(|_| (ref_norm, ref_gap)),
            imag_ratio: if re > 0.0 { im / re } else { 0.0 },
            truncation,
        });
    }
    Ok(out)
}

/// Empirical modulus of continuity of `Θ_f(η) = d^NΨ_n(η)f/dη^N` in `𝕏₀`:
/// `ω(s) = max{‖Θ(η_a) − Θ(η_b)‖ : |η_a − η_b| ≤ s}` over every `stride`-th
/// grid point, the norm integrated over time-since-emission `[0, s_max]`.
pub fn theta_modulus(sample: &BoundaryFunctionSample, surv: &SurvivalTable, s_list: &[f64], stride: usize, s_max: f64) -> Vec<f64> {
    let nn = sample.mean_flight.len();
    let order = sample.order;
    let top = s_list.iter().copied().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..sample.eta.len()).step_by(stride.max(1)).collect();
    let breaks: Vec<f64> = (0..=64).map(|q| s_max * libm::pow(q as f64 / 64.0, 2.0)).collect();
    let rule = Rule::composite(&breaks, 4);
    let pts: Vec<(f64, f64)> = rule.iter().collect();
    // Θ at every kept grid point and quadrature node, weighted by Surv
    let theta = |m: usize| -> Vec<C64> {
        let mut v = Vec::with_capacity(pts.len() * nn);
        for &(s, _) in &pts {
            let ph = C64::new(0.0, -sample.eta[m] * s).exp();
            for i in 0..nn {
                let mut z = ZERO;
                for k in 0..=order {
                    z += (-I * s).powu((order - k) as u32) * sample.values[m][k][i] * binomial(order, k);
                }
                v.push(z * ph);
            }
        }
        v
    };
    let cache: Vec<Vec<C64>> = idx.iter().map(|&m| theta(m)).collect();
    let weights: Vec<f64> = pts.iter().flat_map(|&(s, w)| (0..nn).map(move |i| (s, w, i))).map(|(s, w, i)| w * surv.at(i, s)).collect();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let d = sample.eta[idx[b]] - sample.eta[idx[a]];
            if d > top {
                break;
            }
            let diff: f64 = cache[a].iter().zip(&cache[b]).zip(&weights).map(|((x, y), w)| (x - y).norm() * w).sum();
            pairs.push((d, diff));
        }
    }
    s_list.iter().map(|&s| pairs.iter().filter(|(d, _)| *d <= s).map(|(_, v)| *v).fold(0.0, f64::max)).collect()
}

/// Time-domain surrogate: `Σ_{k>n} J_k` by repeated application of the
/// flight kernel to the first-exit flux.
pub fn time_domain_remainder(kernel: &crate::transport::flux::FlightKernel, j1: &FluxTable, n: usize) -> Result<FluxTable> {
    Ok(kernel.remainder(j1, n, 1e-14 * j1.l1().max(f64::MIN_POSITIVE))?.0)
}
