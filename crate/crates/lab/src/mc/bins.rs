//! Phase-space binning, the flight-time law of wall emissions and the
//! Laplace-weighted flight tally.

use std::f64::consts::PI;

use freestream_core::boundary::{KernelSpec, RadialLaw};
use freestream_core::geometry::{self as geo, Domain, Vec3};
use freestream_core::numeric::Rule;
use freestream_core::{Error, Result};

/// `P(|v| ≤ r)` under `M_θ` in `d ∈ {2, 3}` dimensions: the regularized
/// gamma `P(d/2, r²/2θ)`.
pub fn maxwell_speed_cdf(dim: usize, theta: f64, r: f64) -> f64 {
    let x = r * r / (2.0 * theta);
    if dim == 2 {
        1.0 - (-x).exp()
    } else {
        libm::erf(x.sqrt()) - 2.0 * (x / PI).sqrt() * (-x).exp()
    }
}

/// Speeds splitting `M_θ` in `d` dimensions into `n` equiprobable cells.
pub fn maxwell_speed_quantiles(dim: usize, theta: f64, n: usize) -> Vec<f64> {
    let cdf = |r: f64| maxwell_speed_cdf(dim, theta, r);
    (1..n)
        .map(|k| {
            let q = k as f64 / n as f64;
            let (mut a, mut b) = (0.0, 20.0 * theta.sqrt());
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if cdf(m) < q {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Coarse phase grid: equal-volume radial shells × position azimuth sectors ×
/// speed cells × velocity azimuth sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseBins {
    pub domain: Domain,
    pub n_shell: usize,
    pub n_sector: usize,
    /// Interior speed edges; `speed_edges.len() + 1` cells.
    pub speed_edges: Vec<f64>,
    pub n_dir: usize,
}

impl PhaseBins {
    /// Bins that are equiprobable under `M_θ / |Ω|`.
    pub fn equiprobable(domain: &Domain, theta: f64, n_shell: usize, n_sector: usize, n_speed: usize, n_dir: usize) -> Result<Self> {
        if n_shell == 0 || n_sector == 0 || n_speed == 0 || n_dir == 0 {
            return Err(Error::Parameter { what: "bin counts must be positive" });
        }
        Ok(PhaseBins { domain: *domain, n_shell, n_sector, speed_edges: maxwell_speed_quantiles(domain.dim(), theta, n_speed), n_dir })
    }

    pub fn len(&self) -> usize {
        self.n_shell * self.n_sector * (self.speed_edges.len() + 1) * self.n_dir
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: Vec3, v: Vec3) -> usize {
        let d = self.domain.dim() as i32;
        let r = geo::sub(x, self.domain.center);
        let rel = (geo::norm(r) / self.domain.radius).min(1.0);
        let shell = ((rel.powi(d) * self.n_shell as f64) as usize).min(self.n_shell - 1);
        let sector = ((geo::wrap_angle(r[1].atan2(r[0])) / (2.0 * PI) * self.n_sector as f64) as usize).min(self.n_sector - 1);
        let rho = geo::norm(v);
        let speed = self.speed_edges.partition_point(|&e| e <= rho);
        let dir = ((geo::wrap_angle(v[1].atan2(v[0])) / (2.0 * PI) * self.n_dir as f64) as usize).min(self.n_dir - 1);
        ((shell * self.n_sector + sector) * (self.speed_edges.len() + 1) + speed) * self.n_dir + dir
    }

    /// Bin masses of `M_θ / |Ω|` when the bins are [`Self::equiprobable`] at that θ.
    pub fn equilibrium_masses(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }
}

/// Flight time `T = ℓ/ρ` of a wall emission at constant temperature:
/// chord length `ℓ = 2R cos α` with the cosine law for `α`, speed from the
/// emitted law.
#[derive(Debug)]
pub struct FlightLaw {
    pub law: RadialLaw,
    /// `(ℓ, weight)` nodes of the chord-length law.
    pub chords: Vec<(f64, f64)>,
    log_s0: f64,
    step: f64,
    log_surv: Vec<f64>,
}

impl FlightLaw {
    const S_MIN: f64 = 1e-4;
    const S_MAX: f64 = 1e5;
    const POINTS: usize = 6000;

    pub fn new(domain: &Domain, spec: &KernelSpec) -> Result<Self> {
        spec.validate(domain)?;
        if !spec.is_constant() {
            return Err(Error::Unsupported { what: "position-independent flight law needs constant θ" });
        }
        let law = spec.radial_law(spec.theta_at(domain, domain.center));
        let three = domain.dim() == 3;
        let breaks: Vec<f64> = (0..=64).map(|k| PI / 2.0 * k as f64 / 64.0).collect();
        let chords = Rule::composite(&breaks, 8)
            .iter()
            .map(|(a, w)| (2.0 * domain.radius * a.cos(), if three { 2.0 * a.sin() * a.cos() * w } else { a.cos() * w }))
            .collect();
        let mut fl = FlightLaw { law, chords, log_s0: Self::S_MIN.ln(), step: (Self::S_MAX / Self::S_MIN).ln() / (Self::POINTS - 1) as f64, log_surv: Vec::new() };
        fl.log_surv = (0..Self::POINTS).map(|k| fl.survival_exact((fl.log_s0 + k as f64 * fl.step).exp()).max(1e-300).ln()).collect();
        Ok(fl)
    }

    /// `P(T > s)` by direct quadrature.
    pub fn survival_exact(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        self.chords.iter().map(|&(l, w)| w * self.law.cdf(l / s)).sum()
    }

    /// `P(T > s)`, log-log interpolated.
    #[inline]
    pub fn survival(&self, s: f64) -> f64 {
        if s <= Self::S_MIN {
            return self.log_surv[0].exp();
        }
        let x = (s.ln() - self.log_s0) / self.step;
        let k = (x as usize).min(Self::POINTS - 2);
        let r = x - k as f64;
        (self.log_surv[k] * (1.0 - r) + self.log_surv[k + 1] * r).exp()
    }

    /// `P(T > s, a ≤ ρ < b)`.
    pub fn joint_survival(&self, s: f64, a: f64, b: f64) -> f64 {
        self.chords
            .iter()
            .map(|&(l, w)| {
                let top = if s > 0.0 { b.min(l / s) } else { b };
                if top > a {
                    w * (self.law.cdf(top) - self.law.cdf(a))
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `E[T]`.
    pub fn mean(&self) -> f64 {
        self.chords.iter().map(|&(l, w)| w * l).sum::<f64>() * self.law.mean_inverse()
    }
}

/// Bins in (time since emission, speed) for `∫₀^T e^{−λt} U_k(t)f dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceBins {
    pub class: usize,
    pub lambda: f64,
    pub horizon: f64,
    /// Edges in time since the last emission, starting at 0.
    pub s_edges: Vec<f64>,
    /// Edges in speed, starting at 0; the last cell is open.
    pub speed_edges: Vec<f64>,
}

impl LaplaceBins {
    pub fn len(&self) -> usize {
        (self.s_edges.len() - 1) * self.speed_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `w ∫ e^{−λt} dt` over the flight `[t0, t1)` of speed `rho`, split by
    /// time since emission.
    #[inline]
    pub fn add_flight(&self, t0: f64, t1: f64, rho: f64, w: f64, out: &mut [f64]) {
        let end = t1.min(self.horizon) - t0;
        if end <= 0.0 {
            return;
        }
        let l = self.speed_edges.partition_point(|&e| e <= rho) - 1;
        let ns = self.speed_edges.len();
        let base = (-self.lambda * t0).exp() / self.lambda;
        for j in 0..self.s_edges.len() - 1 {
            let a = self.s_edges[j];
            if a >= end {
                break;
            }
            let b = self.s_edges[j + 1].min(end);
            out[j * ns + l] += w * base * ((-self.lambda * a).exp() - (-self.lambda * b).exp());
        }
    }

    /// Bin masses of `e^{−λs}`-weighted free flights after emissions of total
    /// (Laplace-transformed) mass `mass`, i.e. `Ξ_λ` applied to a wall emission.
    pub fn lifted_emission(&self, flight: &FlightLaw, mass: f64) -> Vec<f64> {
        let ns = self.speed_edges.len();
        let mut out = vec![0.0; self.len()];
        for j in 0..self.s_edges.len() - 1 {
            let (a, b) = (self.s_edges[j], self.s_edges[j + 1].min(self.horizon));
            if b <= a {
                continue;
            }
            let breaks: Vec<f64> = (0..=32).map(|k| a + (b - a) * k as f64 / 32.0).collect();
            let rule = Rule::composite(&breaks, 8);
            for l in 0..ns {
                let (c, d) = (self.speed_edges[l], self.speed_edges.get(l + 1).copied().unwrap_or(f64::INFINITY));
                out[j * ns + l] = mass * rule.integrate(|s| (-self.lambda * s).exp() * flight.joint_survival(s, c, d));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_split_maxwell_evenly() {
        let q = maxwell_speed_quantiles(2, 1.0, 4);
        for (k, r) in q.iter().enumerate() {
            assert!((1.0 - (-r * r / 2.0f64).exp() - (k + 1) as f64 / 4.0).abs() < 1e-12);
        }
        // 3-D median of the Maxwell speed (χ with 3 degrees of freedom) is 1.53817
        let q3 = maxwell_speed_quantiles(3, 1.0, 2);
        assert!((q3[0] - 1.538172).abs() < 1e-5, "{}", q3[0]);
    }

    #[test]
    fn flight_law_mean_and_tail() {
        let d = Domain::unit_disk();
        let fl = FlightLaw::new(&d, &KernelSpec::maxwell(2, 1.0)).unwrap();
        // E[T] = E[ℓ] E[1/ρ] = (π/2)·√(2/π)
        assert!((fl.mean() / (PI / 2.0).sqrt() - 1.0).abs() < 1e-8);
        let r = Rule::composite(&[0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, 1e4], 16);
        let integral = r.integrate(|s| fl.survival(s));
        assert!((integral / fl.mean() - 1.0).abs() < 1e-4, "{integral}");
        for s in [0.01, 0.7, 3.0, 55.0, 400.0] {
            assert!((fl.survival(s) / fl.survival_exact(s) - 1.0).abs() < 1e-6);
            assert!((fl.joint_survival(s, 0.0, f64::INFINITY) / fl.survival_exact(s) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_flight_tally_integrates_exponential() {
        let lb = LaplaceBins { class: 2, lambda: 1.0, horizon: 40.0, s_edges: vec![0.0, 0.5, 1.0, 100.0], speed_edges: vec![0.0, 1.0] };
        let mut out = vec![0.0; lb.len()];
        lb.add_flight(2.0, 2.8, 1.5, 1.0, &mut out);
        let e = |x: f64| (-x).exp();
        assert!((out[1] - (e(2.0) - e(2.5))).abs() < 1e-15 && (out[3] - (e(2.5) - e(2.8))).abs() < 1e-15);
        assert_eq!(out.iter().filter(|x| **x != 0.0).count(), 2);
    }

    #[test]
    fn bins_partition_phase_space() {
        let d = Domain::unit_disk();
        let b = PhaseBins::equiprobable(&d, 1.0, 2, 3, 4, 5).unwrap();
        assert_eq!(b.len(), 120);
        let mut seen = vec![false; b.len()];
        for i in 0..2000 {
            let t = i as f64 * 0.731;
            let x = [0.99 * (t * 0.37).sin().abs() * t.cos(), 0.99 * (t * 0.37).sin().abs() * t.sin(), 0.0];
            let v = [3.0 * (t * 1.3).cos() * (t * 0.11).sin(), 3.0 * (t * 1.3).sin() * (t * 0.11).sin(), 0.0];
            seen[b.index(x, v)] = true;
        }
        assert!(seen.iter().filter(|s| **s).count() > 100);
    }
}
