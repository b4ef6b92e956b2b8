//! Initial data and diffuse wall emission.

use std::f64::consts::PI;

use freestream_core::boundary::{KernelSpec, Profile, RadialLaw};
use freestream_core::geometry::{self as geo, Domain, Vec3};
use freestream_core::measure::PhaseFunction;
use freestream_core::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

use super::bins::maxwell_speed_cdf;

/// One weighted particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub x: Vec3,
    pub v: Vec3,
    pub weight: f64,
}

/// Initial phase-space density, normalized to unit mass except for custom
/// data, which keeps its (possibly signed) weights.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `Ψ_H = M_θ / |Ω|` (constant wall temperature only).
    Equilibrium,
    /// Uniform positions, `M₁` restricted to `lo ≤ |v| ≤ hi`.
    UniformMaxwell { lo: f64, hi: f64 },
    /// Positions uniform in the shell `inner·R ≤ |x − c| ≤ outer·R`, `M₁` velocities.
    Ring { inner: f64, outer: f64 },
    /// Explicit particles; MC particle `i` copies entry `i mod len`.
    Custom(Vec<Particle>),
}

impl InitialData {
    pub fn validate(&self, spec: &KernelSpec) -> Result<()> {
        match self {
            InitialData::Equilibrium if !spec.is_constant() => Err(Error::Unsupported { what: "sampled equilibrium needs a constant wall temperature" }),
            InitialData::UniformMaxwell { lo, hi } if !(*lo >= 0.0 && hi > lo) => Err(Error::Parameter { what: "speed window" }),
            InitialData::Ring { inner, outer } if !(*inner >= 0.0 && outer > inner && *outer <= 1.0) => Err(Error::Parameter { what: "ring radii" }),
            InitialData::Custom(p) if p.is_empty() => Err(Error::Parameter { what: "empty particle list" }),
            _ => Ok(()),
        }
    }

    /// Total mass `ρ_f` carried by an ensemble of `n` particles.
    pub fn mass(&self, n: u64) -> f64 {
        match self {
            InitialData::Custom(p) => (0..n).map(|i| p[(i % p.len() as u64) as usize].weight).sum::<f64>() * p.len() as f64 / n as f64,
            _ => 1.0,
        }
    }

    pub fn sample<R: Rng>(&self, domain: &Domain, spec: &KernelSpec, index: u64, n: u64, rng: &mut R) -> Particle {
        let d = domain.dim();
        let w = 1.0 / n as f64;
        match self {
            InitialData::Equilibrium => {
                let theta = spec.theta_at(domain, domain.center);
                Particle { x: uniform_in_ball(domain, 0.0, 1.0, rng), v: gaussian(d, theta, rng), weight: w }
            }
            InitialData::UniformMaxwell { lo, hi } => Particle { x: uniform_in_ball(domain, 0.0, 1.0, rng), v: shell_gaussian(d, *lo, *hi, rng), weight: w },
            InitialData::Ring { inner, outer } => Particle { x: uniform_in_ball(domain, *inner, *outer, rng), v: gaussian(d, 1.0, rng), weight: w },
            InitialData::Custom(p) => {
                let q = p[(index % p.len() as u64) as usize];
                Particle { weight: q.weight * p.len() as f64 * w, ..q }
            }
        }
    }

    /// The sampled density as a phase function, for deterministic
    /// quadrature of the same initial data (not available for custom particles).
    pub fn density(&self, domain: &Domain, spec: &KernelSpec) -> Option<InitialDensity> {
        let d = domain.dim();
        let ball = |a: f64, b: f64| domain.volume() * (b.powi(d as i32) - a.powi(d as i32));
        let (theta, speed, shell, mass) = match self {
            InitialData::Equilibrium => (spec.theta_at(domain, domain.center), (0.0, f64::INFINITY), (0.0, 1.0), 1.0),
            InitialData::UniformMaxwell { lo, hi } => (1.0, (*lo, *hi), (0.0, 1.0), maxwell_speed_cdf(d, 1.0, *hi) - maxwell_speed_cdf(d, 1.0, *lo)),
            InitialData::Ring { inner, outer } => (1.0, (0.0, f64::INFINITY), (*inner, *outer), 1.0),
            InitialData::Custom(_) => return None,
        };
        Some(InitialDensity { domain: *domain, theta, speed, shell, scale: 1.0 / (ball(shell.0, shell.1) * mass) })
    }
}

/// `𝟙{shell}(x) 𝟙{speed window}(v) M_θ(v)`, normalized to unit mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDensity {
    domain: Domain,
    theta: f64,
    speed: (f64, f64),
    shell: (f64, f64),
    scale: f64,
}

impl PhaseFunction for InitialDensity {
    fn eval(&self, x: Vec3, v: Vec3) -> f64 {
        let r = geo::norm(geo::sub(x, self.domain.center)) / self.domain.radius;
        let s = geo::norm(v);
        if r < self.shell.0 || r > self.shell.1 || s < self.speed.0 || s > self.speed.1 {
            return 0.0;
        }
        let d = self.domain.dim() as f64;
        self.scale * (2.0 * PI * self.theta).powf(-d / 2.0) * (-s * s / (2.0 * self.theta)).exp()
    }

    fn speed_breaks(&self) -> Vec<f64> {
        [self.speed.0, self.speed.1].into_iter().filter(|b| *b > 0.0 && b.is_finite()).collect()
    }
}

fn gaussian<R: Rng>(dim: usize, theta: f64, rng: &mut R) -> Vec3 {
    let s = theta.sqrt();
    let mut v = [0.0; 3];
    for c in v.iter_mut().take(dim) {
        *c = s * rng.sample::<f64, _>(StandardNormal);
    }
    v
}

/// `M₁` conditioned on `lo ≤ |v| ≤ hi`, by rejection.
fn shell_gaussian<R: Rng>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> Vec3 {
    loop {
        let v = gaussian(dim, 1.0, rng);
        let r = geo::norm(v);
        if r >= lo && r <= hi {
            return v;
        }
    }
}

/// Uniform point with `a·R ≤ |x − c| ≤ b·R`.
fn uniform_in_ball<R: Rng>(domain: &Domain, a: f64, b: f64, rng: &mut R) -> Vec3 {
    let d = domain.dim();
    loop {
        let mut u = [0.0; 3];
        for c in u.iter_mut().take(d) {
            *c = rng.random_range(-1.0..1.0);
        }
        let r = geo::norm(u);
        if r <= b && r >= a {
            return geo::axpy(domain.center, domain.radius, u);
        }
    }
}

/// Inverse CDF of the emitted speed law at `θ = 1` on a uniform probability grid.
#[derive(Clone, Debug)]
struct InverseSpeed {
    table: Vec<f64>,
}

impl InverseSpeed {
    const SIZE: usize = 8192;

    fn new(law: &RadialLaw) -> Self {
        let top = law.speed_cut();
        let table = (0..=Self::SIZE)
            .map(|k| {
                let u = k as f64 / Self::SIZE as f64;
                let (mut a, mut b) = (0.0, top);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if law.cdf(m) < u {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect();
        InverseSpeed { table }
    }

    fn at(&self, u: f64) -> f64 {
        let x = u * Self::SIZE as f64;
        let k = (x as usize).min(Self::SIZE - 1);
        let r = x - k as f64;
        self.table[k] * (1.0 - r) + self.table[k + 1] * r
    }
}

/// Samples the incoming velocity law `𝒌(y, v)|v·n(y)|` at a wall point.
#[derive(Clone, Debug)]
pub struct WallSampler {
    domain: Domain,
    spec: KernelSpec,
    inverse: Option<InverseSpeed>,
}

impl WallSampler {
    pub fn new(domain: &Domain, spec: &KernelSpec) -> Result<Self> {
        spec.validate(domain)?;
        let inverse = match spec.profile {
            Profile::Maxwell => None,
            Profile::SpeedWeighted { .. } => Some(InverseSpeed::new(&spec.radial_law(1.0))),
        };
        Ok(WallSampler { domain: *domain, spec: spec.clone(), inverse })
    }

    /// An inward velocity at the boundary point `y`.
    pub fn emit<R: Rng>(&self, y: Vec3, rng: &mut R) -> Vec3 {
        let theta = self.spec.theta_at(&self.domain, y);
        let s = theta.sqrt();
        let n = self.domain.normal(y);
        let (t1, t2) = self.domain.tangent_frame(y);
        let three = self.domain.dim() == 3;
        match &self.inverse {
            None => {
                // Rayleigh normal component, Gaussian tangential components
                let vn = loop {
                    let u: f64 = rng.random();
                    let r = s * (-2.0 * (1.0 - u).ln()).sqrt();
                    if r > 0.0 {
                        break r;
                    }
                };
                let mut v = geo::axpy(geo::scale(n, -vn), s * rng.sample::<f64, _>(StandardNormal), t1);
                if three {
                    v = geo::axpy(v, s * rng.sample::<f64, _>(StandardNormal), t2);
                }
                v
            }
            Some(inv) => {
                let rho = loop {
                    let r = s * inv.at(rng.random());
                    if r > 0.0 {
                        break r;
                    }
                };
                // cosine law: sin α uniform on (−1, 1) in 2-D, cos²α uniform in 3-D
                let (c, sin_part) = if three {
                    let c = rng.random::<f64>().sqrt();
                    let phi = 2.0 * PI * rng.random::<f64>();
                    let st = (1.0 - c * c).max(0.0).sqrt();
                    (c, geo::axpy(geo::scale(t1, st * phi.cos()), st * phi.sin(), t2))
                } else {
                    let sa: f64 = rng.random_range(-1.0..1.0);
                    ((1.0 - sa * sa).max(0.0).sqrt(), geo::scale(t1, sa))
                };
                geo::scale(geo::axpy(sin_part, -c, n), rho)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maxwell_emission_moments() {
        // flux-weighted M₁ in 2-D: E[v_n] = √(π/2), E[v_t²] = 1, E[|v|²] = 3
        let d = Domain::unit_disk();
        let w = WallSampler::new(&d, &KernelSpec::maxwell(2, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = d.disk_point(0.7);
        let n = d.normal(y);
        let m = 400_000;
        let (mut vn, mut v2) = (0.0, 0.0);
        for _ in 0..m {
            let v = w.emit(y, &mut rng);
            assert!(geo::dot(v, n) < 0.0);
            vn -= geo::dot(v, n);
            v2 += geo::dot(v, v);
        }
        assert!((vn / m as f64 / (PI / 2.0).sqrt() - 1.0).abs() < 5e-3);
        assert!((v2 / m as f64 / 3.0 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn tabulated_emission_matches_radial_law() {
        let spec = KernelSpec { dim: 2, profile: Profile::SpeedWeighted { power: 1.0 }, theta: freestream_core::boundary::ThetaField::Constant(1.0) };
        let d = Domain::unit_disk();
        let w = WallSampler::new(&d, &spec).unwrap();
        let law = spec.radial_law(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 200_000;
        let below = (0..m).filter(|_| geo::norm(w.emit(d.disk_point(1.0), &mut rng)) < 1.5).count();
        assert!((below as f64 / m as f64 - law.cdf(1.5)).abs() < 5e-3);
    }

    #[test]
    fn initial_samplers_respect_supports() {
        let d = Domain::unit_disk();
        let spec = KernelSpec::maxwell(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for init in [InitialData::UniformMaxwell { lo: 0.5, hi: 1.5 }, InitialData::Ring { inner: 0.5, outer: 0.9 }] {
            init.validate(&spec).unwrap();
            for i in 0..1000 {
                let p = init.sample(&d, &spec, i, 1000, &mut rng);
                assert!(d.contains(p.x) && (p.weight - 1e-3).abs() < 1e-18);
                if let InitialData::UniformMaxwell { .. } = init {
                    assert!((0.5..=1.5).contains(&geo::norm(p.v)));
                } else {
                    assert!((0.5..=0.9).contains(&geo::norm(p.x)));
                }
            }
        }
        assert!(InitialData::Ring { inner: 0.5, outer: 1.5 }.validate(&spec).is_err());
    }

    #[test]
    fn densities_have_unit_mass() {
        use freestream_core::measure::{cartesian_velocity_integral, direct_phase_integral, VelocityMeasure};
        use freestream_core::numeric::Rule;
        let d = Domain::unit_disk();
        let spec = KernelSpec::maxwell(2, 1.0);
        let vm = VelocityMeasure::with_breaks(2, 8.0, 16, &[0.5, 1.5]).unwrap();
        for init in [InitialData::Equilibrium, InitialData::UniformMaxwell { lo: 0.5, hi: 1.5 }] {
            let f = init.density(&d, &spec).unwrap();
            let m = direct_phase_integral(&d, &vm, &f, 16, 16);
            assert!((m - 1.0).abs() < 1e-9, "{init:?}: {m}");
        }
        // the ring jumps in position, so integrate radially between its edges
        let f = InitialData::Ring { inner: 0.5, outer: 0.9 }.density(&d, &spec).unwrap();
        let m = 2.0 * PI * Rule::composite(&[0.5, 0.9], 8).integrate(|r| r * cartesian_velocity_integral(2, |v| f.eval([r, 0.0, 0.0], v), 8.0, 8));
        assert!((m - 1.0).abs() < 1e-9, "{m}");
        assert!(InitialData::Custom(vec![Particle { x: [0.0; 3], v: [1.0, 0.0, 0.0], weight: 1.0 }]).density(&d, &spec).is_none());
    }
}
