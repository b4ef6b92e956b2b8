//! Event-driven Monte Carlo for `U_H(t)`: free flights between wall hits,
//! diffuse re-emission, bounce-class bookkeeping.
//!
//! Particle `i` draws from its own ChaCha8 stream `(seed, i)`; batches are
//! contiguous particle ranges reduced in batch order, so results do not
//! depend on the thread count.

pub mod bins;
pub mod sampling;

use freestream_core::boundary::KernelSpec;
use freestream_core::geometry::{self as geo, Domain};
use freestream_core::transport::decay::MIN_BATCHES;
use freestream_core::transport::DecayCurve;
use freestream_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use bins::{maxwell_speed_cdf, maxwell_speed_quantiles, FlightLaw, LaplaceBins, PhaseBins};
pub use sampling::{InitialData, InitialDensity, Particle, WallSampler};

/// Per-particle cap on wall events.
pub const EVENT_CAP: u64 = 1_000_000;

/// Largest bounce class with a conditional-survival estimator.
pub const RB_MAX: usize = 8;

#[derive(Clone, Debug)]
pub struct McSettings {
    pub particles: u64,
    pub seed: u64,
    pub batches: usize,
    /// Increasing record times.
    pub times: Vec<f64>,
    /// Classes `0..=k_max` are tallied separately, the rest as one remainder.
    pub k_max: usize,
    /// Classes `1..=rb_max` also get the conditional-survival estimate.
    pub rb_max: usize,
    pub bins: Option<PhaseBins>,
    pub laplace: Option<LaplaceBins>,
    pub event_cap: u64,
}

impl McSettings {
    pub fn new(particles: u64, seed: u64, times: Vec<f64>) -> Self {
        McSettings { particles, seed, batches: MIN_BATCHES, times, k_max: 4, rb_max: 3, bins: None, laplace: None, event_cap: EVENT_CAP }
    }

    fn validate(&self) -> Result<()> {
        if self.batches < MIN_BATCHES || self.particles < self.batches as u64 {
            return Err(Error::Parameter { what: "need at least 16 batches and one particle per batch" });
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter { what: "record times must be nonnegative and increasing" });
        }
        if self.rb_max > RB_MAX || self.rb_max > self.k_max {
            return Err(Error::Parameter { what: "conditional-survival classes exceed the tallied classes" });
        }
        if let Some(l) = &self.laplace {
            if !(l.lambda > 0.0) || l.s_edges.len() < 2 || l.speed_edges.first() != Some(&0.0) {
                return Err(Error::Parameter { what: "Laplace bins" });
            }
        }
        Ok(())
    }
}

/// Tallies of one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub particles: u64,
    /// Initial weight.
    pub weight: f64,
    /// `classes[m][k]`, `k ≤ k_max`, plus the remainder at `k_max + 1`.
    pub classes: Vec<Vec<f64>>,
    /// `survival[m][k]`: conditional-survival estimate of class `k ∈ 1..=rb_max` (index 0 unused).
    pub survival: Vec<Vec<f64>>,
    /// `bins[m][b]`.
    pub bins: Vec<Vec<f64>>,
    pub laplace: Vec<f64>,
    pub events: u64,
    pub capped: u64,
}

impl Tally {
    fn zeros(s: &McSettings) -> Self {
        let m = s.times.len();
        Tally {
            particles: 0,
            weight: 0.0,
            classes: vec![vec![0.0; s.k_max + 2]; m],
            survival: vec![vec![0.0; s.rb_max + 1]; m],
            bins: vec![vec![0.0; s.bins.as_ref().map_or(0, |b| b.len())]; m],
            laplace: vec![0.0; s.laplace.as_ref().map_or(0, |b| b.len())],
            events: 0,
            capped: 0,
        }
    }

    fn add(&mut self, o: &Tally) {
        self.particles += o.particles;
        self.weight += o.weight;
        let acc = |a: &mut Vec<Vec<f64>>, b: &Vec<Vec<f64>>| a.iter_mut().zip(b).for_each(|(x, y)| x.iter_mut().zip(y).for_each(|(p, q)| *p += q));
        acc(&mut self.classes, &o.classes);
        acc(&mut self.survival, &o.survival);
        acc(&mut self.bins, &o.bins);
        self.laplace.iter_mut().zip(&o.laplace).for_each(|(p, q)| *p += q);
        self.events += o.events;
        self.capped += o.capped;
    }

    /// Mass at record `m` (all classes).
    pub fn mass(&self, m: usize) -> f64 {
        self.classes[m].iter().sum()
    }
}

/// A finished run: per-batch tallies and their pooled sum.
#[derive(Clone, Debug)]
pub struct McRun {
    pub settings: McSettings,
    pub rho_f: f64,
    pub batches: Vec<Tally>,
    pub total: Tally,
}

struct Engine<'a> {
    domain: &'a Domain,
    spec: &'a KernelSpec,
    init: &'a InitialData,
    wall: WallSampler,
    flight: Option<FlightLaw>,
    s: &'a McSettings,
}

impl Engine<'_> {
    fn particle(&self, index: u64, t: &mut Tally) {
        let s = self.s;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(index);
        let p = self.init.sample(self.domain, self.spec, index, s.particles, &mut rng);
        let w = p.weight;
        t.particles += 1;
        t.weight += w;
        let (mut x, mut v) = (p.x, p.v);
        let (mut t0, mut class, mut m, mut events) = (0.0, 0usize, 0usize, 0u64);
        let mut emitted = [f64::INFINITY; RB_MAX + 1];
        let n_rec = s.times.len();
        let lap_class = s.laplace.as_ref().map(|l| (l.class, l.horizon));
        loop {
            let tau = self.domain.ray_exit(x, v);
            let t1 = t0 + tau;
            while m < n_rec && s.times[m] < t1 {
                let tm = s.times[m];
                let k = class.min(s.k_max + 1);
                t.classes[m][k] += w;
                if let Some(b) = &s.bins {
                    t.bins[m][b.index(geo::axpy(x, tm - t0, v), v)] += w;
                }
                m += 1;
            }
            let laplace_open = match (&s.laplace, lap_class) {
                (Some(l), Some((lk, horizon))) => {
                    if class == lk {
                        l.add_flight(t0, t1, geo::norm(v), w, &mut t.laplace);
                    }
                    class < lk && t1 < horizon
                }
                _ => false,
            };
            if m == n_rec && !laplace_open {
                break;
            }
            if events >= s.event_cap {
                t.capped += 1;
                break;
            }
            let y = self.domain.project(geo::axpy(x, tau, v));
            class += 1;
            events += 1;
            if class <= s.rb_max {
                emitted[class] = t1;
            }
            v = self.wall.emit(y, &mut rng);
            x = y;
            t0 = t1;
        }
        t.events += events;
        // P(class k at t) = E[1{t_k ≤ t} P(T > t − t_k)]
        for (mi, &tm) in s.times.iter().enumerate() {
            for k in 1..=s.rb_max {
                if emitted[k] <= tm {
                    let sv = match &self.flight {
                        Some(f) => f.survival(tm - emitted[k]),
                        None => f64::NAN,
                    };
                    t.survival[mi][k] += w * sv;
                }
            }
        }
    }
}

/// Runs the ensemble. Capped particles are counted, not dropped silently.
pub fn simulate(domain: &Domain, spec: &KernelSpec, init: &InitialData, settings: &McSettings) -> Result<McRun> {
    settings.validate()?;
    init.validate(spec)?;
    let engine = Engine {
        domain,
        spec,
        init,
        wall: WallSampler::new(domain, spec)?,
        flight: if spec.is_constant() { Some(FlightLaw::new(domain, spec)?) } else { None },
        s: settings,
    };
    let nb = settings.batches as u64;
    let n = settings.particles;
    let batches: Vec<Tally> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut t = Tally::zeros(settings);
            for i in b * n / nb..(b + 1) * n / nb {
                engine.particle(i, &mut t);
            }
            t
        })
        .collect();
    let mut total = Tally::zeros(settings);
    for b in &batches {
        total.add(b);
    }
    Ok(McRun { settings: settings.clone(), rho_f: init.mass(n), batches, total })
}

impl McRun {
    fn batch_scale(&self, b: &Tally) -> f64 {
        self.settings.particles as f64 / b.particles as f64
    }

    fn batch_curve<F: Fn(&Tally, usize) -> f64>(&self, stat: F) -> Result<DecayCurve> {
        let rows = self.batches.iter().map(|b| (0..self.settings.times.len()).map(|m| stat(b, m) * self.batch_scale(b)).collect()).collect();
        let mut c = DecayCurve::from_batches(self.settings.times.clone(), rows)?;
        // report the pooled sums exactly (equal to the batch mean up to rounding)
        for m in 0..c.values.len() {
            c.values[m] = stat(&self.total, m);
        }
        Ok(c)
    }

    /// Indicator masses of classes `lo..=hi` (`hi ≤ k_max + 1`).
    pub fn class_curve(&self, lo: usize, hi: usize) -> Result<DecayCurve> {
        self.batch_curve(|t, m| t.classes[m][lo..=hi].iter().sum())
    }

    /// Classes `0..=hi` with the conditional-survival estimate for `k ≥ 1`.
    pub fn partial_sum_curve(&self, hi: usize) -> Result<DecayCurve> {
        if hi > self.settings.rb_max {
            return Err(Error::Parameter { what: "class beyond the conditional-survival range" });
        }
        if self.total.survival.iter().flatten().any(|x| x.is_nan()) {
            return Err(Error::Unsupported { what: "conditional survival needs constant θ" });
        }
        self.batch_curve(|t, m| t.classes[m][0] + t.survival[m][1..=hi].iter().sum::<f64>())
    }

    /// Conditional-survival estimate of class `k ∈ 1..=rb_max` alone.
    pub fn survival_curve(&self, k: usize) -> Result<DecayCurve> {
        if k == 0 || k > self.settings.rb_max {
            return Err(Error::Parameter { what: "class beyond the conditional-survival range" });
        }
        if self.total.survival.iter().any(|row| row[k].is_nan()) {
            return Err(Error::Unsupported { what: "conditional survival needs constant θ" });
        }
        self.batch_curve(|t, m| t.survival[m][k])
    }

    /// Binned `𝕏₀` distance `Σ_b |h_b − ρ_f p_b|`, with delete-one-batch replicates.
    pub fn distance_curve(&self, reference: &[f64]) -> Result<DecayCurve> {
        let bins = self.settings.bins.as_ref().ok_or(Error::Parameter { what: "run has no phase bins" })?;
        if reference.len() != bins.len() {
            return Err(Error::GridMismatch { what: "reference bins" });
        }
        let n = self.settings.particles as f64;
        let dist = |h: &[f64], scale: f64| h.iter().zip(reference).map(|(a, p)| (a * scale - self.rho_f * p).abs()).sum::<f64>();
        let m_count = self.settings.times.len();
        let values: Vec<f64> = (0..m_count).map(|m| dist(&self.total.bins[m], 1.0)).collect();
        let loo = self
            .batches
            .iter()
            .map(|b| {
                let scale = n / (n - b.particles as f64);
                (0..m_count)
                    .map(|m| {
                        let rest: Vec<f64> = self.total.bins[m].iter().zip(&b.bins[m]).map(|(x, y)| x - y).collect();
                        dist(&rest, scale)
                    })
                    .collect()
            })
            .collect();
        DecayCurve::from_jackknife(self.settings.times.clone(), values, loo)
    }

    /// Largest relative standard error of a bin mass at record `m`.
    pub fn bin_noise_ratio(&self, m: usize) -> f64 {
        let nb = self.batches.len() as f64;
        let len = self.total.bins[m].len();
        (0..len)
            .map(|b| {
                let xs: Vec<f64> = self.batches.iter().map(|t| t.bins[m][b] * self.batch_scale(t)).collect();
                let mean = xs.iter().sum::<f64>() / nb;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                (var / nb).sqrt() / mean.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Pooled Laplace bins with per-bin standard errors.
    pub fn laplace_bins(&self) -> (Vec<f64>, Vec<f64>) {
        let nb = self.batches.len() as f64;
        let se = (0..self.total.laplace.len())
            .map(|k| {
                let xs: Vec<f64> = self.batches.iter().map(|t| t.laplace[k] * self.batch_scale(t)).collect();
                let mean = xs.iter().sum::<f64>() / nb;
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
            })
            .collect();
        (self.total.laplace.clone(), se)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> (Domain, KernelSpec) {
        (Domain::unit_disk(), KernelSpec::maxwell(2, 1.0))
    }

    #[test]
    fn conservation_partition_and_determinism() {
        let (d, spec) = disk();
        let mut s = McSettings::new(20_000, 7, vec![0.0, 0.5, 1.0, 3.0, 10.0]);
        s.bins = Some(PhaseBins::equiprobable(&d, 1.0, 2, 2, 3, 2).unwrap());
        let init = InitialData::UniformMaxwell { lo: 0.5, hi: 1.5 };
        let a = simulate(&d, &spec, &init, &s).unwrap();
        for m in 0..5 {
            assert!((a.total.mass(m) - 1.0).abs() < 1e-12);
            assert!((a.total.bins[m].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((a.total.classes[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(a.total.capped, 0);
        let b = simulate(&d, &spec, &init, &s).unwrap();
        assert_eq!(a.total, b.total);
        // the batch layout does not change what each particle does
        let mut s2 = s.clone();
        s2.batches = 20;
        let c = simulate(&d, &spec, &init, &s2).unwrap();
        for m in 0..5 {
            for k in 0..a.total.classes[m].len() {
                assert!((a.total.classes[m][k] - c.total.classes[m][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn survival_estimator_agrees_with_indicator() {
        let (d, spec) = disk();
        let s = McSettings::new(100_000, 1, vec![0.5, 1.0, 2.0, 4.0]);
        let run = simulate(&d, &spec, &InitialData::Equilibrium, &s).unwrap();
        let ind = run.class_curve(1, 1).unwrap();
        let rb = run.batch_curve(|t, m| t.survival[m][1]).unwrap();
        for m in 0..4 {
            let tol = 4.0 * (ind.stderr[m].powi(2) + rb.stderr[m].powi(2)).sqrt();
            assert!((ind.values[m] - rb.values[m]).abs() < tol, "{m}: {} {}", ind.values[m], rb.values[m]);
            assert!(rb.stderr[m] <= ind.stderr[m] * 1.05);
        }
    }

    #[test]
    fn equilibrium_stays_at_noise_level() {
        let (d, spec) = disk();
        let mut s = McSettings::new(200_000, 3, vec![0.0, 1.0, 5.0]);
        s.bins = Some(PhaseBins::equiprobable(&d, 1.0, 2, 4, 4, 4).unwrap());
        let run = simulate(&d, &spec, &InitialData::Equilibrium, &s).unwrap();
        let c = run.distance_curve(&s.bins.as_ref().unwrap().equilibrium_masses()).unwrap();
        for m in 1..3 {
            assert!((c.values[m] - c.values[0]).abs() < 4.0 * (c.stderr[m].powi(2) + c.stderr[0].powi(2)).sqrt());
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let (d, spec) = disk();
        let mut s = McSettings::new(100, 1, vec![1.0, 0.5]);
        assert!(simulate(&d, &spec, &InitialData::Equilibrium, &s).is_err());
        s.times = vec![0.5, 1.0];
        s.batches = 4;
        assert!(simulate(&d, &spec, &InitialData::Equilibrium, &s).is_err());
    }
}
