//! Experiment configuration: flat `key = value` text with `[section]` headers.
//!
//! Every key has a default (the canonical unit-disk experiment), unknown
//! keys are rejected, and errors carry the line and the dotted field name.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use freestream_core::boundary::{KernelSpec, Profile, ThetaField};
use freestream_core::geometry::{Domain, Shape};
use freestream_core::measure::{BoundaryGrid, DirectionRule, PhaseGrid, VelocityMeasure};
use sha2::{Digest, Sha256};

use crate::mc::{InitialData, Particle, PhaseBins};

/// A configuration problem, located by line (0 for command-line overrides) and field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, field `{}`: {}", self.line, self.field, self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Record times: explicit values and log-spaced blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSpec(pub Vec<f64>);

impl RecordSpec {
    /// `0, 0.5, log:20:200:20` → the listed values plus 20 log-spaced points in [20, 200].
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            if let Some(rest) = item.strip_prefix("log:") {
                let p: Vec<&str> = rest.split(':').collect();
                if p.len() != 3 {
                    return Err(format!("`{item}`: expected log:start:stop:count"));
                }
                let a: f64 = p[0].parse().map_err(|_| format!("`{}` is not a number", p[0]))?;
                let b: f64 = p[1].parse().map_err(|_| format!("`{}` is not a number", p[1]))?;
                let n: usize = p[2].parse().map_err(|_| format!("`{}` is not a count", p[2]))?;
                if !(a > 0.0 && b > a) || n < 2 {
                    return Err(format!("`{item}`: need 0 < start < stop and count ≥ 2"));
                }
                out.extend((0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)));
            } else {
                out.push(item.parse().map_err(|_| format!("`{item}` is not a number"))?);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        if out.is_empty() || out[0] < 0.0 {
            return Err("record times must be nonnegative and nonempty".into());
        }
        Ok(RecordSpec(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Equilibrium,
    UniformMaxwell,
    Ring,
    CustomFile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub shape: Shape,
    pub radius: f64,
    pub profile: Profile,
    pub theta: ThetaField,
    pub n_angle: usize,
    pub n_dir: usize,
    pub n_speed: usize,
    pub rho_max: Option<f64>,
    pub n_along: usize,
    pub directions: DirectionRule,
    pub particles: u64,
    pub seed: Option<u64>,
    pub batches: usize,
    pub t_max: f64,
    pub record: RecordSpec,
    pub init: InitKind,
    pub init_speed: (f64, f64),
    pub init_ring: (f64, f64),
    pub init_file: Option<PathBuf>,
    pub k_max: usize,
    /// Shells, sectors, speed cells, direction sectors.
    pub bins: [usize; 4],
    pub n: Option<usize>,
    pub p: usize,
    pub eta_max: Option<f64>,
    pub nodes: usize,
    pub dt: f64,
    pub horizon: f64,
    pub t_list: Vec<f64>,
    pub spectral_eta_max: f64,
    pub n_eta: usize,
    pub power: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: Shape::Disk,
            radius: 1.0,
            profile: Profile::Maxwell,
            theta: ThetaField::Constant(1.0),
            n_angle: 64,
            n_dir: 32,
            n_speed: 48,
            rho_max: None,
            n_along: 4,
            directions: DirectionRule::Gauss,
            particles: 10_000_000,
            seed: Some(20_240_611),
            batches: 16,
            t_max: 200.0,
            record: RecordSpec::parse("0, 0.5, 1, 2, 5, 10, log:20:200:20").unwrap(),
            init: InitKind::UniformMaxwell,
            init_speed: (0.5, 1.5),
            init_ring: (0.5, 0.9),
            init_file: None,
            k_max: 4,
            bins: [4, 4, 6, 4],
            n: None,
            p: 3,
            eta_max: None,
            nodes: 64,
            dt: 0.01,
            horizon: 10.0,
            t_list: vec![1.0, 5.0, 10.0],
            spectral_eta_max: 200.0,
            n_eta: 40,
            power: 2,
            output: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "domain.shape",
    "domain.radius",
    "kernel.profile",
    "kernel.power",
    "kernel.theta",
    "grid.n_angle",
    "grid.n_dir",
    "grid.n_speed",
    "grid.rho_max",
    "grid.n_along",
    "grid.directions",
    "mc.particles",
    "mc.seed",
    "mc.batches",
    "mc.t_max",
    "mc.record",
    "mc.init",
    "mc.init_speed",
    "mc.init_ring",
    "mc.init_file",
    "mc.k_max",
    "mc.bins",
    "tauberian.n",
    "tauberian.p",
    "tauberian.eta_max",
    "tauberian.nodes",
    "tauberian.dt",
    "tauberian.horizon",
    "tauberian.t_list",
    "spectral.eta_max",
    "spectral.n_eta",
    "spectral.power",
    "output.dir",
];

/// Reads weighted particles from a CSV file with columns `x…, v…, weight`
/// (`2d + 1` numbers per row); `#` lines and one optional header row are skipped.
pub fn load_particles(path: &Path, dim: usize) -> Result<InitialData, ConfigError> {
    let field = "mc.init_file";
    let mut rd = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(|e| err(0, field, format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| err(0, field, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let nums: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let Ok(nums) = nums else {
            if out.is_empty() && line <= 1 {
                continue;
            }
            return Err(err(line, field, "expected numbers"));
        };
        if nums.len() != 2 * dim + 1 {
            return Err(err(line, field, format!("expected {} columns, found {}", 2 * dim + 1, nums.len())));
        }
        let mut p = Particle { x: [0.0; 3], v: [0.0; 3], weight: nums[2 * dim] };
        p.x[..dim].copy_from_slice(&nums[..dim]);
        p.v[..dim].copy_from_slice(&nums[dim..2 * dim]);
        out.push(p);
    }
    if out.is_empty() {
        return Err(err(0, field, "no particles"));
    }
    Ok(InitialData::Custom(out))
}

fn err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, field: field.to_string(), message: message.into() }
}

fn positive_f(line: usize, field: &str, v: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err(err(line, field, "must be positive")),
        Err(_) => Err(err(line, field, format!("`{v}` is not a number"))),
    }
}

fn positive_u(line: usize, field: &str, v: &str) -> Result<usize, ConfigError> {
    match v.replace('_', "").parse::<usize>() {
        Ok(x) if x > 0 => Ok(x),
        Ok(_) => Err(err(line, field, "must be positive")),
        Err(_) => Err(err(line, field, format!("`{v}` is not a positive integer"))),
    }
}

fn list_f(line: usize, field: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| positive_f(line, field, s.trim())).collect()
}

fn pair(line: usize, field: &str, v: &str) -> Result<(f64, f64), ConfigError> {
    let xs: Vec<f64> = v.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| err(line, field, format!("`{s}` is not a number")))).collect::<Result<_, _>>()?;
    match xs.as_slice() {
        [a, b] if *a >= 0.0 && b > a => Ok((*a, *b)),
        _ => Err(err(line, field, "expected `low, high` with 0 ≤ low < high")),
    }
}

impl ExperimentConfig {
    /// Parses a configuration file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err(line, name, "unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| err(line, s, "expected `key = value`"))?;
            let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
            if let Some(first) = seen.insert(key.clone(), line) {
                return Err(err(line, &key, format!("duplicate key (first set on line {first})")));
            }
            cfg.set(line, &key, v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one dotted key; `line` is 0 for command-line overrides.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "domain.shape" => {
                self.shape = match v {
                    "disk" => Shape::Disk,
                    "ball" => Shape::Ball,
                    _ => return Err(err(line, key, format!("`{v}`: expected disk or ball"))),
                }
            }
            "domain.radius" => self.radius = positive_f(line, key, v)?,
            "kernel.profile" => {
                self.profile = match v {
                    "maxwell" => Profile::Maxwell,
                    "speed-weighted" => Profile::SpeedWeighted { power: 1.0 },
                    _ => return Err(err(line, key, format!("`{v}`: expected maxwell or speed-weighted"))),
                }
            }
            "kernel.power" => {
                let p: f64 = v.parse().map_err(|_| err(line, key, format!("`{v}` is not a number")))?;
                if !(p >= 0.0) {
                    return Err(err(line, key, "must be nonnegative"));
                }
                match &mut self.profile {
                    Profile::SpeedWeighted { power } => *power = p,
                    Profile::Maxwell => return Err(err(line, key, "only meaningful for profile = speed-weighted (set the profile first)")),
                }
            }
            "kernel.theta" => {
                let xs = list_f(line, key, v)?;
                self.theta = if xs.len() == 1 { ThetaField::Constant(xs[0]) } else { ThetaField::Angular(xs) };
            }
            "grid.n_angle" => self.n_angle = positive_u(line, key, v)?,
            "grid.n_dir" => self.n_dir = positive_u(line, key, v)?,
            "grid.n_speed" => self.n_speed = positive_u(line, key, v)?,
            "grid.rho_max" => self.rho_max = Some(positive_f(line, key, v)?),
            "grid.n_along" => self.n_along = positive_u(line, key, v)?,
            "grid.directions" => {
                self.directions = match v {
                    "gauss" => DirectionRule::Gauss,
                    "uniform" => DirectionRule::Uniform,
                    _ => return Err(err(line, key, format!("`{v}`: expected gauss or uniform"))),
                }
            }
            "mc.particles" => self.particles = positive_u(line, key, v)? as u64,
            "mc.seed" => self.seed = Some(v.replace('_', "").parse().map_err(|_| err(line, key, format!("`{v}` is not an unsigned integer")))?),
            "mc.batches" => self.batches = positive_u(line, key, v)?,
            "mc.t_max" => self.t_max = positive_f(line, key, v)?,
            "mc.record" => self.record = RecordSpec::parse(v).map_err(|m| err(line, key, m))?,
            "mc.init" => {
                self.init = match v {
                    "equilibrium" => InitKind::Equilibrium,
                    "uniform-maxwell" => InitKind::UniformMaxwell,
                    "ring" => InitKind::Ring,
                    "custom-file" => InitKind::CustomFile,
                    _ => return Err(err(line, key, format!("`{v}`: expected equilibrium, uniform-maxwell, ring or custom-file"))),
                }
            }
            "mc.init_speed" => self.init_speed = pair(line, key, v)?,
            "mc.init_ring" => self.init_ring = pair(line, key, v)?,
            "mc.init_file" => self.init_file = Some(PathBuf::from(v)),
            "mc.k_max" => self.k_max = positive_u(line, key, v)?,
            "mc.bins" => {
                let xs: Vec<usize> = v.split(',').map(|s| positive_u(line, key, s.trim())).collect::<Result<_, _>>()?;
                self.bins = xs.try_into().map_err(|_| err(line, key, "expected four counts: shells, sectors, speeds, directions"))?;
            }
            "tauberian.n" => self.n = Some(positive_u(line, key, v)?),
            "tauberian.p" => self.p = positive_u(line, key, v)?,
            "tauberian.eta_max" => self.eta_max = if v == "auto" { None } else { Some(positive_f(line, key, v)?) },
            "tauberian.nodes" => self.nodes = positive_u(line, key, v)?,
            "tauberian.dt" => self.dt = positive_f(line, key, v)?,
            "tauberian.horizon" => self.horizon = positive_f(line, key, v)?,
            "tauberian.t_list" => self.t_list = list_f(line, key, v)?,
            "spectral.eta_max" => self.spectral_eta_max = positive_f(line, key, v)?,
            "spectral.n_eta" => self.n_eta = positive_u(line, key, v)?,
            "spectral.power" => self.power = positive_u(line, key, v)?,
            "output.dir" => self.output = PathBuf::from(v),
            _ => {
                let leaf = key.rsplit('.').next().unwrap_or(key);
                let hint = KEYS
                    .iter()
                    .find(|k| k.ends_with(&format!(".{leaf}")))
                    .or_else(|| KEYS.iter().map(|k| (strsim::levenshtein(k, key), k)).filter(|(d, _)| *d <= 2).min().map(|(_, k)| k));
                return Err(err(line, key, match hint {
                    Some(h) => format!("unknown key (did you mean `{h}`?)"),
                    None => "unknown key".to_string(),
                }));
            }
        }
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kernel_spec().validate(&self.domain()).map_err(|e| err(0, "kernel.theta", e.to_string()))?;
        if self.shape == Shape::Ball && matches!(self.theta, ThetaField::Angular(_)) {
            return Err(err(0, "kernel.theta", "angular temperature profiles are defined on the disk only"));
        }
        if self.batches < 16 {
            return Err(err(0, "mc.batches", "at least 16 batches are required"));
        }
        if self.particles < self.batches as u64 {
            return Err(err(0, "mc.particles", "fewer particles than batches"));
        }
        if self.init == InitKind::CustomFile && self.init_file.is_none() {
            return Err(err(0, "mc.init_file", "required for init = custom-file"));
        }
        if self.init_ring.1 > 1.0 {
            return Err(err(0, "mc.init_ring", "outer radius is a fraction of R and must be ≤ 1"));
        }
        if self.power < 1 {
            return Err(err(0, "spectral.power", "must be at least 1"));
        }
        Ok(())
    }

    /// The seed, which Monte Carlo runs require.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| err(0, "mc.seed", "a seed is mandatory for Monte Carlo runs"))
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.shape, [0.0; 3], self.radius).expect("validated radius")
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec { dim: if self.shape == Shape::Disk { 2 } else { 3 }, profile: self.profile, theta: self.theta.clone() }
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max.unwrap_or_else(|| self.kernel_spec().default_rho_max())
    }

    pub fn boundary_grid(&self) -> freestream_core::Result<BoundaryGrid> {
        let vm = VelocityMeasure::canonical(self.kernel_spec().dim, self.rho_max(), self.n_speed)?;
        BoundaryGrid::new(self.domain(), self.n_angle, self.n_dir, vm, self.directions)
    }

    pub fn phase_grid(&self) -> freestream_core::Result<PhaseGrid> {
        Ok(PhaseGrid::new(self.boundary_grid()?, self.n_along))
    }

    /// `max(p, 2^{N_H} p)` unless `n` is set.
    pub fn bounce_order(&self, n_h: usize) -> usize {
        self.n.unwrap_or(self.p.max((1usize << n_h) * self.p))
    }

    pub fn phase_bins(&self) -> freestream_core::Result<PhaseBins> {
        let [a, b, c, d] = self.bins;
        PhaseBins::equiprobable(&self.domain(), self.kernel_spec().theta_max(), a, b, c, d)
    }

    /// Record times clipped to `t_max`.
    pub fn record_times(&self) -> Vec<f64> {
        self.record.0.iter().copied().filter(|t| *t <= self.t_max * (1.0 + 1e-12)).collect()
    }

    pub fn initial_data(&self, custom: Option<InitialData>) -> Result<InitialData, ConfigError> {
        Ok(match self.init {
            InitKind::Equilibrium => InitialData::Equilibrium,
            InitKind::UniformMaxwell => InitialData::UniformMaxwell { lo: self.init_speed.0, hi: self.init_speed.1 },
            InitKind::Ring => InitialData::Ring { inner: self.init_ring.0, outer: self.init_ring.1 },
            InitKind::CustomFile => custom.ok_or_else(|| err(0, "mc.init_file", "custom particles were not loaded"))?,
        })
    }

    /// Effective configuration, one `key = value` per line in a fixed order.
    pub fn canonical_text(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("domain.shape = {}", if self.shape == Shape::Disk { "disk" } else { "ball" }),
            format!("domain.radius = {}", self.radius),
        ];
        match self.profile {
            Profile::Maxwell => lines.push("kernel.profile = maxwell".into()),
            Profile::SpeedWeighted { power } => {
                lines.push("kernel.profile = speed-weighted".into());
                lines.push(format!("kernel.power = {power}"));
            }
        }
        lines.push(format!(
            "kernel.theta = {}",
            match &self.theta {
                ThetaField::Constant(t) => format!("{t}"),
                ThetaField::Angular(s) => list(s),
            }
        ));
        lines.extend([
            format!("grid.n_angle = {}", self.n_angle),
            format!("grid.n_dir = {}", self.n_dir),
            format!("grid.n_speed = {}", self.n_speed),
            format!("grid.rho_max = {}", self.rho_max()),
            format!("grid.n_along = {}", self.n_along),
            format!("grid.directions = {}", if self.directions == DirectionRule::Gauss { "gauss" } else { "uniform" }),
            format!("mc.particles = {}", self.particles),
            format!("mc.seed = {}", self.seed.map_or("none".to_string(), |s| s.to_string())),
            format!("mc.batches = {}", self.batches),
            format!("mc.t_max = {}", self.t_max),
            format!("mc.record = {}", list(&self.record.0)),
            format!(
                "mc.init = {}",
                match self.init {
                    InitKind::Equilibrium => "equilibrium",
                    InitKind::UniformMaxwell => "uniform-maxwell",
                    InitKind::Ring => "ring",
                    InitKind::CustomFile => "custom-file",
                }
            ),
            format!("mc.init_speed = {},{}", self.init_speed.0, self.init_speed.1),
            format!("mc.init_ring = {},{}", self.init_ring.0, self.init_ring.1),
            format!("mc.init_file = {}", self.init_file.as_ref().map_or("none".to_string(), |p| p.display().to_string())),
            format!("mc.k_max = {}", self.k_max),
            format!("mc.bins = {},{},{},{}", self.bins[0], self.bins[1], self.bins[2], self.bins[3]),
            format!("tauberian.n = {}", self.n.map_or("auto".to_string(), |n| n.to_string())),
            format!("tauberian.p = {}", self.p),
            format!("tauberian.eta_max = {}", self.eta_max.map_or("auto".to_string(), |e| e.to_string())),
            format!("tauberian.nodes = {}", self.nodes),
            format!("tauberian.dt = {}", self.dt),
            format!("tauberian.horizon = {}", self.horizon),
            format!("tauberian.t_list = {}", list(&self.t_list)),
            format!("spectral.eta_max = {}", self.spectral_eta_max),
            format!("spectral.n_eta = {}", self.n_eta),
            format!("spectral.power = {}", self.power),
        ]);
        lines.join("\n") + "\n"
    }

    /// SHA-256 of [`Self::canonical_text`] (the output directory is not part of it).
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_canonical() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.rho_max(), 8.0);
        assert_eq!(c.bounce_order(1), 6);
        assert_eq!(c.record_times().len(), 26);
    }

    #[test]
    fn parses_sections_and_comments() {
        let c = ExperimentConfig::parse("# demo\n[mc]\nparticles = 1_000  # fewer\nseed = 7\nrecord = 1, log:10:100:3\n[kernel]\ntheta = 1.0, 1.5, 1.2\n").unwrap();
        assert_eq!(c.particles, 1000);
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.record.0.len(), 4);
        assert!((c.record.0[2] - 31.6227766).abs() < 1e-6);
        assert!(matches!(c.theta, ThetaField::Angular(ref s) if s.len() == 3));
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = ExperimentConfig::parse("[mc]\nseed = 3\nparticles = -5\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (3, "mc.particles"));
        let e = ExperimentConfig::parse("[grid]\nn_angels = 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("grid.n_angels"));
        let e = ExperimentConfig::parse("[mc]\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(e.message.contains("line 2"));
        let e = ExperimentConfig::parse("[mc]\nbatches = 4\n").unwrap_err();
        assert_eq!(e.field, "mc.batches");
        assert!(ExperimentConfig::parse("[domain\n").is_err());
        assert!(ExperimentConfig::parse("[kernel]\npower = 2\n").is_err());
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = ExperimentConfig::parse("[mc]\nseed = 7\n").unwrap();
        let b = ExperimentConfig::parse("[mc]\nseed = 7\n[output]\ndir = elsewhere\n").unwrap();
        let c = ExperimentConfig::parse("[mc]\nseed = 8\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        // the canonical text parses back to the same configuration
        let text: String = a.canonical_text().lines().filter(|l| !l.ends_with("none") && !l.ends_with("auto")).map(|l| format!("{l}\n")).collect();
        assert_eq!(ExperimentConfig::parse(&text).unwrap().hash(), a.hash());
    }
}
