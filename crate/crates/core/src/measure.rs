//! Velocity and boundary measures, tensor grids on Γ±, chord-coordinate phase
//! grids, the boundary integration identities and the sphere-to-boundary
//! change of variables.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{self as geo, Domain, Shape, Vec3};
use crate::numeric::gauss::{graded_breaks, Rule};

/// `|S^{d-1}|`.
pub fn sphere_area(dim: usize) -> f64 {
    if dim == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// `c_d = ∫_{σ·n>0} σ·n dσ`.
pub fn hemisphere_flux(dim: usize) -> f64 {
    if dim == 2 {
        2.0
    } else {
        PI
    }
}

/// Speed weight `ϖ_s(v) = max(1, |v|^{-s})`.
#[inline]
pub fn speed_weight(speed: f64, s: u32) -> f64 {
    if s == 0 || speed >= 1.0 {
        1.0
    } else {
        libm::pow(speed, -(s as f64))
    }
}

/// Lebesgue velocity measure in polar form with a panel speed rule on `[0, ρ_max]`.
#[derive(Clone, Debug)]
pub struct VelocityMeasure {
    pub dim: usize,
    pub rho_max: f64,
    /// Rule for `∫₀^{ρ_max} g(ρ) dρ` (the `ρ^{d-1}` factor is not included).
    pub speeds: Rule,
    pub breaks: Vec<f64>,
}

impl VelocityMeasure {
    /// Eight geometric sub-panels of ratio 2 on `[0, 1]`, geometric panels on
    /// `[1, ρ_max]`, Gauss–Legendre inside each; about `n_speed` nodes in total.
    pub fn canonical(dim: usize, rho_max: f64, n_speed: usize) -> Result<Self> {
        Self::with_refinement(dim, rho_max, n_speed, 8)
    }

    pub fn with_refinement(dim: usize, rho_max: f64, n_speed: usize, levels: usize) -> Result<Self> {
        if !(rho_max > 1.0) || n_speed < 4 || !(dim == 2 || dim == 3) {
            return Err(Error::Parameter { what: "velocity measure" });
        }
        let mut breaks = graded_breaks(0.0, 1.0, levels - 1, 2.0);
        let upper = crate::numeric::gauss::geometric_breaks(1.0, rho_max, 2.0);
        breaks.extend_from_slice(&upper[1..]);
        let n_low = levels;
        let n_high = upper.len() - 1;
        let per_low = (n_speed / 2 / n_low).max(2);
        let per_high = ((n_speed - per_low * n_low) / n_high).max(2);
        let mut speeds = Rule { nodes: Vec::new(), weights: Vec::new() };
        for (k, w) in breaks.windows(2).enumerate() {
            let n = if k < n_low { per_low } else { per_high };
            speeds.append(&Rule::on_interval(n, w[0], w[1]));
        }
        Ok(VelocityMeasure { dim, rho_max, speeds, breaks })
    }

    /// Canonical layout with extra panel breaks (e.g. speed cut-offs); each
    /// split panel keeps its parent's point count.
    pub fn with_breaks(dim: usize, rho_max: f64, n_speed: usize, extra: &[f64]) -> Result<Self> {
        let base = Self::canonical(dim, rho_max, n_speed)?;
        let mut counts = Vec::new();
        let mut start = 0;
        for w in base.breaks.windows(2) {
            let n = base.speeds.nodes[start..].iter().take_while(|&&r| r < w[1]).count();
            counts.push(n);
            start += n;
        }
        let mut breaks = Vec::new();
        let mut speeds = Rule { nodes: Vec::new(), weights: Vec::new() };
        for (k, w) in base.breaks.windows(2).enumerate() {
            let mut cuts: Vec<f64> = extra.iter().copied().filter(|&c| c > w[0] && c < w[1]).collect();
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut lo = w[0];
            breaks.push(lo);
            for c in cuts.into_iter().chain(core::iter::once(w[1])) {
                speeds.append(&Rule::on_interval(counts[k], lo, c));
                if c < w[1] {
                    breaks.push(c);
                }
                lo = c;
            }
        }
        breaks.push(rho_max);
        Ok(VelocityMeasure { dim, rho_max, speeds, breaks })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// `Σ wₗ ρₗ^{d-1}`, to be compared with `ρ_max^d / d`.
    pub fn radial_mass(&self) -> f64 {
        self.speeds.iter().map(|(r, w)| w * libm::pow(r, (self.dim - 1) as f64)).sum()
    }
}

/// How directions on the local hemisphere are discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionRule {
    /// Equal angular cells with exact cell flux weights (d = 2); product
    /// Gauss in `(cos θ, azimuth)` for d = 3.
    Uniform,
    /// Gauss–Legendre in the incidence angle (d = 2); same product rule in d = 3.
    Gauss,
}

/// A direction node in the local frame `(n, t₁, t₂)`; `local[0] = σ·n > 0`.
#[derive(Clone, Copy, Debug)]
pub struct DirNode {
    pub local: Vec3,
    /// `∫ dσ` over the cell.
    pub weight: f64,
    /// `∫ σ·n dσ` over the cell.
    pub flux: f64,
}

#[derive(Clone, Debug)]
struct DirLayout {
    rule: DirectionRule,
    /// Cell edges in the incidence angle (d = 2) or in `cos θ` (d = 3).
    edges: Vec<f64>,
    n_az: usize,
}

fn hemisphere(dim: usize, n_dir: usize, rule: DirectionRule) -> (Vec<DirNode>, DirLayout) {
    let mut nodes = Vec::new();
    if dim == 2 {
        let mut edges = Vec::with_capacity(n_dir + 1);
        match rule {
            DirectionRule::Uniform => {
                let h = PI / n_dir as f64;
                for j in 0..=n_dir {
                    edges.push(-PI / 2.0 + h * j as f64);
                }
                for j in 0..n_dir {
                    let a = -PI / 2.0 + h * (j as f64 + 0.5);
                    let flux = libm::sin(edges[j + 1]) - libm::sin(edges[j]);
                    nodes.push(DirNode { local: [libm::cos(a), libm::sin(a), 0.0], weight: h, flux });
                }
            }
            DirectionRule::Gauss => {
                let r = Rule::on_interval(n_dir, -PI / 2.0, PI / 2.0);
                let mut e = -PI / 2.0;
                edges.push(e);
                for (a, w) in r.iter() {
                    e += w;
                    edges.push(e);
                    nodes.push(DirNode { local: [libm::cos(a), libm::sin(a), 0.0], weight: w, flux: libm::cos(a) * w });
                }
            }
        }
        (nodes, DirLayout { rule, edges, n_az: 1 })
    } else {
        let rz = Rule::on_interval(n_dir, 0.0, 1.0);
        let n_az = 2 * n_dir;
        let h = 2.0 * PI / n_az as f64;
        let mut edges = alloc::vec![0.0];
        let mut e = 0.0;
        for (_, w) in rz.iter() {
            e += w;
            edges.push(e);
        }
        for (z, w) in rz.iter() {
            let s = libm::sqrt(1.0 - z * z);
            for k in 0..n_az {
                let psi = h * (k as f64 + 0.5);
                nodes.push(DirNode {
                    local: [z, s * libm::cos(psi), s * libm::sin(psi)],
                    weight: w * h,
                    flux: z * w * h,
                });
            }
        }
        (nodes, DirLayout { rule, edges, n_az })
    }
}

fn locate_edge(edges: &[f64], x: f64) -> usize {
    let n = edges.len() - 1;
    match edges.binary_search_by(|e| e.partial_cmp(&x).unwrap()) {
        Ok(k) => k.min(n - 1),
        Err(k) => k.saturating_sub(1).min(n - 1),
    }
}

/// A boundary node with its outward normal, tangent frame and surface weight.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryNode {
    pub x: Vec3,
    pub n: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    pub weight: f64,
}

/// Which boundary half-space a grid function lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Γ₊, outgoing.
    Plus,
    /// Γ₋, incoming.
    Minus,
}

/// Tensor grid `nodes × directions × speeds` on Γ₊ (and its mirror on Γ₋).
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub domain: Domain,
    pub nodes: Vec<BoundaryNode>,
    pub dirs: Vec<DirNode>,
    pub velocity: VelocityMeasure,
    layout: DirLayout,
    node_edges: Vec<f64>,
    n_node_az: usize,
}

impl BoundaryGrid {
    /// `n_angle` boundary angles (d = 2: equispaced nodes starting at angle 0;
    /// d = 3: `n_angle/2` Gauss heights × `n_angle` azimuths), `n_dir` directions.
    pub fn new(domain: Domain, n_angle: usize, n_dir: usize, velocity: VelocityMeasure, rule: DirectionRule) -> Result<Self> {
        if n_angle < 2 || n_dir < 1 || velocity.dim != domain.dim() {
            return Err(Error::Parameter { what: "boundary grid sizes" });
        }
        let (dirs, layout) = hemisphere(domain.dim(), n_dir, rule);
        let mut nodes = Vec::new();
        let r = domain.radius;
        let (node_edges, n_node_az) = match domain.shape {
            Shape::Disk => {
                let h = 2.0 * PI / n_angle as f64;
                for i in 0..n_angle {
                    let x = domain.disk_point(h * i as f64);
                    let (t1, t2) = domain.tangent_frame(x);
                    nodes.push(BoundaryNode { x, n: domain.normal(x), t1, t2, weight: h * r });
                }
                (Vec::new(), n_angle)
            }
            Shape::Ball => {
                let n_pol = (n_angle / 2).max(1);
                let rz = Rule::on_interval(n_pol, -1.0, 1.0);
                let h = 2.0 * PI / n_angle as f64;
                let mut edges = alloc::vec![-1.0];
                let mut e = -1.0;
                for (z, w) in rz.iter() {
                    e += w;
                    edges.push(e);
                    for k in 0..n_angle {
                        let x = domain.sphere_point(z, h * (k as f64 + 0.5));
                        let (t1, t2) = domain.tangent_frame(x);
                        nodes.push(BoundaryNode { x, n: domain.normal(x), t1, t2, weight: w * h * r * r });
                    }
                }
                (edges, n_angle)
            }
        };
        Ok(BoundaryGrid { domain, nodes, dirs, velocity, layout, node_edges, n_node_az })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dirs(&self) -> usize {
        self.dirs.len()
    }

    pub fn n_speeds(&self) -> usize {
        self.velocity.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_nodes() * self.n_dirs() * self.n_speeds()
    }

    pub fn direction_rule(&self) -> DirectionRule {
        self.layout.rule
    }

    #[inline]
    pub fn cell_index(&self, node: usize, dir: usize, speed: usize) -> usize {
        (node * self.n_dirs() + dir) * self.n_speeds() + speed
    }

    #[inline]
    pub fn cell_parts(&self, c: usize) -> (usize, usize, usize) {
        let ns = self.n_speeds();
        let nd = self.n_dirs();
        (c / (nd * ns), (c / ns) % nd, c % ns)
    }

    #[inline]
    pub fn speed(&self, l: usize) -> f64 {
        self.velocity.speeds.nodes[l]
    }

    /// `ρ^{d-1} dρ` weight of speed node `l`.
    #[inline]
    pub fn speed_mass(&self, l: usize) -> f64 {
        let r = self.speed(l);
        self.velocity.speeds.weights[l] * libm::pow(r, (self.dim() - 1) as f64)
    }

    /// Velocity of cell `c` on the given side.
    pub fn velocity_of(&self, c: usize, side: Side) -> Vec3 {
        let (i, j, l) = self.cell_parts(c);
        self.velocity_at(i, j, l, side)
    }

    #[inline]
    pub fn velocity_at(&self, i: usize, j: usize, l: usize, side: Side) -> Vec3 {
        let nd = &self.nodes[i];
        let d = self.dirs[j].local;
        let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
        let rho = self.speed(l);
        let mut v = geo::scale(nd.n, sgn * d[0]);
        v = geo::axpy(v, d[1], nd.t1);
        v = geo::axpy(v, d[2], nd.t2);
        geo::scale(v, rho)
    }

    /// μ± weight of a cell: `|v·n| π(dx) m(dv)` integrated over the cell.
    #[inline]
    pub fn mu(&self, c: usize) -> f64 {
        let (i, j, l) = self.cell_parts(c);
        self.nodes[i].weight * self.dirs[j].flux * self.speed(l) * self.speed_mass(l)
    }

    pub fn mu_weights(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|c| self.mu(c)).collect()
    }

    /// Exact `∫_{Γ±} dμ±` for the truncated velocity ball.
    pub fn analytic_mass(&self) -> f64 {
        let d = self.dim() as f64;
        self.domain.boundary_measure() * hemisphere_flux(self.dim()) * libm::pow(self.velocity.rho_max, d + 1.0) / (d + 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::gauss::pairwise_sum(&self.mu_weights())
    }

    /// Nearest boundary node of a boundary point.
    pub fn locate_node(&self, x: Vec3) -> usize {
        let r = geo::sub(x, self.domain.center);
        match self.domain.shape {
            Shape::Disk => {
                let n = self.n_nodes();
                let phi = libm::atan2(r[1], r[0]);
                let k = libm::round(phi / (2.0 * PI) * n as f64) as i64;
                k.rem_euclid(n as i64) as usize
            }
            Shape::Ball => {
                let z = (r[2] / geo::norm(r)).clamp(-1.0, 1.0);
                let band = locate_edge(&self.node_edges, z);
                let phi = geo::wrap_angle(libm::atan2(r[1], r[0]));
                let k = ((phi / (2.0 * PI) * self.n_node_az as f64) as usize).min(self.n_node_az - 1);
                band * self.n_node_az + k
            }
        }
    }

    /// Direction cell containing velocity `v` at boundary node `i` on `side`.
    pub fn locate_dir(&self, i: usize, v: Vec3, side: Side) -> usize {
        let nd = &self.nodes[i];
        self.dir_in_frame(nd.n, nd.t1, nd.t2, v, side)
    }

    fn dir_in_frame(&self, n: Vec3, t1: Vec3, t2: Vec3, v: Vec3, side: Side) -> usize {
        let s = geo::norm(v);
        let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
        let c = (sgn * geo::dot(v, n) / s).max(0.0);
        let a1 = geo::dot(v, t1) / s;
        match self.dim() {
            2 => locate_edge(&self.layout.edges, libm::atan2(a1, c)),
            _ => {
                let a2 = geo::dot(v, t2) / s;
                let band = locate_edge(&self.layout.edges, c.min(1.0));
                let psi = geo::wrap_angle(libm::atan2(a2, a1));
                let k = ((psi / (2.0 * PI) * self.layout.n_az as f64) as usize).min(self.layout.n_az - 1);
                band * self.layout.n_az + k
            }
        }
    }

    /// Cell of the phase point `(x, v)` with `x ∈ ∂Ω`, keeping speed index `l`.
    /// The direction is read in the local frame at `x` itself.
    pub fn locate(&self, x: Vec3, v: Vec3, l: usize, side: Side) -> usize {
        let i = self.locate_node(x);
        let (t1, t2) = self.domain.tangent_frame(x);
        let j = self.dir_in_frame(self.domain.normal(x), t1, t2, v, side);
        self.cell_index(i, j, l)
    }

    /// A short deterministic fingerprint of the grid layout.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        eat(self.dim() as u64);
        eat(self.n_nodes() as u64);
        eat(self.n_dirs() as u64);
        eat(self.n_speeds() as u64);
        eat(self.velocity.rho_max.to_bits());
        eat(self.domain.radius.to_bits());
        eat(matches!(self.layout.rule, DirectionRule::Gauss) as u64);
        for &r in &self.velocity.speeds.nodes {
            eat(r.to_bits());
        }
        h
    }
}

/// A real or complex function of a phase point with known non-smoothness.
pub trait PhaseFunction {
    fn eval(&self, x: Vec3, v: Vec3) -> f64;
    /// Speeds where the function jumps or kinks (support edges).
    fn speed_breaks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Values of the backward travel time `t₋` across which the function jumps.
    fn time_breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Fn(Vec3, Vec3) -> f64> PhaseFunction for F {
    fn eval(&self, x: Vec3, v: Vec3) -> f64 {
        self(x, v)
    }
}

/// Break-aware composite rule on `[a, b]`.
pub(crate) fn split_rule(a: f64, b: f64, cuts: &[f64], n: usize) -> Rule {
    let mut br = alloc::vec![a];
    let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    br.extend(inner);
    br.push(b);
    Rule::composite(&br, n)
}

/// Chord-coordinate phase grid: a Γ₋ cell `c` plus the fraction `u ∈ (0, 1)`
/// of its chord, so `dx dv = dμ₋ ds` with `s = u τ₊`.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub grid: BoundaryGrid,
    pub along: Rule,
    /// Chord time of each Γ₋ cell.
    pub tau: Vec<f64>,
    /// Γ₊ cell reached at the end of each chord.
    pub dest: Vec<usize>,
}

impl PhaseGrid {
    pub fn new(grid: BoundaryGrid, n_along: usize) -> Self {
        let nc = grid.n_cells();
        let mut tau = Vec::with_capacity(nc);
        let mut dest = Vec::with_capacity(nc);
        for c in 0..nc {
            let (i, j, l) = grid.cell_parts(c);
            let z = grid.nodes[i].x;
            let v = grid.velocity_at(i, j, l, Side::Minus);
            let t = grid.domain.chord_from(z, v);
            let exit = grid.domain.project(geo::axpy(z, t, v));
            tau.push(t);
            dest.push(grid.locate(exit, v, l, Side::Plus));
        }
        PhaseGrid { grid, along: Rule::on_interval(n_along, 0.0, 1.0), tau, dest }
    }

    pub fn n_along(&self) -> usize {
        self.along.len()
    }

    pub fn len(&self) -> usize {
        self.grid.n_cells() * self.n_along()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase point and quadrature weight of sample `(c, k)`.
    pub fn point(&self, c: usize, k: usize) -> (Vec3, Vec3, f64) {
        let (i, j, l) = self.grid.cell_parts(c);
        let v = self.grid.velocity_at(i, j, l, Side::Minus);
        let s = self.along.nodes[k] * self.tau[c];
        let x = geo::axpy(self.grid.nodes[i].x, s, v);
        (x, v, self.grid.mu(c) * self.tau[c] * self.along.weights[k])
    }

    /// Time since entry `s` of sample `(c, k)`.
    #[inline]
    pub fn s(&self, c: usize, k: usize) -> f64 {
        self.along.nodes[k] * self.tau[c]
    }

    pub fn sample<F: PhaseFunction + ?Sized>(&self, f: &F) -> PhaseGridFunction {
        let mut values = Vec::with_capacity(self.len());
        for c in 0..self.grid.n_cells() {
            for k in 0..self.n_along() {
                let (x, v, _) = self.point(c, k);
                values.push(C64::new(f.eval(x, v), 0.0));
            }
        }
        PhaseGridFunction { values }
    }

    /// `‖h‖_{𝕏_s}` on this grid.
    pub fn norm(&self, h: &PhaseGridFunction, s: u32) -> f64 {
        let mut acc = Vec::with_capacity(self.grid.n_cells());
        let na = self.n_along();
        for c in 0..self.grid.n_cells() {
            let (_, _, l) = self.grid.cell_parts(c);
            let w = self.grid.mu(c) * self.tau[c] * speed_weight(self.grid.speed(l), s);
            let row: f64 = (0..na).map(|k| self.along.weights[k] * h.values[c * na + k].norm()).sum();
            acc.push(w * row);
        }
        crate::numeric::gauss::pairwise_sum(&acc)
    }

    /// `∫ h dx dv` (complex).
    pub fn integral(&self, h: &PhaseGridFunction) -> C64 {
        let na = self.n_along();
        let mut re = Vec::with_capacity(self.grid.n_cells());
        let mut im = Vec::with_capacity(self.grid.n_cells());
        for c in 0..self.grid.n_cells() {
            let w = self.grid.mu(c) * self.tau[c];
            let s: C64 = (0..na).map(|k| h.values[c * na + k] * self.along.weights[k]).sum();
            re.push(w * s.re);
            im.push(w * s.im);
        }
        C64::new(crate::numeric::gauss::pairwise_sum(&re), crate::numeric::gauss::pairwise_sum(&im))
    }
}

/// Values on a [`PhaseGrid`], stored cell-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGridFunction {
    pub values: Vec<C64>,
}

impl PhaseGridFunction {
    pub fn zeros(len: usize) -> Self {
        PhaseGridFunction { values: alloc::vec![C64::new(0.0, 0.0); len] }
    }

    pub fn sub(&self, other: &Self) -> Self {
        PhaseGridFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        PhaseGridFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        PhaseGridFunction { values: self.values.iter().map(|a| a * s).collect() }
    }
}

/// `∫_Ω∫_V h` via chord coordinates from Γ₋ or Γ₊ with `n_s`-point panels along chords.
pub fn phase_integral_via_boundary<F: PhaseFunction + ?Sized>(grid: &BoundaryGrid, h: &F, side: Side, n_s: usize) -> f64 {
    let tb = h.time_breaks();
    let mut acc = Vec::with_capacity(grid.n_cells());
    for c in 0..grid.n_cells() {
        let (i, j, l) = grid.cell_parts(c);
        let x = grid.nodes[i].x;
        let v = grid.velocity_at(i, j, l, side);
        let tau = grid.domain.chord_from(x, if side == Side::Minus { v } else { geo::scale(v, -1.0) });
        // along the chord the backward travel time is s (from Γ₋) or τ − s (from Γ₊)
        let cuts: Vec<f64> = match side {
            Side::Minus => tb.clone(),
            Side::Plus => tb.iter().map(|b| tau - b).collect(),
        };
        let rule = split_rule(0.0, tau, &cuts, n_s);
        let sgn = if side == Side::Minus { 1.0 } else { -1.0 };
        let line = rule.integrate(|s| h.eval(geo::axpy(x, sgn * s, v), v));
        acc.push(grid.mu(c) * line);
    }
    crate::numeric::gauss::pairwise_sum(&acc)
}

/// Independent oracle: Fubini over lines parallel to each velocity direction.
/// Velocities are polar (`n_dir` equispaced directions, speed panels of the
/// measure refined at the function's speed breaks), positions are sliced
/// perpendicular to the velocity.
pub fn direct_phase_integral<F: PhaseFunction + ?Sized>(
    domain: &Domain,
    velocity: &VelocityMeasure,
    h: &F,
    n_dir: usize,
    n_line: usize,
) -> f64 {
    let dim = domain.dim();
    let r = domain.radius;
    let mut br = velocity.breaks.clone();
    br.extend(h.speed_breaks().into_iter().filter(|&b| b > 0.0 && b < velocity.rho_max));
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup();
    let speed_rule = Rule::composite(&br, 8);
    let tb = h.time_breaks();
    let dir_rule: Vec<(Vec3, f64)> = if dim == 2 {
        (0..n_dir)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / n_dir as f64;
                ([libm::cos(a), libm::sin(a), 0.0], 2.0 * PI / n_dir as f64)
            })
            .collect()
    } else {
        let rz = Rule::on_interval(n_dir / 2, -1.0, 1.0);
        let mut v = Vec::new();
        for (z, w) in rz.iter() {
            let s = libm::sqrt(1.0 - z * z);
            for k in 0..n_dir {
                let a = 2.0 * PI * (k as f64 + 0.5) / n_dir as f64;
                v.push(([s * libm::cos(a), s * libm::sin(a), z], w * 2.0 * PI / n_dir as f64));
            }
        }
        v
    };
    // offsets p of lines: 1-D for the disk, polar disk of offsets for the ball
    let offsets: Vec<(f64, f64, f64)> = if dim == 2 {
        // p = R sin β keeps the chord half-length R cos β smooth
        Rule::on_interval(n_line, -PI / 2.0, PI / 2.0)
            .iter()
            .map(|(b, w)| (r * libm::sin(b), 0.0, w * r * libm::cos(b)))
            .collect()
    } else {
        let mut v = Vec::new();
        let rb = Rule::on_interval(n_line, 0.0, PI / 2.0);
        let na = 2 * n_line;
        for (b, w) in rb.iter() {
            let pr = r * libm::sin(b);
            for k in 0..na {
                let a = 2.0 * PI * (k as f64 + 0.5) / na as f64;
                v.push((pr * libm::cos(a), pr * libm::sin(a), w * r * libm::cos(b) * pr * 2.0 * PI / na as f64));
            }
        }
        v
    };
    let mut total = Vec::new();
    for &(om, wd) in &dir_rule {
        let (e1, e2) = perpendicular_basis(om, dim);
        for (rho, wr) in speed_rule.iter() {
            let v = geo::scale(om, rho);
            let mut acc = 0.0;
            for &(p1, p2, wp) in &offsets {
                let base = geo::axpy(geo::axpy(domain.center, p1, e1), p2, e2);
                let half = libm::sqrt((r * r - p1 * p1 - p2 * p2).max(0.0));
                // backward travel time at q is (q + half)/ρ
                let cuts: Vec<f64> = tb.iter().map(|b| b * rho - half).collect();
                let rule = split_rule(-half, half, &cuts, n_line);
                acc += wp * rule.integrate(|q| h.eval(geo::axpy(base, q, om), v));
            }
            total.push(wd * wr * libm::pow(rho, (dim - 1) as f64) * acc);
        }
    }
    crate::numeric::gauss::pairwise_sum(&total)
}

fn perpendicular_basis(om: Vec3, dim: usize) -> (Vec3, Vec3) {
    if dim == 2 {
        ([-om[1], om[0], 0.0], [0.0; 3])
    } else {
        let a = if om[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = geo::cross(om, a);
        let e1 = geo::scale(e1, 1.0 / geo::norm(e1));
        (e1, geo::cross(om, e1))
    }
}

/// Result of a two-sided identity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

impl IdentityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        IdentityCheck { lhs, rhs, defect: (lhs - rhs).abs() / scale }
    }
}

/// `∫_{Γ₋} ψ dμ₋` against `∫_{Γ₊} ψ(x − τ₋ v, v) dμ₊`.
pub fn pushforward_identity_check<F: Fn(Vec3, Vec3) -> f64>(grid: &BoundaryGrid, psi: F) -> IdentityCheck {
    let mut l = Vec::with_capacity(grid.n_cells());
    let mut r = Vec::with_capacity(grid.n_cells());
    for c in 0..grid.n_cells() {
        let (i, j, s) = grid.cell_parts(c);
        let x = grid.nodes[i].x;
        let vm = grid.velocity_at(i, j, s, Side::Minus);
        l.push(grid.mu(c) * psi(x, vm));
        let vp = grid.velocity_at(i, j, s, Side::Plus);
        let tau = grid.domain.chord_from(x, geo::scale(vp, -1.0));
        let foot = grid.domain.project(geo::axpy(x, -tau, vp));
        r.push(grid.mu(c) * psi(foot, vp));
    }
    IdentityCheck::new(crate::numeric::gauss::pairwise_sum(&l), crate::numeric::gauss::pairwise_sum(&r))
}

/// Polar form `∫₀^{ρ_max} ρ^{d-1} ∫_{S^{d-1}} ψ(ρσ) dσ dρ` of a velocity integral.
pub fn polar_integral<F: Fn(Vec3) -> f64>(velocity: &VelocityMeasure, psi: F, n_angle: usize) -> f64 {
    let dim = velocity.dim;
    let mut acc = Vec::new();
    for (rho, wr) in velocity.speeds.iter() {
        let inner = if dim == 2 {
            let h = 2.0 * PI / n_angle as f64;
            (0..n_angle)
                .map(|k| {
                    let a = h * (k as f64 + 0.5);
                    psi([rho * libm::cos(a), rho * libm::sin(a), 0.0])
                })
                .sum::<f64>()
                * h
        } else {
            let rz = Rule::on_interval(n_angle / 2, -1.0, 1.0);
            let h = 2.0 * PI / n_angle as f64;
            rz.iter()
                .map(|(z, w)| {
                    let s = libm::sqrt(1.0 - z * z);
                    (0..n_angle)
                        .map(|k| {
                            let a = h * (k as f64 + 0.5);
                            psi([rho * s * libm::cos(a), rho * s * libm::sin(a), rho * z])
                        })
                        .sum::<f64>()
                        * w
                        * h
                })
                .sum()
        };
        acc.push(wr * libm::pow(rho, (dim - 1) as f64) * inner);
    }
    crate::numeric::gauss::pairwise_sum(&acc)
}

/// Cartesian tensor Gauss quadrature of `ψ` over `[-a, a]^d` in panels of width ≤ 1.
pub fn cartesian_velocity_integral<F: Fn(Vec3) -> f64>(dim: usize, psi: F, a: f64, n_per_panel: usize) -> f64 {
    let np = libm::ceil(2.0 * a) as usize;
    let breaks: Vec<f64> = (0..=np).map(|k| -a + 2.0 * a * k as f64 / np as f64).collect();
    let r = Rule::composite(&breaks, n_per_panel);
    let mut acc = Vec::new();
    for (x, wx) in r.iter() {
        for (y, wy) in r.iter() {
            if dim == 2 {
                acc.push(wx * wy * psi([x, y, 0.0]));
            } else {
                acc.push(wx * wy * r.integrate(|z| psi([x, y, z])));
            }
        }
    }
    crate::numeric::gauss::pairwise_sum(&acc)
}

/// `𝒥(x, y) = 1_{Σ₊(x)}(y) |(x−y)·n(x)| |(x−y)·n(y)| / |x−y|^{d+1}`.
pub fn jacobian(domain: &Domain, x: Vec3, y: Vec3) -> Result<f64> {
    let d = geo::sub(x, y);
    let l2 = geo::dot(d, d);
    if l2 == 0.0 {
        return Err(Error::SingularPair);
    }
    let l = libm::sqrt(l2);
    let nx = domain.normal(x);
    let ny = domain.normal(y);
    let a = geo::dot(d, nx);
    let b = geo::dot(d, ny);
    // σ = (x−y)/|x−y| leaves through x and enters through y
    if a <= geo::GRAZING_TOL * l || b >= -geo::GRAZING_TOL * l {
        return Ok(0.0);
    }
    let p = libm::pow(l, (domain.dim() + 1) as f64);
    Ok(a.abs() * b.abs() / p)
}

/// Both sides of the hemisphere-to-boundary change of variables at `x ∈ ∂Ω`.
pub fn sphere_to_boundary<P: Fn(f64) -> f64, G: Fn(Vec3) -> f64>(
    domain: &Domain,
    x: Vec3,
    phi: P,
    g: G,
    n: usize,
) -> IdentityCheck {
    let x = domain.project(x);
    let n_x = domain.normal(x);
    let (t1, t2) = domain.tangent_frame(x);
    let r = domain.radius;
    let (lhs, rhs) = if domain.dim() == 2 {
        let lhs = Rule::composite(&[-PI / 2.0, 0.0, PI / 2.0], n).integrate(|a| {
            let sigma = geo::add(geo::scale(n_x, libm::cos(a)), geo::scale(t1, libm::sin(a)));
            let tau = domain.chord_from(x, geo::scale(sigma, -1.0));
            libm::cos(a) * phi(tau) * g(domain.project(geo::axpy(x, -tau, sigma)))
        });
        let phi0 = libm::atan2(x[1] - domain.center[1], x[0] - domain.center[0]);
        let rhs = Rule::composite(&[0.0, PI, 2.0 * PI], n).integrate(|t| {
            let y = domain.disk_point(phi0 + t);
            let l = geo::norm(geo::sub(x, y));
            g(y) * phi(l) * jacobian(domain, x, y).unwrap_or(0.0) * r
        });
        (lhs, rhs)
    } else {
        let rz = Rule::on_interval(n, 0.0, 1.0);
        let na = 2 * n;
        let h = 2.0 * PI / na as f64;
        let mut lhs = 0.0;
        for (z, w) in rz.iter() {
            let s = libm::sqrt(1.0 - z * z);
            for k in 0..na {
                let a = h * (k as f64 + 0.5);
                let sigma = geo::add(
                    geo::scale(n_x, z),
                    geo::add(geo::scale(t1, s * libm::cos(a)), geo::scale(t2, s * libm::sin(a))),
                );
                let tau = domain.chord_from(x, geo::scale(sigma, -1.0));
                lhs += w * h * z * phi(tau) * g(domain.project(geo::axpy(x, -tau, sigma)));
            }
        }
        // y parameterized by chord length ℓ from x and an azimuth about n(x):
        // on a sphere of radius R, dA = ℓ dℓ dψ with cos β = 1 − ℓ²/(2R²)
        let rl = Rule::on_interval(n, 0.0, 2.0 * r);
        let mut rhs = 0.0;
        for (l, w) in rl.iter() {
            let cb = 1.0 - l * l / (2.0 * r * r);
            let sb = libm::sqrt((1.0 - cb * cb).max(0.0));
            for k in 0..na {
                let a = h * (k as f64 + 0.5);
                let dir = geo::add(
                    geo::scale(n_x, cb),
                    geo::add(geo::scale(t1, sb * libm::cos(a)), geo::scale(t2, sb * libm::sin(a))),
                );
                let y = geo::axpy(domain.center, r, dir);
                if geo::norm(geo::sub(x, y)) == 0.0 {
                    continue;
                }
                rhs += w * h * l * g(y) * phi(l) * jacobian(domain, x, y).unwrap_or(0.0);
            }
        }
        (lhs, rhs)
    };
    IdentityCheck::new(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_rule_reproduces_moments() {
        let m = VelocityMeasure::canonical(2, 8.0, 48).unwrap();
        assert_eq!(m.len(), 48);
        assert!((m.radial_mass() / 32.0 - 1.0).abs() < 1e-12);
        let m3 = VelocityMeasure::canonical(3, 8.0, 48).unwrap();
        assert!((m3.radial_mass() / (512.0 / 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_mass_matches_analytic() {
        let g = BoundaryGrid::new(Domain::unit_disk(), 64, 32, VelocityMeasure::canonical(2, 8.0, 48).unwrap(), DirectionRule::Uniform).unwrap();
        assert!((g.total_mass() / g.analytic_mass() - 1.0).abs() < 1e-6);
        assert!(g.dirs.iter().all(|d| d.local[0] > 0.0));
    }

    #[test]
    fn jacobian_on_circle_and_sphere() {
        let d = Domain::unit_disk();
        for k in 1..50 {
            let a = 0.37 * k as f64;
            let b = 1.91 * k as f64 + 0.2;
            let x = d.disk_point(a);
            let y = d.disk_point(b);
            let l = geo::norm(geo::sub(x, y));
            assert!((jacobian(&d, x, y).unwrap() - l / 4.0).abs() < 1e-14);
            assert_eq!(jacobian(&d, x, y).unwrap().to_bits(), jacobian(&d, y, x).unwrap().to_bits());
        }
        let s = Domain::unit_ball();
        let j = jacobian(&s, s.sphere_point(0.3, 1.0), s.sphere_point(-0.7, 2.5)).unwrap();
        assert!((j - 0.25).abs() < 1e-12);
        assert_eq!(jacobian(&d, d.disk_point(0.0), d.disk_point(0.0)), Err(Error::SingularPair));
    }

    #[test]
    fn change_of_variables_constant() {
        let d = Domain::unit_disk();
        let c = sphere_to_boundary(&d, d.disk_point(0.3), |_| 1.0, |_| 1.0, 32);
        assert!((c.lhs - 2.0).abs() < 1e-12 && (c.rhs - 2.0).abs() < 1e-9, "{c:?}");
        let s = Domain::unit_ball();
        let c = sphere_to_boundary(&s, s.sphere_point(0.2, 0.4), |_| 1.0, |_| 1.0, 24);
        assert!((c.lhs - PI).abs() < 1e-12 && (c.rhs - PI).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn phase_grid_exits_land_on_nodes() {
        let g = BoundaryGrid::new(Domain::unit_disk(), 16, 8, VelocityMeasure::canonical(2, 8.0, 16).unwrap(), DirectionRule::Uniform).unwrap();
        let pg = PhaseGrid::new(g, 4);
        let mut seen = alloc::vec![false; pg.grid.n_cells()];
        for &d in &pg.dest {
            assert!(!seen[d]);
            seen[d] = true;
        }
    }
}
