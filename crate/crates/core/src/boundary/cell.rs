//! Cell-grid (piecewise-constant Nyström) versions of `H`, `M_λ`, `G_λ`,
//! `Ξ_λ`, `R_λ` and the composite `M_λH`.
//!
//! Boundary grid functions are point values at cell nodes; their `L¹±`
//! norms are `Σ μ_c |u_c|`. Phase functions live on a [`PhaseGrid`].

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::measure::{BoundaryGrid, PhaseGrid, PhaseGridFunction};
use crate::numeric::gauss::{pairwise_sum, Rule};
use crate::numeric::linalg::CMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);

pub(crate) fn check_lambda(lambda: C64) -> Result<()> {
    if lambda.re < 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(Error::Parameter { what: "Re λ must be nonnegative" });
    }
    Ok(())
}

fn check_len(len: usize, want: usize, what: &'static str) -> Result<()> {
    if len != want {
        return Err(Error::GridMismatch { what });
    }
    Ok(())
}

/// μ-weighted `L¹` norm of a boundary grid function.
pub fn boundary_norm(grid: &BoundaryGrid, u: &[C64]) -> f64 {
    let terms: Vec<f64> = u.iter().enumerate().map(|(c, z)| grid.mu(c) * z.norm()).collect();
    pairwise_sum(&terms)
}

/// μ-weighted integral of a boundary grid function.
pub fn boundary_integral(grid: &BoundaryGrid, u: &[C64]) -> C64 {
    let re: Vec<f64> = u.iter().enumerate().map(|(c, z)| grid.mu(c) * z.re).collect();
    let im: Vec<f64> = u.iter().enumerate().map(|(c, z)| grid.mu(c) * z.im).collect();
    C64::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// The diffuse kernel sampled on a boundary grid, normalized per node so
/// that the discrete `H` is exactly stochastic.
#[derive(Clone, Debug)]
pub struct WallModel {
    pub spec: KernelSpec,
    /// Discrete `γ` per node.
    pub gamma: Vec<f64>,
    /// `G(x_i, ρ_l) / γ_i`, indexed `i * n_speeds + l`.
    profile: Vec<f64>,
    n_speeds: usize,
}

impl WallModel {
    pub fn new(spec: &KernelSpec, grid: &BoundaryGrid) -> Result<Self> {
        spec.validate(&grid.domain)?;
        let ns = grid.n_speeds();
        let flux: f64 = grid.dirs.iter().map(|d| d.flux).sum();
        let mut gamma = Vec::with_capacity(grid.n_nodes());
        let mut profile = Vec::with_capacity(grid.n_nodes() * ns);
        for nd in &grid.nodes {
            let th = spec.theta_at(&grid.domain, nd.x);
            let g: Vec<f64> = (0..ns).map(|l| spec.g(th, grid.speed(l))).collect();
            let gam = flux * (0..ns).map(|l| g[l] * grid.speed(l) * grid.speed_mass(l)).sum::<f64>();
            if !(gam > 0.0) {
                return Err(Error::Parameter { what: "kernel normalization vanishes on the grid" });
            }
            gamma.push(gam);
            profile.extend(g.iter().map(|x| x / gam));
        }
        Ok(WallModel { spec: spec.clone(), gamma, profile, n_speeds: ns })
    }

    /// `γ₀ = min γ(x)`.
    pub fn gamma_min(&self) -> f64 {
        self.gamma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `𝒌(x_i, v, ·)` for a cell with speed index `l` at node `i`.
    #[inline]
    pub fn kernel(&self, node: usize, l: usize) -> f64 {
        self.profile[node * self.n_speeds + l]
    }

    /// Outgoing flux per node: `a_i = ∫_{Γ₊(x_i)} ψ |v·n| dv`.
    pub fn node_flux(&self, grid: &BoundaryGrid, psi: &[C64]) -> Vec<C64> {
        let per = grid.n_dirs() * grid.n_speeds();
        (0..grid.n_nodes())
            .map(|i| {
                let mut a = ZERO;
                for j in 0..grid.n_dirs() {
                    let f = grid.dirs[j].flux;
                    for l in 0..grid.n_speeds() {
                        a += psi[i * per + j * grid.n_speeds() + l] * (f * grid.speed(l) * grid.speed_mass(l));
                    }
                }
                a
            })
            .collect()
    }

    /// `𝒌 a`: the Γ₋ function emitted by node fluxes `a`.
    pub fn emit(&self, grid: &BoundaryGrid, a: &[C64]) -> Vec<C64> {
        let mut out = Vec::with_capacity(grid.n_cells());
        for (i, ai) in a.iter().enumerate() {
            for _ in 0..grid.n_dirs() {
                for l in 0..grid.n_speeds() {
                    out.push(ai * self.kernel(i, l));
                }
            }
        }
        out
    }

    /// `Hψ` for ψ on Γ₊.
    pub fn apply_h(&self, grid: &BoundaryGrid, psi: &[C64]) -> Result<Vec<C64>> {
        check_len(psi.len(), grid.n_cells(), "H input must live on the boundary grid")?;
        check_len(self.gamma.len(), grid.n_nodes(), "wall model built for another grid")?;
        Ok(self.emit(grid, &self.node_flux(grid, psi)))
    }

    /// Largest `|∫ 𝒌(x, v, v′)|v·n| dv − 1|` over nodes.
    pub fn normalization_defect(&self, grid: &BoundaryGrid) -> f64 {
        let flux: f64 = grid.dirs.iter().map(|d| d.flux).sum();
        (0..grid.n_nodes())
            .map(|i| {
                let s: f64 = (0..grid.n_speeds()).map(|l| self.kernel(i, l) * grid.speed(l) * grid.speed_mass(l)).sum();
                (flux * s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `M_λ u` for `u` on Γ₋: exact transport along chords, full cell mass
/// deposited in the Γ₊ cell containing the exact foot.
pub fn apply_m(pg: &PhaseGrid, lambda: C64, u: &[C64]) -> Result<Vec<C64>> {
    check_lambda(lambda)?;
    let grid = &pg.grid;
    check_len(u.len(), grid.n_cells(), "M input must live on the boundary grid")?;
    let mut out = alloc::vec![ZERO; grid.n_cells()];
    for c in 0..grid.n_cells() {
        let d = pg.dest[c];
        out[d] += u[c] * (-lambda * pg.tau[c]).exp() * (grid.mu(c) / grid.mu(d));
    }
    Ok(out)
}

/// `G_λ φ` on Γ₊: `∫_0^{τ₋} φ(x − s v, v) e^{−λ s} ds`.
pub fn apply_g(pg: &PhaseGrid, lambda: C64, phi: &PhaseGridFunction) -> Result<Vec<C64>> {
    check_lambda(lambda)?;
    let grid = &pg.grid;
    check_len(phi.values.len(), pg.len(), "G input must live on the phase grid")?;
    let na = pg.n_along();
    let mut out = alloc::vec![ZERO; grid.n_cells()];
    for c in 0..grid.n_cells() {
        let tau = pg.tau[c];
        let mut acc = ZERO;
        for k in 0..na {
            acc += phi.values[c * na + k] * (-lambda * tau * (1.0 - pg.along.nodes[k])).exp() * pg.along.weights[k];
        }
        let d = pg.dest[c];
        out[d] += acc * (tau * grid.mu(c) / grid.mu(d));
    }
    Ok(out)
}

/// `Ξ_λ u`: lift of Γ₋ data along backward characteristics,
/// `u(x − t₋v, v) e^{−λ t₋}`.
///
/// At `λ = 0` the lift is only bounded on `𝕐₁⁻`; callers must assert that
/// `u` carries the `τ₊` weight via `u_in_y1`.
pub fn apply_xi(pg: &PhaseGrid, lambda: C64, u: &[C64], u_in_y1: bool) -> Result<PhaseGridFunction> {
    check_lambda(lambda)?;
    if lambda == ZERO && !u_in_y1 {
        return Err(Error::WeightRequired);
    }
    let grid = &pg.grid;
    check_len(u.len(), grid.n_cells(), "Ξ input must live on the boundary grid")?;
    let na = pg.n_along();
    let mut values = Vec::with_capacity(pg.len());
    for c in 0..grid.n_cells() {
        for k in 0..na {
            values.push(u[c] * (-lambda * pg.s(c, k)).exp());
        }
    }
    Ok(PhaseGridFunction { values })
}

/// Product-integration weights `A[k][q] = ∫_0^{u_k} ℓ_q(u′) e^{−z(u_k−u′)} du′`
/// for the along-chord Lagrange basis.
fn resolvent_weights(along: &Rule, z: C64) -> Vec<C64> {
    let n = along.len();
    let sub = Rule::gauss_legendre(24);
    let mut a = alloc::vec![ZERO; n * n];
    for k in 0..n {
        let uk = along.nodes[k];
        for (s, w) in sub.iter() {
            let up = 0.5 * uk * (s + 1.0);
            let e = (-z * (uk - up)).exp() * (0.5 * uk * w);
            for q in 0..n {
                let mut l = 1.0;
                for m in 0..n {
                    if m != q {
                        l *= (up - along.nodes[m]) / (along.nodes[q] - along.nodes[m]);
                    }
                }
                a[k * n + q] += e * l;
            }
        }
    }
    a
}

/// `R_λ φ = ∫_0^{t₋} φ(x − t v, v) e^{−λ t} dt`.
pub fn apply_r(pg: &PhaseGrid, lambda: C64, phi: &PhaseGridFunction) -> Result<PhaseGridFunction> {
    check_lambda(lambda)?;
    check_len(phi.values.len(), pg.len(), "R input must live on the phase grid")?;
    let na = pg.n_along();
    let mut values = alloc::vec![ZERO; pg.len()];
    for c in 0..pg.grid.n_cells() {
        let tau = pg.tau[c];
        let a = resolvent_weights(&pg.along, lambda * tau);
        for k in 0..na {
            let mut acc = ZERO;
            for q in 0..na {
                acc += a[k * na + q] * phi.values[c * na + q];
            }
            values[c * na + k] = acc * tau;
        }
    }
    Ok(PhaseGridFunction { values })
}

/// What an [`OperatorMatrix`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    H,
    MLambda,
    MLambdaH,
    Composition,
}

/// A discretized boundary operator `Γ₊ → Γ₊` (or `Γ₊ → Γ₋` for `H`).
///
/// `M_λH` is stored in factored form: a sparse column per Γ₋ cell (its
/// deposition target and weight) after the rank-one-per-node `H`. The dense
/// matrix is available for small grids.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub lambda: C64,
    pub fingerprint: u64,
    n_cells: usize,
    n_nodes: usize,
    per_node: usize,
    /// Node of each input cell and its flux weight `|v·n| dv`.
    in_weight: Vec<f64>,
    /// Output row and value for each Γ₋ cell of the emitted profile.
    out_row: Vec<usize>,
    out_val: Vec<C64>,
}

impl OperatorMatrix {
    /// `H` itself (`M` replaced by the identity on cells).
    pub fn h(wall: &WallModel, grid: &BoundaryGrid) -> Self {
        let (in_weight, per_node) = Self::weights(grid);
        let out_row = (0..grid.n_cells()).collect();
        let out_val = (0..grid.n_cells())
            .map(|c| {
                let (i, _, l) = grid.cell_parts(c);
                C64::new(wall.kernel(i, l), 0.0)
            })
            .collect();
        OperatorMatrix {
            kind: OperatorKind::H,
            lambda: ZERO,
            fingerprint: grid.fingerprint(),
            n_cells: grid.n_cells(),
            n_nodes: grid.n_nodes(),
            per_node,
            in_weight,
            out_row,
            out_val,
        }
    }

    /// `M_λ H` on the cell grid.
    pub fn m_lambda_h(wall: &WallModel, pg: &PhaseGrid, lambda: C64) -> Result<Self> {
        check_lambda(lambda)?;
        let grid = &pg.grid;
        let (in_weight, per_node) = Self::weights(grid);
        let mut out_row = Vec::with_capacity(grid.n_cells());
        let mut out_val = Vec::with_capacity(grid.n_cells());
        for c in 0..grid.n_cells() {
            let (i, _, l) = grid.cell_parts(c);
            let d = pg.dest[c];
            out_row.push(d);
            out_val.push((-lambda * pg.tau[c]).exp() * (wall.kernel(i, l) * grid.mu(c) / grid.mu(d)));
        }
        Ok(OperatorMatrix {
            kind: OperatorKind::MLambdaH,
            lambda,
            fingerprint: grid.fingerprint(),
            n_cells: grid.n_cells(),
            n_nodes: grid.n_nodes(),
            per_node,
            in_weight,
            out_row,
            out_val,
        })
    }

    fn weights(grid: &BoundaryGrid) -> (Vec<f64>, usize) {
        let w = (0..grid.n_cells())
            .map(|c| {
                let (_, j, l) = grid.cell_parts(c);
                grid.dirs[j].flux * grid.speed(l) * grid.speed_mass(l)
            })
            .collect();
        (w, grid.n_dirs() * grid.n_speeds())
    }

    pub fn dim(&self) -> usize {
        self.n_cells
    }

    fn node_of(&self, c: usize) -> usize {
        c / self.per_node
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok(self.emit(&self.collect(x)?))
    }

    fn emit(&self, a: &[C64]) -> Vec<C64> {
        let mut out = alloc::vec![ZERO; self.n_cells];
        for c in 0..self.n_cells {
            out[self.out_row[c]] += self.out_val[c] * a[self.node_of(c)];
        }
        out
    }

    /// Reduced node matrix `K[i′][i]` acting on node fluxes:
    /// `a′ = K a` whenever `φ′ = (M_λH) φ`.
    pub fn node_matrix(&self) -> CMatrix {
        let mut k = CMatrix::zeros(self.n_nodes, self.n_nodes);
        for c in 0..self.n_cells {
            let r = self.out_row[c];
            let ip = self.node_of(r);
            k[(ip, self.node_of(c))] += self.out_val[c] * self.in_weight[r];
        }
        k
    }

    /// The cell function emitted by unit flux at node `i`, i.e. column `i`
    /// of the left factor.
    pub fn node_column(&self, i: usize) -> Vec<C64> {
        let mut a = alloc::vec![ZERO; self.n_nodes];
        a[i] = C64::new(1.0, 0.0);
        self.emit(&a)
    }

    /// Apply the left factor to node fluxes.
    pub fn emit_nodes(&self, a: &[C64]) -> Vec<C64> {
        self.emit(a)
    }

    /// The right factor: node fluxes `a_i = Σ_{c ∈ i} |v·n| dv x_c`, so that
    /// `apply = emit_nodes ∘ collect` and `node_matrix = collect ∘ emit_nodes`.
    pub fn collect(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(x.len(), self.n_cells, "operator input length")?;
        let mut a = alloc::vec![ZERO; self.n_nodes];
        for (c, xc) in x.iter().enumerate() {
            a[self.node_of(c)] += xc * self.in_weight[c];
        }
        Ok(a)
    }

    /// Dense matrix (only for small grids).
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n_cells > 6000 {
            return Err(Error::Unsupported { what: "dense assembly beyond 6000 cells" });
        }
        let mut m = CMatrix::zeros(self.n_cells, self.n_cells);
        for c in 0..self.n_cells {
            let i = self.node_of(c);
            for cp in i * self.per_node..(i + 1) * self.per_node {
                m[(self.out_row[c], cp)] += self.out_val[c] * self.in_weight[cp];
            }
        }
        Ok(m)
    }

    /// μ-weighted operator 1-norm of `(self)^p`: the largest column mass.
    ///
    /// Columns only depend on the input node, so the norm is a maximum over
    /// nodes of `‖L K^{p−1} e_i‖_μ / π_i`.
    pub fn power_norm(&self, grid: &BoundaryGrid, p: usize) -> f64 {
        assert!(p >= 1);
        let k = self.node_matrix();
        let kp = k.powi(p - 1);
        let mut best: f64 = 0.0;
        let mut b = alloc::vec![ZERO; self.n_nodes];
        for i in 0..self.n_nodes {
            for (ip, bi) in b.iter_mut().enumerate() {
                *bi = kp[(ip, i)];
            }
            let col = self.emit(&b);
            best = best.max(boundary_norm(grid, &col) / grid.nodes[i].weight);
        }
        best
    }

    pub fn norm(&self, grid: &BoundaryGrid) -> f64 {
        self.power_norm(grid, 1)
    }

    /// `max_c |Σ_r μ_r A[r][c] / μ_c − 1|`: column stochasticity defect.
    pub fn stochastic_defect(&self, grid: &BoundaryGrid) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n_nodes {
            let col = self.node_column(i);
            let mass = boundary_integral(grid, &col);
            // a column for input cell c is this node column times in_weight[c];
            // its μ-mass relative to μ_c is mass · in_weight[c] / μ_c = mass / π_i
            best = best.max((mass / grid.nodes[i].weight - 1.0).norm());
        }
        best
    }

    /// Entrywise modulus as a new operator.
    pub fn modulus(&self) -> Self {
        let mut m = self.clone();
        for v in m.out_val.iter_mut() {
            *v = C64::new(v.norm(), 0.0);
        }
        m.kind = OperatorKind::Composition;
        m
    }

    /// Zero every entry whose output cell fails `keep`.
    pub fn mask_outputs(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut m = self.clone();
        for (c, v) in m.out_val.iter_mut().enumerate() {
            if !keep(self.out_row[c]) {
                *v = ZERO;
            }
        }
        m.kind = OperatorKind::Composition;
        m
    }

    /// Entrywise sum of two operators with the same sparsity.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.out_row != other.out_row || self.in_weight != other.in_weight {
            return Err(Error::GridMismatch { what: "operators with different structure" });
        }
        let mut m = self.clone();
        for (a, b) in m.out_val.iter_mut().zip(&other.out_val) {
            *a += b;
        }
        m.kind = OperatorKind::Composition;
        Ok(m)
    }

    /// Largest entrywise difference of two operators with the same sparsity.
    pub fn max_entry_difference(&self, other: &Self) -> f64 {
        self.out_val.iter().zip(&other.out_val).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::measure::{DirectionRule, VelocityMeasure};

    fn grid(n_angle: usize, n_dir: usize, n_speed: usize) -> (KernelSpec, PhaseGrid) {
        let vm = VelocityMeasure::canonical(2, 8.0, n_speed).unwrap();
        let g = BoundaryGrid::new(Domain::unit_disk(), n_angle, n_dir, vm, DirectionRule::Uniform).unwrap();
        (KernelSpec::maxwell(2, 1.0), PhaseGrid::new(g, 4))
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<C64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                C64::new((s >> 11) as f64 / (1u64 << 53) as f64, 0.0)
            })
            .collect()
    }

    #[test]
    fn h_maps_maxwellian_to_itself() {
        let (spec, pg) = grid(16, 8, 48);
        let g = &pg.grid;
        let wall = WallModel::new(&spec, g).unwrap();
        let m1: Vec<C64> = (0..g.n_cells()).map(|c| C64::new(spec.g(1.0, g.speed(g.cell_parts(c).2)), 0.0)).collect();
        let out = wall.apply_h(g, &m1).unwrap();
        for (a, b) in out.iter().zip(&m1) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300) + 1e-300);
        }
        assert!(wall.normalization_defect(g) < 1e-12);
        assert!((wall.gamma[0] - spec.gamma(1.0)).abs() < 1e-3);
    }

    #[test]
    fn matrix_matches_composition() {
        let (spec, pg) = grid(8, 4, 16);
        let g = &pg.grid;
        let wall = WallModel::new(&spec, g).unwrap();
        for &lam in &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 3.0)] {
            let op = OperatorMatrix::m_lambda_h(&wall, &pg, lam).unwrap();
            let dense = op.to_dense().unwrap();
            for seed in 0..3 {
                let x = pseudo_random(g.n_cells(), seed);
                let composed = apply_m(&pg, lam, &wall.apply_h(g, &x).unwrap()).unwrap();
                let a = op.apply(&x).unwrap();
                let b = dense.matvec(&x);
                for k in 0..x.len() {
                    assert!((a[k] - composed[k]).norm() < 1e-12 && (b[k] - composed[k]).norm() < 1e-12);
                }
            }
            // power norm through nodes agrees with the dense column maximum
            let mu = g.mu_weights();
            let sq = dense.matmul(&dense);
            let mut best: f64 = 0.0;
            for c in 0..g.n_cells() {
                let s: f64 = (0..g.n_cells()).map(|r| mu[r] * sq[(r, c)].norm()).sum();
                best = best.max(s / mu[c]);
            }
            assert!((op.power_norm(g, 2) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn contraction_and_modulus() {
        let (spec, pg) = grid(8, 4, 16);
        let g = &pg.grid;
        let wall = WallModel::new(&spec, g).unwrap();
        let m0 = OperatorMatrix::m_lambda_h(&wall, &pg, ZERO).unwrap();
        assert!(m0.stochastic_defect(g) < 1e-12);
        let mi = OperatorMatrix::m_lambda_h(&wall, &pg, C64::new(0.0, 2.5)).unwrap();
        assert!(mi.modulus().max_entry_difference(&m0) < 1e-15);
        let m1 = OperatorMatrix::m_lambda_h(&wall, &pg, C64::new(1.0, 0.0)).unwrap();
        assert!(m1.norm(g) < 1.0);
    }

    #[test]
    fn g0_isometry_and_resolvent_bound() {
        let (_, pg) = grid(8, 4, 16);
        let phi = pg.sample(&|x: [f64; 3], v: [f64; 3]| (1.0 + 0.3 * x[0]) * libm::exp(-0.5 * (v[0] * v[0] + v[1] * v[1])));
        let g0 = apply_g(&pg, ZERO, &phi).unwrap();
        let lhs = boundary_norm(&pg.grid, &g0);
        let rhs = pg.norm(&phi, 0);
        assert!((lhs / rhs - 1.0).abs() < 1e-12);
        let r1 = apply_r(&pg, C64::new(1.0, 0.0), &phi).unwrap();
        assert!(pg.norm(&r1, 0) <= rhs * (1.0 + 1e-9));
        let u: Vec<C64> = (0..pg.grid.n_cells()).map(|c| C64::new(1.0 + (c % 3) as f64, 0.0)).collect();
        assert!(matches!(apply_xi(&pg, ZERO, &u, false), Err(Error::WeightRequired)));
        let xi = apply_xi(&pg, C64::new(2.0, 0.0), &u, false).unwrap();
        assert!(pg.norm(&xi, 0) <= boundary_norm(&pg.grid, &u) / 2.0 * (1.0 + 1e-9));
        assert!(matches!(apply_m(&pg, C64::new(-1.0, 0.0), &u), Err(Error::Parameter { .. })));
    }

    #[test]
    fn single_cell_transport_factor() {
        let (_, pg) = grid(8, 4, 16);
        let g = &pg.grid;
        let c = g.cell_index(3, 2, 5);
        let mut u = alloc::vec![ZERO; g.n_cells()];
        u[c] = C64::new(1.0, 0.0);
        let out = apply_m(&pg, C64::new(1.0, 0.0), &u).unwrap();
        let d = pg.dest[c];
        let want = libm::exp(-pg.tau[c]) * g.mu(c) / g.mu(d);
        assert!((out[d].re - want).abs() < 1e-15);
    }
}
