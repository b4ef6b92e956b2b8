//! `HM_λH` assembled through the cell grid (deposition ∘ emission) against
//! the kernel form `𝒥_λ` built from the boundary Jacobian.

use freestream_core::boundary::{KernelSpec, NodalKernel, OperatorMatrix, WallModel};
use freestream_core::geometry::Domain;
use freestream_core::measure::{BoundaryGrid, DirectionRule, PhaseGrid, VelocityMeasure};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn composition_matches_kernel_form() {
    // 1024 uniform direction cells tile the 16 arcs exactly under chord
    // transport; 240 speeds resolve e^{−iηℓ/ρ} for η ≤ 5
    let vm = VelocityMeasure::canonical(2, 8.0, 240).unwrap();
    let g = BoundaryGrid::new(Domain::unit_disk(), 16, 1024, vm, DirectionRule::Uniform).unwrap();
    let pg = PhaseGrid::new(g, 2);
    let spec = KernelSpec::maxwell(2, 1.0);
    let wall = WallModel::new(&spec, &pg.grid).unwrap();
    let nk = NodalKernel::new(&Domain::unit_disk(), &spec, 16, 64).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for lam in [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.5, 5.0)] {
        let a = OperatorMatrix::m_lambda_h(&wall, &pg, lam).unwrap().node_matrix();
        let b = nk.matrix(lam, 0).unwrap();
        for _ in 0..10 {
            let x: Vec<C64> = (0..16).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let (ya, yb) = (a.matvec(&x), b.matvec(&x));
            let diff: f64 = ya.iter().zip(&yb).map(|(p, q)| (p - q).norm()).sum();
            let size: f64 = x.iter().map(|z| z.norm()).sum();
            assert!(diff <= 1e-5 * size, "λ = {lam}: {diff:e} vs {size}");
        }
    }
}
