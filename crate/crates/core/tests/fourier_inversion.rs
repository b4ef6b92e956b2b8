use freestream_core::boundary::{KernelSpec, NodalKernel};
use freestream_core::geometry::{Domain, Vec3};
use freestream_core::numeric::linalg::norm1;
use freestream_core::tauberian::*;
use freestream_core::transport::*;
use freestream_core::Error;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(x0: [f64; 2], w: f64, temp: f64) -> impl Fn(Vec3, Vec3) -> f64 {
    move |x: Vec3, v: Vec3| {
        let r2 = (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2);
        let s2 = v[0] * v[0] + v[1] * v[1];
        s2 * (-r2 / w - s2 / (2.0 * temp)).exp()
    }
}

struct Setup {
    nk: NodalKernel,
    q: FluxQuadrature,
    j1: FluxTable,
    raw: FluxTable,
}

fn setup() -> Setup {
    let nk = NodalKernel::new(&Domain::unit_disk(), &KernelSpec::maxwell(2, 1.0), 16, 4).unwrap();
    let q = FluxQuadrature { dt: 0.02, n_t: 351, arc_points: 2, dir_panels: 4, dir_points: 6, speed_panels: 4, speed_points: 6, rho_max: 8.0 };
    let ja = first_exit_flux(&nk, &bump([0.3, 0.1], 0.2, 1.0), &q).unwrap();
    let jb = first_exit_flux(&nk, &bump([-0.2, -0.4], 0.3, 0.6), &q).unwrap();
    Setup { j1: zero_mean_flux(&ja, &jb).unwrap(), raw: ja, nk, q }
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm1(&d) / norm1(b)
}

#[test]
fn boundary_function_derivatives_symmetry_and_zero_branch() {
    let s = setup();
    assert!(matches!(NodalSurrogate::new(&s.nk, &s.raw, 4, 1), Err(Error::ZeroMeanRequired { .. })));
    let sur = NodalSurrogate::new(&s.nk, &s.j1, 4, 1).unwrap();
    // analytic first derivative against a central difference
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut etas: Vec<f64> = vec![2.0];
    etas.extend((0..20).map(|_| rng.random_range(0.05..15.0) * if rng.random::<bool>() { 1.0 } else { -1.0 }));
    for &e in &etas {
        let h = 1e-4 * e.abs().max(1.0);
        let (a, b, c) = (sur.eval(e).unwrap(), sur.eval(e + h).unwrap(), sur.eval(e - h).unwrap());
        let fd: Vec<C64> = b[0].iter().zip(&c[0]).map(|(x, y)| (x - y) / (2.0 * h)).collect();
        let r = rel(&a[1], &fd);
        assert!(r < 1e-3, "η = {e}: {r}");
    }
    // Hermitian symmetry of the real-data transform
    let (p, m) = (sur.eval(3.7).unwrap(), sur.eval(-3.7).unwrap());
    let conj: Vec<C64> = p[0].iter().map(|z| z.conj()).collect();
    assert!(rel(&m[0], &conj) < 1e-12);
    let dconj: Vec<C64> = p[1].iter().map(|z| -z.conj()).collect();
    assert!(rel(&m[1], &dconj) < 1e-12);
    // zeroth order equals the tail of the Neumann series Σ_{k≥n} K^k ĝ
    let lam = C64::new(0.0, 2.0);
    let k = s.nk.matrix(lam, 0).unwrap();
    let mut term = s.j1.transform(lam, 0).unwrap();
    let mut tail = vec![C64::new(0.0, 0.0); term.len()];
    for order in 0..3000 {
        if order >= 4 {
            tail.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
        }
        term = k.matvec(&term);
    }
    assert!(rel(&sur.eval(2.0).unwrap()[0], &tail) < 1e-10);
    // continuity of the η = 0 branch
    let z = sur.eval(0.0).unwrap();
    for e in [1e-3, -1e-3] {
        let r = rel(&sur.eval(e).unwrap()[0], &z[0]);
        assert!(r < 1e-2, "{e}: {r}");
    }
}

#[test]
fn inversion_reproduces_the_time_domain_remainder() {
    let s = setup();
    let n = 4;
    let sur = NodalSurrogate::new(&s.nk, &s.j1, n, 1).unwrap();
    let (w, _, _) = select_eta_max(&s.nk, 3, 2.0, 1e-3, 10).unwrap();
    let eta = eta_grid(w, 1e-3, 0.05).unwrap();
    let sample = psi_n_profile(&sur, &eta).unwrap();
    assert!(sample.tail_ratio() < 1e-3);
    let kernel = FlightKernel::new(&s.nk, s.q.dt, s.q.n_t).unwrap();
    let rem = time_domain_remainder(&kernel, &s.j1, n).unwrap();
    let surv = SurvivalTable::new(&s.nk, 8.0, 0.005).unwrap();
    let ctl = InversionControls { step: s.q.dt, ..Default::default() };
    let pts = fourier_invert(&sample, &surv, &[0.0, 3.0, 6.0], &ctl, Some(&rem)).unwrap();
    assert_eq!(pts[0].direct_norm, 0.0);
    for p in &pts[1..] {
        let (rn, gap) = p.reference.unwrap();
        assert!(gap / rn < 0.05, "t = {}: {} vs {}", p.t, gap, rn);
        let (_, bp) = p.by_parts.unwrap();
        assert!(bp / p.direct_norm < 0.01, "t = {}: by parts {}", p.t, bp / p.direct_norm);
        assert!(p.imag_ratio < 1e-6);
    }
    // a window that is too small is rejected with a larger suggestion
    let short = eta_grid(2.0, 1e-3, 0.05).unwrap();
    match fourier_invert(&psi_n_profile(&sur, &short).unwrap(), &surv, &[1.0], &ctl, None) {
        Err(Error::EtaMaxTooSmall { suggested }) => assert!(suggested > 2.0),
        other => panic!("{other:?}"),
    }
    // modulus of continuity of Θ_f
    let sl = [0.0, 0.1, 0.5, 2.0, 1e3];
    let om = theta_modulus(&sample, &surv, &sl, 7, 8.0);
    assert_eq!(om[0], 0.0);
    assert!(om.windows(2).all(|x| x[0] <= x[1]));
}
