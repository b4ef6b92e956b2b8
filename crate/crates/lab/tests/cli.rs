use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn freestream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freestream")).args(args).env("FREESTREAM_THREADS", "1").output().expect("binary runs")
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let seed = if extra.contains(&"--seed") { vec![] } else { vec!["--seed", "7"] };
    let mut args = vec!["simulate", "--particles", "4000", "--t-max", "10", "--out", out.to_str().unwrap()];
    args.extend(seed);
    args.extend_from_slice(extra);
    freestream(&args)
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&a, &[]).status.success());
    assert!(simulate(&b, &[]).status.success());
    let (x, y) = (fs::read(a.join("decay.csv")).unwrap(), fs::read(b.join("decay.csv")).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    let head: Vec<&str> = text.lines().take(6).collect();
    assert!(head[0].starts_with("# config_hash="));
    assert!(head[1].starts_with("# grid_fingerprint="));
    assert_eq!(head[2], "# seed=7");
    assert_eq!(head[3], "# rho_max=8");
    assert!(head[4].starts_with("# version="));
    assert!(head[5].starts_with("t,mass,distance,stderr,class_0"));
    let c = dir.path().join("c");
    assert!(simulate(&c, &["--seed", "8"]).status.success());
    assert_ne!(fs::read(c.join("decay.csv")).unwrap(), y);
}

#[test]
fn custom_particle_file_keeps_signed_mass() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.csv");
    fs::write(&file, "x,y,vx,vy,w\n0.1,0.2,1.0,0.0,1.0\n-0.3,0.0,0.0,-0.5,-0.5\n").unwrap();
    let out = dir.path().join("o");
    let o = simulate(&out, &["--init", "custom-file", "--set", &format!("mc.init_file={}", file.display())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("decay.csv")).unwrap();
    let first = text.lines().find(|l| l.starts_with("0,")).unwrap();
    let mass: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((mass - 0.5).abs() < 1e-12, "{mass}");
}

#[test]
fn malformed_config_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[grid]\nn_angle = 32\nn_dir = zero\n").unwrap();
    let o = freestream(&["geom-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("grid.n_dir"), "{err}");
    let o = freestream(&["geom-check", "--set", "grid.n_angel=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean `grid.n_angle`"));
}

#[test]
fn exit_code_reflects_suite_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = freestream(&["geom-check", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS  2 change-of-variables"));
    // the small-velocity slope is δ³, not δ²: a known failing criterion
    let o = freestream(&["spectral", "--set", "grid.n_angle=16", "--set", "grid.n_dir=8", "--set", "grid.n_speed=24", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("failed:") && err.contains("small-velocity-split"), "{err}");
    assert!(dir.path().join("spectral.csv").exists());
}
