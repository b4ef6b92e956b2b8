use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freestream_lab::config::{load_particles, ConfigError, ExperimentConfig, InitKind};
use freestream_lab::mc::simulate;
use freestream_lab::output::{loglog_svg, Header, Table};
use freestream_lab::suite::{decay_table, Outcome, Status, Suite};

/// Environment variable holding the worker-thread count.
const THREADS_ENV: &str = "FREESTREAM_THREADS";

#[derive(Parser)]
#[command(name = "freestream", version, about = "Diffuse-wall free transport: checks, Monte Carlo and reports")]
struct Cli {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG log-log plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Override a configuration key, e.g. `--set grid.n_angle=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Change-of-variables and sphere Jacobian checks.
    GeomCheck,
    /// Boundary/phase-space integration identities (CSV of lhs, rhs, defect).
    ChvarCheck,
    /// Stochasticity, eigenvalue derivative, axis radius, norm decay, small-velocity split.
    Spectral(SpectralArgs),
    /// Invariant density and free-flow decay.
    Invariant,
    /// Monte Carlo of the configured initial data; writes the decay CSV.
    Simulate(SimulateArgs),
    /// Resolvent series and Fourier inversion of the boundary function.
    Tauberian(TauberianArgs),
    /// Every acceptance criterion.
    Report,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    eta_max: Option<String>,
    #[arg(long)]
    n_eta: Option<String>,
    #[arg(long)]
    power: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    particles: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    /// Comma list; `log:start:stop:count` adds log-spaced times.
    #[arg(long)]
    record: Option<String>,
    /// equilibrium | uniform-maxwell | ring | custom-file
    #[arg(long)]
    init: Option<String>,
}

#[derive(Args)]
struct TauberianArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    eta_max: Option<String>,
    /// Comma list of inversion times.
    #[arg(long)]
    t_list: Option<String>,
}

impl Cmd {
    fn flags(&self) -> Vec<(&'static str, Option<&String>)> {
        match self {
            Cmd::Spectral(a) => vec![("spectral.eta_max", a.eta_max.as_ref()), ("spectral.n_eta", a.n_eta.as_ref()), ("spectral.power", a.power.as_ref())],
            Cmd::Simulate(a) => vec![
                ("mc.particles", a.particles.as_ref()),
                ("mc.seed", a.seed.as_ref()),
                ("mc.t_max", a.t_max.as_ref()),
                ("mc.record", a.record.as_ref()),
                ("mc.init", a.init.as_ref()),
            ],
            Cmd::Tauberian(a) => vec![("tauberian.n", a.n.as_ref()), ("tauberian.p", a.p.as_ref()), ("tauberian.eta_max", a.eta_max.as_ref()), ("tauberian.t_list", a.t_list.as_ref())],
            _ => Vec::new(),
        }
    }

    fn criteria(&self) -> &'static [usize] {
        match self {
            Cmd::GeomCheck => &[2],
            Cmd::ChvarCheck => &[1],
            Cmd::Spectral(_) => &[3, 5, 6, 7, 9],
            Cmd::Invariant => &[4, 8],
            Cmd::Simulate(_) => &[],
            Cmd::Tauberian(_) => &[14, 15],
            Cmd::Report => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let located = |path: &Path, e: ConfigError| format!("{}: {e}", path.display());
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| located(path, e))?
        }
        None => ExperimentConfig::default(),
    };
    let flags = cli.cmd.flags();
    let sets = cli.sets.iter().map(|kv| kv.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| format!("--set `{kv}`: expected KEY=VALUE")));
    for kv in sets {
        let (k, v) = kv?;
        cfg.set(0, k, v).map_err(|e| format!("--set: {e}"))?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(0, k, v).map_err(|e| format!("command line: {e}"))?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    cfg.validate().map_err(|e| format!("configuration: {e}"))?;
    Ok(cfg)
}

fn save(cfg: &ExperimentConfig, header: &Header, plot: bool, t: &Table) -> Result<(), String> {
    let path = t.save(header, &cfg.output).map_err(|e| format!("writing {}: {e}", t.name))?;
    println!("wrote {}", path.display());
    if plot {
        let svg = match t.name.as_str() {
            "decay" => loglog_svg(header, "decay", t, "t", &["distance", "mass", "class_0", "class_1", "class_2"]),
            "spectral" => loglog_svg(header, "squared operator norm", t, "eta", &["norm"]),
            "tauberian_profile" => loglog_svg(header, "boundary function", t, "eta", &["norm", "dnorm"]),
            _ => None,
        };
        if let Some(svg) = svg {
            let path = cfg.output.join(format!("{}.svg", t.name));
            fs::write(&path, svg).map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn print_outcome(o: &Outcome) {
    println!("{:<4} {:>2} {:<24} {} [{:.1} s]", o.status, o.id, o.name, o.detail, o.seconds);
}

fn summary_table(outcomes: &[Outcome]) -> Table {
    // no timings: artifacts must be identical across runs
    let mut t = Table::new("summary", &["criterion", "pass"]);
    for o in outcomes {
        t.push(vec![o.id as f64, if o.status == Status::Fail { 0.0 } else { 1.0 }]);
    }
    t
}

fn run_suite(cli: &Cli, cfg: &ExperimentConfig, header: &Header) -> Result<Vec<String>, String> {
    let suite = Suite::new(cfg);
    let ids = cli.cmd.criteria();
    let mut outcomes = Vec::new();
    for &id in ids {
        let o = suite.run(id);
        print_outcome(&o);
        outcomes.push(o);
    }
    if let Cmd::Spectral(_) = cli.cmd {
        match suite.nu_prime_closed_form() {
            Some(exact) => {
                let measured = outcomes.iter().find(|o| o.id == 5).and_then(|o| o.metrics.iter().find(|m| m.0 == "nu_prime")).map(|m| m.1);
                println!("{{ \"nu_prime_measured\": {}, \"nu_prime_closed_form\": {exact} }}", measured.map_or("null".into(), |m| m.to_string()));
            }
            None => println!("{{ \"nu_prime_closed_form\": null }}"),
        }
    }
    for t in suite.take_tables() {
        save(cfg, header, cli.plot, &t)?;
    }
    if let Cmd::Report = cli.cmd {
        save(cfg, header, false, &summary_table(&outcomes))?;
        let timings: f64 = outcomes.iter().map(|o| o.seconds).sum();
        println!("total {timings:.1} s");
    }
    Ok(outcomes.iter().filter(|o| o.status == Status::Fail).map(|o| o.name.to_string()).collect())
}

fn run_simulate(cli: &Cli, cfg: &ExperimentConfig, header: &Header) -> Result<Vec<String>, String> {
    let seed = cfg.require_seed().map_err(|e| e.to_string())?;
    let custom = match (cfg.init, &cfg.init_file) {
        (InitKind::CustomFile, Some(path)) => Some(load_particles(path, cfg.domain().dim()).map_err(|e| e.to_string())?),
        _ => None,
    };
    let init = cfg.initial_data(custom).map_err(|e| e.to_string())?;
    let mut settings = freestream_lab::mc::McSettings::new(cfg.particles, seed, cfg.record_times());
    settings.batches = cfg.batches;
    settings.k_max = cfg.k_max.max(settings.rb_max);
    let constant = cfg.kernel_spec().is_constant();
    let bins = if constant { Some(cfg.phase_bins().map_err(|e| e.to_string())?) } else { None };
    let reference = bins.as_ref().map_or(Vec::new(), |b| b.equilibrium_masses());
    settings.bins = bins;
    let run = simulate(&cfg.domain(), &cfg.kernel_spec(), &init, &settings).map_err(|e| e.to_string())?;
    let table = decay_table(&run, &reference).map_err(|e| e.to_string())?;
    save(cfg, header, cli.plot, &table)?;
    let mut failed = Vec::new();
    let drift = (0..settings.times.len()).map(|m| (run.total.mass(m) - run.rho_f).abs()).fold(0.0, f64::max);
    let mass_ok = drift <= 1e-9 * run.rho_f.abs().max(1.0);
    println!("{:<4}    {:<24} max |mass(t) − ρ_f| = {drift:.2e}", if mass_ok { "PASS" } else { "FAIL" }, "mass-conservation");
    if !mass_ok {
        failed.push("mass-conservation".to_string());
    }
    let cap_ok = run.total.capped == 0;
    println!("{:<4}    {:<24} {} particles hit the event cap", if cap_ok { "PASS" } else { "FAIL" }, "event-cap", run.total.capped);
    if !cap_ok {
        failed.push("event-cap".to_string());
    }
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let header = Header::new(&cfg);
    print!("{}", header.lines("#"));
    let result = match cli.cmd {
        Cmd::Simulate(_) => run_simulate(&cli, &cfg, &header),
        _ => run_suite(&cli, &cfg, &header),
    };
    match result {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("failed: {}", failed.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use freestream_lab::suite::CRITERIA;

    #[test]
    fn report_covers_every_criterion() {
        let ids: Vec<usize> = CRITERIA.iter().map(|c| c.0).collect();
        assert_eq!(Cmd::Report.criteria(), ids.as_slice());
    }
}
