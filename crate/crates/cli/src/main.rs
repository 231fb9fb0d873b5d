use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use eulerprod::analysis::{fit_c0, rouche_check, zero_count};
use eulerprod::approximator::{approximate, refine_sequence, stages_text, Approximation};
use eulerprod::config::manifest_entries;
use eulerprod::primes::primes_up_to;
use eulerprod::product::{PhaseAssignment, ProductEvaluator};
use eulerprod::torus::{ball_volume_mc, equidistribution_test, exact_ball_volume, frequencies, slab_bound_check};
use eulerprod::{Complex64, Error, RunConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_STALL: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_HYPOTHESIS: u8 = 4;

/// Phase-twisted Euler products on small discs of the critical strip.
#[derive(Parser)]
#[command(name = "eulerprod", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate a target on one disc by a twisted partial product.
    Approximate(Settings),
    /// Run the doubling stage loop.
    Refine(Settings),
    /// Fit c0 and check the short-interval prime sums.
    CheckHypothesis(Settings),
    /// Count zeros of a partial product inside a circle and compare with a longer product.
    ZeroScan(Settings),
    /// Ball volumes, slab bound and equidistribution on the torus.
    Torus(Settings),
    /// Print a run report; with --verify replay its manifest and compare.
    Report {
        dir: PathBuf,
        #[arg(long)]
        verify: bool,
    },
}

/// Config file plus per-key overrides (`--p-max 20000` sets `p_max`).
#[derive(Args, Clone, Default)]
struct Settings {
    /// File of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Extra override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    spec: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long)]
    sigma0: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long)]
    n_coeffs: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    shortlist: Option<String>,
    #[arg(long)]
    phase_grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    stages: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    max_samples: Option<String>,
    #[arg(long)]
    slack: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    h_list: Option<String>,
    #[arg(long)]
    hyp_lambda: Option<String>,
    #[arg(long)]
    zero_center: Option<String>,
    #[arg(long)]
    zero_radius: Option<String>,
    #[arg(long)]
    zero_primes: Option<String>,
    #[arg(long)]
    zero_samples: Option<String>,
    #[arg(long)]
    torus_n: Option<String>,
    #[arg(long)]
    torus_r: Option<String>,
    #[arg(long)]
    torus_eps: Option<String>,
    #[arg(long)]
    torus_samples: Option<String>,
    #[arg(long)]
    torus_tmax: Option<String>,
    #[arg(long)]
    torus_bins: Option<String>,
    #[arg(long, short)]
    out_dir: Option<String>,
}

impl Settings {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("spec", &self.spec),
            ("target", &self.target),
            ("sigma0", &self.sigma0),
            ("r", &self.r),
            ("eps", &self.eps),
            ("y", &self.y),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("delta", &self.delta),
            ("t0", &self.t0),
            ("p_max", &self.p_max),
            ("n_coeffs", &self.n_coeffs),
            ("max_steps", &self.max_steps),
            ("shortlist", &self.shortlist),
            ("phase_grid", &self.phase_grid),
            ("seed", &self.seed),
            ("stages", &self.stages),
            ("samples", &self.samples),
            ("max_samples", &self.max_samples),
            ("slack", &self.slack),
            ("workers", &self.workers),
            ("h_list", &self.h_list),
            ("hyp_lambda", &self.hyp_lambda),
            ("zero_center", &self.zero_center),
            ("zero_radius", &self.zero_radius),
            ("zero_primes", &self.zero_primes),
            ("zero_samples", &self.zero_samples),
            ("torus_n", &self.torus_n),
            ("torus_r", &self.torus_r),
            ("torus_eps", &self.torus_eps),
            ("torus_samples", &self.torus_samples),
            ("torus_tmax", &self.torus_tmax),
            ("torus_bins", &self.torus_bins),
            ("out_dir", &self.out_dir),
        ]
    }

    fn load(&self) -> eulerprod::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.absolutize();
        Ok(cfg)
    }
}

fn manifest(cfg: &RunConfig, command: &str) -> String {
    cfg.manifest()
        .replacen("[manifest]\n", &format!("[manifest]\ncommand = {command}\n"), 1)
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    fs::write(dir.join(name), text).with_context(|| format!("writing {}", dir.join(name).display()))
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.clone())
}

fn write_approximation(cfg: &RunConfig, a: &Approximation) -> anyhow::Result<()> {
    let dir = out_dir(cfg)?;
    let head = manifest(cfg, "approximate");
    write(&dir, "manifest.txt", &head)?;
    write(&dir, "phases.txt", &a.phases.to_text())?;
    write(&dir, "trace.txt", &a.trace_text())?;
    write(&dir, "heatmap.txt", &a.survey.heatmap_text())?;
    write(&dir, "report.txt", &format!("{head}{}", a.result_text()))
}

fn cmd_approximate(cfg: &RunConfig) -> anyhow::Result<u8> {
    let problem = cfg.problem()?;
    let (a, code) = match approximate(&problem) {
        Ok(a) => (a, 0),
        Err(Error::Stall { report, .. }) => (*report, EXIT_STALL),
        Err(e) => return Err(e.into()),
    };
    write_approximation(cfg, &a)?;
    println!(
        "{}: max error {:e} (eps {}), {} primes, {} greedy steps ({})",
        if code == 0 { "success" } else { "stall" },
        a.max_error,
        cfg.eps,
        a.primes.len(),
        a.outcome.steps,
        a.outcome.reason
    );
    Ok(code)
}

fn cmd_refine(cfg: &RunConfig) -> anyhow::Result<u8> {
    let problem = cfg.problem()?;
    let dir = out_dir(cfg)?;
    let head = manifest(cfg, "refine");
    write(&dir, "manifest.txt", &head)?;
    let stages = match refine_sequence(&problem, &cfg.refine_options()) {
        Ok(s) => s,
        Err(e @ Error::StageNotDecreasing { .. }) => {
            write(
                &dir,
                "report.txt",
                &format!("{head}[result]\nstatus = stall\nerror = {e}\n"),
            )?;
            println!("stall: {e}");
            return Ok(EXIT_STALL);
        }
        Err(e) => return Err(e.into()),
    };
    let last = stages.last().context("no stages")?;
    let table = stages_text(&stages);
    write(&dir, "phases.txt", &last.phases.to_text())?;
    write(&dir, "trace.txt", &table)?;
    write(&dir, "heatmap.txt", &last.survey.heatmap_text())?;
    let result = format!(
        "[result]\nstatus = ok\nstages = {}\nfinal_error = {}\nlargest_prime = {}\n[stages]\n{table}[phases]\n{}",
        stages.len(),
        last.error,
        last.m,
        last.phases.to_text()
    );
    write(&dir, "report.txt", &format!("{head}{result}"))?;
    for s in &stages {
        println!(
            "stage {}: y {} m {} error {:e} (schedule {:e})",
            s.k, s.y, s.m, s.error, s.schedule_bound
        );
    }
    Ok(0)
}

fn cmd_check_hypothesis(cfg: &RunConfig) -> anyhow::Result<u8> {
    cfg.validate()?;
    let spec = cfg.factor_spec()?;
    let rep = fit_c0(&spec, cfg.hyp_lambda, &cfg.h_list)?;
    let dir = out_dir(cfg)?;
    let head = manifest(cfg, "check-hypothesis");
    write(&dir, "manifest.txt", &head)?;
    write(&dir, "report.txt", &format!("{head}[result]\n{}", rep.to_text()))?;
    print!("{}", rep.to_text());
    Ok(if rep.all_pass() { 0 } else { EXIT_HYPOTHESIS })
}

fn cmd_zero_scan(cfg: &RunConfig) -> anyhow::Result<u8> {
    cfg.validate()?;
    let spec = cfg.factor_spec()?;
    let center = Complex64::new(cfg.zero_center, cfg.t0);
    if !(cfg.zero_radius > 0.0 && cfg.zero_center - cfg.zero_radius > 0.0) {
        return Err(Error::Config("0 < zero_radius < zero_center required".into()).into());
    }
    let short = primes_up_to(cfg.zero_primes);
    let long = primes_up_to(4 * cfg.zero_primes);
    let mut phases = PhaseAssignment::new(cfg.t0);
    for &p in &long {
        phases.set(p, 0.0);
    }
    let f_short = ProductEvaluator::new(&spec, &short, &phases);
    let f_long = ProductEvaluator::new(&spec, &long, &phases);
    let eval = |ev: &ProductEvaluator, s: Complex64| ev.eval(s).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let count = zero_count(|s| eval(&f_short, s), center, cfg.zero_radius, cfg.zero_samples)?;
    let rouche = rouche_check(
        |s| eval(&f_long, s),
        |s| eval(&f_short, s),
        center,
        cfg.zero_radius,
        cfg.zero_samples,
    )?;
    let text = format!(
        "[result]\ncenter = {},{}\nradius = {}\nprimes = {}\nzeros = {}\nsamples = {}\nmin_modulus = {}\nrouche_primes = {}\nrouche_pass = {}\nrouche_margin = {}\nrouche_counts = {:?} {:?}\n",
        center.re,
        center.im,
        cfg.zero_radius,
        short.len(),
        count.count,
        count.samples,
        count.min_modulus,
        long.len(),
        rouche.pass,
        rouche.margin,
        rouche.f_count,
        rouche.g_count
    );
    let dir = out_dir(cfg)?;
    let head = manifest(cfg, "zero-scan");
    write(&dir, "manifest.txt", &head)?;
    write(&dir, "report.txt", &format!("{head}{text}"))?;
    print!("{text}");
    Ok(0)
}

fn cmd_torus(cfg: &RunConfig) -> anyhow::Result<u8> {
    let (n, r, eps) = (cfg.torus_n, cfg.torus_r, cfg.torus_eps);
    let slab = slab_bound_check(n, r, eps, cfg.torus_samples, cfg.seed)?;
    let vol = ball_volume_mc(n, r, cfg.torus_samples, cfg.seed)?;
    let exact = if n <= 20 {
        exact_ball_volume(n, r).to_string()
    } else {
        "-".into()
    };
    let eq = equidistribution_test(
        &frequencies(n),
        cfg.torus_tmax,
        cfg.torus_bins,
        cfg.torus_samples,
        n.min(6),
        cfg.seed,
    )?;
    let text = format!(
        "[result]\nrng = {}\n# n r eps estimate half_width bound verdict\nslab = {}\nvolume = {} {}\nvolume_exact = {exact}\nmax_coordinate_discrepancy = {}\n[discrepancy]\n{}",
        eulerprod::torus::RNG_ALGORITHM,
        slab.to_line(),
        vol.estimate,
        vol.half_width,
        eq.max_single(),
        eq.to_text()
    );
    let dir = out_dir(cfg)?;
    let head = manifest(cfg, "torus");
    write(&dir, "manifest.txt", &head)?;
    write(&dir, "report.txt", &format!("{head}{text}"))?;
    print!("{text}");
    Ok(0)
}

fn run_command(command: &str, cfg: &RunConfig) -> anyhow::Result<u8> {
    let go = || match command {
        "approximate" => cmd_approximate(cfg),
        "refine" => cmd_refine(cfg),
        "check-hypothesis" => cmd_check_hypothesis(cfg),
        "zero-scan" => cmd_zero_scan(cfg),
        "torus" => cmd_torus(cfg),
        other => bail!("unknown command `{other}`"),
    };
    if cfg.workers > 0 {
        eulerprod::par::with_workers(cfg.workers, go)
    } else {
        go()
    }
}

fn tokens_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-12 * x.abs().max(y.abs()),
        _ => false,
    }
}

/// First differing line of two outputs, numbers compared to 1e-12 relative.
fn compare(a: &str, b: &str) -> Option<usize> {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    if la.len() != lb.len() {
        return Some(la.len().min(lb.len()) + 1);
    }
    for (i, (x, y)) in la.iter().zip(&lb).enumerate() {
        let (tx, ty): (Vec<&str>, Vec<&str>) = (x.split([' ', ',', '=']).collect(), y.split([' ', ',', '=']).collect());
        if tx.len() != ty.len() || !tx.iter().zip(&ty).all(|(p, q)| tokens_match(p, q)) {
            return Some(i + 1);
        }
    }
    None
}

fn cmd_report(dir: &Path, verify: bool) -> anyhow::Result<u8> {
    let report = fs::read_to_string(dir.join("report.txt")).with_context(|| format!("reading {}", dir.display()))?;
    print!("{report}");
    if !verify {
        return Ok(0);
    }
    let manifest_text = fs::read_to_string(dir.join("manifest.txt"))?;
    let entries = manifest_entries(&manifest_text);
    let command = entries.get("command").context("manifest lacks a command")?.clone();
    let mut cfg = RunConfig::parse(&manifest_text)?;
    let replay = dir.join("replay");
    cfg.out_dir = replay.clone();
    let code = run_command(&command, &cfg)?;
    let mut ok = true;
    for name in ["report.txt", "phases.txt", "trace.txt", "heatmap.txt"] {
        let orig = dir.join(name);
        if !orig.exists() {
            continue;
        }
        let strip = |t: String| {
            t.lines()
                .filter(|l| !l.starts_with("out_dir ="))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let a = strip(fs::read_to_string(&orig)?);
        let b = strip(fs::read_to_string(replay.join(name)).unwrap_or_default());
        match compare(&a, &b) {
            None => println!("verify {name}: {}", if a == b { "identical" } else { "within 1e-12" }),
            Some(line) => {
                println!("verify {name}: mismatch at line {line}");
                ok = false;
            }
        }
    }
    println!("replay exit status {code}");
    Ok(if ok { 0 } else { EXIT_FAILURE })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::InvalidParameter(_) | Error::FactorSpec(_)) => EXIT_CONFIG,
        Some(Error::Stall { .. } | Error::StageNotDecreasing { .. }) => EXIT_STALL,
        Some(Error::HypothesisFails { .. }) => EXIT_HYPOTHESIS,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Report { dir, verify } => cmd_report(dir, *verify),
        Command::Approximate(s) => s
            .load()
            .map_err(Into::into)
            .and_then(|c| run_command("approximate", &c)),
        Command::Refine(s) => s.load().map_err(Into::into).and_then(|c| run_command("refine", &c)),
        Command::CheckHypothesis(s) => s
            .load()
            .map_err(Into::into)
            .and_then(|c| run_command("check-hypothesis", &c)),
        Command::ZeroScan(s) => s.load().map_err(Into::into).and_then(|c| run_command("zero-scan", &c)),
        Command::Torus(s) => s.load().map_err(Into::into).and_then(|c| run_command("torus", &c)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
