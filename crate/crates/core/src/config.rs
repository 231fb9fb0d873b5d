//! Flat `key = value` run configuration shared by the command-line runner and
//! manifest replay.
//!
//! Keys (all optional, defaults in brackets):
//!
//! | key | meaning |
//! |---|---|
//! | `spec` | `zeta`, `chi4`, `chi:<q>:<j>` or `custom:<path>` [zeta] |
//! | `target` | `const:<re>,<im>`, `exp:<re>,<im>`, `poly:<re>,<im>;..` or `product:<phases file>` [exp:0.1,0] |
//! | `sigma0`, `r`, `eps` | disc centre, radius, tolerance [0.75, 0.02, 0.1] |
//! | `y`, `gamma`, `lambda`, `delta`, `t0` | [2, sqrt(1.1), 0.01, 0.01, 0] |
//! | `p_max`, `n_coeffs`, `max_steps`, `shortlist` | [100000, 32, 200, 8] |
//! | `phase_grid` | `quarter`, `fine:<n>` or `continuous` [quarter] |
//! | `seed`, `stages`, `samples`, `max_samples`, `slack` | [0, 3, 64, 512, 10] |
//! | `workers` | thread cap, 0 for all cores [0] |
//! | `h_list`, `hyp_lambda` | comma separated heights, lambda for the hypothesis check |
//! | `zero_center`, `zero_radius`, `zero_primes`, `zero_samples` | contour for the zero scan |
//! | `torus_n`, `torus_r`, `torus_eps`, `torus_samples`, `torus_tmax`, `torus_bins` | torus run |
//! | `out_dir` | run directory [run] |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::approximator::{ApproximationProblem, RefineOptions, Target};
use crate::error::{Error, Result};
use crate::factor::{parse_custom_spec, DirichletCharacter, EulerFactorSpec};
use crate::product::PhaseAssignment;

/// Version string written into every manifest.
pub const VERSION: &str = concat!("eulerprod ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseGridMode {
    Quarter,
    Fine(usize),
    Continuous,
}

impl PhaseGridMode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "quarter" => Ok(PhaseGridMode::Quarter),
            "continuous" => Ok(PhaseGridMode::Continuous),
            _ => match text.strip_prefix("fine:").map(str::parse::<usize>) {
                Some(Ok(n)) if n >= 1 => Ok(PhaseGridMode::Fine(n)),
                _ => Err(Error::Config(format!("unknown phase_grid `{text}`"))),
            },
        }
    }

    fn grid(self) -> (usize, bool) {
        match self {
            PhaseGridMode::Quarter => (4, false),
            PhaseGridMode::Fine(n) => (n, false),
            PhaseGridMode::Continuous => (4, true),
        }
    }
}

impl std::fmt::Display for PhaseGridMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseGridMode::Quarter => f.write_str("quarter"),
            PhaseGridMode::Fine(n) => write!(f, "fine:{n}"),
            PhaseGridMode::Continuous => f.write_str("continuous"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: String,
    pub target: String,
    pub sigma0: f64,
    pub r: f64,
    pub eps: f64,
    pub y: u64,
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub t0: f64,
    pub p_max: u64,
    pub n_coeffs: usize,
    pub max_steps: usize,
    pub shortlist: usize,
    pub phase_grid: PhaseGridMode,
    pub seed: u64,
    pub stages: usize,
    pub samples: usize,
    pub max_samples: usize,
    pub slack: f64,
    pub workers: usize,
    pub h_list: Vec<f64>,
    pub hyp_lambda: f64,
    pub zero_center: f64,
    pub zero_radius: f64,
    pub zero_primes: u64,
    pub zero_samples: usize,
    pub torus_n: usize,
    pub torus_r: f64,
    pub torus_eps: f64,
    pub torus_samples: usize,
    pub torus_tmax: f64,
    pub torus_bins: usize,
    pub out_dir: PathBuf,
    /// Directory against which relative file references resolve.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: "zeta".into(),
            target: "exp:0.1,0".into(),
            sigma0: 0.75,
            r: 0.02,
            eps: 0.1,
            y: 2,
            gamma: 1.1f64.sqrt(),
            lambda: 0.01,
            delta: 0.01,
            t0: 0.0,
            p_max: 100_000,
            n_coeffs: 32,
            max_steps: 200,
            shortlist: 8,
            phase_grid: PhaseGridMode::Quarter,
            seed: 0,
            stages: 3,
            samples: 64,
            max_samples: 512,
            slack: 10.0,
            workers: 0,
            h_list: vec![1e4, 1e5, 1e6],
            hyp_lambda: 0.2,
            zero_center: 0.75,
            zero_radius: 0.2,
            zero_primes: 100,
            zero_samples: 4096,
            torus_n: 4,
            torus_r: 0.5,
            torus_eps: 0.1,
            torus_samples: 1_000_000,
            torus_tmax: 1e4,
            torus_bins: 50,
            out_dir: PathBuf::from("run"),
            base_dir: PathBuf::from("."),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{v}`")))
}

fn complex(text: &str) -> Result<Complex64> {
    let (a, b) = text.split_once(',').unwrap_or((text, "0"));
    Ok(Complex64::new(num("complex", a.trim())?, num("complex", b.trim())?))
}

impl RunConfig {
    /// Every key in manifest order.
    pub const KEYS: [&'static str; 34] = [
        "spec",
        "target",
        "sigma0",
        "r",
        "eps",
        "y",
        "gamma",
        "lambda",
        "delta",
        "t0",
        "p_max",
        "n_coeffs",
        "max_steps",
        "shortlist",
        "phase_grid",
        "seed",
        "stages",
        "samples",
        "max_samples",
        "slack",
        "workers",
        "h_list",
        "hyp_lambda",
        "zero_center",
        "zero_radius",
        "zero_primes",
        "zero_samples",
        "torus_n",
        "torus_r",
        "torus_eps",
        "torus_samples",
        "torus_tmax",
        "torus_bins",
        "out_dir",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "spec" => self.spec = v.into(),
            "target" => self.target = v.into(),
            "sigma0" => self.sigma0 = num(key, v)?,
            "r" => self.r = num(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "y" => self.y = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "t0" => self.t0 = num(key, v)?,
            "p_max" => self.p_max = num(key, v)?,
            "n_coeffs" => self.n_coeffs = num(key, v)?,
            "max_steps" => self.max_steps = num(key, v)?,
            "shortlist" => self.shortlist = num(key, v)?,
            "phase_grid" => self.phase_grid = PhaseGridMode::parse(v)?,
            "seed" => self.seed = num(key, v)?,
            "stages" => self.stages = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "max_samples" => self.max_samples = num(key, v)?,
            "slack" => self.slack = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "h_list" => {
                self.h_list = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "hyp_lambda" => self.hyp_lambda = num(key, v)?,
            "zero_center" => self.zero_center = num(key, v)?,
            "zero_radius" => self.zero_radius = num(key, v)?,
            "zero_primes" => self.zero_primes = num(key, v)?,
            "zero_samples" => self.zero_samples = num(key, v)?,
            "torus_n" => self.torus_n = num(key, v)?,
            "torus_r" => self.torus_r = num(key, v)?,
            "torus_eps" => self.torus_eps = num(key, v)?,
            "torus_samples" => self.torus_samples = num(key, v)?,
            "torus_tmax" => self.torus_tmax = num(key, v)?,
            "torus_bins" => self.torus_bins = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "spec" => self.spec.clone(),
            "target" => self.target.clone(),
            "sigma0" => self.sigma0.to_string(),
            "r" => self.r.to_string(),
            "eps" => self.eps.to_string(),
            "y" => self.y.to_string(),
            "gamma" => self.gamma.to_string(),
            "lambda" => self.lambda.to_string(),
            "delta" => self.delta.to_string(),
            "t0" => self.t0.to_string(),
            "p_max" => self.p_max.to_string(),
            "n_coeffs" => self.n_coeffs.to_string(),
            "max_steps" => self.max_steps.to_string(),
            "shortlist" => self.shortlist.to_string(),
            "phase_grid" => self.phase_grid.to_string(),
            "seed" => self.seed.to_string(),
            "stages" => self.stages.to_string(),
            "samples" => self.samples.to_string(),
            "max_samples" => self.max_samples.to_string(),
            "slack" => self.slack.to_string(),
            "workers" => self.workers.to_string(),
            "h_list" => self.h_list.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            "hyp_lambda" => self.hyp_lambda.to_string(),
            "zero_center" => self.zero_center.to_string(),
            "zero_radius" => self.zero_radius.to_string(),
            "zero_primes" => self.zero_primes.to_string(),
            "zero_samples" => self.zero_samples.to_string(),
            "torus_n" => self.torus_n.to_string(),
            "torus_r" => self.torus_r.to_string(),
            "torus_eps" => self.torus_eps.to_string(),
            "torus_samples" => self.torus_samples.to_string(),
            "torus_tmax" => self.torus_tmax.to_string(),
            "torus_bins" => self.torus_bins.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            _ => return None,
        })
    }

    /// Parse `key = value` lines; `#` starts a comment. Lines before a
    /// `[result]` header only are read, so a full report replays as a config.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line == "[manifest]" {
                continue;
            }
            if line.starts_with('[') {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if matches!(k, "version" | "rng" | "command") {
                continue;
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    /// Check the parameter inequalities, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let r0 = (1.0 - self.sigma0).min(self.sigma0 - 0.5);
        let fail = |s: String| Err(Error::Config(s));
        if !(self.sigma0 > 0.5 && self.sigma0 < 1.0) {
            return fail(format!("1/2 < sigma0 < 1 violated: sigma0 = {}", self.sigma0));
        }
        if !(self.r > 0.0 && self.r < r0) {
            return fail(format!("0 < r < r0 violated: r = {}, r0 = {r0}", self.r));
        }
        if !(self.lambda >= 0.0 && self.delta >= 0.0) {
            return fail("lambda >= 0 and delta >= 0 required".into());
        }
        let lhs = self.r + self.delta + 2.0 * self.lambda;
        if !(lhs < r0) {
            return fail(format!("r + delta + 2 lambda < r0 violated: {lhs} >= {r0}"));
        }
        let e = 0.5 + self.r + 2.0 * self.lambda + self.delta - self.sigma0;
        if !(e < 0.0) {
            return fail(format!("1/2 + r + 2 lambda + delta - sigma0 < 0 violated: {e}"));
        }
        if !(self.gamma > 1.0 && self.gamma * self.gamma * self.r < r0) {
            return fail(format!("1 < gamma and gamma^2 r < r0 violated: gamma = {}", self.gamma));
        }
        if !(self.eps > 0.0) {
            return fail(format!("eps > 0 violated: eps = {}", self.eps));
        }
        if self.y < 2 || self.p_max < self.y {
            return fail(format!(
                "2 <= y <= P_max violated: y = {}, P_max = {}",
                self.y, self.p_max
            ));
        }
        if self.samples == 0 || self.max_samples < self.samples {
            return fail("1 <= samples <= max_samples violated".into());
        }
        self.factor_spec()?;
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Rewrite file references in `spec` and `target` as absolute paths so a
    /// manifest replays from any directory.
    pub fn absolutize(&mut self) {
        for (field, prefix) in [(0, "custom:"), (1, "product:")] {
            let value = if field == 0 { &self.spec } else { &self.target };
            if let Some(rest) = value.trim().strip_prefix(prefix) {
                let mut path = self.resolve(rest);
                if let Ok(abs) = std::fs::canonicalize(&path) {
                    path = abs;
                }
                let new = format!("{prefix}{}", path.display());
                if field == 0 {
                    self.spec = new;
                } else {
                    self.target = new;
                }
            }
        }
    }

    pub fn factor_spec(&self) -> Result<EulerFactorSpec> {
        parse_spec_selector(&self.spec, |p| self.resolve(p))
    }

    pub fn target_fn(&self, spec: &EulerFactorSpec) -> Result<Target> {
        let t = self.target.trim();
        if let Some(v) = t.strip_prefix("const:") {
            return Ok(Target::Constant(complex(v)?));
        }
        if let Some(v) = t.strip_prefix("exp:") {
            return Ok(Target::Exp(complex(v)?));
        }
        if let Some(v) = t.strip_prefix("poly:") {
            return Ok(Target::Polynomial(v.split(';').map(complex).collect::<Result<_>>()?));
        }
        if let Some(v) = t.strip_prefix("product:") {
            let phases = PhaseAssignment::from_text(&std::fs::read_to_string(self.resolve(v))?)?;
            return Ok(Target::Product {
                spec: spec.clone(),
                phases,
                sigma0: self.sigma0,
            });
        }
        Err(Error::Config(format!("unknown target `{t}`")))
    }

    pub fn problem(&self) -> Result<ApproximationProblem> {
        self.validate()?;
        let spec = self.factor_spec()?;
        let target = self.target_fn(&spec)?;
        let mut p = ApproximationProblem::new(spec, target);
        let (grid, refine) = self.phase_grid.grid();
        p.sigma0 = self.sigma0;
        p.r = self.r;
        p.eps = self.eps;
        p.y = self.y;
        p.gamma = self.gamma;
        p.lambda = self.lambda;
        p.delta = self.delta;
        p.t0 = self.t0;
        p.p_max = self.p_max;
        p.n_coeffs = self.n_coeffs;
        p.phase_grid = grid;
        p.refine_phase = refine;
        p.max_steps = self.max_steps;
        p.shortlist = self.shortlist;
        Ok(p)
    }

    pub fn refine_options(&self) -> RefineOptions {
        RefineOptions {
            stages: self.stages,
            samples: self.samples,
            max_samples: self.max_samples,
            slack: self.slack,
            seed: self.seed,
        }
    }

    /// `[manifest]` section: version, generator id and every key.
    pub fn manifest(&self) -> String {
        let mut out = String::from("[manifest]\n");
        writeln!(out, "version = {VERSION}").expect("string write");
        writeln!(out, "rng = {}", crate::torus::RNG_ALGORITHM).expect("string write");
        for k in Self::KEYS {
            writeln!(out, "{k} = {}", self.get(k).expect("known key")).expect("string write");
        }
        out
    }
}

/// `zeta`, `chi4`, `chi:<q>:<j>` (character of the prime modulus `q` sending a
/// primitive root to `e^(2 pi i j / (q-1))`) or `custom:<path>`.
pub fn parse_spec_selector(text: &str, resolve: impl Fn(&str) -> PathBuf) -> Result<EulerFactorSpec> {
    let t = text.trim();
    match t {
        "zeta" => return Ok(EulerFactorSpec::zeta()),
        "chi4" => return Ok(EulerFactorSpec::character(DirichletCharacter::mod4())),
        _ => {}
    }
    if let Some(rest) = t.strip_prefix("chi:") {
        let (q, j) = rest
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("expected chi:<q>:<j>, got `{t}`")))?;
        let chi = DirichletCharacter::prime_modulus(num("spec", q)?, num("spec", j)?)?;
        return Ok(EulerFactorSpec::character(chi));
    }
    if let Some(path) = t.strip_prefix("custom:") {
        return parse_custom_spec(&std::fs::read_to_string(resolve(path))?);
    }
    Err(Error::Config(format!("unknown spec `{t}`")))
}

/// Group `key = value` pairs from a manifest for comparison.
pub fn manifest_entries(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .take_while(|l| !l.trim_start().starts_with("[result"))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_manifest() {
        let mut c = RunConfig::default();
        c.set("eps", "0.05").unwrap();
        c.set("phase_grid", "fine:8").unwrap();
        c.set("h_list", "1e4, 2e4").unwrap();
        let back = RunConfig::parse(&c.manifest()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.manifest(), c.manifest());
    }

    #[test]
    fn rejects_named_inequalities() {
        let c = RunConfig {
            r: 0.25,
            ..RunConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("r < r0"));
        let c = RunConfig {
            lambda: 0.12,
            ..RunConfig::default()
        };
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("r + delta + 2 lambda < r0"));
        let c = RunConfig {
            sigma0: 0.6,
            r: 0.05,
            lambda: 0.01,
            delta: 0.04,
            ..RunConfig::default()
        };
        // a non-negative schedule exponent always breaks r + delta + 2 lambda < r0 first
        assert!(0.5 + c.r + 2.0 * c.lambda + c.delta - c.sigma0 >= 0.0);
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("r + delta + 2 lambda < r0"));
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("r 0.1").is_err());
    }

    #[test]
    fn builds_problem() {
        let mut c = RunConfig::default();
        c.set("target", "poly:1,0;0.5,0.5").unwrap();
        c.set("spec", "chi:5:1").unwrap();
        let p = c.problem().unwrap();
        assert_eq!(p.target.eval(Complex64::new(2.0, 0.0)), Complex64::new(2.0, 1.0));
        assert!(c.factor_spec().unwrap().label().contains('5'));
    }
}
