//! Approximation of a non-vanishing analytic target `g` on `|s| <= r` by a
//! phase-twisted Euler partial product `F_M(sigma0 + s; theta)`, and the
//! doubling outer loop that extends one approximation stage by stage.
//!
//! Work happens in `H2(R)` with `R = gamma r` on the contracted target
//! `g(s / gamma^2)`. The residual is `log g - sum_{p in M} log f_p`; each
//! step screens the whole candidate pool with the leading terms
//! `eta_p = a_p^1 e^(-2 pi i tau) p^(-sigma0 - s)` via the closed form of
//! `(psi, eta_p)`, re-scores the best few with the full logarithms, and
//! accepts the strict norm decrease.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::analysis::{disc_error_survey, DiscGrid, Survey};
use crate::error::{invalid, Error, Result};
use crate::expansion::{log_eval, twisted_argument};
use crate::factor::EulerFactorSpec;
use crate::hardy::{circle_points, exp_atom_norm_sq, log_target, taylor_from_samples, DeltaProfile, H2Element};
use crate::par;
use crate::primes;
use crate::product::{reduce, PhaseAssignment, ProductEvaluator};
use crate::torus::stream_rng;

/// The function to approximate, in local coordinates `s` around `sigma0`.
#[derive(Clone)]
pub enum Target {
    Constant(Complex64),
    /// `e^(a s)`
    Exp(Complex64),
    /// `sum c_n s^n`
    Polynomial(Vec<Complex64>),
    /// `F(sigma0 + s)` for a finite product; the primes are those carrying a
    /// phase.
    Product {
        spec: EulerFactorSpec,
        phases: PhaseAssignment,
        sigma0: f64,
    },
    Function(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Target {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            Target::Constant(c) => *c,
            Target::Exp(a) => (a * s).exp(),
            Target::Polynomial(cs) => cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c),
            Target::Product { spec, phases, sigma0 } => {
                let primes = phases.primes();
                crate::product::partial_product(spec, s + sigma0, &primes, phases)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }
            Target::Function(f) => f(s),
        }
    }

    /// Short text form used in manifests.
    pub fn label(&self) -> String {
        let cx = |c: &Complex64| format!("{},{}", c.re, c.im);
        match self {
            Target::Constant(c) => format!("const:{}", cx(c)),
            Target::Exp(a) => format!("exp:{}", cx(a)),
            Target::Polynomial(cs) => {
                format!("poly:{}", cs.iter().map(cx).collect::<Vec<_>>().join(";"))
            }
            Target::Product { .. } => "product".into(),
            Target::Function(_) => "function".into(),
        }
    }
}

/// A single disc approximation task.
#[derive(Debug, Clone)]
pub struct ApproximationProblem {
    pub spec: EulerFactorSpec,
    pub target: Target,
    pub sigma0: f64,
    pub r: f64,
    pub eps: f64,
    /// Every prime `p <= y` is part of the product.
    pub y: u64,
    /// `gamma > 1`; the target is contracted to `g(s / gamma^2)` and the
    /// working disc has radius `gamma r`.
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub t0: f64,
    pub p_max: u64,
    pub n_coeffs: usize,
    /// Candidate total phases are `q + phi_p` with `q` in `{0, 1/G, ..}`.
    pub phase_grid: usize,
    /// Golden-section refinement of the winning phase.
    pub refine_phase: bool,
    pub max_steps: usize,
    /// Pool members re-scored with full logarithms each step.
    pub shortlist: usize,
    /// `theta_p` for `p <= y`; missing primes get 0.
    pub presets: BTreeMap<u64, f64>,
    pub survey_boundary: usize,
    pub survey_rings: usize,
}

impl ApproximationProblem {
    pub fn new(spec: EulerFactorSpec, target: Target) -> Self {
        ApproximationProblem {
            spec,
            target,
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
            phase_grid: 4,
            refine_phase: false,
            max_steps: 200,
            shortlist: 8,
            presets: BTreeMap::new(),
            survey_boundary: 256,
            survey_rings: 4,
        }
    }

    /// `r0 = min(1 - sigma0, sigma0 - 1/2)`.
    pub fn r0(&self) -> f64 {
        (1.0 - self.sigma0).min(self.sigma0 - 0.5)
    }

    /// Radius of the working disc.
    pub fn working_radius(&self) -> f64 {
        self.gamma * self.r
    }

    /// Check the parameter inequalities, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let r0 = self.r0();
        if !(self.sigma0 > 0.5 && self.sigma0 < 1.0) {
            return Err(invalid(format!("1/2 < sigma0 < 1 violated: sigma0 = {}", self.sigma0)));
        }
        if !(self.r > 0.0 && self.r < r0) {
            return Err(invalid(format!("0 < r < r0 violated: r = {}, r0 = {r0}", self.r)));
        }
        if !(self.gamma > 1.0) {
            return Err(invalid(format!("gamma > 1 violated: gamma = {}", self.gamma)));
        }
        if !(self.gamma * self.gamma * self.r < r0) {
            return Err(invalid(format!(
                "gamma^2 r < r0 violated: {} >= {r0}",
                self.gamma * self.gamma * self.r
            )));
        }
        if !(self.lambda >= 0.0 && self.delta >= 0.0) {
            return Err(invalid("lambda >= 0 and delta >= 0 required"));
        }
        if !(self.r + self.delta + 2.0 * self.lambda < r0) {
            return Err(invalid(format!(
                "r + delta + 2 lambda < r0 violated: {} >= {r0}",
                self.r + self.delta + 2.0 * self.lambda
            )));
        }
        if !(self.eps > 0.0) {
            return Err(invalid(format!("eps > 0 violated: eps = {}", self.eps)));
        }
        if self.y < 2 {
            return Err(invalid(format!("y >= 2 violated: y = {}", self.y)));
        }
        if self.p_max < self.y {
            return Err(invalid(format!(
                "P_max >= y violated: P_max = {} < y = {}",
                self.p_max, self.y
            )));
        }
        if self.n_coeffs < 2 || self.phase_grid == 0 || self.shortlist == 0 {
            return Err(invalid("n_coeffs >= 2, phase_grid >= 1 and shortlist >= 1 required"));
        }
        if let Some((&p, _)) = self.presets.iter().find(|(&p, _)| p > self.y) {
            return Err(invalid(format!("preset phase for {p} above y = {}", self.y)));
        }
        Ok(())
    }

    /// `1/2 + r + 2 lambda + delta - sigma0`, the decay exponent of the
    /// stage schedule.
    pub fn schedule_exponent(&self) -> f64 {
        0.5 + self.r + 2.0 * self.lambda + self.delta - self.sigma0
    }

    fn survey_grid(&self) -> DiscGrid {
        DiscGrid::new(
            Complex64::new(self.sigma0, 0.0),
            self.r,
            self.survey_boundary,
            self.survey_rings,
        )
    }

    fn contracted(&self) -> impl Fn(Complex64) -> Complex64 + Sync + Send + '_ {
        let k = 1.0 / (self.gamma * self.gamma);
        move |s| self.target.eval(s * k)
    }
}

/// `max_{|s| = r} |g(s) - g(s / gamma^2)|` sampled on 4096 boundary points,
/// the bound on `|s| <= r` by the maximum principle.
pub fn contract_target(problem: &ApproximationProblem) -> f64 {
    let gc = problem.contracted();
    let pts = circle_points(problem.r, 4096, 0.0);
    pts.iter()
        .map(|&s| (problem.target.eval(s) - gc(s)).norm())
        .fold(0.0, f64::max)
}

/// One candidate prime with the data needed to screen it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub p: u64,
    pub log_p: f64,
    pub a1_abs: f64,
    pub phi: f64,
    /// `||eta_p||^2`
    pub eta_norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedStep {
    pub p: u64,
    /// Total phase `theta_p + gamma_p` modulo 1.
    pub tau: f64,
    /// Decrease of the squared residual norm.
    pub decrease: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    NoDecrease,
    MaxSteps,
    PoolExhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::NoDecrease => "no-decrease",
            StopReason::MaxSteps => "max-steps",
            StopReason::PoolExhausted => "pool-exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOutcome {
    pub reason: StopReason,
    pub steps: usize,
    /// Largest leading-term inner product `(psi, eta)` seen at the last step.
    pub best_inner_product: f64,
    pub pool_exhausted: bool,
}

/// Residual, accepted primes and candidate pool of a running approximation.
#[derive(Debug, Clone)]
pub struct ApproximationState {
    pub radius: f64,
    pub sigma0: f64,
    pub residual: H2Element,
    /// `(p, theta_p)` for every `p <= y`.
    pub fixed: Vec<(u64, f64)>,
    pub accepted: Vec<AcceptedStep>,
    pub pool: Vec<PoolEntry>,
    used: Vec<bool>,
    /// Residual norm after each accepted step, starting with the initial one.
    pub trace: Vec<f64>,
    /// Norm below which the sup bound guarantees the tolerance.
    pub stop_norm: f64,
    /// `max |g(s / gamma^2)|` on the survey grid.
    pub target_max: f64,
}

struct Atoms<'a> {
    spec: &'a EulerFactorSpec,
    sigma0: f64,
    radius: f64,
    n_coeffs: usize,
    pts: Vec<Complex64>,
}

impl<'a> Atoms<'a> {
    fn new(problem: &'a ApproximationProblem) -> Self {
        let radius = problem.working_radius();
        let m = 4 * problem.n_coeffs.max(16);
        Atoms {
            spec: &problem.spec,
            sigma0: problem.sigma0,
            radius,
            n_coeffs: problem.n_coeffs,
            pts: circle_points(radius, m, 0.0),
        }
    }

    /// Taylor coefficients of `log f_p(e^(-2 pi i tau) p^(-sigma0 - s))`.
    fn atom(&self, p: u64, tau: f64) -> Result<H2Element> {
        let vals: Result<Vec<Complex64>> = self
            .pts
            .iter()
            .map(|&s| log_eval(self.spec, p, twisted_argument(p, s + self.sigma0, tau)))
            .collect();
        H2Element::new(
            self.radius,
            taylor_from_samples(self.radius, self.n_coeffs, &vals?),
            0.0,
        )
    }
}

/// Residual `log g(s / gamma^2) - sum_{p <= y} log f_p` with the preset
/// phases, and the candidate pool `y < p <= P_max`.
pub fn init_residual(problem: &ApproximationProblem, p_max: u64) -> Result<ApproximationState> {
    problem.validate()?;
    if p_max < problem.y {
        return Err(invalid(format!("P_max = {p_max} below y = {}", problem.y)));
    }
    let radius = problem.working_radius();
    let gc = problem.contracted();
    let mut residual = log_target(&gc, radius, problem.n_coeffs)?;
    let atoms = Atoms::new(problem);
    let phases = PhaseAssignment::new(problem.t0);
    let sieve = primes::shared(p_max);
    let mut fixed = Vec::new();
    for &p in sieve.up_to(problem.y) {
        let theta = problem.presets.get(&p).copied().unwrap_or(0.0);
        let tau = theta + phases.gamma(p);
        residual = residual.sub(&atoms.atom(p, tau)?)?;
        fixed.push((p, reduce(theta)));
    }
    let pool: Vec<PoolEntry> = sieve
        .in_interval(problem.y, p_max)
        .iter()
        .filter(|&&p| problem.spec.a1(p).norm() > 0.0)
        .map(|&p| {
            let a1_abs = problem.spec.a1(p).norm();
            let log_p = (p as f64).ln();
            PoolEntry {
                p,
                log_p,
                a1_abs,
                phi: problem.spec.coefficient_phase(p),
                eta_norm_sq: a1_abs * a1_abs * exp_atom_norm_sq(log_p, problem.sigma0, radius),
            }
        })
        .collect();
    let grid = DiscGrid::new(
        Complex64::new(0.0, 0.0),
        problem.r,
        problem.survey_boundary,
        problem.survey_rings,
    );
    let target_max = grid.points().iter().map(|&s| gc(s).norm()).fold(0.0, f64::max);
    // sup_{|s| <= r} |psi| <= ||psi|| / (sqrt(pi) (R - r)) and
    // |g - g e^(-psi)| <= A (e^|psi| - 1)
    let stop_norm = PI.sqrt() * (radius - problem.r) * (1.0 + problem.eps / (2.0 * target_max)).ln();
    let trace = vec![residual.norm()];
    let used = vec![false; pool.len()];
    Ok(ApproximationState {
        radius,
        sigma0: problem.sigma0,
        residual,
        fixed,
        accepted: Vec::new(),
        pool,
        used,
        trace,
        stop_norm,
        target_max,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Greedy steering: repeatedly subtract the pool atom `log f_p` (total phase
/// on the grid `q + phi_p`) giving the largest strict decrease of the
/// residual norm.
pub fn greedy_rearrange(
    state: &mut ApproximationState,
    problem: &ApproximationProblem,
    max_steps: usize,
) -> Result<GreedyOutcome> {
    let atoms = Atoms::new(problem);
    let g = problem.phase_grid;
    let mut steps = 0;
    let mut best_ip = 0.0;
    loop {
        let norm = state.residual.norm();
        if norm <= state.stop_norm {
            return Ok(outcome(StopReason::Converged, steps, best_ip, state));
        }
        if steps >= max_steps {
            return Ok(outcome(StopReason::MaxSteps, steps, best_ip, state));
        }
        let open: Vec<usize> = (0..state.pool.len()).filter(|&i| !state.used[i]).collect();
        if open.is_empty() {
            return Ok(outcome(StopReason::PoolExhausted, steps, best_ip, state));
        }
        let profile = DeltaProfile::new(&state.residual, state.sigma0);
        let pool = &state.pool;
        let screened: Vec<(usize, f64, f64)> = par::map(&open, |&i| {
            let e = pool[i];
            let d = profile.delta(e.log_p);
            let q = ((d.arg() / (2.0 * PI) * g as f64).round() as i64).rem_euclid(g as i64) as f64 / g as f64;
            let ip = e.a1_abs * (Complex64::from_polar(1.0, -2.0 * PI * q) * d).re;
            (i, 2.0 * ip - e.eta_norm_sq, ip)
        });
        best_ip = screened.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max);
        let mut order: Vec<&(usize, f64, f64)> = screened.iter().collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(pool[a.0].p.cmp(&pool[b.0].p)));
        let tasks: Vec<(usize, usize)> = order
            .iter()
            .take(problem.shortlist)
            .flat_map(|&&(i, _, _)| (0..g).map(move |j| (i, j)))
            .collect();
        let resid = &state.residual;
        let norm_sq = resid.norm_sq();
        let decrease = |p: u64, tau: f64| -> Result<f64> {
            let u = atoms.atom(p, tau)?;
            Ok(norm_sq - resid.sub(&u)?.norm_sq())
        };
        let scored: Vec<Result<f64>> = par::map(&tasks, |&(i, j)| {
            let e = pool[i];
            decrease(e.p, j as f64 / g as f64 + e.phi)
        });
        let mut best: Option<(usize, f64, f64)> = None;
        for (&(i, j), sc) in tasks.iter().zip(scored) {
            let d = sc?;
            if best.map_or(true, |b| d > b.2) {
                best = Some((i, j as f64 / g as f64 + pool[i].phi, d));
            }
        }
        let Some((i, mut tau, mut dec)) = best else {
            return Ok(outcome(StopReason::NoDecrease, steps, best_ip, state));
        };
        if problem.refine_phase {
            let p = pool[i].p;
            let half = 0.5 / g as f64;
            let (t, v) = golden_max(
                |t| decrease(p, t).unwrap_or(f64::NEG_INFINITY),
                tau - half,
                tau + half,
                40,
            );
            if v > dec {
                tau = t;
                dec = v;
            }
        }
        if !(dec > 0.0) {
            return Ok(outcome(StopReason::NoDecrease, steps, best_ip, state));
        }
        let p = pool[i].p;
        let next = state.residual.sub(&atoms.atom(p, tau)?)?;
        let next_norm = next.norm();
        if !(next_norm < norm) {
            return Ok(outcome(StopReason::NoDecrease, steps, best_ip, state));
        }
        state.residual = next;
        state.used[i] = true;
        state.accepted.push(AcceptedStep {
            p,
            tau: reduce(tau),
            decrease: dec,
        });
        state.trace.push(next_norm);
        steps += 1;
    }
}

fn outcome(reason: StopReason, steps: usize, best_ip: f64, state: &ApproximationState) -> GreedyOutcome {
    GreedyOutcome {
        reason,
        steps,
        best_inner_product: best_ip,
        pool_exhausted: state.used.iter().all(|&u| u),
    }
}

/// Result of a disc approximation.
#[derive(Debug, Clone)]
pub struct Approximation {
    /// Every prime of the product, ascending.
    pub primes: Vec<u64>,
    pub phases: PhaseAssignment,
    /// Surveyed `max |g(s) - F_M(sigma0 + s)|` over the disc.
    pub max_error: f64,
    pub argmax: Complex64,
    pub survey: Survey,
    pub accepted: Vec<AcceptedStep>,
    pub trace: Vec<f64>,
    pub outcome: GreedyOutcome,
    /// `max |g(s) - g(s / gamma^2)|` on the disc.
    pub contraction_deviation: f64,
    /// `max |g(s / gamma^2)|`.
    pub target_max: f64,
    pub residual_norm: f64,
    pub stop_norm: f64,
    /// `deviation + A (e^B - 1)` with `B` the sup bound of the residual.
    pub certified_bound: f64,
}

fn phases_of(problem: &ApproximationProblem, state: &ApproximationState) -> PhaseAssignment {
    let mut phases = PhaseAssignment::new(problem.t0);
    for &(p, theta) in &state.fixed {
        phases.set(p, theta);
    }
    for a in &state.accepted {
        phases.set_total(a.p, a.tau);
    }
    phases
}

fn survey_product(problem: &ApproximationProblem, phases: &PhaseAssignment) -> Survey {
    let primes = phases.primes();
    let ev = ProductEvaluator::new(&problem.spec, &primes, phases);
    let s0 = problem.sigma0;
    disc_error_survey(
        |z: Complex64| problem.target.eval(z - s0),
        |z: Complex64| ev.eval(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        &problem.survey_grid(),
    )
}

fn run_approximation(problem: &ApproximationProblem) -> Result<Approximation> {
    let mut state = init_residual(problem, problem.p_max)?;
    let outcome = greedy_rearrange(&mut state, problem, problem.max_steps)?;
    let phases = phases_of(problem, &state);
    let survey = survey_product(problem, &phases);
    let deviation = contract_target(problem);
    let residual_norm = state.residual.norm_bound();
    let sup = residual_norm / (PI.sqrt() * (state.radius - problem.r));
    Ok(Approximation {
        primes: phases.primes(),
        phases,
        max_error: survey.max_error,
        argmax: survey.argmax,
        survey,
        accepted: state.accepted.clone(),
        trace: state.trace.clone(),
        outcome,
        contraction_deviation: deviation,
        target_max: state.target_max,
        residual_norm,
        stop_norm: state.stop_norm,
        certified_bound: deviation + state.target_max * sup.exp_m1(),
    })
}

impl Approximation {
    /// Rows `step p tau decrease residual_norm`; step 0 is the initial residual.
    pub fn trace_text(&self) -> String {
        let mut out = String::from("# step p tau decrease residual_norm\n");
        writeln!(out, "0 - - - {}", self.trace[0]).expect("string write");
        for (k, (a, n)) in self.accepted.iter().zip(&self.trace[1..]).enumerate() {
            writeln!(out, "{} {} {} {} {}", k + 1, a.p, a.tau, a.decrease, n).expect("string write");
        }
        out
    }

    /// `[result]`, `[phases]` and `[trace]` sections of a run report.
    pub fn result_text(&self) -> String {
        let mut out = String::from("[result]\n");
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        kv("stop", self.outcome.reason.to_string());
        kv("steps", self.outcome.steps.to_string());
        kv("max_error", self.max_error.to_string());
        kv("argmax", format!("{},{}", self.argmax.re, self.argmax.im));
        kv("primes", self.primes.len().to_string());
        kv("largest_prime", self.primes.last().copied().unwrap_or(0).to_string());
        kv("residual_norm", self.residual_norm.to_string());
        kv("stop_norm", self.stop_norm.to_string());
        kv("certified_bound", self.certified_bound.to_string());
        kv("contraction_deviation", self.contraction_deviation.to_string());
        kv("target_max", self.target_max.to_string());
        out.push_str("[phases]\n");
        out.push_str(&self.phases.to_text());
        out.push_str("[trace]\n");
        out.push_str(&self.trace_text());
        out
    }
}

/// Approximate the target to within `eps` on the disc. A surveyed error above
/// `eps` is reported as [`Error::Stall`] carrying the partial result.
pub fn approximate(problem: &ApproximationProblem) -> Result<Approximation> {
    let a = run_approximation(problem)?;
    if a.max_error <= problem.eps {
        Ok(a)
    } else {
        Err(Error::Stall {
            error: a.max_error,
            eps: problem.eps,
            report: Box::new(a),
        })
    }
}

/// Controls of the stage loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub stages: usize,
    /// Draws per batch of the mean-value selection.
    pub samples: usize,
    pub max_samples: usize,
    /// Allowed ratio between a stage error and its schedule bound.
    pub slack: f64,
    pub seed: u64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            stages: 3,
            samples: 64,
            max_samples: 512,
            slack: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefineStage {
    pub k: usize,
    /// `2^k y0`
    pub y: u64,
    /// Largest prime of the product.
    pub m: u64,
    /// Phases of every prime `p <= m`.
    pub phases: PhaseAssignment,
    /// Primes chosen by the greedy step.
    pub accepted: Vec<u64>,
    /// Primes in the gaps whose phases came from the random selection.
    pub gap_primes: usize,
    pub draws: usize,
    pub error: f64,
    /// `2^(1 + k e) eps`
    pub schedule_bound: f64,
    pub within_schedule: bool,
    pub survey: Survey,
}

/// Stages `k = 0..K` with `y_k = 2^k y0` and tolerance `eps / 2^k`. Stage `k`
/// keeps the phases of every prime up to the previous stage's `m`, runs the
/// greedy step on the primes above, and assigns the primes it skipped below
/// its new `m` by mean-value selection: random phase vectors drawn in batches,
/// keeping the one with the smallest surveyed error that does not exceed the
/// previous stage's error.
pub fn refine_sequence(problem: &ApproximationProblem, opts: &RefineOptions) -> Result<Vec<RefineStage>> {
    problem.validate()?;
    let e = problem.schedule_exponent();
    if !(e < 0.0) {
        return Err(invalid(format!(
            "1/2 + r + 2 lambda + delta - sigma0 < 0 violated: {e}"
        )));
    }
    if opts.stages == 0 || opts.samples == 0 || opts.max_samples < opts.samples {
        return Err(invalid("need stages >= 1 and 1 <= samples <= max_samples"));
    }
    let mut stages: Vec<RefineStage> = Vec::new();
    for k in 0..opts.stages {
        let y_k = problem.y << k;
        let prev = stages.last();
        let prev_m = prev.map_or(0, |s| s.m);
        let y_eff = y_k.max(prev_m);
        let mut sub = problem.clone();
        sub.y = y_eff;
        sub.eps = problem.eps / f64::from(1u32 << k.min(30));
        sub.p_max = problem.p_max.max(y_eff);
        sub.presets = match prev {
            Some(s) => s.phases.iter().collect(),
            None => problem.presets.clone(),
        };
        let approx = run_approximation(&sub)?;
        let accepted: Vec<u64> = approx.accepted.iter().map(|a| a.p).collect();
        let m = accepted.iter().copied().max().unwrap_or(0).max(y_eff);
        let gaps: Vec<u64> = primes::shared(m)
            .in_interval(y_eff, m)
            .iter()
            .copied()
            .filter(|p| !accepted.contains(p))
            .collect();
        let prev_error = prev.map(|s| s.error);
        let (phases, survey, draws) = select_gap_phases(&sub, &approx.phases, &gaps, prev_error, opts, k)?;
        let error = survey.max_error;
        let schedule_bound = 2f64.powf(1.0 + k as f64 * e) * problem.eps;
        stages.push(RefineStage {
            k,
            y: y_k,
            m,
            phases,
            accepted,
            gap_primes: gaps.len(),
            draws,
            error,
            schedule_bound,
            within_schedule: error <= opts.slack * schedule_bound,
            survey,
        });
    }
    Ok(stages)
}

/// One row per stage: `k y m accepted gap_primes draws error schedule_bound within_schedule`.
pub fn stages_text(stages: &[RefineStage]) -> String {
    let mut out = String::from("# k y m accepted gap_primes draws error schedule_bound within_schedule\n");
    for s in stages {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            s.k,
            s.y,
            s.m,
            s.accepted.len(),
            s.gap_primes,
            s.draws,
            s.error,
            s.schedule_bound,
            s.within_schedule
        )
        .expect("string write");
    }
    out
}

fn select_gap_phases(
    problem: &ApproximationProblem,
    base: &PhaseAssignment,
    gaps: &[u64],
    prev_error: Option<f64>,
    opts: &RefineOptions,
    stage: usize,
) -> Result<(PhaseAssignment, Survey, usize)> {
    if gaps.is_empty() {
        let survey = survey_product(problem, base);
        if let Some(prev) = prev_error {
            if survey.max_error > prev {
                return Err(Error::StageNotDecreasing {
                    stage,
                    error: survey.max_error,
                    previous: prev,
                    draws: 0,
                });
            }
        }
        return Ok((base.clone(), survey, 0));
    }
    let s0 = problem.sigma0;
    let bgrid = DiscGrid::new(Complex64::new(s0, 0.0), problem.r, problem.survey_boundary, 0);
    let pts = bgrid.points();
    let base_primes = base.primes();
    let base_ev = ProductEvaluator::new(&problem.spec, &base_primes, base);
    let base_log: Vec<Complex64> = pts.iter().map(|&z| base_ev.log_eval(z)).collect::<Result<_>>()?;
    let target: Vec<Complex64> = pts.iter().map(|&z| problem.target.eval(z - s0)).collect();
    let log_p: Vec<f64> = gaps.iter().map(|&p| (p as f64).ln()).collect();
    let gamma: Vec<f64> = gaps.iter().map(|&p| base.gamma(p)).collect();
    let draw = |d: usize| -> Vec<f64> {
        let mut rng = stream_rng(opts.seed, ((stage as u64) << 32) | d as u64);
        gaps.iter().map(|_| rng.gen::<f64>()).collect()
    };
    let score = |thetas: &Vec<f64>| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (k, &z) in pts.iter().enumerate() {
            let mut l = base_log[k];
            for (i, &p) in gaps.iter().enumerate() {
                let w = (-z * log_p[i]).exp() * Complex64::from_polar(1.0, -2.0 * PI * (thetas[i] + gamma[i]));
                l += log_eval(&problem.spec, p, w)?;
            }
            worst = worst.max((target[k] - l.exp()).norm());
        }
        Ok(worst)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut draws = 0;
    while draws < opts.max_samples {
        let batch: Vec<usize> = (draws..(draws + opts.samples).min(opts.max_samples)).collect();
        draws += batch.len();
        let scored = par::map(&batch, |&d| {
            let th = draw(d);
            score(&th).map(|v| (v, th))
        });
        for sc in scored {
            let (v, th) = sc?;
            if best.as_ref().map_or(true, |b| v < b.0) {
                best = Some((v, th));
            }
        }
        let (_, th) = best.as_ref().expect("at least one draw");
        let mut phases = base.clone();
        for (&p, &t) in gaps.iter().zip(th) {
            phases.set(p, t);
        }
        let survey = survey_product(problem, &phases);
        match prev_error {
            Some(prev) if survey.max_error > prev => continue,
            _ => return Ok((phases, survey, draws)),
        }
    }
    let err = best.map_or(f64::INFINITY, |b| b.0);
    Err(Error::StageNotDecreasing {
        stage,
        error: err,
        previous: prev_error.unwrap_or(f64::INFINITY),
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn contraction_examples() {
        let mut p = ApproximationProblem::new(EulerFactorSpec::zeta(), Target::Constant(c(2.0, 0.0)));
        assert_eq!(contract_target(&p), 0.0);
        p.target = Target::Polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        p.gamma = 2f64.sqrt();
        p.r = 0.05;
        assert!((contract_target(&p) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn validation_names_inequality() {
        let mut p = ApproximationProblem::new(EulerFactorSpec::zeta(), Target::Constant(c(1.0, 0.0)));
        p.r = 0.3;
        let e = p.validate().unwrap_err().to_string();
        assert!(e.contains("r < r0"), "{e}");
        p.r = 0.02;
        p.p_max = 1;
        assert!(p.validate().unwrap_err().to_string().contains("P_max"));
        p.p_max = 100;
        p.lambda = 0.2;
        assert!(p.validate().unwrap_err().to_string().contains("2 lambda"));
    }

    #[test]
    fn zero_residual_takes_no_steps() {
        // target equals the product over p <= y, so nothing is left
        let spec = EulerFactorSpec::zeta();
        let mut phases = PhaseAssignment::new(0.0);
        phases.set(2, 0.0);
        phases.set(3, 0.0);
        let target = Target::Product {
            spec: spec.clone(),
            phases,
            sigma0: 0.75,
        };
        let mut p = ApproximationProblem::new(spec, target);
        p.y = 3;
        p.gamma = 1.0 + 1e-9;
        p.p_max = 1000;
        let a = approximate(&p).unwrap();
        assert_eq!(a.outcome.steps, 0);
        assert!(a.max_error < 1e-6);
    }

    #[test]
    fn single_missing_prime_is_found() {
        let spec = EulerFactorSpec::zeta();
        let mut phases = PhaseAssignment::new(0.0);
        for p in [2, 3, 5] {
            phases.set(p, 0.0);
        }
        phases.set(13, 0.25);
        let target = Target::Product {
            spec: spec.clone(),
            phases,
            sigma0: 0.75,
        };
        let mut p = ApproximationProblem::new(spec, target);
        p.y = 5;
        p.gamma = 1.0 + 1e-9;
        p.p_max = 200;
        let a = approximate(&p).unwrap();
        assert_eq!(a.accepted.first().map(|s| s.p), Some(13));
        assert!((a.phases.theta(13) - 0.25).abs() < 1e-12);
        assert!(a.max_error < 1e-6);
        assert!(a.trace.windows(2).all(|w| w[1] < w[0]));
    }
}
