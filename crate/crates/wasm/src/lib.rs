//! Browser bindings for the demo page: the error heatmap of a disc
//! approximation, `|F_n|` over a rectangle, and a Kronecker orbit on the
//! 2-torus. Results come back as flat `f64` arrays.

use eulerprod::approximator::{approximate, ApproximationProblem, Target};
use eulerprod::primes::primes_up_to;
use eulerprod::product::{PhaseAssignment, ProductEvaluator};
use eulerprod::torus::{equidistribution_test, frequencies};
use eulerprod::{Complex64, Error, EulerFactorSpec};
use wasm_bindgen::prelude::*;

/// Approximate `e^(a s)` on `|s| <= r` around `3/4` with the zeta spec.
///
/// Layout: `[max_error, greedy_steps, primes, largest_prime, re, im, err, re, im, err, ..]`
/// with one triple per survey point. An unreachable tolerance still returns
/// the partial result; a rejected configuration returns an empty array.
#[wasm_bindgen]
pub fn approximation_heatmap(a_re: f64, a_im: f64, r: f64, eps: f64, p_max: u32) -> Vec<f64> {
    let mut problem = ApproximationProblem::new(EulerFactorSpec::zeta(), Target::Exp(Complex64::new(a_re, a_im)));
    problem.r = r;
    problem.eps = eps;
    problem.p_max = u64::from(p_max).max(2);
    problem.survey_boundary = 128;
    problem.survey_rings = 8;
    let a = match approximate(&problem) {
        Ok(a) => a,
        Err(Error::Stall { report, .. }) => *report,
        Err(_) => return Vec::new(),
    };
    let mut out = vec![
        a.max_error,
        a.outcome.steps as f64,
        a.primes.len() as f64,
        a.primes.last().copied().unwrap_or(0) as f64,
    ];
    for (s, e) in &a.survey.rows {
        out.extend([s.re - problem.sigma0, s.im, *e]);
    }
    out
}

/// `|F(s)|` for the untwisted zeta partial product over `p <= prime_limit`
/// on an `nx` by `ny` grid of `[sigma_lo, sigma_hi] x [t_lo, t_hi]`, row by
/// row from `t_lo`. Points where a factor is undefined give `NaN`.
#[wasm_bindgen]
pub fn product_modulus_field(
    prime_limit: u32,
    sigma_lo: f64,
    sigma_hi: f64,
    t_lo: f64,
    t_hi: f64,
    nx: u32,
    ny: u32,
) -> Vec<f64> {
    let primes = primes_up_to(u64::from(prime_limit));
    let mut phases = PhaseAssignment::new(0.0);
    for &p in &primes {
        phases.set(p, 0.0);
    }
    let ev = ProductEvaluator::new(&EulerFactorSpec::zeta(), &primes, &phases);
    let (nx, ny) = (nx.max(2) as usize, ny.max(2) as usize);
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let t = t_lo + (t_hi - t_lo) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let sigma = sigma_lo + (sigma_hi - sigma_lo) * i as f64 / (nx - 1) as f64;
            out.push(ev.eval(Complex64::new(sigma, t)).map_or(f64::NAN, |v| v.norm()));
        }
    }
    out
}

/// Points `({t log 2 / 2 pi}, {t log 3 / 2 pi})` for `samples` midpoints of
/// `[0, t_max]`, preceded by the larger of the two coordinate star
/// discrepancies on a `bins` grid and the pair discrepancy:
/// `[d_single, d_pair, x0, y0, x1, y1, ..]`.
#[wasm_bindgen]
pub fn torus_orbit(t_max: f64, samples: u32, bins: u32) -> Vec<f64> {
    let freqs = frequencies(2);
    let n = samples.max(1) as usize;
    let Ok(eq) = equidistribution_test(&freqs, t_max, bins.max(8) as usize, n, 1, 0) else {
        return Vec::new();
    };
    let mut out = vec![eq.max_single(), eq.pairs.first().map_or(0.0, |p| p.1)];
    for k in 0..n {
        let t = (k as f64 + 0.5) * t_max / n as f64;
        out.extend(freqs.iter().map(|l| (t * l).rem_euclid(1.0)));
    }
    out
}
