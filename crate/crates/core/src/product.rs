//! Phase-twisted partial Euler products
//! `prod_p f_p(exp(-2 pi i (theta_p + gamma_p)) p^(-s))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expansion::{log_eval, twisted_argument};
use crate::factor::EulerFactorSpec;

/// Phases `theta_p` in `[0, 1)` together with the vertical shift `t0` that
/// contributes `gamma_p = t0 log p / 2 pi`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseAssignment {
    t0: f64,
    phases: BTreeMap<u64, f64>,
}

impl PhaseAssignment {
    pub fn new(t0: f64) -> Self {
        PhaseAssignment {
            t0,
            phases: BTreeMap::new(),
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `gamma_p = t0 log p / 2 pi`.
    pub fn gamma(&self, p: u64) -> f64 {
        self.t0 * (p as f64).ln() / (2.0 * PI)
    }

    /// Store `theta_p`, reduced into `[0, 1)`.
    pub fn set(&mut self, p: u64, theta: f64) {
        self.phases.insert(p, reduce(theta));
    }

    /// Store the phase that makes the total phase `theta_p + gamma_p` equal
    /// `tau` modulo 1.
    pub fn set_total(&mut self, p: u64, tau: f64) {
        let g = self.gamma(p);
        self.set(p, tau - g);
    }

    /// `theta_p`, defaulting to 0.
    pub fn theta(&self, p: u64) -> f64 {
        self.phases.get(&p).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, p: u64) -> bool {
        self.phases.contains_key(&p)
    }

    /// Total phase `theta_p + gamma_p` modulo 1.
    pub fn total(&self, p: u64) -> f64 {
        reduce(self.theta(p) + self.gamma(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.phases.iter().map(|(&p, &t)| (p, t))
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn primes(&self) -> Vec<u64> {
        self.phases.keys().copied().collect()
    }

    /// Text form: a `t0 <value>` line, then `p theta` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("t0 {}\n", self.t0);
        for (p, t) in self.iter() {
            writeln!(out, "{p} {t}").expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = PhaseAssignment::new(0.0);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("phases line {}: {raw:?}", i + 1));
            if f.len() != 2 {
                return Err(bad());
            }
            if f[0] == "t0" {
                out.t0 = f[1].parse().map_err(|_| bad())?;
            } else {
                let p: u64 = f[0].parse().map_err(|_| bad())?;
                let t: f64 = f[1].parse().map_err(|_| bad())?;
                out.set(p, t);
            }
        }
        Ok(out)
    }
}

pub(crate) fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `prod_{p in primes} f_p(exp(-2 pi i (theta_p + gamma_p)) p^(-s))` at the
/// absolute point `s`.
pub fn partial_product(
    spec: &EulerFactorSpec,
    s: Complex64,
    primes: &[u64],
    phases: &PhaseAssignment,
) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for &p in primes {
        let w = twisted_argument(p, s, phases.total(p));
        if !(w.norm() < 1.0) {
            return Err(Error::OutsideUnitDisc { modulus: w.norm() });
        }
        acc *= spec.eval(p, w);
    }
    Ok(acc)
}

/// A fixed finite product prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ProductEvaluator {
    spec: EulerFactorSpec,
    primes: Vec<u64>,
    log_p: Vec<f64>,
    rotation: Vec<Complex64>,
}

impl ProductEvaluator {
    pub fn new(spec: &EulerFactorSpec, primes: &[u64], phases: &PhaseAssignment) -> Self {
        let log_p = primes.iter().map(|&p| (p as f64).ln()).collect();
        let rotation = primes
            .iter()
            .map(|&p| Complex64::from_polar(1.0, -2.0 * PI * phases.total(p)))
            .collect();
        ProductEvaluator {
            spec: spec.clone(),
            primes: primes.to_vec(),
            log_p,
            rotation,
        }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Product at the absolute point `s`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for ((&p, &lp), &rot) in self.primes.iter().zip(&self.log_p).zip(&self.rotation) {
            let w = (-s * lp).exp() * rot;
            if !(w.norm() < 1.0) {
                return Err(Error::OutsideUnitDisc { modulus: w.norm() });
            }
            acc *= self.spec.eval(p, w);
        }
        Ok(acc)
    }

    /// Sum of the continuous logarithms of the factors at `s`.
    pub fn log_eval(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&p, &lp), &rot) in self.primes.iter().zip(&self.log_p).zip(&self.rotation) {
            acc += log_eval(&self.spec, p, (-s * lp).exp() * rot)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_at_two_with_small_primes() {
        let spec = EulerFactorSpec::zeta();
        let phases = PhaseAssignment::new(0.0);
        let v = partial_product(&spec, Complex64::new(2.0, 0.0), &[2, 3], &phases).unwrap();
        let want = 1.0 / ((1.0 - 0.25) * (1.0 - 1.0 / 9.0));
        assert!((v.re - want).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn shift_is_a_phase() {
        // a vertical shift t0 equals evaluating at s + i t0
        let spec = EulerFactorSpec::zeta();
        let primes = [2, 3, 5, 7, 11];
        let shifted = PhaseAssignment::new(1.7);
        let s = Complex64::new(0.8, 0.1);
        let a = partial_product(&spec, s, &primes, &shifted).unwrap();
        let b = partial_product(&spec, s + Complex64::new(0.0, 1.7), &primes, &PhaseAssignment::new(0.0)).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn half_turn_flips_sign_of_argument() {
        let spec = EulerFactorSpec::zeta();
        let mut ph = PhaseAssignment::new(0.0);
        ph.set(2, 0.5);
        let v = partial_product(&spec, Complex64::new(1.0, 0.0), &[2], &ph).unwrap();
        assert!((v - Complex64::new(1.0 / 1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluator_matches_direct() {
        let spec = EulerFactorSpec::zeta();
        let mut ph = PhaseAssignment::new(2.5);
        ph.set(3, 0.25);
        ph.set_total(5, 0.75);
        assert!((ph.total(5) - 0.75).abs() < 1e-12);
        let primes = [2, 3, 5, 7];
        let ev = ProductEvaluator::new(&spec, &primes, &ph);
        let s = Complex64::new(0.7, -0.05);
        let a = ev.eval(s).unwrap();
        assert!((a - partial_product(&spec, s, &primes, &ph).unwrap()).norm() < 1e-14);
        assert!((ev.log_eval(s).unwrap().exp() - a).norm() < 1e-13);
    }

    #[test]
    fn phases_text_roundtrip() {
        let mut ph = PhaseAssignment::new(-3.25);
        ph.set(2, 0.125);
        ph.set(97, 0.9999);
        ph.set(5, 1.5);
        let back = PhaseAssignment::from_text(&ph.to_text()).unwrap();
        assert_eq!(back, ph);
        assert_eq!(back.theta(5), 0.5);
    }
}
