//! The expansion `log f_p(w) = a_p^1 w + nu_p(w)` of a single local factor,
//! the coefficients `b_m` of `f_p(z) / (1 + a_p^1 z)`, and the certified
//! bound on `nu_p`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::GaussRational;
use crate::factor::{EulerFactorSpec, FactorKind};

fn check_pole(spec: &EulerFactorSpec, p: u64) -> Result<()> {
    let a1 = spec.a1(p).norm();
    if a1 > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "|a_{p}^1| = {a1} > 1 puts the pole of 1/(1 + a z) inside the unit disc"
        )));
    }
    Ok(())
}

/// `b_2 .. b_{m_max}` by series division: `c_0 = 1`,
/// `c_m = a^m - a^1 c_{m-1}`. Index `i` of the result holds `b_{i+2}`.
pub fn b_coefficients(spec: &EulerFactorSpec, p: u64, m_max: usize) -> Result<Vec<Complex64>> {
    check_pole(spec, p)?;
    let a1 = spec.a1(p);
    let mut c = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for m in 1..=m_max {
        c = spec.coefficient(p, m) - a1 * c;
        if m >= 2 {
            out.push(c);
        }
    }
    Ok(out)
}

/// `b_2 .. b_{m_max}` from the alternating sum
/// `b_m = a^m - a^{m-1} a^1 + ... + (-1)^{m-2} a^2 (a^1)^{m-2}`.
pub fn b_coefficients_alternating(spec: &EulerFactorSpec, p: u64, m_max: usize) -> Result<Vec<Complex64>> {
    check_pole(spec, p)?;
    let a1 = spec.a1(p);
    let mut out = Vec::new();
    for m in 2..=m_max {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for j in 0..=m - 2 {
            let term = spec.coefficient(p, m - j) * pow;
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            pow *= a1;
        }
        out.push(sum);
    }
    Ok(out)
}

fn exact_coefficients(spec: &EulerFactorSpec, p: u64, m_max: usize) -> Result<Vec<GaussRational>> {
    (0..=m_max)
        .map(|m| GaussRational::from_complex(spec.coefficient(p, m)))
        .collect()
}

/// Series division in exact Gaussian rational arithmetic.
pub fn b_coefficients_exact(spec: &EulerFactorSpec, p: u64, m_max: usize) -> Result<Vec<GaussRational>> {
    check_pole(spec, p)?;
    let a = exact_coefficients(spec, p, m_max)?;
    let mut c = GaussRational::one();
    let mut out = Vec::new();
    for m in 1..=m_max {
        c = &a[m] - &(&a[1] * &c);
        if m >= 2 {
            out.push(c.clone());
        }
    }
    Ok(out)
}

/// The alternating sum in exact Gaussian rational arithmetic.
pub fn b_coefficients_alternating_exact(spec: &EulerFactorSpec, p: u64, m_max: usize) -> Result<Vec<GaussRational>> {
    check_pole(spec, p)?;
    let a = exact_coefficients(spec, p, m_max)?;
    let mut out = Vec::new();
    for m in 2..=m_max {
        let mut sum = GaussRational::zero();
        let mut pow = GaussRational::one();
        for j in 0..=m - 2 {
            let term = &a[m - j] * &pow;
            sum = if j % 2 == 0 { &sum + &term } else { &sum - &term };
            pow = &pow * &a[1];
        }
        out.push(sum);
    }
    Ok(out)
}

/// Components of `log f_p(w)` at `w = exp(-2 pi i (theta + gamma)) p^(-s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFactor {
    pub w: Complex64,
    pub u: Complex64,
    pub eta: Complex64,
    pub nu: Complex64,
}

/// `p^(-s)` rotated by the total phase `tau`.
pub fn twisted_argument(p: u64, s: Complex64, tau: f64) -> Complex64 {
    let lp = (p as f64).ln();
    let turn = tau.rem_euclid(1.0);
    (-s * lp).exp() * Complex64::from_polar(1.0, -2.0 * PI * turn)
}

/// `log f_p(w)` on the branch continuous along `[0, w]` with `log f_p(0) = 0`.
pub fn log_eval(spec: &EulerFactorSpec, p: u64, w: Complex64) -> Result<Complex64> {
    let rho = w.norm();
    if !(rho < 1.0) {
        return Err(Error::OutsideUnitDisc { modulus: rho });
    }
    match spec.kind() {
        FactorKind::Custom(t) => {
            let row = t.row(p);
            if row.is_empty() {
                return Ok(Complex64::new(0.0, 0.0));
            }
            // sup of |f - 1| over |z| <= |w|
            let mut sup = 0.0;
            let mut rm = 1.0;
            for a in row {
                rm *= rho;
                sup += a.norm() * rm;
            }
            if sup < 1.0 {
                Ok(spec.eval(p, w).ln())
            } else {
                track_log(spec, p, w)
            }
        }
        _ => {
            let a = spec.a1(p);
            Ok(-(Complex64::new(1.0, 0.0) - a * w).ln())
        }
    }
}

fn track_log(spec: &EulerFactorSpec, p: u64, w: Complex64) -> Result<Complex64> {
    let mut steps = 128usize;
    while steps <= 1 << 16 {
        let mut arg = 0.0;
        let mut prev = Complex64::new(1.0, 0.0);
        let mut ok = true;
        for k in 1..=steps {
            let f = spec.eval(p, w * (k as f64 / steps as f64));
            if f.norm() < 1e-300 {
                return Err(Error::BranchTracking { p });
            }
            let d = (f / prev).arg();
            if d.abs() > PI / 4.0 {
                ok = false;
                break;
            }
            arg += d;
            prev = f;
        }
        if ok {
            return Ok(Complex64::new(prev.norm().ln(), arg));
        }
        steps *= 2;
    }
    Err(Error::BranchTracking { p })
}

/// Split `log f_p` at the absolute point `s` into the leading term
/// `eta = a_p^1 w` and the remainder `nu`.
pub fn log_factor(spec: &EulerFactorSpec, p: u64, s: Complex64, theta: f64, gamma: f64) -> Result<LogFactor> {
    let w = twisted_argument(p, s, theta + gamma);
    let u = log_eval(spec, p, w)?;
    let eta = spec.a1(p) * w;
    Ok(LogFactor { w, u, eta, nu: u - eta })
}

/// Bound on `|nu_p(s)|` valid for every `s` with `Re s >= sigma0 - r`.
///
/// With `q = p^(eps + r - sigma0)` and `2 c(eps) q <= 1/2` the remainder
/// satisfies `|nu_p| <= 4 c(eps)^2 q^2`. When `4 eps + 2 r - 2 sigma0 <= -1`
/// the weaker form `4 c(eps)^2 p^(-2 eps - 1)` is returned instead.
pub fn nu_tail_bound(spec: &EulerFactorSpec, p: u64, eps: f64, r: f64, sigma0: f64) -> Result<f64> {
    let c = spec.growth_constant(eps)?;
    let q = (p as f64).powf(eps + r - sigma0);
    if 2.0 * c * q > 0.5 {
        return Err(Error::PrimeTooSmall {
            p,
            detail: format!("2 c(eps) p^(eps + r - sigma0) = {} > 1/2", 2.0 * c * q),
        });
    }
    if 4.0 * eps + 2.0 * r - 2.0 * sigma0 <= -1.0 {
        Ok(4.0 * c * c * (p as f64).powf(-2.0 * eps - 1.0))
    } else {
        Ok(4.0 * c * c * q * q)
    }
}

/// Smallest prime for which [`nu_tail_bound`] applies.
pub fn nu_threshold(spec: &EulerFactorSpec, eps: f64, r: f64, sigma0: f64) -> Result<u64> {
    let c = spec.growth_constant(eps)?;
    let k = sigma0 - r - eps;
    if k <= 0.0 {
        return Err(Error::InvalidParameter("sigma0 - r - eps must be positive".into()));
    }
    let x = (4.0 * c).powf(1.0 / k).ceil() as u64;
    let mut p = x.max(2);
    while !crate::primes::is_prime(p) || nu_tail_bound(spec, p, eps, r, sigma0).is_err() {
        p += 1;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{parse_custom_spec, DirichletCharacter};

    #[test]
    fn zeta_b_coefficients() {
        let spec = EulerFactorSpec::zeta();
        let b = b_coefficients(&spec, 7, 10).unwrap();
        for (i, v) in b.iter().enumerate() {
            let m = i + 2;
            let want = if m % 2 == 0 { 1.0 } else { 0.0 };
            assert_eq!(*v, Complex64::new(want, 0.0), "m = {m}");
        }
        let e = b_coefficients_exact(&spec, 7, 10).unwrap();
        assert_eq!(e, b_coefficients_alternating_exact(&spec, 7, 10).unwrap());
    }

    #[test]
    fn linear_factor_has_no_b() {
        let spec = parse_custom_spec("c_eps 0 1\n5 1 0.3 0.4\n").unwrap();
        let b = b_coefficients(&spec, 5, 6).unwrap();
        let alt = b_coefficients_alternating(&spec, 5, 6).unwrap();
        for (x, y) in b.iter().zip(&alt) {
            assert!((x - y).norm() < 1e-15);
        }
        // f = 1 + a z gives f / (1 + a z) = 1
        assert!(b.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn pole_inside_disc_rejected() {
        let spec = parse_custom_spec("c_eps 1 2\n2 1 1.5 0\n2 2 0.5625 0\n").unwrap();
        assert!(b_coefficients(&spec, 2, 4).is_err());
    }

    #[test]
    fn log_branches_agree_with_closed_form() {
        let spec = EulerFactorSpec::zeta();
        let s = Complex64::new(0.75, 3.0);
        let lf = log_factor(&spec, 2, s, 0.3, 0.1).unwrap();
        assert!((lf.u.exp() - spec.eval(2, lf.w)).norm() < 1e-14);
        assert!((lf.eta + lf.nu - lf.u).norm() < 1e-15);
        // the custom path agrees with the closed form on a truncated geometric series
        let mut text = String::from("c_eps 0 1\n");
        for m in 1..=60 {
            text.push_str(&format!("2 {m} 1 0\n"));
        }
        let trunc = parse_custom_spec(&text).unwrap();
        let w = Complex64::new(-0.5, 0.3);
        let a = log_eval(&trunc, 2, w).unwrap();
        let b = log_eval(&spec, 2, w).unwrap();
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn tracking_follows_continuous_branch() {
        // f(z) = 1 + 0.95 z + 0.95 z^2 winds far from 1 near |z| = 0.9
        let spec = parse_custom_spec("c_eps 0 1\n3 1 0.95 0\n3 2 0.95 0\n").unwrap();
        let w = Complex64::from_polar(0.9, 2.2);
        let l = log_eval(&spec, 3, w).unwrap();
        assert!((l.exp() - spec.eval(3, w)).norm() < 1e-12);
        // small-step continuation from a nearby point moves the log continuously
        let l2 = log_eval(&spec, 3, w * 0.999).unwrap();
        assert!((l - l2).norm() < 0.05);
    }

    #[test]
    fn nu_bound_example() {
        let spec = EulerFactorSpec::zeta();
        let p = 1_000_003;
        let eps = 0.05;
        let bound = nu_tail_bound(&spec, p, eps, 0.0, 0.75).unwrap();
        let lf = log_factor(&spec, p, Complex64::new(0.75, 0.0), 0.0, 0.0).unwrap();
        assert!(lf.nu.norm() <= bound);
        assert_eq!(bound, 4.0 * (p as f64).powf(-2.0 * eps - 1.0));
        assert!(nu_tail_bound(&spec, 2, 0.0, 0.1, 0.75).is_err());
        let chi = EulerFactorSpec::character(DirichletCharacter::mod4());
        let t = nu_threshold(&chi, 0.0, 0.02, 0.75).unwrap();
        assert!(nu_tail_bound(&chi, t, 0.0, 0.02, 0.75).is_ok());
    }
}
