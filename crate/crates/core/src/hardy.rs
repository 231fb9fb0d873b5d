//! The Hardy space `H2(R)` of functions analytic on `|s| < R` with the area
//! norm `||f||^2 = pi sum |a_n|^2 R^(2n+2) / (n+1)`, and the transform
//! `Delta(x) = int e^(-x (s + sigma0)) conj(psi(s)) dsigma dt`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::analysis::zero_count;
use crate::error::{Error, Result};

/// A truncated power series `sum a_n s^n` on the disc `|s| < R`, with a bound
/// on the norm of everything the truncation leaves out.
#[derive(Debug, Clone, PartialEq)]
pub struct H2Element {
    radius: f64,
    coeffs: Vec<Complex64>,
    tail_bound: f64,
}

/// `pi R^(2n+2) / (n+1)` for `n < len`.
pub fn norm_weights(radius: f64, len: usize) -> Vec<f64> {
    let r2 = radius * radius;
    let mut pow = r2;
    (0..len)
        .map(|n| {
            let w = PI * pow / (n as f64 + 1.0);
            pow *= r2;
            w
        })
        .collect()
}

impl H2Element {
    pub fn new(radius: f64, coeffs: Vec<Complex64>, tail_bound: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
        }
        if !(tail_bound >= 0.0) {
            return Err(Error::InvalidParameter("tail bound must be non-negative".into()));
        }
        Ok(H2Element {
            radius,
            coeffs,
            tail_bound,
        })
    }

    pub fn zero(radius: f64, len: usize) -> Self {
        H2Element {
            radius,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
            tail_bound: 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Self {
        self.tail_bound = tail;
        self
    }

    /// Norm of the stored polynomial.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_weights(self.radius, self.coeffs.len())
            .iter()
            .zip(&self.coeffs)
            .map(|(w, a)| w * a.norm_sqr())
            .sum()
    }

    /// Upper bound on the norm of the represented function.
    pub fn norm_bound(&self) -> f64 {
        self.norm() + self.tail_bound
    }

    /// Real inner product `Re int f conj(g)`.
    pub fn inner_product(&self, other: &H2Element) -> Result<f64> {
        Ok(self.inner_product_complex(other)?.re)
    }

    /// `int f conj(g)` over the disc.
    pub fn inner_product_complex(&self, other: &H2Element) -> Result<Complex64> {
        self.check_radius(other)?;
        Ok(norm_weights(self.radius, self.coeffs.len().min(other.coeffs.len()))
            .iter()
            .zip(self.coeffs.iter().zip(&other.coeffs))
            .map(|(w, (a, b))| a * b.conj() * w)
            .sum())
    }

    fn check_radius(&self, other: &H2Element) -> Result<()> {
        if self.radius != other.radius {
            return Err(Error::RadiusMismatch(self.radius, other.radius));
        }
        Ok(())
    }

    /// Evaluate the stored polynomial at the local point `s`.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * s + a;
        }
        acc
    }

    /// `self - other`, padding the shorter series with zeros.
    pub fn sub(&self, other: &H2Element) -> Result<H2Element> {
        self.combine(other, -1.0)
    }

    pub fn add(&self, other: &H2Element) -> Result<H2Element> {
        self.combine(other, 1.0)
    }

    fn combine(&self, other: &H2Element, sign: f64) -> Result<H2Element> {
        self.check_radius(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = (0..n)
            .map(|i| self.coeffs.get(i).copied().unwrap_or(zero) + other.coeffs.get(i).copied().unwrap_or(zero) * sign)
            .collect();
        Ok(H2Element {
            radius: self.radius,
            coeffs,
            tail_bound: self.tail_bound + other.tail_bound,
        })
    }

    pub fn scale(&self, c: Complex64) -> H2Element {
        H2Element {
            radius: self.radius,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            tail_bound: self.tail_bound * c.norm(),
        }
    }

    /// `sup_{|s| <= rho} |f(s)| <= ||f|| / (sqrt(pi) (R - rho))` for `rho < R`.
    pub fn sup_bound(&self, rho: f64) -> f64 {
        assert!(rho < self.radius);
        self.norm_bound() / (PI.sqrt() * (self.radius - rho))
    }

    /// Text form: `R <radius> tail <bound>` then `n re im` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("R {} tail {}\n", self.radius, self.tail_bound);
        for (n, a) in self.coeffs.iter().enumerate() {
            writeln!(out, "{n} {} {}", a.re, a.im).expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty H2 element".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "R" || h[2] != "tail" {
            return Err(Error::Format(format!("bad H2 header {header:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number {s:?}")));
        let radius = num(h[1])?;
        let tail = num(h[3])?;
        let mut coeffs = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Format(format!("bad coefficient row {line:?}")));
            }
            let n: usize = f[0]
                .parse()
                .map_err(|_| Error::Format(format!("bad index {:?}", f[0])))?;
            if n != coeffs.len() {
                return Err(Error::Format(format!("coefficient rows out of order at {n}")));
            }
            coeffs.push(Complex64::new(num(f[1])?, num(f[2])?));
        }
        H2Element::new(radius, coeffs, tail)
    }
}

/// Weights `beta_n = (-1)^n R^n conj(a_n) / (n+1)` of a source `psi`, giving
/// `Delta(x) = pi R^2 e^(-sigma0 x) H(x R)` with `H(u) = sum beta_m u^m / m!`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProfile {
    radius: f64,
    sigma0: f64,
    beta: Vec<Complex64>,
    // beta_m / m!, for evaluating H
    scaled: Vec<Complex64>,
}

impl DeltaProfile {
    pub fn new(source: &H2Element, sigma0: f64) -> Self {
        let r = source.radius;
        let mut rn = 1.0;
        let beta: Vec<Complex64> = source
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let b = a.conj() * (sign * rn / (n as f64 + 1.0));
                rn *= r;
                b
            })
            .collect();
        let mut fact = 1.0;
        let scaled = beta
            .iter()
            .enumerate()
            .map(|(m, b)| {
                if m > 0 {
                    fact *= m as f64;
                }
                b / fact
            })
            .collect();
        DeltaProfile {
            radius: r,
            sigma0,
            beta,
            scaled,
        }
    }

    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// `H(u) = sum beta_m u^m / m!`, summed over all stored weights.
    pub fn h_entire(&self, u: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in self.scaled.iter().rev() {
            acc = acc * u + b;
        }
        acc
    }

    /// `Delta(x) = pi R^2 e^(-sigma0 x) H(x R)`.
    pub fn delta(&self, x: f64) -> Complex64 {
        self.h_entire(Complex64::new(x * self.radius, 0.0))
            * (PI * self.radius * self.radius * (-self.sigma0 * x).exp())
    }
}

/// `Delta(x)` for `source` at real `x`.
pub fn delta_transform(source: &H2Element, sigma0: f64, x: f64) -> Complex64 {
    DeltaProfile::new(source, sigma0).delta(x)
}

/// `||e^(-x (s + sigma0))||^2 = e^(-2 sigma0 x) pi sum x^(2n) R^(2n+2) / ((n!)^2 (n+1))`.
pub fn exp_atom_norm_sq(x: f64, sigma0: f64, radius: f64) -> f64 {
    let u2 = (x * radius) * (x * radius);
    let mut term = PI * radius * radius;
    let mut sum = term;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= u2 / (n * n) * (n / (n + 1.0));
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum * (-2.0 * sigma0 * x).exp()
}

/// Taylor coefficients `a_0 .. a_{n-1}` on radius `R` from values of an
/// analytic function at `R e^(2 pi i k / M)`, `k < M`. Coefficients whose
/// scaled size `|a_n| R^n` is at rounding level are set to zero.
pub fn taylor_from_samples(radius: f64, n_coeffs: usize, samples: &[Complex64]) -> Vec<Complex64> {
    let m = samples.len();
    assert!(m >= n_coeffs, "need at least as many samples as coefficients");
    let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let floor = 8.0 * f64::EPSILON * scale;
    let roots: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / m as f64))
        .collect();
    let mut out = Vec::with_capacity(n_coeffs);
    let mut rn = 1.0;
    for n in 0..n_coeffs {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in samples.iter().enumerate() {
            acc += v * roots[(k * n) % m];
        }
        let c = acc / m as f64;
        out.push(if c.norm() <= floor {
            Complex64::new(0.0, 0.0)
        } else {
            c / rn
        });
        rn *= radius;
    }
    out
}

/// Boundary points `R e^(2 pi i (k + offset) / M)`.
pub fn circle_points(radius: f64, m: usize, offset: f64) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * (k as f64 + offset) / m as f64))
        .collect()
}

/// Coefficients of `log g` on `|s| < R`, from `4N` boundary samples with the
/// argument unwrapped along the circle. The midpoint residual of the
/// resulting series, scaled by `sqrt(pi) R`, becomes the tail bound.
pub fn log_target<G>(g: G, radius: f64, n_coeffs: usize) -> Result<H2Element>
where
    G: Fn(Complex64) -> Complex64,
{
    if n_coeffs == 0 {
        return Err(Error::InvalidParameter("need at least one coefficient".into()));
    }
    let zc = zero_count(&g, Complex64::new(0.0, 0.0), radius, 256)?;
    if zc.count != 0 {
        return Err(Error::ZeroInDisc { winding: zc.count });
    }
    let m = 4 * n_coeffs.max(16);
    let pts = circle_points(radius, m, 0.0);
    let vals: Vec<Complex64> = pts.iter().map(|&s| g(s)).collect();
    let mut logs = Vec::with_capacity(m);
    let mut cur = vals[0].ln();
    logs.push(cur);
    for k in 1..m {
        cur += (vals[k] / vals[k - 1]).ln();
        logs.push(cur);
    }
    let closing = cur + (vals[0] / vals[m - 1]).ln() - logs[0];
    if closing.im.abs() > PI {
        return Err(Error::ZeroInDisc {
            winding: (closing.im / (2.0 * PI)).round() as i64,
        });
    }
    let mut coeffs = taylor_from_samples(radius, n_coeffs, &logs);
    // move the constant term onto the principal branch at the centre
    let g0 = g(Complex64::new(0.0, 0.0));
    if g0.norm() > 0.0 {
        let target = g0.ln();
        let k = ((coeffs[0].im - target.im) / (2.0 * PI)).round();
        coeffs[0].im -= 2.0 * PI * k;
        for l in logs.iter_mut() {
            l.im -= 2.0 * PI * k;
        }
    }
    let series = H2Element::new(radius, coeffs, 0.0)?;
    let mut resid: f64 = 0.0;
    for (k, mid) in circle_points(radius, m, 0.5).into_iter().enumerate() {
        let want = logs[k] + (g(mid) / vals[k]).ln();
        resid = resid.max((series.eval(mid) - want).norm());
    }
    Ok(series.with_tail_bound(PI.sqrt() * radius * resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::disc_integral;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monomial_norm() {
        let f = H2Element::new(0.5, vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 0.0).unwrap();
        assert!((f.norm_sq() - PI * 0.5f64.powi(6) / 3.0).abs() < 1e-16);
        let q = disc_integral(|s| c(f.eval(s).norm_sqr(), 0.0), c(0.0, 0.0), 0.5, 16, 32);
        assert!((q.re - f.norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn radius_mismatch() {
        let a = H2Element::zero(0.1, 3);
        let b = H2Element::zero(0.2, 3);
        assert!(matches!(a.inner_product(&b), Err(Error::RadiusMismatch(..))));
    }

    #[test]
    fn delta_of_constant() {
        // psi = 1: Delta(x) = pi R^2 e^(-sigma0 x) sum (-xR)^n ... only n = 0 survives
        let one = H2Element::new(0.2, vec![c(1.0, 0.0)], 0.0).unwrap();
        let d = delta_transform(&one, 0.75, 2.0);
        assert!((d - c(PI * 0.04 * (-1.5f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn exp_atom_norm_matches_quadrature() {
        let (x, s0, r) = (3.0, 0.75, 0.2);
        let want = disc_integral(|s| c((-(s + s0) * x).exp().norm_sqr(), 0.0), c(0.0, 0.0), r, 40, 80).re;
        assert!((exp_atom_norm_sq(x, s0, r) - want).abs() < 1e-14 * want.max(1.0));
    }

    #[test]
    fn log_target_examples() {
        let e = log_target(|s: Complex64| s.exp(), 0.2, 32).unwrap();
        assert!(e.coeffs()[0].norm() < 1e-12);
        assert!((e.coeffs()[1] - 1.0).norm() < 1e-10);
        assert!(e.coeffs()[2..].iter().all(|a| a.norm() < 1e-10));
        let m = log_target(|s: Complex64| (c(1.0, 0.0) - s / 2.0).inv(), 0.2, 32).unwrap();
        for n in 1..20 {
            let want = 0.5f64.powi(n as i32) / n as f64;
            assert!((m.coeffs()[n] - want).norm() * 0.2f64.powi(n as i32) < 1e-14, "n = {n}");
        }
        assert!(m.tail_bound() < 1e-12);
        assert!(matches!(
            log_target(|s: Complex64| s, 0.2, 8),
            Err(Error::ZeroInDisc { .. }) | Err(Error::NearZeroOnContour { .. })
        ));
        assert!(matches!(
            log_target(|s: Complex64| s - 0.05, 0.2, 8),
            Err(Error::ZeroInDisc { winding: 1 })
        ));
        let neg = log_target(|_| c(-2.0, 0.0), 0.1, 4).unwrap();
        assert!((neg.coeffs()[0] - c(2f64.ln(), PI)).norm() < 1e-14);
    }

    #[test]
    fn text_roundtrip() {
        let f = H2Element::new(0.125, vec![c(1.5, -2.0), c(0.1, 0.3), c(1e-20, 7.0)], 1e-9).unwrap();
        assert_eq!(H2Element::from_text(&f.to_text()).unwrap(), f);
        assert!(H2Element::from_text("R 0.1 tail 0\n1 0 0\n").is_err());
        assert!(H2Element::from_text("X 0.1 tail 0\n").is_err());
    }
}
