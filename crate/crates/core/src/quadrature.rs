//! Tensor quadrature on discs: Gauss-Legendre in the radius, the trapezoid
//! rule in the angle.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `int_{|s - c| <= R} f dsigma dt` with `n_r` radial and `n_theta` angular
/// nodes.
pub fn disc_integral<F>(f: F, center: Complex64, radius: f64, n_r: usize, n_theta: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let (x, w) = gauss_legendre(n_r);
    let dtheta = 2.0 * PI / n_theta as f64;
    let rot: Vec<Complex64> = (0..n_theta)
        .map(|k| Complex64::from_polar(1.0, k as f64 * dtheta))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let rho = 0.5 * radius * (xi + 1.0);
        let mut ring = Complex64::new(0.0, 0.0);
        for e in &rot {
            ring += f(center + e * rho);
        }
        total += ring * (wi * 0.5 * radius * rho * dtheta);
    }
    total
}

/// Result of an adaptive disc integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub nodes: usize,
    pub converged: bool,
}

/// Double both node counts, starting from `64 x 160` (over `10^4` nodes),
/// until successive values agree to `rel_tol` relative (or `abs_floor`
/// absolute).
pub fn disc_integral_adaptive<F>(f: F, center: Complex64, radius: f64, rel_tol: f64, abs_floor: f64) -> Quadrature
where
    F: Fn(Complex64) -> Complex64,
{
    let (mut n_r, mut n_t) = (64, 160);
    let mut prev = disc_integral(&f, center, radius, n_r, n_t);
    for _ in 0..4 {
        n_r *= 2;
        n_t *= 2;
        let next = disc_integral(&f, center, radius, n_r, n_t);
        let diff = (next - prev).norm();
        if diff <= rel_tol * next.norm() || diff <= abs_floor {
            return Quadrature {
                value: next,
                nodes: n_r * n_t,
                converged: true,
            };
        }
        prev = next;
    }
    Quadrature {
        value: prev,
        nodes: n_r * n_t,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for k in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn disc_area_and_moment() {
        let r = 0.3;
        let area = disc_integral(|_| Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), r, 8, 16);
        assert!((area.re - PI * r * r).abs() < 1e-14);
        let m = disc_integral(
            |s| Complex64::new(s.norm_sqr().powi(3), 0.0),
            Complex64::new(0.0, 0.0),
            r,
            8,
            16,
        );
        assert!((m.re - PI * r.powi(8) / 4.0).abs() < 1e-16);
        let q = disc_integral_adaptive(|s| (-s * 3.0).exp(), Complex64::new(0.5, 0.0), 0.2, 1e-12, 0.0);
        // mean value property
        assert!((q.value - (-1.5f64).exp() * PI * 0.04).norm() < 1e-13);
        assert!(q.nodes >= 10_000);
    }
}
