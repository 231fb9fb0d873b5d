//! Argument-principle zero counting, minimum modulus and Rouché comparison
//! on circles.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Contours closer than this to a zero are rejected.
pub const CONTOUR_GUARD: f64 = 1e-12;

const MAX_SAMPLES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCount {
    pub count: i64,
    pub samples: usize,
    pub min_modulus: f64,
}

fn point(center: Complex64, radius: f64, theta: f64) -> Complex64 {
    center + Complex64::from_polar(radius, theta)
}

fn winding_at(
    f: &impl Fn(Complex64) -> Complex64,
    center: Complex64,
    radius: f64,
    n: usize,
) -> Result<(f64, f64, f64)> {
    let vals: Vec<Complex64> = (0..n)
        .map(|k| f(point(center, radius, 2.0 * PI * k as f64 / n as f64)))
        .collect();
    let mut min_mod = f64::INFINITY;
    for v in &vals {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite value on the contour".into()));
        }
        min_mod = min_mod.min(v.norm());
    }
    if min_mod < CONTOUR_GUARD {
        return Err(Error::NearZeroOnContour { modulus: min_mod });
    }
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let d = (vals[(k + 1) % n] / vals[k]).arg();
        worst = worst.max(d.abs());
        total += d;
    }
    Ok((total / (2.0 * PI), worst, min_mod))
}

/// Number of zeros of `f` inside `|s - center| < radius`, by accumulating
/// argument increments around the circle. The sample count starts at
/// `samples` and doubles until every increment is below `pi/3` and a further
/// doubling reproduces the count.
pub fn zero_count<F>(f: F, center: Complex64, radius: f64, samples: usize) -> Result<ZeroCount>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    let mut n = samples.max(16);
    let mut prev: Option<i64> = None;
    while n <= MAX_SAMPLES {
        let (w, worst, min_mod) = winding_at(&f, center, radius, n)?;
        let count = w.round();
        if worst < PI / 3.0 && (w - count).abs() < 1e-6 {
            let count = count as i64;
            if prev == Some(count) {
                return Ok(ZeroCount {
                    count,
                    samples: n / 2,
                    min_modulus: min_mod,
                });
            }
            prev = Some(count);
        } else {
            prev = None;
        }
        n *= 2;
    }
    Err(Error::NonIntegerWinding)
}

/// Location and value of the smallest `|f|` found on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub at: Complex64,
    pub coarse: f64,
}

fn refine_extreme(h: impl Fn(f64) -> f64, n: usize, rounds: usize) -> (f64, f64, f64) {
    let step = 2.0 * PI / n as f64;
    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let t = k as f64 * step;
        let v = h(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let coarse = best;
    let mut h_step = step;
    for _ in 0..rounds {
        h_step /= 2.0;
        for t in [best_t - h_step, best_t + h_step] {
            let v = h(t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
    }
    (best, best_t, coarse)
}

/// Minimum of `|f|` on the circle: coarse sampling followed by three
/// bisection rounds around the coarse minimiser.
pub fn min_modulus<F>(f: F, center: Complex64, radius: f64, samples: usize) -> Extremum
where
    F: Fn(Complex64) -> Complex64,
{
    let (value, t, coarse) = refine_extreme(|t| f(point(center, radius, t)).norm(), samples.max(64), 3);
    Extremum {
        value,
        at: point(center, radius, t),
        coarse,
    }
}

/// Maximum of `|f|` on the circle, refined the same way.
pub fn max_modulus<F>(f: F, center: Complex64, radius: f64, samples: usize) -> Extremum
where
    F: Fn(Complex64) -> Complex64,
{
    let (value, t, coarse) = refine_extreme(|t| -f(point(center, radius, t)).norm(), samples.max(64), 3);
    Extremum {
        value: -value,
        at: point(center, radius, t),
        coarse: -coarse,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoucheReport {
    pub pass: bool,
    /// `min |f| - max |f - g|`
    pub margin: f64,
    pub min_f: f64,
    pub max_diff: f64,
    pub f_count: Option<i64>,
    pub g_count: Option<i64>,
}

/// Sampled Rouché test on `|s - center| = radius`: pass when
/// `max |f - g| < min |f|`. On a pass both zero counts are computed and must
/// agree.
pub fn rouche_check<F, G>(f: F, g: G, center: Complex64, radius: f64, samples: usize) -> Result<RoucheReport>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let min_f = min_modulus(&f, center, radius, samples).value;
    let max_diff = max_modulus(|s| f(s) - g(s), center, radius, samples).value;
    let pass = max_diff < min_f;
    let f_count = zero_count(&f, center, radius, samples).ok().map(|z| z.count);
    let g_count = zero_count(&g, center, radius, samples).ok().map(|z| z.count);
    if pass {
        match (f_count, g_count) {
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => return Err(Error::RoucheInconsistent { f_count: a, g_count: b }),
            _ => return Err(Error::NonIntegerWinding),
        }
    }
    Ok(RoucheReport {
        pass,
        margin: min_f - max_diff,
        min_f,
        max_diff,
        f_count,
        g_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_counts() {
        let o = c(0.0, 0.0);
        let f = |s: Complex64| (s - 0.5) * (s + c(0.0, 0.3)) * (s - 2.0);
        assert_eq!(zero_count(f, o, 1.0, 64).unwrap().count, 2);
        assert_eq!(zero_count(|s: Complex64| s.powu(5), o, 1.0, 16).unwrap().count, 5);
        assert_eq!(zero_count(|s: Complex64| s.exp(), o, 3.0, 16).unwrap().count, 0);
        assert!(matches!(
            zero_count(|s: Complex64| s - 1.0, o, 1.0, 64),
            Err(Error::NearZeroOnContour { .. })
        ));
    }

    #[test]
    fn minimum_modulus() {
        let o = c(0.0, 0.0);
        let m = min_modulus(|s: Complex64| s - 0.9, o, 1.0, 64);
        assert!(m.value <= m.coarse);
        assert!((m.value - 0.1).abs() < 1e-3);
        let m = min_modulus(|_| c(2.0, 0.0), o, 1.0, 64);
        assert_eq!(m.value, 2.0);
    }

    #[test]
    fn rouche_examples() {
        let o = c(0.0, 0.0);
        let r = rouche_check(|s: Complex64| s * 0.1 + 1.0, |_| c(1.0, 0.0), o, 0.5, 64).unwrap();
        assert!(r.pass);
        assert_eq!((r.f_count, r.g_count), (Some(0), Some(0)));
        let r = rouche_check(|s: Complex64| s, |s: Complex64| s + 10.0, o, 1.0, 64).unwrap();
        assert!(!r.pass);
        let f = |s: Complex64| s * s + 0.3;
        let r = rouche_check(f, f, o, 1.0, 64).unwrap();
        assert!(r.pass);
        assert!((r.margin - r.min_f).abs() < 1e-15);
    }
}
