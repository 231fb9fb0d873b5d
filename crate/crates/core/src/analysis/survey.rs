//! Sampled maximum of `|target - approximant|` over a closed disc.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::par;

/// Boundary circle plus concentric interior rings and the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGrid {
    pub center: Complex64,
    pub radius: f64,
    pub boundary: usize,
    pub rings: usize,
}

impl DiscGrid {
    pub fn new(center: Complex64, radius: f64, boundary: usize, rings: usize) -> Self {
        DiscGrid {
            center,
            radius,
            boundary: boundary.max(8),
            rings,
        }
    }

    /// Boundary points first, then rings from the outside in, then the centre.
    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::new();
        let ring = |pts: &mut Vec<Complex64>, rho: f64, n: usize| {
            for k in 0..n {
                pts.push(self.center + Complex64::from_polar(rho, 2.0 * PI * k as f64 / n as f64));
            }
        };
        ring(&mut pts, self.radius, self.boundary);
        for j in (1..=self.rings).rev() {
            let frac = j as f64 / (self.rings + 1) as f64;
            let n = ((self.boundary as f64 * frac).ceil() as usize).max(8);
            ring(&mut pts, self.radius * frac, n);
        }
        pts.push(self.center);
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub max_error: f64,
    pub argmax: Complex64,
    /// `(point, |target - approximant|)` for every grid point.
    pub rows: Vec<(Complex64, f64)>,
}

impl Survey {
    /// Heatmap rows `re im abs_error`.
    pub fn heatmap_text(&self) -> String {
        let mut out = String::new();
        for (s, e) in &self.rows {
            writeln!(out, "{} {} {}", s.re, s.im, e).expect("string write");
        }
        out
    }
}

/// Evaluate both functions on every grid point and report the largest
/// difference. Non-finite differences count as infinite error.
pub fn disc_error_survey<T, A>(target: T, approx: A, grid: &DiscGrid) -> Survey
where
    T: Fn(Complex64) -> Complex64 + Sync + Send,
    A: Fn(Complex64) -> Complex64 + Sync + Send,
{
    let pts = grid.points();
    let errs = par::map(&pts, |&s| {
        let e = (target(s) - approx(s)).norm();
        if e.is_finite() {
            e
        } else {
            f64::INFINITY
        }
    });
    let mut max_error = -1.0;
    let mut argmax = grid.center;
    for (s, &e) in pts.iter().zip(&errs) {
        if e > max_error {
            max_error = e;
            argmax = *s;
        }
    }
    Survey {
        max_error,
        argmax,
        rows: pts.into_iter().zip(errs).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_functions_have_zero_error() {
        let g = DiscGrid::new(Complex64::new(0.75, 0.0), 0.02, 64, 3);
        let s = disc_error_survey(|s: Complex64| s.exp(), |s: Complex64| s.exp(), &g);
        assert_eq!(s.max_error, 0.0);
        assert_eq!(s.rows.len(), g.points().len());
    }

    #[test]
    fn linear_error_peaks_on_boundary() {
        let g = DiscGrid::new(Complex64::new(0.0, 0.0), 0.5, 128, 4);
        let s = disc_error_survey(|s: Complex64| s, |_| Complex64::new(0.0, 0.0), &g);
        assert!((s.max_error - 0.5).abs() < 1e-15);
        let fine = DiscGrid::new(Complex64::new(0.0, 0.0), 0.5, 256, 4);
        let t = disc_error_survey(|s: Complex64| s * s + s, |_| Complex64::new(0.0, 0.0), &fine);
        let u = disc_error_survey(|s: Complex64| s * s + s, |_| Complex64::new(0.0, 0.0), &g);
        assert!((t.max_error - u.max_error).abs() < 1e-4);
    }
}
