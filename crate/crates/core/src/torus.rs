//! The infinite torus with the weighted metric `sum e^(1-n) |x_n - y_n|`, the
//! Kronecker flow `t -> {t log p_n / 2 pi}`, and Monte Carlo measurements of
//! small balls around the origin.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;

/// Identifier of the generator used for every seeded draw in the library.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), stream per chunk";

/// Samples per independent random stream.
pub const CHUNK: usize = 1 << 16;

/// Seeded generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The first `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut limit = 64u64;
    loop {
        let ps = crate::primes::shared(limit).up_to(limit).to_vec();
        if ps.len() >= n {
            return ps[..n].to_vec();
        }
        limit *= 2;
    }
}

/// Frequencies `log p_n / 2 pi` for the first `n` primes.
pub fn frequencies(n: usize) -> Vec<f64> {
    first_primes(n).iter().map(|&p| (p as f64).ln() / (2.0 * PI)).collect()
}

/// Truncated weighted distance with a bound on the omitted coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TikhonovDistance {
    pub value: f64,
    pub tail_bound: f64,
}

/// `sum_{n <= N} e^(1-n) |x_n - y_n|` and the tail bound
/// `e^(1-N) / (1 - e^(-1))` for the remaining coordinates.
pub fn tikhonov_distance(x: &[f64], y: &[f64], n: usize) -> Result<TikhonovDistance> {
    if x.len() < n || y.len() < n {
        return Err(Error::InvalidParameter(format!("points need at least {n} coordinates")));
    }
    let mut value = 0.0;
    let mut w = 1.0;
    for k in 0..n {
        value += w * (x[k] - y[k]).abs();
        w /= E;
    }
    let tail_bound = (1.0 - n as f64).exp() / (1.0 - (-1.0f64).exp());
    Ok(TikhonovDistance { value, tail_bound })
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `({t lambda_1}, .., {t lambda_N})` for the prime frequencies.
pub fn orbit_point(t: f64, n: usize) -> Vec<f64> {
    orbit_point_with(t, &frequencies(n))
}

pub fn orbit_point_with(t: f64, freqs: &[f64]) -> Vec<f64> {
    freqs.iter().map(|&l| frac(t * l)).collect()
}

fn weighted_sum(x: &[f64]) -> f64 {
    let mut w = 1.0;
    let mut s = 0.0;
    for v in x {
        s += w * v;
        w /= E;
    }
    s
}

/// Monte Carlo estimate with a three-sigma half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub samples: usize,
}

fn mc_fraction(n: usize, samples: usize, seed: u64, hit: impl Fn(f64) -> bool + Sync + Send) -> VolumeEstimate {
    let chunks: Vec<usize> = (0..samples.div_ceil(CHUNK)).collect();
    let counts = par::map(&chunks, |&c| {
        let mut rng = stream_rng(seed, c as u64);
        let len = CHUNK.min(samples - c * CHUNK);
        let mut x = vec![0.0; n];
        let mut hits = 0u64;
        for _ in 0..len {
            for v in x.iter_mut() {
                *v = rng.gen::<f64>();
            }
            if hit(weighted_sum(&x)) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let p = hits as f64 / samples as f64;
    VolumeEstimate {
        estimate: p,
        half_width: 3.0 * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

/// Fraction of uniform points of `[0,1]^N` with `sum e^(1-n) x_n < r`.
pub fn ball_volume_mc(n: usize, r: f64, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need N >= 1 and at least one sample".into()));
    }
    Ok(mc_fraction(n, samples, seed, |s| s < r))
}

/// Exact volume of `{x in [0,1]^N : sum w_n x_n <= r}` with `w_n = e^(1-n)`
/// by inclusion-exclusion over the cube's vertices.
pub fn exact_ball_volume(n: usize, r: f64) -> f64 {
    assert!((1..=20).contains(&n));
    let w: Vec<f64> = (0..n).map(|k| (-(k as f64)).exp()).collect();
    let mut denom: f64 = w.iter().product();
    for k in 1..=n {
        denom *= k as f64;
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let shift: f64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| w[k]).sum();
        let t = r - shift;
        if t > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * t.powi(n as i32);
        }
    }
    (total / denom).clamp(0.0, 1.0)
}

/// Measured shell `mu_N(r) - mu_N(r - eps)` against `eps 2^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabRecord {
    pub n: usize,
    pub r: f64,
    pub eps: f64,
    pub estimate: f64,
    pub half_width: f64,
    pub bound: f64,
    pub pass: bool,
}

impl SlabRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {}",
            self.n,
            self.r,
            self.eps,
            self.estimate,
            self.half_width,
            self.bound,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

pub fn slab_bound_check(n: usize, r: f64, eps: f64, samples: usize, seed: u64) -> Result<SlabRecord> {
    if !(r > 0.0 && eps > 0.0 && eps < r) || n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("need 0 < eps < r, N >= 1, samples >= 1".into()));
    }
    let v = mc_fraction(n, samples, seed, |s| s < r && s >= r - eps);
    let bound = eps * 2f64.powi(n as i32);
    Ok(SlabRecord {
        n,
        r,
        eps,
        estimate: v.estimate,
        half_width: v.half_width,
        bound,
        pass: v.estimate - v.half_width <= bound,
    })
}

/// Star discrepancies of the sampled flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Equidistribution {
    pub single: Vec<f64>,
    pub pairs: Vec<((usize, usize), f64)>,
}

impl Equidistribution {
    pub fn max_single(&self) -> f64 {
        self.single.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# coordinate discrepancy\n");
        for (i, d) in self.single.iter().enumerate() {
            writeln!(out, "{} {}", i + 1, d).expect("string write");
        }
        out.push_str("# pair discrepancy\n");
        for ((i, j), d) in &self.pairs {
            writeln!(out, "{} {} {}", i + 1, j + 1, d).expect("string write");
        }
        out
    }
}

/// Star discrepancy on a `bins` grid of `{t lambda_n}` with `t` on `samples`
/// equally spaced midpoints of `[0, t_max]`, for every coordinate and for
/// `pairs` seeded random coordinate pairs.
pub fn equidistribution_test(
    freqs: &[f64],
    t_max: f64,
    bins: usize,
    samples: usize,
    pairs: usize,
    seed: u64,
) -> Result<Equidistribution> {
    if freqs.is_empty() || bins < 8 || samples == 0 || !(t_max > 0.0) {
        return Err(Error::InvalidParameter(
            "need bins >= 8, samples >= 1, t_max > 0 and some frequencies".into(),
        ));
    }
    let ts: Vec<f64> = (0..samples)
        .map(|j| (j as f64 + 0.5) * t_max / samples as f64)
        .collect();
    let bin = |x: f64| ((x * bins as f64) as usize).min(bins - 1);
    let idx: Vec<usize> = (0..freqs.len()).collect();
    let single = par::map(&idx, |&i| {
        let mut counts = vec![0usize; bins];
        for &t in &ts {
            counts[bin(frac(t * freqs[i]))] += 1;
        }
        let mut cum = 0usize;
        let mut d: f64 = 0.0;
        for (k, c) in counts.iter().enumerate() {
            cum += c;
            d = d.max((cum as f64 / samples as f64 - (k + 1) as f64 / bins as f64).abs());
        }
        d
    });
    let mut rng = stream_rng(seed, u64::MAX);
    let mut chosen = Vec::new();
    if freqs.len() >= 2 {
        for _ in 0..pairs {
            let mut ij: Vec<usize> = (0..freqs.len()).collect();
            ij.shuffle(&mut rng);
            let (a, b) = (ij[0].min(ij[1]), ij[0].max(ij[1]));
            chosen.push((a, b));
        }
    }
    let pair_d = par::map(&chosen, |&(a, b)| {
        let mut grid = vec![0usize; bins * bins];
        for &t in &ts {
            grid[bin(frac(t * freqs[a])) * bins + bin(frac(t * freqs[b]))] += 1;
        }
        let mut cum = vec![0usize; (bins + 1) * (bins + 1)];
        let mut d: f64 = 0.0;
        for i in 0..bins {
            for j in 0..bins {
                let v = grid[i * bins + j] + cum[i * (bins + 1) + j + 1] + cum[(i + 1) * (bins + 1) + j]
                    - cum[i * (bins + 1) + j];
                cum[(i + 1) * (bins + 1) + j + 1] = v;
                let area = (i + 1) as f64 * (j + 1) as f64 / (bins * bins) as f64;
                d = d.max((v as f64 / samples as f64 - area).abs());
            }
        }
        d
    });
    Ok(Equidistribution {
        single,
        pairs: chosen.into_iter().zip(pair_d).collect(),
    })
}

/// Smallest truncated distance between `{t1 Lambda}` and coordinate
/// permutations of `{t2 Lambda}` over `perms` seeded random permutations of
/// the first `n` coordinates.
pub fn permutation_distance_floor(t1: f64, t2: f64, n: usize, perms: usize, seed: u64) -> Result<f64> {
    let x = orbit_point(t1, n);
    let y = orbit_point(t2, n);
    let mut rng = stream_rng(seed, u64::MAX - 1);
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..perms {
        idx.shuffle(&mut rng);
        let permuted: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
        best = best.min(tikhonov_distance(&x, &permuted, n)?.value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let x = vec![0.1, 0.2, 0.3];
        assert_eq!(tikhonov_distance(&x, &x, 3).unwrap().value, 0.0);
        let mut y = x.clone();
        y[0] += 0.5;
        assert!((tikhonov_distance(&x, &y, 3).unwrap().value - 0.5).abs() < 1e-15);
        assert!(tikhonov_distance(&x, &y, 4).is_err());
    }

    #[test]
    fn orbit_of_log2_period() {
        let t = 2.0 * PI / 2f64.ln();
        let x = orbit_point(t, 3)[0];
        assert!(x.min(1.0 - x) < 1e-12);
        assert_eq!(orbit_point(0.0, 5), vec![0.0; 5]);
    }

    #[test]
    fn exact_volumes() {
        assert!((exact_ball_volume(1, 0.3) - 0.3).abs() < 1e-15);
        assert_eq!(exact_ball_volume(3, 0.0), 0.0);
        assert!((exact_ball_volume(2, 10.0) - 1.0).abs() < 1e-12);
        // two coordinates: triangle area r^2 / (2 w2) while r < w2
        let w2 = (-1.0f64).exp();
        assert!((exact_ball_volume(2, 0.2) - 0.04 / (2.0 * w2)).abs() < 1e-14);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let a = ball_volume_mc(3, 0.5, 100_000, 7).unwrap();
        let b = ball_volume_mc(3, 0.5, 100_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - exact_ball_volume(3, 0.5)).abs() <= a.half_width);
    }

    #[test]
    fn rational_frequencies_are_not_equidistributed() {
        let l = 2f64.ln() / (2.0 * PI);
        let e = equidistribution_test(&[l, 2.0 * l], 1e4, 16, 100_000, 4, 1).unwrap();
        assert!(e.single[0] < 0.02);
        assert!(e.pairs.iter().all(|p| p.1 > 0.1));
    }
}
