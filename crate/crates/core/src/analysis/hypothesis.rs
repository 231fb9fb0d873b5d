//! Short-interval prime sums `sum |a_p^1| p^(-(1 - lambda))` over
//! `h < p <= h (1 + log^(-10) h)`, the fitted constant `c0`, and the split of
//! such an interval into four blocks of comparable weight.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::factor::EulerFactorSpec;
use crate::primes::primes_in_interval;

// rounding allowance when comparing a sum with a threshold fitted from it
const REL_TOL: f64 = 1e-12;

/// Integer range `(lo, hi]` of the short interval above `h`.
pub fn hypothesis_interval(h: f64) -> Result<(u64, u64)> {
    if !(h > std::f64::consts::E) {
        return Err(Error::InvalidParameter(format!("h = {h} must exceed e")));
    }
    if h >= 1.8e19 {
        return Err(Error::InvalidParameter(format!("h = {h} exceeds the 64-bit range")));
    }
    let lo = h.floor();
    let len = h / h.ln().powi(10);
    Ok((lo as u64, lo as u64 + (h - lo + len).floor() as u64))
}

/// One evaluated short-interval sum.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisRow {
    pub h: f64,
    pub lambda: f64,
    pub primes: Vec<u64>,
    pub sum: f64,
}

fn weight(spec: &EulerFactorSpec, p: u64, lambda: f64) -> f64 {
    spec.a1(p).norm() * (p as f64).powf(lambda - 1.0)
}

/// `sum |a_p^1| p^(-(1 - lambda))` over the primes of the interval above `h`.
pub fn hypothesis_sum(spec: &EulerFactorSpec, h: f64, lambda: f64) -> Result<HypothesisRow> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in (0, 1]")));
    }
    let (lo, hi) = hypothesis_interval(h)?;
    let primes = primes_in_interval(lo, hi);
    let sum = primes.iter().fold(0.0, |acc, &p| acc + weight(spec, p, lambda));
    Ok(HypothesisRow { h, lambda, primes, sum })
}

/// `n` points spaced evenly in `log h` from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub lambda: f64,
    pub c0: f64,
    /// `(row, threshold c0 h^(lambda/4), pass)`
    pub rows: Vec<(HypothesisRow, f64, bool)>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.2)
    }

    pub fn first_failure(&self) -> Option<f64> {
        self.rows.iter().find(|r| !r.2).map(|r| r.0.h)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("lambda {}\nc0 {}\n", self.lambda, self.c0);
        match self.first_failure() {
            Some(h) => writeln!(out, "first_failure {h}").expect("string write"),
            None => out.push_str("first_failure none\n"),
        }
        out.push_str("# h primes sum threshold pass\n");
        for (row, thr, pass) in &self.rows {
            writeln!(out, "{} {} {} {} {}", row.h, row.primes.len(), row.sum, thr, pass).expect("string write");
        }
        out
    }
}

/// Evaluate the sums at each `h` against `c0 h^(lambda/4)`. A row passes when
/// its sum is positive and reaches the threshold (up to rounding); with `c0 <= 0` nothing
/// passes.
pub fn check_hypothesis(spec: &EulerFactorSpec, lambda: f64, hs: &[f64], c0: f64) -> Result<HypothesisReport> {
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let row = hypothesis_sum(spec, h, lambda)?;
        let thr = c0 * h.powf(lambda / 4.0);
        let pass = c0 > 0.0 && row.sum > 0.0 && row.sum >= thr * (1.0 - REL_TOL);
        rows.push((row, thr, pass));
    }
    Ok(HypothesisReport { lambda, c0, rows })
}

/// The largest `c0` with `sum(h) >= c0 h^(lambda/4)` at every `h`, and the
/// resulting report.
pub fn fit_c0(spec: &EulerFactorSpec, lambda: f64, hs: &[f64]) -> Result<HypothesisReport> {
    if hs.is_empty() {
        return Err(Error::InvalidParameter("empty h list".into()));
    }
    let mut c0 = f64::INFINITY;
    for &h in hs {
        let row = hypothesis_sum(spec, h, lambda)?;
        c0 = c0.min(row.sum / h.powf(lambda / 4.0));
    }
    check_hypothesis(spec, lambda, hs, c0)
}

/// Four disjoint prime sets covering the interval above `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeBlockPartition {
    pub h: f64,
    pub lambda: f64,
    /// `c0 h^(lambda/4)`
    pub threshold: f64,
    pub blocks: [Vec<u64>; 4],
    pub sums: [f64; 4],
    /// Every block sum is at least `0.1 * threshold`.
    pub meets_floor: bool,
}

/// Split weighted primes into four blocks each carrying at least
/// `0.1 * threshold`, given that the total reaches `threshold`.
///
/// Start from a round-robin split in ascending order. While some block is
/// below the floor, move addends one at a time from the heaviest block (which
/// carries at least a quarter of the total) to the lightest, never letting
/// the donor drop below `0.2 * threshold`.
pub fn partition_weighted(items: &[(u64, f64)], threshold: f64) -> ([Vec<u64>; 4], [f64; 4], bool) {
    let mut blocks: [Vec<(u64, f64)>; 4] = Default::default();
    for (i, &it) in items.iter().enumerate() {
        blocks[i % 4].push(it);
    }
    let sum = |b: &Vec<(u64, f64)>| b.iter().map(|x| x.1).sum::<f64>();
    let floor = 0.1 * threshold;
    let keep = 0.2 * threshold;
    for _ in 0..4 * items.len() + 4 {
        let sums: Vec<f64> = blocks.iter().map(sum).collect();
        let lightest = (0..4)
            .min_by(|&a, &b| sums[a].total_cmp(&sums[b]))
            .expect("four blocks");
        if sums[lightest] >= floor {
            break;
        }
        let heaviest = (0..4)
            .max_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(b.cmp(&a)))
            .expect("four blocks");
        // smallest addend of the donor, ties to the smaller prime
        let Some(pos) = (0..blocks[heaviest].len()).min_by(|&a, &b| {
            let (x, y) = (blocks[heaviest][a], blocks[heaviest][b]);
            x.1.total_cmp(&y.1).then(x.0.cmp(&y.0))
        }) else {
            break;
        };
        if sums[heaviest] - blocks[heaviest][pos].1 < keep {
            break;
        }
        let it = blocks[heaviest].remove(pos);
        blocks[lightest].push(it);
    }
    let mut out: [Vec<u64>; 4] = Default::default();
    let mut sums = [0.0; 4];
    for (k, b) in blocks.iter().enumerate() {
        let mut ps: Vec<u64> = b.iter().map(|x| x.0).collect();
        ps.sort_unstable();
        out[k] = ps;
        sums[k] = sum(b);
    }
    let ok = sums.iter().all(|&s| s >= floor);
    (out, sums, ok)
}

/// Partition the primes of the interval above `h` into four blocks.
pub fn partition_blocks(spec: &EulerFactorSpec, h: f64, lambda: f64, c0: f64) -> Result<PrimeBlockPartition> {
    let row = hypothesis_sum(spec, h, lambda)?;
    if row.primes.len() < 4 {
        return Err(Error::TooFewPrimes {
            count: row.primes.len(),
        });
    }
    let threshold = c0 * h.powf(lambda / 4.0);
    if !(c0 > 0.0) || row.sum < threshold * (1.0 - REL_TOL) {
        return Err(Error::HypothesisFails {
            h,
            sum: row.sum,
            threshold,
        });
    }
    let items: Vec<(u64, f64)> = row.primes.iter().map(|&p| (p, weight(spec, p, lambda))).collect();
    let (blocks, sums, meets_floor) = partition_weighted(&items, threshold);
    Ok(PrimeBlockPartition {
        h,
        lambda,
        threshold,
        blocks,
        sums,
        meets_floor,
    })
}
