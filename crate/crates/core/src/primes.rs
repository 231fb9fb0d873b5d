//! Prime enumeration: an Eratosthenes sieve shared read-only across the
//! library, deterministic Miller-Rabin for isolated large candidates, and the
//! `EPRM1` binary cache format.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Magic header of the binary prime cache.
pub const CACHE_MAGIC: &[u8; 5] = b"EPRM1";

/// Ascending primes up to a fixed limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sieve {
    limit: u64,
    primes: Vec<u64>,
}

impl Sieve {
    /// Sieve all primes `<= limit`.
    pub fn new(limit: u64) -> Self {
        Sieve {
            limit,
            primes: sieve_primes(limit),
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `p <= n`. `n` may not exceed the sieve limit.
    pub fn up_to(&self, n: u64) -> &[u64] {
        assert!(n <= self.limit, "sieve limit {} below {}", self.limit, n);
        let end = self.primes.partition_point(|&p| p <= n);
        &self.primes[..end]
    }

    /// Primes in the half-open interval `(lo, hi]`.
    pub fn in_interval(&self, lo: u64, hi: u64) -> &[u64] {
        assert!(hi <= self.limit, "sieve limit {} below {}", self.limit, hi);
        let start = self.primes.partition_point(|&p| p <= lo);
        let end = self.primes.partition_point(|&p| p <= hi);
        &self.primes[start..end.max(start)]
    }
}

fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    // index i represents the odd number 2i + 1
    let half = n / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    for (i, &c) in composite.iter().enumerate().skip(1) {
        let v = (2 * i + 1) as u64;
        if v > limit {
            break;
        }
        if !c {
            out.push(v);
        }
    }
    out
}

/// Primes `<= n`, built fresh.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    sieve_primes(n)
}

fn shared_slot() -> &'static Mutex<Option<Arc<Sieve>>> {
    static SLOT: OnceLock<Mutex<Option<Arc<Sieve>>>> = OnceLock::new();
    SLOT.get_or_init(|| Mutex::new(None))
}

/// A process-wide sieve covering at least `limit`. The sieve is rebuilt only
/// when a larger limit is requested; callers hold an immutable `Arc`.
pub fn shared(limit: u64) -> Arc<Sieve> {
    let mut slot = shared_slot().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(s) = slot.as_ref() {
        if s.limit >= limit {
            return Arc::clone(s);
        }
    }
    let target = limit.max(slot.as_ref().map_or(0, |s| s.limit)).max(1 << 16);
    let s = Arc::new(Sieve::new(target));
    *slot = Some(Arc::clone(&s));
    s
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic primality test for all 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest limit for which [`primes_in_interval`] uses the shared sieve.
pub const SIEVE_CAP: u64 = 50_000_000;

/// Primes in `(lo, hi]`. Short windows beyond the sieve cap are scanned with
/// Miller-Rabin.
pub fn primes_in_interval(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo {
        return Vec::new();
    }
    if hi <= SIEVE_CAP {
        return shared(hi).in_interval(lo, hi).to_vec();
    }
    (lo + 1..=hi).filter(|&n| is_prime(n)).collect()
}

/// Write primes in the `EPRM1` format: the magic bytes followed by each
/// prime as a little-endian `u64`, ascending.
pub fn write_cache<W: Write>(mut w: W, primes: &[u64]) -> Result<()> {
    if primes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Format("primes must be strictly ascending".into()));
    }
    w.write_all(CACHE_MAGIC)?;
    for &p in primes {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

/// Read an `EPRM1` cache.
pub fn read_cache<R: Read>(mut r: R) -> Result<Vec<u64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < CACHE_MAGIC.len() || &bytes[..CACHE_MAGIC.len()] != CACHE_MAGIC {
        return Err(Error::Format("missing EPRM1 header".into()));
    }
    let body = &bytes[CACHE_MAGIC.len()..];
    if body.len() % 8 != 0 {
        return Err(Error::Format("truncated prime record".into()));
    }
    let primes: Vec<u64> = body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if primes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Format("cached primes are not ascending".into()));
    }
    Ok(primes)
}

pub fn save_cache(path: &Path, primes: &[u64]) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_cache(f, primes)
}

pub fn load_cache(path: &Path) -> Result<Vec<u64>> {
    read_cache(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Sieve for primes `<= limit`, reusing a cache file when it covers the
/// limit and refreshing it otherwise.
pub fn cached_primes(path: &Path, limit: u64) -> Result<Vec<u64>> {
    if let Ok(primes) = load_cache(path) {
        // the cache covers every integer up to its last prime
        if primes.last().is_some_and(|&p| p >= limit) {
            let end = primes.partition_point(|&p| p <= limit);
            return Ok(primes[..end].to_vec());
        }
    }
    let primes = primes_up_to(limit);
    save_cache(path, &primes)?;
    Ok(primes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn sieve_matches_trial_division() {
        let s = primes_up_to(5000);
        let t: Vec<u64> = (0..=5000).filter(|&n| trial(n)).collect();
        assert_eq!(s, t);
        assert_eq!(primes_up_to(1), Vec::<u64>::new());
        assert_eq!(primes_up_to(2), vec![2]);
        assert_eq!(primes_up_to(10_000).len(), 1229);
    }

    #[test]
    fn miller_rabin_agrees() {
        for n in 0..20_000 {
            assert_eq!(is_prime(n), trial(n), "{n}");
        }
        assert!(is_prime(1_000_003));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn interval_queries() {
        let s = shared(100);
        assert_eq!(s.in_interval(10, 30), &[11, 13, 17, 19, 23, 29]);
        assert_eq!(s.in_interval(13, 13), &[] as &[u64]);
        assert_eq!(primes_in_interval(10, 30), vec![11, 13, 17, 19, 23, 29]);
        let hi = SIEVE_CAP + 1000;
        let v = primes_in_interval(SIEVE_CAP, hi);
        assert!(v.iter().all(|&p| trial(p)));
    }

    #[test]
    fn cache_roundtrip() {
        let primes = primes_up_to(1000);
        let mut buf = Vec::new();
        write_cache(&mut buf, &primes).unwrap();
        assert_eq!(&buf[..5], b"EPRM1");
        assert_eq!(buf.len(), 5 + 8 * primes.len());
        assert_eq!(read_cache(&buf[..]).unwrap(), primes);
        assert!(read_cache(&b"EPRM2"[..]).is_err());
        assert!(read_cache(&buf[..buf.len() - 3]).is_err());
    }
}
