//! Prime generation and the explicit prime-counting inequalities.
//!
//! Backed by a segmented sieve of Eratosthenes; verifiers scan every prime
//! jump (the exact extreme points of the checked ratios) rather than
//! uniform samples.

use crate::report::Check;
use std::io::{self, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const SIEVE_MAX: u64 = 100_000_000;

/// Validity threshold of the Dusart pi(x) inequalities.
pub const PI_BOUND_MIN_X: f64 = 355_991.0;
/// theta(x) <= THETA_RATIO * x for all x > 0.
pub const THETA_RATIO: f64 = 1.000081;

#[derive(Debug, Error)]
pub enum PrimesError {
    #[error("sieve limit {0} outside supported range [2, {SIEVE_MAX}]")]
    LimitOutOfRange(u64),
    #[error("x = {0} below validity threshold {1}")]
    BelowThreshold(f64, f64),
    #[error("x = {0} exceeds sieve limit {1}")]
    AboveLimit(f64, u64),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad sieve cache: {0}")]
    BadCache(String),
}

/// Sieve-backed prime store with pi(x) and theta(x) aggregates.
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    /// cumulative_log[i] = sum of ln(p_j) for j <= i.
    cumulative_log: Vec<f64>,
}

const CACHE_MAGIC: &[u8; 4] = b"EUPT";
const CACHE_VERSION: u32 = 1;

impl PrimeTable {
    /// Sieve all primes up to `limit` (inclusive), segmented.
    pub fn sieve(limit: u64) -> Result<PrimeTable, PrimesError> {
        if !(2..=SIEVE_MAX).contains(&limit) {
            return Err(PrimesError::LimitOutOfRange(limit));
        }
        let root = (limit as f64).sqrt() as u64 + 1;
        let small = simple_sieve(root);

        let mut primes = Vec::new();
        let seg_len: u64 = 1 << 20;
        let mut mark = vec![false; seg_len as usize];
        let mut lo = 2u64;
        while lo <= limit {
            let hi = (lo + seg_len - 1).min(limit);
            let n = (hi - lo + 1) as usize;
            mark[..n].fill(false);
            for &p in &small {
                if p * p > hi {
                    break;
                }
                let mut start = p * p;
                if start < lo {
                    start = lo.div_ceil(p) * p;
                }
                let mut m = start;
                while m <= hi {
                    mark[(m - lo) as usize] = true;
                    m += p;
                }
            }
            for i in 0..n {
                if !mark[i] {
                    primes.push(lo + i as u64);
                }
            }
            lo = hi + 1;
        }

        let mut cumulative_log = Vec::with_capacity(primes.len());
        let mut acc = 0.0f64;
        for &p in &primes {
            acc += (p as f64).ln();
            cumulative_log.push(acc);
        }
        Ok(PrimeTable { limit, primes, cumulative_log })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// pi(x): number of primes <= x.
    pub fn pi(&self, x: f64) -> u64 {
        if x < 2.0 {
            return 0;
        }
        let x = x.min(self.limit as f64) as u64;
        self.primes.partition_point(|&p| p <= x) as u64
    }

    /// theta(x) = sum of ln p over primes p <= x.
    pub fn theta(&self, x: f64) -> f64 {
        let k = self.pi(x) as usize;
        if k == 0 {
            0.0
        } else {
            self.cumulative_log[k - 1]
        }
    }

    /// Primes in the half-open range (lo, hi].
    pub fn range(&self, lo: f64, hi: f64) -> &[u64] {
        let a = self.pi(lo) as usize;
        let b = self.pi(hi) as usize;
        &self.primes[a..b]
    }

    /// Binary cache: magic "EUPT", version u32, limit u64, count u64, then
    /// u32 little-endian deltas between consecutive primes (first delta from 0).
    pub fn save_cache(&self, path: &Path) -> Result<(), PrimesError> {
        let mut buf = Vec::with_capacity(20 + 4 * self.primes.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.limit.to_le_bytes());
        buf.extend_from_slice(&(self.primes.len() as u64).to_le_bytes());
        let mut prev = 0u64;
        for &p in &self.primes {
            buf.extend_from_slice(&((p - prev) as u32).to_le_bytes());
            prev = p;
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load_cache(path: &Path) -> Result<PrimeTable, PrimesError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 24 || &buf[0..4] != CACHE_MAGIC {
            return Err(PrimesError::BadCache("missing magic".into()));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(PrimesError::BadCache(format!("unsupported version {version}")));
        }
        let limit = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let count = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
        if buf.len() != 24 + 4 * count {
            return Err(PrimesError::BadCache("truncated".into()));
        }
        let mut primes = Vec::with_capacity(count);
        let mut prev = 0u64;
        for i in 0..count {
            let off = 24 + 4 * i;
            let d = u32::from_le_bytes(buf[off..off + 4].try_into().unwrap()) as u64;
            prev += d;
            primes.push(prev);
        }
        let mut cumulative_log = Vec::with_capacity(count);
        let mut acc = 0.0;
        for &p in &primes {
            acc += (p as f64).ln();
            cumulative_log.push(acc);
        }
        Ok(PrimeTable { limit, primes, cumulative_log })
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let mut composite = vec![false; (limit + 1) as usize];
    let mut out = Vec::new();
    for p in 2..=limit {
        if !composite[p as usize] {
            out.push(p);
            let mut m = p * p;
            while m <= limit {
                composite[m as usize] = true;
                m += p;
            }
        }
    }
    out
}

/// pi(x) <= (x/log x)(1 + 1/log x + 2.51/log^2 x) and pi(x) < 1.094 x/log x,
/// both valid from x >= 355991.
pub fn check_pi_bound(x: f64, table: &PrimeTable) -> Result<Vec<Check>, PrimesError> {
    if x < PI_BOUND_MIN_X {
        return Err(PrimesError::BelowThreshold(x, PI_BOUND_MIN_X));
    }
    if x > table.limit as f64 {
        return Err(PrimesError::AboveLimit(x, table.limit));
    }
    let pi = table.pi(x) as f64;
    let lx = x.ln();
    let three_term = x / lx * (1.0 + 1.0 / lx + 2.51 / (lx * lx));
    let simple = 1.094 * x / lx;
    Ok(vec![
        Check::new("pi-three-term", pi, three_term),
        Check::new("pi-1.094", pi, simple),
    ])
}

/// Scan the 1.094 bound at every prime jump in [lo, hi]; returns the worst
/// case (max ratio pi(x) log x / x).
pub fn scan_pi_bound(table: &PrimeTable, lo: f64, hi: f64) -> Result<Check, PrimesError> {
    if lo < PI_BOUND_MIN_X {
        return Err(PrimesError::BelowThreshold(lo, PI_BOUND_MIN_X));
    }
    if hi > table.limit as f64 {
        return Err(PrimesError::AboveLimit(hi, table.limit));
    }
    let start = table.pi(lo - 1.0) as usize;
    let end = table.pi(hi) as usize;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_x = 0.0;
    for (i, &p) in table.primes[start..end].iter().enumerate() {
        let x = p as f64;
        if x < PI_BOUND_MIN_X {
            continue;
        }
        let pi = (start + i + 1) as f64;
        let ratio = pi * x.ln() / x;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_x = x;
        }
    }
    Ok(Check::new("pi-1.094-scan", worst_ratio, 1.094)
        .with_inputs(serde_json::json!({ "lo": lo, "hi": hi, "argmax_x": worst_x }))
        .with_tolerance(1e-12))
}

/// theta(x) <= 1.000081 x at a single point.
pub fn check_theta_bound(x: f64, table: &PrimeTable) -> Result<Check, PrimesError> {
    if x > table.limit as f64 {
        return Err(PrimesError::AboveLimit(x, table.limit));
    }
    Ok(Check::new("theta", table.theta(x), THETA_RATIO * x))
}

/// theta(p)/p over all prime jumps p <= hi; reports the argmax ratio.
pub fn scan_theta_bound(table: &PrimeTable, hi: f64) -> Result<Check, PrimesError> {
    if hi > table.limit as f64 {
        return Err(PrimesError::AboveLimit(hi, table.limit));
    }
    let end = table.pi(hi) as usize;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_x = 0.0;
    for i in 0..end {
        let x = table.primes[i] as f64;
        let ratio = table.cumulative_log[i] / x;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_x = x;
        }
    }
    Ok(Check::new("theta-scan", worst_ratio, THETA_RATIO)
        .with_inputs(serde_json::json!({ "hi": hi, "argmax_x": worst_x })))
}

pub struct PowerSumResult {
    pub sum: f64,
    /// The 8.57-bound, when its hypotheses (M > 355991, e in (-3/4, -1/2)) hold.
    pub check: Option<Check>,
}

/// Sum of p^e over primes p <= M. When the Nakamura-Pankowski hypotheses hold
/// the explicit bound 8.57 M^{e+1} / log M is checked as well.
pub fn prime_power_sum(m: u64, e: f64, table: &PrimeTable) -> Result<PowerSumResult, PrimesError> {
    if m < 2 {
        return Err(PrimesError::BelowThreshold(m as f64, 2.0));
    }
    if m > table.limit {
        return Err(PrimesError::AboveLimit(m as f64, table.limit));
    }
    assert!(e > -1.0 && e < 0.0, "exponent must lie in (-1, 0)");
    let sum: f64 = table.range(1.0, m as f64).iter().map(|&p| (p as f64).powf(e)).sum();
    let check = if m as f64 > PI_BOUND_MIN_X && e > -0.75 && e < -0.5 {
        let mf = m as f64;
        let bound = 8.57 * mf.powf(e + 1.0) / mf.ln();
        Some(Check::new("power-sum-8.57", sum, bound).with_inputs(serde_json::json!({
            "M": m, "e": e
        })))
    } else {
        None
    };
    Ok(PowerSumResult { sum, check })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sieve() {
        let t = PrimeTable::sieve(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
        assert_eq!(t.pi(10.0), 4);
    }

    #[test]
    fn pi_of_million() {
        let t = PrimeTable::sieve(1_000_000).unwrap();
        assert_eq!(t.pi(1_000_000.0), 78_498);
        // spot-check primality by trial division on samples
        for &p in t.primes().iter().step_by(5000) {
            let mut d = 2;
            while d * d <= p {
                assert_ne!(p % d, 0, "{p} not prime");
                d += 1;
            }
        }
    }

    #[test]
    fn cumulative_log_nondecreasing() {
        let t = PrimeTable::sieve(10_000).unwrap();
        for w in t.cumulative_log.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!((t.theta(100.0) - 83.7284).abs() < 1e-2);
    }

    #[test]
    fn pi_bound_at_threshold() {
        let t = PrimeTable::sieve(400_000).unwrap();
        let checks = check_pi_bound(355_991.0, &t).unwrap();
        assert!(checks.iter().all(|c| c.pass));
        assert!(check_pi_bound(355_990.0, &t).is_err());
    }

    #[test]
    fn theta_bound_small() {
        let t = PrimeTable::sieve(1000).unwrap();
        assert!(check_theta_bound(2.0, &t).unwrap().pass);
        assert!(check_theta_bound(100.0, &t).unwrap().pass);
        let scan = scan_theta_bound(&t, 1000.0).unwrap();
        assert!(scan.pass);
    }

    #[test]
    fn power_sum_small() {
        let t = PrimeTable::sieve(100).unwrap();
        let r = prime_power_sum(10, -0.75, &t).unwrap();
        let expect = 2f64.powf(-0.75) + 3f64.powf(-0.75) + 5f64.powf(-0.75) + 7f64.powf(-0.75);
        assert!((r.sum - expect).abs() < 1e-14);
        assert!(r.check.is_none());
        let r2 = prime_power_sum(2, -0.5, &t).unwrap();
        assert!((r2.sum - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn power_sum_monotone_in_m() {
        let t = PrimeTable::sieve(10_000).unwrap();
        let mut prev = 0.0;
        for m in [10u64, 100, 1000, 10_000] {
            let r = prime_power_sum(m, -0.6, &t).unwrap();
            assert!(r.sum >= prev);
            prev = r.sum;
        }
    }

    #[test]
    fn cache_roundtrip() {
        let t = PrimeTable::sieve(100_000).unwrap();
        let dir = std::env::temp_dir().join("effuniv-test-cache");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sieve-100000.eupt");
        t.save_cache(&path).unwrap();
        let u = PrimeTable::load_cache(&path).unwrap();
        assert_eq!(t.primes(), u.primes());
        assert_eq!(t.limit(), u.limit());
    }
}
