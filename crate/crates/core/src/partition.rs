//! Cyclic residue partitioning, random primes, and Karp-Rabin fingerprints.
//!
//! For a modulus `q`, the subpattern `P^{q,r}` holds the positions of `P` with
//! remainder `r` modulo `q`; text substreams `T^{q,r}` are defined the same way.

use crate::error::{KmError, Result};
use crate::oracle::Symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::sync::Arc;

/// Splits `seq` into `q` residue classes: `result[r][t] = seq[t*q + r]`.
pub fn partition(seq: &[Symbol], q: usize) -> Result<Vec<Vec<Symbol>>> {
    if q == 0 {
        return Err(KmError::input("partition modulus must be positive"));
    }
    let mut parts: Vec<Vec<Symbol>> = (0..q).map(|r| Vec::with_capacity(subpattern_len(seq.len(), q, r))).collect();
    for (j, &c) in seq.iter().enumerate() {
        parts[j % q].push(c);
    }
    Ok(parts)
}

/// Inverse of [`partition`].
pub fn interleave(parts: &[Vec<Symbol>]) -> Vec<Symbol> {
    let q = parts.len();
    let total: usize = parts.iter().map(Vec::len).sum();
    (0..total).map(|j| parts[j % q][j / q]).collect()
}

/// `|P^{q,r}|` for a string of length `m`; zero when `r >= m`.
#[inline]
pub fn subpattern_len(m: usize, q: usize, r: usize) -> usize {
    if r >= m {
        0
    } else {
        (m - r - 1) / q + 1
    }
}

/// The substream `T^{q,r'}` that `P^{q,r}` is aligned with when the window ends at `i`.
#[inline]
pub fn substream_index(q: usize, r: usize, i: usize, m: usize) -> usize {
    debug_assert!(i + 1 >= m);
    (r + i + 1 - m) % q
}

/// Ceiling of log2, with `log2(1) = 0`. The algorithms use base-2 logarithms throughout.
pub fn ceil_log2(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// All primes in `[lo, hi]` by a segmented-free sieve of Eratosthenes.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return Vec::new();
    }
    let hi_us = hi as usize;
    let mut composite = vec![false; hi_us + 1];
    let mut p = 2usize;
    while p * p <= hi_us {
        if !composite[p] {
            let mut j = p * p;
            while j <= hi_us {
                composite[j] = true;
                j += p;
            }
        }
        p += 1;
    }
    (lo.max(2) as usize..=hi_us)
        .filter(|&j| !composite[j])
        .map(|j| j as u64)
        .collect()
}

/// Draws primes uniformly from `[ceil((k/δ)·log²m), floor((34k/δ)·log²m)]`.
#[derive(Debug, Clone)]
pub struct PrimeSampler {
    k: usize,
    delta: f64,
    m: usize,
    seed: u64,
    lo: u64,
    hi: u64,
    primes: Vec<u64>,
}

impl PrimeSampler {
    /// `k` is raised to 1 so that exact matching (`k = 0`) still gets a usable interval.
    pub fn new(k: usize, delta: f64, m: usize, seed: u64) -> Result<Self> {
        let k_eff = k.max(1);
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(KmError::config(format!("delta {delta} outside (0, 1]")));
        }
        if m == 0 {
            return Err(KmError::config("pattern length must be positive"));
        }
        let log_m = (m as f64).log2();
        let base = k_eff as f64 / delta * log_m * log_m;
        let lo = base.ceil() as u64;
        let hi = (34.0 * base).floor() as u64;
        Ok(Self::with_interval(k, delta, m, seed, lo.max(2), hi))
    }

    /// A sampler over an explicit interval.
    pub fn with_interval(k: usize, delta: f64, m: usize, seed: u64, lo: u64, hi: u64) -> Self {
        PrimeSampler { k, delta, m, seed, lo, hi, primes: primes_in(lo, hi) }
    }

    pub fn interval(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Whether `m >= (34k/δ)·log²m`, the length the collision bound assumes.
    pub fn length_hypothesis_holds(&self) -> bool {
        let log_m = (self.m as f64).log2();
        self.m as f64 >= 34.0 * self.k.max(1) as f64 / self.delta * log_m * log_m
    }

    /// Number of draws used by the algorithms: `ceil(log2 m)`, at least one.
    pub fn default_count(&self) -> usize {
        ceil_log2(self.m).max(1)
    }

    /// `count` independent uniform draws with replacement, reproducible from the seed.
    pub fn sample(&self, count: usize) -> Result<Vec<u64>> {
        if self.primes.is_empty() {
            return Err(KmError::config(format!(
                "no prime in the sampling interval [{}, {}]",
                self.lo, self.hi
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..count).map(|_| self.primes[rng.gen_range(0..self.primes.len())]).collect())
    }
}

/// Modulus of the Karp-Rabin field: the Mersenne prime `2^61 - 1`.
pub const FINGERPRINT_MODULUS: u64 = (1 << 61) - 1;

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let lo = (p as u64) & FINGERPRINT_MODULUS;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= FINGERPRINT_MODULUS {
        s - FINGERPRINT_MODULUS
    } else {
        s
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= FINGERPRINT_MODULUS {
        s - FINGERPRINT_MODULUS
    } else {
        s
    }
}

#[inline]
fn sub_mod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + FINGERPRINT_MODULUS - b
    }
}

/// A polynomial hash value together with the number of symbols it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fingerprint {
    pub value: u64,
    pub len: usize,
}

/// Karp-Rabin hashing with a fixed random base.
///
/// `fp(s) = sum_j (s[j] + 1) * base^(len-1-j) mod 2^61-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FingerprintHasher {
    base: u64,
}

impl FingerprintHasher {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        FingerprintHasher { base: rng.gen_range(256..FINGERPRINT_MODULUS - 1) }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn fingerprint(&self, seq: &[Symbol]) -> Fingerprint {
        seq.iter().fold(Fingerprint::default(), |fp, &c| self.append(fp, c))
    }

    #[inline]
    pub fn append(&self, fp: Fingerprint, c: Symbol) -> Fingerprint {
        Fingerprint {
            value: add_mod(mul_mod(fp.value, self.base), u64::from(c) + 1),
            len: fp.len + 1,
        }
    }

    pub fn pow(&self, mut exp: usize) -> u64 {
        let mut acc = 1u64;
        let mut b = self.base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul_mod(acc, b);
            }
            b = mul_mod(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Fingerprint of `s[from..to]` given the prefix hashes `h(s[..from])` and `h(s[..to])`.
    #[inline]
    pub fn substring(&self, prefix_from: u64, prefix_to: u64, base_pow_len: u64, len: usize) -> Fingerprint {
        Fingerprint { value: sub_mod(prefix_to, mul_mod(prefix_from, base_pow_len)), len }
    }

    pub fn powers(&self, up_to: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(up_to + 1);
        let mut acc = 1u64;
        for _ in 0..=up_to {
            out.push(acc);
            acc = mul_mod(acc, self.base);
        }
        out
    }
}

/// Prefix hashes of a stream, remembering only the most recent `capacity + 1` of them.
///
/// Answers the fingerprint of any suffix of length at most `capacity` in constant work.
#[derive(Debug, Clone)]
pub struct RollingPrefix {
    hasher: FingerprintHasher,
    powers: Arc<[u64]>,
    prefixes: VecDeque<u64>,
    capacity: usize,
    current: u64,
    seen: usize,
}

impl RollingPrefix {
    pub fn new(hasher: FingerprintHasher, capacity: usize) -> Self {
        Self::with_powers(hasher, capacity, hasher.powers(capacity).into())
    }

    /// Reuses a table of base powers, which must come from the same hasher and cover `capacity`.
    pub fn with_powers(hasher: FingerprintHasher, capacity: usize, powers: Arc<[u64]>) -> Self {
        assert!(powers.len() > capacity, "power table of {} entries for capacity {capacity}", powers.len());
        let mut prefixes = VecDeque::with_capacity(capacity + 1);
        prefixes.push_back(0);
        RollingPrefix { hasher, powers, prefixes, capacity, current: 0, seen: 0 }
    }

    pub fn push(&mut self, c: Symbol) {
        self.current = add_mod(mul_mod(self.current, self.hasher.base), u64::from(c) + 1);
        self.prefixes.push_back(self.current);
        if self.prefixes.len() > self.capacity + 1 {
            self.prefixes.pop_front();
        }
        self.seen += 1;
    }

    /// Number of symbols pushed so far.
    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Fingerprint of the latest `len` symbols; `None` if fewer were seen or `len > capacity`.
    pub fn suffix(&self, len: usize) -> Option<Fingerprint> {
        if len > self.capacity || len > self.seen {
            return None;
        }
        let last = self.prefixes.len() - 1;
        let from = self.prefixes[last - len];
        Some(self.hasher.substring(from, self.current, self.powers[len], len))
    }

    /// Fingerprint of the `len` symbols ending `back` positions before the newest one.
    pub fn window(&self, back: usize, len: usize) -> Option<Fingerprint> {
        if len + back > self.capacity || len + back > self.seen {
            return None;
        }
        let last = self.prefixes.len() - 1;
        let to = self.prefixes[last - back];
        let from = self.prefixes[last - back - len];
        Some(self.hasher.substring(from, to, self.powers[len], len))
    }

    pub fn live_words(&self) -> usize {
        self.prefixes.len()
    }
}
