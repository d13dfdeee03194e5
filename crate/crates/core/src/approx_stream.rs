//! `(1+ε)`-approximate streaming k-mismatch.
//!
//! For a random prime `q`, each subpattern `P^{q,r}` is replaced by an
//! identifier (its fingerprint). The subpatterns come in at most two lengths,
//! giving two short patterns `φ₁` (the longer subpatterns) and `φ₂`. Each
//! arriving text symbol appends one identifier (or the sentinel `$`) to the
//! streams `C₁` and `C₂`, and the number of subpatterns that do not match the
//! current alignment is
//!
//! `μ = Ham(φ₁, C₁)[i] + Ham(φ₂, C₂)[i - b]`, with `b = |φ₁| = m mod q`.
//!
//! For distances up to `2k` this count is close to the true distance, and it
//! never exceeds it. Both terms are estimated by [`HamEstimator`].
//!
//! When `m` is too short for the prime interval, the estimator runs directly
//! on `P` and `T`.

use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{AlignmentOutput, Symbol, Verdict};
use crate::partition::{ceil_log2, FingerprintHasher, PrimeSampler, RollingPrefix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashSet, VecDeque};

/// Identifier for a text position whose suffix matches no registered subpattern.
pub const SENTINEL: u64 = u64::MAX;

#[inline]
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Repetition count `ceil(10 · log2 m / δ²)` for a target pattern length `m`.
pub fn default_repetitions(m: usize, delta: f64) -> usize {
    let log_m = ceil_log2(m).max(1) as f64;
    (10.0 * log_m / (delta * delta)).ceil() as usize
}

/// Sliding-window Hamming distance estimator over an arbitrary `u64` alphabet.
///
/// Each repetition maps symbols to random bits; two distinct symbols get
/// different bits with probability 1/2, so twice the mean projected distance
/// estimates the distance. The estimate is scaled by `1/(1-η)`,
/// `η = δ/(2+δ)`, to land in `[d, (1+δ)d]` rather than around `d`.
#[derive(Debug, Clone)]
pub struct HamEstimator {
    len: usize,
    words: usize,
    top_mask: u64,
    keys: Vec<u64>,
    pattern: Vec<u64>,
    window: Vec<u64>,
    seen: usize,
    scale: f64,
    sum: u64,
    max: u64,
    steps: u64,
}

impl HamEstimator {
    pub fn new(pattern: &[u64], delta: f64, reps: usize, seed: u64) -> Result<Self> {
        if pattern.is_empty() {
            return Err(KmError::input("estimator pattern must be non-empty"));
        }
        if !(delta > 0.0 && delta <= 1.0) || reps == 0 {
            return Err(KmError::config(format!("estimator needs δ in (0, 1] and at least one repetition, got {delta}, {reps}")));
        }
        let len = pattern.len();
        let words = len.div_ceil(64);
        let top = len - 64 * (words - 1);
        let top_mask = if top == 64 { u64::MAX } else { (1u64 << top) - 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keys: Vec<u64> = (0..reps).map(|_| rng.gen()).collect();
        let mut est = HamEstimator {
            len,
            words,
            top_mask,
            keys,
            pattern: vec![0; reps * words],
            window: vec![0; reps * words],
            seen: 0,
            scale: 2.0 / (1.0 - delta / (2.0 + delta)),
            sum: 0,
            max: 0,
            steps: 0,
        };
        for (h, key) in est.keys.clone().into_iter().enumerate() {
            for (j, &x) in pattern.iter().enumerate() {
                let b = len - 1 - j;
                est.pattern[h * words + b / 64] |= Self::bit(key, x) << (b % 64);
            }
        }
        Ok(est)
    }

    #[inline]
    fn bit(key: u64, x: u64) -> u64 {
        mix(x ^ key) >> 63
    }

    pub fn pattern_len(&self) -> usize {
        self.len
    }

    pub fn repetitions(&self) -> usize {
        self.keys.len()
    }

    /// Word operations performed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Live words: pattern and window registers.
    pub fn live_words(&self) -> usize {
        self.pattern.len() + self.window.len()
    }

    pub fn push(&mut self, x: u64) {
        let words = self.words;
        self.sum = 0;
        self.max = 0;
        for (h, &key) in self.keys.iter().enumerate() {
            let reg = &mut self.window[h * words..(h + 1) * words];
            for w in (1..words).rev() {
                reg[w] = (reg[w] << 1) | (reg[w - 1] >> 63);
            }
            reg[0] = (reg[0] << 1) | Self::bit(key, x);
            reg[words - 1] &= self.top_mask;
            let pat = &self.pattern[h * words..(h + 1) * words];
            let d: u64 = reg.iter().zip(pat).map(|(a, b)| u64::from((a ^ b).count_ones())).sum();
            self.sum += d;
            self.max = self.max.max(d);
        }
        self.steps += (self.keys.len() * words) as u64;
        self.seen += 1;
    }

    /// Estimate for the window ending at the latest symbol, once `len` symbols were seen.
    pub fn estimate(&self) -> Option<f64> {
        if self.seen < self.len {
            return None;
        }
        if self.max == 0 {
            return Some(0.0);
        }
        let mean = self.sum as f64 / self.keys.len() as f64;
        Some((self.scale * mean).clamp(self.max as f64, self.len as f64))
    }
}

/// Estimates for every alignment of `pattern` in `stream` (ends `|pattern| - 1 ..`).
pub fn approx_ham_estimate(pattern: &[u64], stream: &[u64], delta: f64, seed: u64) -> Result<Vec<f64>> {
    let mut est = HamEstimator::new(pattern, delta, default_repetitions(pattern.len(), delta), seed)?;
    let mut out = Vec::with_capacity(stream.len().saturating_sub(pattern.len() - 1));
    for &x in stream {
        est.push(x);
        if let Some(e) = est.estimate() {
            out.push(e);
        }
    }
    Ok(out)
}

/// Identifier patterns `φ₁`, `φ₂` for one modulus `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedPattern {
    pub q: usize,
    /// Length of the longer subpatterns, `ceil(m / q)` when `q` does not divide `m`.
    pub long_len: usize,
    pub phi1: Vec<u64>,
    pub phi2: Vec<u64>,
}

impl ReducedPattern {
    pub fn new(pattern: &[Symbol], q: usize, hasher: &FingerprintHasher) -> Result<Self> {
        if q == 0 {
            return Err(KmError::input("modulus must be positive"));
        }
        let m = pattern.len();
        let b = m % q;
        let short = m / q;
        let ids = |r: usize| hasher.fingerprint(&pattern[r..].iter().step_by(q).copied().collect::<Vec<_>>()).value;
        let phi1 = (0..b).map(ids).collect();
        let phi2 = if short == 0 { Vec::new() } else { (b..q).map(ids).collect() };
        Ok(ReducedPattern { q, long_len: short + 1, phi1, phi2 })
    }

    /// `s = q - |φ₁|`, the number of shorter subpatterns.
    pub fn short_count(&self) -> usize {
        self.q - self.phi1.len()
    }
}

/// Produces the `C₁`, `C₂` identifier streams for one modulus.
#[derive(Debug, Clone)]
pub struct IdentifierStreams {
    q: usize,
    long_len: usize,
    d1: HashSet<u64>,
    d2: HashSet<u64>,
    rolls: Vec<RollingPrefix>,
    seen: usize,
}

impl IdentifierStreams {
    pub fn new(reduced: &ReducedPattern, hasher: FingerprintHasher) -> Self {
        IdentifierStreams {
            q: reduced.q,
            long_len: reduced.long_len,
            d1: reduced.phi1.iter().copied().collect(),
            d2: reduced.phi2.iter().copied().collect(),
            rolls: vec![RollingPrefix::new(hasher, reduced.long_len); reduced.q],
            seen: 0,
        }
    }

    /// Appends the next text symbol; returns the symbols appended to `C₁` and `C₂`.
    pub fn push(&mut self, c: Symbol) -> (u64, u64) {
        let roll = &mut self.rolls[self.seen % self.q];
        roll.push(c);
        self.seen += 1;
        let lookup = |len: usize, dict: &HashSet<u64>| match roll.suffix(len) {
            Some(fp) if len > 0 && dict.contains(&fp.value) => fp.value,
            _ => SENTINEL,
        };
        (lookup(self.long_len, &self.d1), lookup(self.long_len - 1, &self.d2))
    }
}

#[derive(Debug, Clone)]
struct Lane {
    streams: IdentifierStreams,
    est1: Option<HamEstimator>,
    est2: Option<HamEstimator>,
    lag: usize,
    // φ₂ estimates for the last `lag + 1` positions
    buf2: VecDeque<f64>,
}

impl Lane {
    fn push(&mut self, c: Symbol) -> f64 {
        let (c1, c2) = self.streams.push(c);
        let mut e1 = 0.0;
        if let Some(est) = &mut self.est1 {
            est.push(c1);
            e1 = est.estimate().unwrap_or(est.pattern_len() as f64);
        }
        let mut e2 = 0.0;
        if let Some(est) = &mut self.est2 {
            est.push(c2);
            self.buf2.push_back(est.estimate().unwrap_or(est.pattern_len() as f64));
            if self.buf2.len() > self.lag + 1 {
                self.buf2.pop_front();
            }
            e2 = if self.buf2.len() == self.lag + 1 { self.buf2[0] } else { est.pattern_len() as f64 };
        }
        e1 + e2
    }

    fn steps(&self) -> u64 {
        self.est1.as_ref().map_or(0, HamEstimator::steps) + self.est2.as_ref().map_or(0, HamEstimator::steps)
    }

    fn live_words(&self) -> usize {
        let rolls: usize = self.streams.rolls.iter().map(RollingPrefix::live_words).sum();
        rolls
            + self.buf2.len()
            + self.est1.as_ref().map_or(0, HamEstimator::live_words)
            + self.est2.as_ref().map_or(0, HamEstimator::live_words)
    }
}

#[derive(Debug, Clone)]
enum Mode {
    Direct(HamEstimator),
    Reduced(Vec<Lane>),
}

/// Streaming `(1+ε)`-approximate k-mismatch.
#[derive(Debug, Clone)]
pub struct ApproxStream {
    m: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    seen: usize,
    mode: Mode,
    meter: WorkMeter,
}

/// `ε` after clamping: at least `1/(2k)` (which already yields exact answers up to `k`), at most 1/2.
pub fn effective_epsilon(epsilon: f64, k: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(KmError::config(format!("epsilon {epsilon} outside (0, 1/2]")));
    }
    Ok(if k == 0 { epsilon } else { epsilon.max(1.0 / (2.0 * k as f64)) })
}

impl ApproxStream {
    /// Chooses the reduced mode when `m` is long enough for the prime interval, direct otherwise.
    pub fn new(pattern: &[Symbol], k: usize, epsilon: f64, seed: u64) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(KmError::input("pattern must be non-empty"));
        }
        let eps = effective_epsilon(epsilon, k)?;
        let delta = eps / 3.0;
        let sampler = PrimeSampler::new(k, delta, m, seed)?;
        if sampler.length_hypothesis_holds() {
            let primes: Vec<usize> = sampler.sample(sampler.default_count())?.into_iter().map(|q| q as usize).collect();
            Self::with_primes(pattern, k, epsilon, seed, &primes)
        } else {
            let ids: Vec<u64> = pattern.iter().map(|&c| u64::from(c)).collect();
            let est = HamEstimator::new(&ids, delta, default_repetitions(m, delta), seed)?;
            Ok(ApproxStream { m, k, epsilon: eps, delta, seen: 0, mode: Mode::Direct(est), meter: WorkMeter::new() })
        }
    }

    /// Reduced mode over explicit moduli.
    pub fn with_primes(pattern: &[Symbol], k: usize, epsilon: f64, seed: u64, moduli: &[usize]) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(KmError::input("pattern must be non-empty"));
        }
        if moduli.is_empty() {
            return Err(KmError::config("at least one modulus is required"));
        }
        let eps = effective_epsilon(epsilon, k)?;
        let delta = eps / 3.0;
        let hasher = FingerprintHasher::from_seed(seed);
        let reps = default_repetitions(m, delta);
        let mut lanes = Vec::with_capacity(moduli.len());
        for (j, &q) in moduli.iter().enumerate() {
            let reduced = ReducedPattern::new(pattern, q, &hasher)?;
            let lane_seed = seed.wrapping_add(0x1000 * (j as u64 + 1));
            let est1 = (!reduced.phi1.is_empty())
                .then(|| HamEstimator::new(&reduced.phi1, delta, reps, lane_seed))
                .transpose()?;
            let est2 = (!reduced.phi2.is_empty())
                .then(|| HamEstimator::new(&reduced.phi2, delta, reps, lane_seed ^ 0xabcd))
                .transpose()?;
            lanes.push(Lane {
                lag: reduced.phi1.len(),
                streams: IdentifierStreams::new(&reduced, hasher),
                est1,
                est2,
                buf2: VecDeque::new(),
            });
        }
        Ok(ApproxStream { m, k, epsilon: eps, delta, seen: 0, mode: Mode::Reduced(lanes), meter: WorkMeter::new() })
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.mode, Mode::Reduced(_))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn meter(&self) -> &WorkMeter {
        &self.meter
    }

    pub fn live_words(&self) -> usize {
        match &self.mode {
            Mode::Direct(est) => est.live_words(),
            Mode::Reduced(lanes) => lanes.iter().map(Lane::live_words).sum(),
        }
    }

    /// Consumes a symbol and returns `μ̃` for the alignment ending here, once `m` symbols were seen.
    pub fn push_estimate(&mut self, c: Symbol) -> Option<f64> {
        self.seen += 1;
        self.meter.bump(Counter::Symbol, 1);
        let (mu, steps) = match &mut self.mode {
            Mode::Direct(est) => {
                let before = est.steps();
                est.push(u64::from(c));
                (est.estimate().unwrap_or(0.0), est.steps() - before)
            }
            Mode::Reduced(lanes) => {
                let mut best: f64 = 0.0;
                let mut steps = 0;
                for lane in lanes.iter_mut() {
                    let before = lane.steps();
                    best = best.max(lane.push(c));
                    steps += lane.steps() - before;
                }
                (best, steps)
            }
        };
        self.meter.bump(Counter::EstimatorStep, steps);
        (self.seen >= self.m).then_some(mu)
    }

    /// Consumes a symbol; `Approx(x)` or `No` for the alignment ending here.
    pub fn approx_push(&mut self, c: Symbol) -> Result<AlignmentOutput> {
        let end = self.seen;
        match self.push_estimate(c) {
            None => Err(KmError::NotReady(format!("{} of {} symbols seen", self.seen, self.m))),
            Some(mu) => Ok(AlignmentOutput::new(end, self.verdict(mu))),
        }
    }

    /// Output rule: `No` above `(1+δ)k`, otherwise `⌊μ̃/(1-δ)⌋`.
    pub fn verdict(&self, mu: f64) -> Verdict {
        if mu > (1.0 + self.delta) * self.k as f64 {
            Verdict::No
        } else {
            Verdict::Approx((mu / (1.0 - self.delta)).floor() as usize)
        }
    }
}
