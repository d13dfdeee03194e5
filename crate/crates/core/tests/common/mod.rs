#![allow(dead_code)]

use kmismatch::{x_period, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    SmallPeriod,
    LargePeriod,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub sigma: u32,
    pub k: usize,
    pub pattern: Vec<Symbol>,
    pub text: Vec<Symbol>,
    pub period: usize,
}

pub const SIGMAS: [u32; 3] = [2, 4, 26];

pub fn small_period_pattern(rng: &mut ChaCha8Rng, m: usize, k: usize, sigma: u32) -> Vec<Symbol> {
    let base_len = rng.gen_range(1..=k);
    let base: Vec<Symbol> = (0..base_len).map(|_| rng.gen_range(0..sigma)).collect();
    let mut p: Vec<Symbol> = (0..m).map(|j| base[j % base_len]).collect();
    for _ in 0..rng.gen_range(0..=k) {
        let j = rng.gen_range(0..m);
        p[j] = rng.gen_range(0..sigma);
    }
    p
}

/// Text made of noisy copies of the pattern (distances around `0 ..= 2k`) and random filler.
pub fn text_for(rng: &mut ChaCha8Rng, pattern: &[Symbol], n: usize, k: usize, sigma: u32) -> Vec<Symbol> {
    let m = pattern.len();
    let mut t: Vec<Symbol> = Vec::with_capacity(n);
    while t.len() < n {
        match rng.gen_range(0..4) {
            0 => {
                let len = rng.gen_range(1..=m);
                t.extend((0..len).map(|_| rng.gen_range(0..sigma)));
            }
            1 => {
                // shifted copy: overlaps a periodic continuation
                let off = rng.gen_range(0..m);
                t.extend_from_slice(&pattern[off..]);
            }
            _ => {
                let mut copy = pattern.to_vec();
                for _ in 0..rng.gen_range(0..=2 * k + 1) {
                    let j = rng.gen_range(0..m);
                    copy[j] = rng.gen_range(0..sigma);
                }
                t.extend(copy);
            }
        }
    }
    t.truncate(n);
    t
}

/// A random instance in the requested regime with `m ∈ [8, 64]`, `n ∈ [2m, 512]`, `k ≤ 8`.
pub fn instance(seed: u64, regime: Regime) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let sigma = SIGMAS[rng.gen_range(0..SIGMAS.len())];
        let m = rng.gen_range(8..=64);
        let (k, pattern) = match regime {
            Regime::SmallPeriod => {
                let k = rng.gen_range(1..=8);
                (k, small_period_pattern(&mut rng, m, k, sigma))
            }
            Regime::LargePeriod => {
                let k = rng.gen_range(0..=8.min(m / 4));
                (k, (0..m).map(|_| rng.gen_range(0..sigma)).collect())
            }
        };
        let period = x_period(&pattern, 3 * k).period;
        if (period <= k) != (regime == Regime::SmallPeriod) {
            continue;
        }
        let n = rng.gen_range(2 * m..=512);
        let text = text_for(&mut rng, &pattern, n, k, sigma);
        return Instance { seed, sigma, k, pattern, text, period };
    }
}

/// `count` instances, alternating regimes.
pub fn corpus(base_seed: u64, count: usize) -> Vec<Instance> {
    (0..count)
        .map(|j| {
            let regime = if j % 2 == 0 { Regime::SmallPeriod } else { Regime::LargePeriod };
            instance(base_seed.wrapping_add(j as u64), regime)
        })
        .collect()
}

/// Small-period instances long enough (`m > 2k²`) for the streaming head/tail split,
/// with texts dense in near-occurrences so that blocks do close to maximal work.
pub fn adversarial_small_period(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let sigma = SIGMAS[rng.gen_range(0..SIGMAS.len())];
        let k = rng.gen_range(1..=8);
        let m = rng.gen_range((2 * k * k + 1).max(16)..=(2 * k * k + 1).max(16) + 160);
        let pattern = small_period_pattern(&mut rng, m, k, sigma);
        let period = x_period(&pattern, 3 * k).period;
        if period > k {
            continue;
        }
        let n = rng.gen_range(4 * m..=8 * m);
        let mut text = Vec::with_capacity(n);
        while text.len() < n {
            let mut copy = pattern.clone();
            for _ in 0..rng.gen_range(0..=k) {
                let j = rng.gen_range(0..m);
                copy[j] = rng.gen_range(0..sigma);
            }
            let cut = rng.gen_range(m / 2..=m);
            text.extend_from_slice(&copy[..cut]);
        }
        text.truncate(n);
        return Instance { seed, sigma, k, pattern, text, period };
    }
}
