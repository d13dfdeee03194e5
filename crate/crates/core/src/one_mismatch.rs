//! Dynamic Hamming distance queries with cheap updates.
//!
//! [`OneMismatchIndex`] follows the latest alignment of a pattern against a
//! stream. Each arriving symbol updates a set of rolling fingerprints; a
//! query collects the *isolated* mismatches of the alignment, those that are
//! alone in their subpattern `P^{q,r}` for some random prime `q`. When the
//! distance is at most `2k`, every mismatch is isolated for some prime with
//! high probability, so the collected set is exactly the mismatch set.
//!
//! A single mismatch inside a subpattern is located by a second partition
//! with small primes `p`: for each `p` exactly one second-level subpattern
//! fails to match, and the Chinese remainder theorem recovers its position.

use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{Symbol, Verdict};
use crate::partition::{ceil_log2, primes_in, FingerprintHasher, PrimeSampler, RollingPrefix};
use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

/// How queries are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerifierMode {
    /// Fingerprint sketch when the pattern is long enough for the prime sampling bound, window otherwise.
    #[default]
    Auto,
    ForceSketch,
    /// Keep the last `m` symbols and compare directly.
    ForceWindow,
}

/// Outcome of a query on one first-level subpattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneMismatch {
    ExactMatch,
    /// Index of the single mismatch within the subpattern.
    One(usize),
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub verdict: Verdict,
    /// Sorted mismatch positions in `P` when the verdict is `Exact`.
    pub positions: Vec<usize>,
}

/// The unique `x < bound` with `x ≡ rem (mod modulus)` for every pair.
pub fn crt_recover(residues: &[(u64, u64)], bound: u64) -> Result<u64> {
    let mut x: u128 = 0;
    let mut modulus: u128 = 1;
    for &(rem, n) in residues {
        if n == 0 || rem >= n {
            return Err(KmError::input(format!("bad residue {rem} mod {n}")));
        }
        if modulus >= u128::from(bound) {
            if x % u128::from(n) != u128::from(rem) {
                return Err(KmError::Integrity(format!("residue {rem} mod {n} contradicts {x}")));
            }
            continue;
        }
        let n128 = u128::from(n);
        let inv = mod_inverse((modulus % n128) as i128, n as i128)
            .ok_or_else(|| KmError::input(format!("modulus {n} is not coprime to the others")))?;
        let diff = (u128::from(rem) + n128 - x % n128) % n128;
        let t = diff * inv as u128 % n128;
        x += modulus * t;
        modulus *= n128;
    }
    if modulus < u128::from(bound) {
        return Err(KmError::input(format!("moduli product {modulus} below bound {bound}")));
    }
    if x >= u128::from(bound) {
        return Err(KmError::Integrity(format!("recovered value {x} not below {bound}")));
    }
    Ok(x as u64)
}

fn mod_inverse(a: i128, n: i128) -> Option<i128> {
    let (mut old_r, mut r) = (a, n);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(n))
}

/// Primes from `[ceil(log2 m), 3 ceil(log2 m)]`, widened until their product reaches `m`.
pub fn second_level_primes(m: usize) -> Vec<u64> {
    let lo = ceil_log2(m).max(2) as u64;
    let mut hi = 3 * lo;
    loop {
        let primes = primes_in(lo, hi);
        let product = primes.iter().try_fold(1u128, |acc, &p| acc.checked_mul(u128::from(p)));
        if product.is_none_or(|prod| prod >= m as u128) {
            return primes;
        }
        hi += lo;
    }
}

#[derive(Debug, Clone)]
struct Substream {
    len: usize,
    // per second-level prime index: one rolling fingerprint per residue w, created on first use
    levels: Vec<Vec<Option<RollingPrefix>>>,
}

#[derive(Debug, Clone)]
struct FirstLevel {
    q: usize,
    // fingerprints of S^{p,u} for each r < min(q, m), prime index, u < p
    pattern_fps: Vec<Vec<Vec<u64>>>,
    substreams: Vec<Option<Substream>>,
}

#[derive(Debug, Clone)]
enum Engine {
    Sketch { levels: Vec<FirstLevel>, second: Vec<u64>, hasher: FingerprintHasher, powers: Arc<[u64]> },
    Window { recent: VecDeque<Symbol> },
}

/// Dynamic k-mismatch query structure over a stream.
#[derive(Debug, Clone)]
pub struct OneMismatchIndex {
    pattern: Vec<Symbol>,
    k: usize,
    seen: usize,
    engine: Engine,
    integrity_faults: u64,
    update_meter: WorkMeter,
    query_meter: WorkMeter,
}

impl OneMismatchIndex {
    pub fn new(pattern: &[Symbol], k: usize, seed: u64, mode: VerifierMode) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(KmError::input("pattern must be non-empty"));
        }
        let sampler = PrimeSampler::new(k, 1.0, m, seed)?;
        let use_sketch = match mode {
            VerifierMode::Auto => sampler.length_hypothesis_holds(),
            VerifierMode::ForceSketch => true,
            VerifierMode::ForceWindow => false,
        };
        let engine = if use_sketch {
            Self::build_sketch(pattern, &sampler, seed)?
        } else {
            Engine::Window { recent: VecDeque::with_capacity(m) }
        };
        Ok(OneMismatchIndex {
            pattern: pattern.to_vec(),
            k,
            seen: 0,
            engine,
            integrity_faults: 0,
            update_meter: WorkMeter::new(),
            query_meter: WorkMeter::new(),
        })
    }

    /// A sketch-mode index over explicit first-level moduli.
    pub fn with_first_level(pattern: &[Symbol], k: usize, seed: u64, moduli: &[usize]) -> Result<Self> {
        if pattern.is_empty() {
            return Err(KmError::input("pattern must be non-empty"));
        }
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(KmError::config("first-level moduli must be positive and non-empty"));
        }
        Ok(OneMismatchIndex {
            pattern: pattern.to_vec(),
            k,
            seen: 0,
            engine: Self::sketch_over(pattern, moduli, seed),
            integrity_faults: 0,
            update_meter: WorkMeter::new(),
            query_meter: WorkMeter::new(),
        })
    }

    fn build_sketch(pattern: &[Symbol], sampler: &PrimeSampler, seed: u64) -> Result<Engine> {
        let moduli: Vec<usize> = sampler.sample(sampler.default_count())?.into_iter().map(|q| q as usize).collect();
        Ok(Self::sketch_over(pattern, &moduli, seed))
    }

    fn sketch_over(pattern: &[Symbol], moduli: &[usize], seed: u64) -> Engine {
        let m = pattern.len();
        let hasher = FingerprintHasher::from_seed(seed.wrapping_add(0x5bd1_e995));
        let second = second_level_primes(m);
        let mut levels = Vec::new();
        for &q in moduli {
            let pattern_fps = (0..q.min(m))
                .map(|r| {
                    let sub: Vec<Symbol> = pattern[r..].iter().step_by(q).copied().collect();
                    second
                        .iter()
                        .map(|&p| {
                            let p = p as usize;
                            (0..p)
                                .map(|u| {
                                    let part: Vec<Symbol> = sub.iter().skip(u).step_by(p).copied().collect();
                                    hasher.fingerprint(&part).value
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            levels.push(FirstLevel { q, pattern_fps, substreams: vec![None; q] });
        }
        Engine::Sketch { levels, second, hasher, powers: hasher.powers(m).into() }
    }

    pub fn is_sketch(&self) -> bool {
        matches!(self.engine, Engine::Sketch { .. })
    }

    pub fn first_level_primes(&self) -> Vec<usize> {
        match &self.engine {
            Engine::Sketch { levels, .. } => levels.iter().map(|l| l.q).collect(),
            Engine::Window { .. } => Vec::new(),
        }
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn integrity_faults(&self) -> u64 {
        self.integrity_faults
    }

    pub fn update_meter(&self) -> &WorkMeter {
        &self.update_meter
    }

    pub fn query_meter(&self) -> &WorkMeter {
        &self.query_meter
    }

    /// Stored words: rolling prefix entries or the window buffer.
    pub fn live_state(&self) -> usize {
        match &self.engine {
            Engine::Window { recent } => recent.len(),
            Engine::Sketch { levels, .. } => levels
                .iter()
                .flat_map(|l| l.substreams.iter().flatten())
                .flat_map(|s| s.levels.iter().flatten().flatten())
                .map(RollingPrefix::live_words)
                .sum(),
        }
    }

    /// Feeds the next stream symbol.
    pub fn update(&mut self, c: Symbol) {
        let m = self.pattern.len();
        let i = self.seen;
        self.seen += 1;
        self.update_meter.bump(Counter::Symbol, 1);
        match &mut self.engine {
            Engine::Window { recent } => {
                if recent.len() == m {
                    recent.pop_front();
                }
                recent.push_back(c);
                self.update_meter.bump(Counter::MatcherStep, 1);
            }
            Engine::Sketch { levels, second, hasher, powers } => {
                for level in levels.iter_mut() {
                    let q = level.q;
                    let longest = m.div_ceil(q);
                    let sub = level.substreams[i % q].get_or_insert_with(|| Substream {
                        len: 0,
                        levels: second.iter().map(|&p| vec![None; p as usize]).collect(),
                    });
                    for (pi, &p) in second.iter().enumerate() {
                        let p = p as usize;
                        sub.levels[pi][sub.len % p]
                            .get_or_insert_with(|| RollingPrefix::with_powers(*hasher, longest.div_ceil(p), Arc::clone(powers)))
                            .push(c);
                        self.update_meter.bump(Counter::MatcherStep, 1);
                    }
                    sub.len += 1;
                }
            }
        }
    }

    /// Mismatch structure of subpattern `P^{q_j, r}` at the current alignment.
    pub fn one_mismatch_query(&mut self, level: usize, r: usize) -> Result<OneMismatch> {
        if self.seen < self.pattern.len() {
            return Err(KmError::NotReady(format!("{} of {} symbols seen", self.seen, self.pattern.len())));
        }
        self.query_meter.bump(Counter::OneMismatchQuery, 1);
        match &self.engine {
            Engine::Window { .. } => Err(KmError::config("subpattern queries need the sketch mode")),
            Engine::Sketch { levels, second, .. } => {
                let lvl = levels
                    .get(level)
                    .ok_or_else(|| KmError::input(format!("no first-level prime with index {level}")))?;
                let outcome = Self::sketch_query(&self.pattern, self.seen, lvl, second, r, &mut self.query_meter);
                if outcome.is_err() {
                    self.integrity_faults += 1;
                }
                Ok(outcome.unwrap_or(OneMismatch::Many))
            }
        }
    }

    fn sketch_query(
        pattern: &[Symbol],
        seen: usize,
        level: &FirstLevel,
        second: &[u64],
        r: usize,
        meter: &mut WorkMeter,
    ) -> Result<OneMismatch> {
        let m = pattern.len();
        let q = level.q;
        if r >= m.min(q) {
            return Ok(OneMismatch::ExactMatch);
        }
        let sub_len = (m - r - 1) / q + 1;
        let i = seen - 1;
        let stream_index = (r + i + 1 - m) % q;
        let stream = level.substreams[stream_index]
            .as_ref()
            .filter(|s| s.len >= sub_len)
            .ok_or_else(|| KmError::NotReady(format!("substream {stream_index} shorter than {sub_len}")))?;
        let mut residues = Vec::with_capacity(second.len());
        let mut all_match = true;
        for (pi, &p) in second.iter().enumerate() {
            let p = p as usize;
            let mut odd: Option<usize> = None;
            for u in 0..p.min(sub_len) {
                let part_len = (sub_len - 1 - u) / p + 1;
                let w = (stream.len - sub_len + u) % p;
                meter.bump(Counter::MatcherStep, 1);
                let fp = stream.levels[pi][w]
                    .as_ref()
                    .and_then(|roll| roll.suffix(part_len))
                    .expect("rolling capacity covers the subpattern");
                if fp.value != level.pattern_fps[r][pi][u] {
                    if odd.is_some() {
                        return Ok(OneMismatch::Many);
                    }
                    odd = Some(u);
                }
            }
            match odd {
                Some(u) => residues.push((u as u64, p as u64)),
                None => {
                    if !residues.is_empty() {
                        return Err(KmError::Integrity("primes disagree on whether a mismatch exists".into()));
                    }
                }
            }
            all_match &= odd.is_none();
        }
        if all_match {
            return Ok(OneMismatch::ExactMatch);
        }
        if residues.len() != second.len() {
            return Err(KmError::Integrity("primes disagree on whether a mismatch exists".into()));
        }
        let x = crt_recover(&residues, sub_len as u64)?;
        Ok(OneMismatch::One(x as usize))
    }

    /// Distance at the current alignment if at most `k`, with the mismatch positions.
    pub fn k_mismatch_query(&mut self) -> Result<QueryResult> {
        let k = self.k;
        let positions = self.isolated_mismatches(k)?;
        if positions.len() > k {
            return Ok(QueryResult { verdict: Verdict::No, positions: Vec::new() });
        }
        Ok(QueryResult { verdict: Verdict::Exact(positions.len()), positions })
    }

    /// Sorted positions of the mismatches found at the current alignment,
    /// stopping once more than `limit` are known.
    ///
    /// In sketch mode these are the mismatches isolated under some first-level
    /// prime; when the distance is at most `2k` that is every mismatch with
    /// high probability.
    pub fn isolated_mismatches(&mut self, limit: usize) -> Result<Vec<usize>> {
        let m = self.pattern.len();
        if self.seen < m {
            return Err(KmError::NotReady(format!("{} of {m} symbols seen", self.seen)));
        }
        self.query_meter.bump(Counter::VerifierCall, 1);
        Ok(match &self.engine {
            Engine::Window { recent } => {
                let mut found = Vec::new();
                for (j, (a, b)) in self.pattern.iter().zip(recent).enumerate() {
                    self.query_meter.bump(Counter::VerifierProbe, 1);
                    if a != b {
                        found.push(j);
                        if found.len() > limit {
                            break;
                        }
                    }
                }
                found
            }
            Engine::Sketch { levels, .. } => {
                let moduli: Vec<usize> = levels.iter().map(|l| l.q).collect();
                let mut found: HashSet<usize> = HashSet::new();
                'outer: for (j, &q) in moduli.iter().enumerate() {
                    for r in 0..q.min(m) {
                        if let OneMismatch::One(x) = self.one_mismatch_query(j, r)? {
                            found.insert(r + x * q);
                            if found.len() > limit {
                                break 'outer;
                            }
                        }
                    }
                }
                let mut v: Vec<usize> = found.into_iter().collect();
                v.sort_unstable();
                v
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(text: &str) -> Vec<Symbol> {
        text.bytes().map(Symbol::from).collect()
    }

    fn feed(index: &mut OneMismatchIndex, text: &[Symbol]) {
        for &c in text {
            index.update(c);
        }
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt_recover(&[(1, 2), (2, 3)], 6).unwrap(), 5);
        assert_eq!(crt_recover(&[(0, 5), (0, 7), (0, 11)], 385).unwrap(), 0);
        assert!(matches!(crt_recover(&[(1, 2), (2, 3)], 4), Err(KmError::Integrity(_))));
        assert!(crt_recover(&[(1, 2)], 5).is_err());
        assert!(crt_recover(&[(1, 4), (1, 6)], 10).is_err());
    }

    #[test]
    fn crt_round_trip() {
        let moduli = [5u64, 7, 11, 13];
        for x in 0..5005u64 {
            let res: Vec<(u64, u64)> = moduli.iter().map(|&n| (x % n, n)).collect();
            assert_eq!(crt_recover(&res, 5005).unwrap(), x);
        }
    }

    #[test]
    fn second_level_product_covers_m() {
        for m in [1usize, 2, 7, 64, 1000, 1 << 16] {
            let primes = second_level_primes(m);
            let product: u128 = primes.iter().map(|&p| u128::from(p)).product();
            assert!(product >= m as u128, "m = {m}");
        }
    }

    #[test]
    fn subpattern_queries() {
        for (window, expected) in [("abc", OneMismatch::ExactMatch), ("abd", OneMismatch::One(2)), ("xbd", OneMismatch::Many)] {
            let mut index = OneMismatchIndex::with_first_level(&s("abc"), 1, 3, &[1]).unwrap();
            feed(&mut index, &s(window));
            assert_eq!(index.one_mismatch_query(0, 0).unwrap(), expected);
        }
        let mut index = OneMismatchIndex::new(&s("abc"), 1, 3, VerifierMode::ForceWindow).unwrap();
        feed(&mut index, &s("abd"));
        assert!(index.one_mismatch_query(0, 0).is_err());
        assert_eq!(index.k_mismatch_query().unwrap().positions, vec![2]);
    }

    #[test]
    fn random_subpattern_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..300 {
            let len = rng.gen_range(1..80);
            let p: Vec<Symbol> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let mut w = p.clone();
            for _ in 0..rng.gen_range(0..4) {
                let j = rng.gen_range(0..len);
                w[j] = 5 + rng.gen_range(0..2);
            }
            let mut index = OneMismatchIndex::with_first_level(&p, 4, trial, &[1]).unwrap();
            feed(&mut index, &w);
            let diffs: Vec<usize> = (0..len).filter(|&j| p[j] != w[j]).collect();
            let expected = match diffs.as_slice() {
                [] => OneMismatch::ExactMatch,
                [x] => OneMismatch::One(*x),
                _ => OneMismatch::Many,
            };
            assert_eq!(index.one_mismatch_query(0, 0).unwrap(), expected);
        }
    }

    #[test]
    fn single_subpattern_location() {
        // a long pattern so that subpatterns have several positions
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<Symbol> = (0..3000).map(|_| rng.gen_range(0..4)).collect();
        let mut index = OneMismatchIndex::new(&p, 1, 9, VerifierMode::ForceSketch).unwrap();
        let mut t = p.clone();
        t[1234] = 9;
        feed(&mut index, &t);
        let q = index.first_level_primes()[0];
        let r = 1234 % q;
        assert_eq!(index.one_mismatch_query(0, r).unwrap(), OneMismatch::One(1234 / q));
        assert_eq!(index.one_mismatch_query(0, (r + 1) % q).unwrap(), OneMismatch::ExactMatch);
        let result = index.k_mismatch_query().unwrap();
        assert_eq!(result.verdict, Verdict::Exact(1));
        assert_eq!(result.positions, vec![1234]);
    }

    #[test]
    fn not_ready_before_m_symbols() {
        let mut index = OneMismatchIndex::new(&s("abcd"), 1, 3, VerifierMode::ForceSketch).unwrap();
        feed(&mut index, &s("abc"));
        assert!(matches!(index.k_mismatch_query(), Err(KmError::NotReady(_))));
    }

    #[test]
    fn planted_mismatches_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in [VerifierMode::ForceSketch, VerifierMode::ForceWindow] {
            for trial in 0..40 {
                let m = rng.gen_range(16..120);
                let k = rng.gen_range(1..5);
                let p: Vec<Symbol> = (0..m).map(|_| rng.gen_range(0..3)).collect();
                let mut w = p.clone();
                let planted = rng.gen_range(0..=2 * k);
                let mut spots: Vec<usize> = Vec::new();
                while spots.len() < planted.min(m) {
                    let j = rng.gen_range(0..m);
                    if !spots.contains(&j) {
                        spots.push(j);
                        w[j] = 7;
                    }
                }
                spots.sort_unstable();
                let mut t: Vec<Symbol> = (0..rng.gen_range(0..50)).map(|_| rng.gen_range(0..3)).collect();
                t.extend_from_slice(&w);
                let mut index = OneMismatchIndex::new(&p, k, trial, mode).unwrap();
                feed(&mut index, &t);
                let got = index.k_mismatch_query().unwrap();
                if spots.len() <= k {
                    assert_eq!(got.verdict, Verdict::Exact(spots.len()));
                    assert_eq!(got.positions, spots);
                } else {
                    assert_eq!(got.verdict, Verdict::No);
                }
            }
        }
    }

    #[test]
    fn updates_match_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p: Vec<Symbol> = (0..40).map(|_| rng.gen_range(0..2)).collect();
        let t: Vec<Symbol> = (0..200).map(|_| rng.gen_range(0..2)).collect();
        let mut live = OneMismatchIndex::new(&p, 3, 5, VerifierMode::ForceSketch).unwrap();
        for i in 0..t.len() {
            live.update(t[i]);
            if i + 1 >= p.len() && i % 17 == 0 {
                let mut fresh = OneMismatchIndex::new(&p, 3, 5, VerifierMode::ForceSketch).unwrap();
                feed(&mut fresh, &t[..=i]);
                assert_eq!(live.k_mismatch_query().unwrap(), fresh.k_mismatch_query().unwrap());
            }
        }
    }

    #[test]
    fn auto_uses_window_for_short_patterns() {
        let index = OneMismatchIndex::new(&s("abcabc"), 2, 1, VerifierMode::Auto).unwrap();
        assert!(!index.is_sketch());
    }
}
