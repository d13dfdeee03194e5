//! Kangaroo verification: count mismatches by jumping from one to the next
//! with longest-common-prefix queries, giving up after `k + 1`.

use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{Symbol, Verdict};
use crate::partition::{FingerprintHasher, RollingPrefix};

/// Longest common prefix between a pattern suffix and a text suffix.
pub trait LcpOracle {
    /// `lcp(P[p..], T[t..])`, capped at `limit`.
    fn lcp(&self, p: usize, t: usize, limit: usize, meter: &mut WorkMeter) -> usize;
}

/// Distance between `P[p_start .. p_start + len]` and `T[t_start ..]` if at most `k`.
pub fn kangaroo<L: LcpOracle + ?Sized>(
    oracle: &L,
    p_start: usize,
    t_start: usize,
    len: usize,
    k: usize,
    meter: &mut WorkMeter,
) -> Option<usize> {
    let mut j = 0;
    let mut mismatches = 0;
    loop {
        meter.bump(Counter::VerifierProbe, 1);
        j += oracle.lcp(p_start + j, t_start + j, len - j, meter);
        if j >= len {
            return Some(mismatches);
        }
        mismatches += 1;
        if mismatches > k {
            return None;
        }
        j += 1;
        if j >= len {
            return Some(mismatches);
        }
    }
}

/// Suffix array over `P # T` with an LCP array and a sparse table for range minima.
#[derive(Debug, Clone)]
pub struct SuffixLcp {
    m: usize,
    n: usize,
    rank: Vec<usize>,
    table: Vec<Vec<u32>>,
}

/// Suffix array of an integer sequence by prefix doubling.
pub fn suffix_array(s: &[u64]) -> Vec<usize> {
    let n = s.len();
    let mut sa: Vec<usize> = (0..n).collect();
    if n <= 1 {
        return sa;
    }
    let mut rank: Vec<u64> = s.to_vec();
    let mut tmp = vec![0u64; n];
    let mut h = 1;
    loop {
        let key = |i: usize, rank: &[u64]| (rank[i], if i + h < n { rank[i + h] + 1 } else { 0 });
        sa.sort_unstable_by_key(|&i| key(i, &rank));
        tmp[sa[0]] = 0;
        for w in 1..n {
            tmp[sa[w]] = tmp[sa[w - 1]] + u64::from(key(sa[w], &rank) != key(sa[w - 1], &rank));
        }
        std::mem::swap(&mut rank, &mut tmp);
        if rank[sa[n - 1]] as usize == n - 1 {
            return sa;
        }
        h *= 2;
    }
}

/// Kasai's algorithm: `lcp[w]` is the LCP of suffixes `sa[w-1]` and `sa[w]`.
pub fn lcp_array(s: &[u64], sa: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = s.len();
    let mut rank = vec![0; n];
    for (w, &i) in sa.iter().enumerate() {
        rank[i] = w;
    }
    let mut lcp = vec![0; n];
    let mut h = 0;
    for i in 0..n {
        if rank[i] == 0 {
            h = 0;
            continue;
        }
        let j = sa[rank[i] - 1];
        while i + h < n && j + h < n && s[i + h] == s[j + h] {
            h += 1;
        }
        lcp[rank[i]] = h;
        h = h.saturating_sub(1);
    }
    (lcp, rank)
}

impl SuffixLcp {
    pub fn new(pattern: &[Symbol], text: &[Symbol]) -> Self {
        // symbols shifted by two; 1 separates P from T
        let mut s: Vec<u64> = pattern.iter().map(|&c| u64::from(c) + 2).collect();
        s.push(1);
        s.extend(text.iter().map(|&c| u64::from(c) + 2));
        let sa = suffix_array(&s);
        let (lcp, rank) = lcp_array(&s, &sa);
        let mut table = vec![lcp.iter().map(|&x| x as u32).collect::<Vec<u32>>()];
        let mut width = 1;
        while 2 * width <= s.len() {
            let prev = table.last().unwrap();
            let next: Vec<u32> = (0..=s.len() - 2 * width).map(|w| prev[w].min(prev[w + width])).collect();
            table.push(next);
            width *= 2;
        }
        SuffixLcp { m: pattern.len(), n: text.len(), rank, table }
    }

    fn lcp_suffixes(&self, a: usize, b: usize) -> usize {
        if a == b {
            return self.rank.len() - a;
        }
        let (lo, hi) = {
            let (x, y) = (self.rank[a], self.rank[b]);
            (x.min(y) + 1, x.max(y))
        };
        let level = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        let row = &self.table[level];
        row[lo].min(row[hi + 1 - (1 << level)]) as usize
    }

    pub fn text_len(&self) -> usize {
        self.n
    }

    /// Kangaroo verification of the window ending at text position `end`.
    pub fn verify(&self, end: usize, k: usize, meter: &mut WorkMeter) -> Result<Verdict> {
        if end + 1 < self.m || end >= self.n {
            return Err(KmError::input(format!("end position {end} outside [{}, {})", self.m - 1, self.n)));
        }
        meter.bump(Counter::VerifierCall, 1);
        Ok(match kangaroo(self, 0, end + 1 - self.m, self.m, k, meter) {
            Some(d) => Verdict::Exact(d),
            None => Verdict::No,
        })
    }
}

impl LcpOracle for SuffixLcp {
    fn lcp(&self, p: usize, t: usize, limit: usize, _meter: &mut WorkMeter) -> usize {
        self.lcp_suffixes(p, self.m + 1 + t).min(limit)
    }
}

/// Fingerprint LCP between a fixed pattern and the recent part of a stream.
///
/// Text positions are absolute stream indices; only the latest `window` symbols are kept.
#[derive(Debug, Clone)]
pub struct RollingLcp {
    hasher: FingerprintHasher,
    pattern_prefix: Vec<u64>,
    powers: Vec<u64>,
    text: RollingPrefix,
}

impl RollingLcp {
    pub fn new(pattern: &[Symbol], window: usize, seed: u64) -> Self {
        let hasher = FingerprintHasher::from_seed(seed);
        let mut pattern_prefix = Vec::with_capacity(pattern.len() + 1);
        let mut fp = crate::partition::Fingerprint::default();
        pattern_prefix.push(0);
        for &c in pattern {
            fp = hasher.append(fp, c);
            pattern_prefix.push(fp.value);
        }
        RollingLcp {
            hasher,
            powers: hasher.powers(pattern.len()),
            pattern_prefix,
            text: RollingPrefix::new(hasher, window),
        }
    }

    pub fn push(&mut self, c: Symbol) {
        self.text.push(c);
    }

    /// Number of stream symbols seen.
    pub fn seen(&self) -> usize {
        self.text.seen()
    }

    pub fn live_words(&self) -> usize {
        self.pattern_prefix.len() + self.powers.len() + self.text.live_words()
    }

    fn equal(&self, p: usize, t: usize, len: usize) -> bool {
        let newest = self.text.seen() - 1;
        let back = newest - (t + len - 1);
        let Some(tf) = self.text.window(back, len) else { return false };
        let pf = self.hasher.substring(self.pattern_prefix[p], self.pattern_prefix[p + len], self.powers[len], len);
        pf == tf
    }

    /// Kangaroo verification of `P` against the window ending at the newest symbol.
    pub fn verify_latest(&self, k: usize, meter: &mut WorkMeter) -> Option<usize> {
        let m = self.pattern_prefix.len() - 1;
        meter.bump(Counter::VerifierCall, 1);
        kangaroo(self, 0, self.text.seen() - m, m, k, meter)
    }
}

impl LcpOracle for RollingLcp {
    fn lcp(&self, p: usize, t: usize, limit: usize, meter: &mut WorkMeter) -> usize {
        let avail = self.text.seen().saturating_sub(t);
        let hi_cap = limit.min(avail).min(self.pattern_prefix.len() - 1 - p);
        let (mut lo, mut hi) = (0, hi_cap);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            meter.bump(Counter::MatcherStep, 1);
            if self.equal(p, t, mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }
}
