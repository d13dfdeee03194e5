//! Worst-case bounded per-symbol k-mismatch by splitting off a short tail.
//!
//! The pattern is cut into a head `P_h` and a tail `P_t` of length `L = 2k²`.
//! The tail is verified exactly against every alignment as it arrives. The
//! head runs the online matcher under a per-symbol work budget and is
//! allowed to fall behind the stream by up to `L` symbols, which is exactly
//! how late its answer is needed: `Ham(P, T)[i] = Ham(P_t, T)[i] + Ham(P_h, T)[i - L]`.

use super::online::OnlineMatcher;
use super::verifier::RollingLcp;
use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{AlignmentOutput, Symbol, Verdict};
use crate::one_mismatch::VerifierMode;
use crate::partition::ceil_log2;
use std::collections::VecDeque;

/// Default budget multiplier: the head may spend `c · ⌈log₂ m⌉³` work units per symbol.
pub const DEFAULT_BUDGET_FACTOR: u64 = 64;

/// Per-symbol work allowance `c · ⌈log₂ m⌉³` (at least `c`).
pub fn work_budget(m: usize, factor: u64) -> u64 {
    let log_m = ceil_log2(m).max(1) as u64;
    factor * log_m.pow(3)
}

/// Text symbols not yet consumed by the head, with the answers it has produced
/// and not yet been asked for.
#[derive(Debug, Clone)]
pub struct LagBuffer {
    bound: usize,
    budget: u64,
    credit: i64,
    pending: VecDeque<Symbol>,
    answers: VecDeque<AlignmentOutput>,
    head_done: usize,
    max_lag: usize,
}

impl LagBuffer {
    pub fn new(bound: usize, budget: u64) -> Self {
        LagBuffer {
            bound,
            budget,
            credit: 0,
            pending: VecDeque::with_capacity(bound + 1),
            answers: VecDeque::with_capacity(bound + 1),
            head_done: 0,
            max_lag: 0,
        }
    }

    /// Maximum allowed lag.
    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Symbols the head has consumed.
    pub fn head_done(&self) -> usize {
        self.head_done
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn live_words(&self) -> usize {
        self.pending.len() + 2 * self.answers.len()
    }

    /// Queues `T[i]` and lets the head work until its allowance is spent.
    fn step(&mut self, c: Symbol, head: &mut OnlineMatcher) -> Result<()> {
        self.pending.push_back(c);
        self.credit += self.budget as i64;
        while self.credit > 0 {
            let Some(x) = self.pending.pop_front() else { break };
            let before = head.work();
            if let Some(o) = head.push(x)? {
                self.answers.push_back(o);
            }
            self.head_done += 1;
            self.credit -= (head.work() - before + 1) as i64;
        }
        if self.pending.is_empty() {
            self.credit = self.credit.min(self.budget as i64);
        }
        let lag = self.pending.len();
        self.max_lag = self.max_lag.max(lag);
        if lag > self.bound {
            return Err(KmError::LagOverflow { lag, bound: self.bound });
        }
        Ok(())
    }

    /// The head answer for end position `end`, dropping older ones.
    fn take(&mut self, end: usize) -> Result<Verdict> {
        while let Some(o) = self.answers.pop_front() {
            if o.end == end {
                return Ok(o.verdict);
            }
            if o.end > end {
                return Err(KmError::Invariant(format!("head answer for {end} skipped")));
            }
        }
        Err(KmError::Invariant(format!("head answer for {end} not ready")))
    }
}

#[derive(Debug, Clone)]
enum Split {
    /// The whole pattern is short enough to verify directly.
    Direct(RollingLcp),
    Tailed { tail: RollingLcp, head: Box<OnlineMatcher>, lag: LagBuffer },
}

/// Streaming k-mismatch; each `push` returns the answer for the symbol just consumed.
#[derive(Debug, Clone)]
pub struct StreamingMatcher {
    m: usize,
    k: usize,
    tail_len: usize,
    seen: usize,
    split: Split,
    meter: WorkMeter,
    max_live: usize,
}

impl StreamingMatcher {
    /// Direct verification when `m ≤ 2k²` or `k = 0`; head/tail split otherwise.
    pub fn new(pattern: &[Symbol], k: usize, seed: u64, budget_factor: u64) -> Result<Self> {
        Self::with_mode(pattern, k, seed, budget_factor, VerifierMode::Auto)
    }

    pub fn with_mode(pattern: &[Symbol], k: usize, seed: u64, budget_factor: u64, mode: VerifierMode) -> Result<Self> {
        if budget_factor == 0 {
            return Err(KmError::config("work budget factor must be positive"));
        }
        Self::with_budget(pattern, k, seed, work_budget(pattern.len(), budget_factor), mode)
    }

    /// Like [`with_mode`](Self::with_mode) with an explicit per-symbol allowance for the head.
    pub fn with_budget(pattern: &[Symbol], k: usize, seed: u64, budget: u64, mode: VerifierMode) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(KmError::input("pattern must be non-empty"));
        }
        if budget == 0 {
            return Err(KmError::config("work budget must be positive"));
        }
        let tail_len = 2 * k * k;
        let split = if k == 0 || m <= tail_len {
            Split::Direct(RollingLcp::new(pattern, m, seed))
        } else {
            let (head_p, tail_p) = pattern.split_at(m - tail_len);
            Split::Tailed {
                tail: RollingLcp::new(tail_p, tail_len, seed),
                head: Box::new(OnlineMatcher::new(head_p, k, seed.wrapping_add(1), mode)?),
                lag: LagBuffer::new(tail_len, budget),
            }
        };
        Ok(StreamingMatcher { m, k, tail_len, seen: 0, split, meter: WorkMeter::new(), max_live: 0 })
    }

    pub fn is_split(&self) -> bool {
        matches!(self.split, Split::Tailed { .. })
    }

    /// `|P_t|`, or 0 on the direct path.
    pub fn tail_len(&self) -> usize {
        if self.is_split() {
            self.tail_len
        } else {
            0
        }
    }

    pub fn head(&self) -> Option<&OnlineMatcher> {
        match &self.split {
            Split::Tailed { head, .. } => Some(head),
            Split::Direct(_) => None,
        }
    }

    pub fn max_lag(&self) -> usize {
        match &self.split {
            Split::Tailed { lag, .. } => lag.max_lag(),
            Split::Direct(_) => 0,
        }
    }

    /// Tail-verifier work plus (head work, if any).
    pub fn meter(&self) -> WorkMeter {
        let mut meter = self.meter.clone();
        if let Some(head) = self.head() {
            meter.merge(&head.meter());
        }
        meter
    }

    pub fn live_state(&self) -> usize {
        match &self.split {
            Split::Direct(v) => v.live_words(),
            Split::Tailed { tail, head, lag } => tail.live_words() + head.live_state() + lag.live_words(),
        }
    }

    pub fn max_live_state(&self) -> usize {
        self.max_live
    }

    /// Consumes `T[i]` and answers the window ending at `i` once `i ≥ m - 1`.
    pub fn push(&mut self, c: Symbol) -> Result<Option<AlignmentOutput>> {
        let (m, k) = (self.m, self.k);
        let i = self.seen;
        self.seen += 1;
        self.meter.bump(Counter::Symbol, 1);
        let out = match &mut self.split {
            Split::Direct(v) => {
                v.push(c);
                (i + 1 >= m).then(|| {
                    let d = v.verify_latest(k, &mut self.meter);
                    AlignmentOutput::new(i, d.map_or(Verdict::No, Verdict::Exact))
                })
            }
            Split::Tailed { tail, head, lag } => {
                tail.push(c);
                lag.step(c, head)?;
                if i + 1 >= m {
                    let head_end = i - self.tail_len;
                    let head_verdict = lag.take(head_end)?;
                    let tail_d = tail.verify_latest(k, &mut self.meter);
                    let verdict = match (head_verdict, tail_d) {
                        (Verdict::Exact(h), Some(t)) if h + t <= k => Verdict::Exact(h + t),
                        (Verdict::Approx(_), _) => {
                            return Err(KmError::Invariant("head produced an approximate answer".into()))
                        }
                        _ => Verdict::No,
                    };
                    Some(AlignmentOutput::new(i, verdict))
                } else {
                    None
                }
            }
        };
        self.max_live = self.max_live.max(self.live_state());
        Ok(out)
    }
}
