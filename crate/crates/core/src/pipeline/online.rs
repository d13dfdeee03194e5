//! Per-symbol k-mismatch with small working space.
//!
//! Small-period patterns reuse the block algorithm with two overlapping
//! blocks alive at a time. Otherwise an approximate filter with `ε = 1/2`
//! discards alignments whose estimate exceeds `3k/2`, and the rest are
//! answered by the dynamic mismatch index.

use crate::approx_stream::ApproxStream;
use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{x_period, AlignmentOutput, Symbol, Verdict};
use crate::one_mismatch::{OneMismatchIndex, VerifierMode};
use crate::small_period::{BlockRunner, SmallPeriodPlan, SmallPeriodStats};
use std::collections::VecDeque;
use std::sync::Arc;

/// Approximation parameter of the large-period filter.
pub const FILTER_EPSILON: f64 = 0.5;

#[derive(Debug, Clone)]
struct SmallState {
    plan: Arc<SmallPeriodPlan>,
    // (first text index of the block, runner); at most two
    runners: VecDeque<(usize, BlockRunner)>,
    stats: SmallPeriodStats,
}

#[derive(Debug, Clone)]
struct LargeState {
    filter: ApproxStream,
    verifier: OneMismatchIndex,
    passes: u64,
}

#[derive(Debug, Clone)]
enum Regime {
    Small(SmallState),
    Large(Box<LargeState>),
}

/// Online k-mismatch matcher; `push` answers each alignment as its last symbol arrives.
#[derive(Debug, Clone)]
pub struct OnlineMatcher {
    m: usize,
    k: usize,
    period: usize,
    seen: usize,
    regime: Regime,
    max_live: usize,
}

impl OnlineMatcher {
    pub fn new(pattern: &[Symbol], k: usize, seed: u64, mode: VerifierMode) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(KmError::input("pattern must be non-empty"));
        }
        let period = x_period(pattern, 3 * k).period;
        let regime = if period <= k {
            Regime::Small(SmallState {
                plan: Arc::new(SmallPeriodPlan::new(pattern, k)?),
                runners: VecDeque::with_capacity(2),
                stats: SmallPeriodStats::default(),
            })
        } else {
            Regime::Large(Box::new(LargeState {
                filter: ApproxStream::new(pattern, k, FILTER_EPSILON, seed)?,
                verifier: OneMismatchIndex::new(pattern, k, seed ^ 0x6c8e_9cf5_7093_2bd5, mode)?,
                passes: 0,
            }))
        };
        Ok(OnlineMatcher { m, k, period, seen: 0, regime, max_live: 0 })
    }

    pub fn pattern_len(&self) -> usize {
        self.m
    }

    /// The 3k-period of the pattern.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_small_period(&self) -> bool {
        matches!(self.regime, Regime::Small(_))
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Alignments that passed the approximate filter (large period only).
    pub fn filter_passes(&self) -> u64 {
        match &self.regime {
            Regime::Large(s) => s.passes,
            Regime::Small(_) => 0,
        }
    }

    pub fn integrity_faults(&self) -> u64 {
        match &self.regime {
            Regime::Large(s) => s.verifier.integrity_faults(),
            Regime::Small(_) => 0,
        }
    }

    /// Block statistics, including blocks still running (small period only).
    pub fn small_period_stats(&self) -> Option<SmallPeriodStats> {
        match &self.regime {
            Regime::Small(s) => {
                let mut stats = s.stats.clone();
                for (_, r) in &s.runners {
                    stats.absorb(r.meter(), r.aborted_at().is_some(), r.max_live_state());
                }
                Some(stats)
            }
            Regime::Large(_) => None,
        }
    }

    /// All work counted so far.
    pub fn meter(&self) -> WorkMeter {
        let mut meter = WorkMeter::new();
        match &self.regime {
            Regime::Small(s) => {
                meter.merge(&s.stats.meter);
                for (_, r) in &s.runners {
                    meter.merge(r.meter());
                }
            }
            Regime::Large(s) => {
                meter.merge(s.filter.meter());
                meter.merge(s.verifier.update_meter());
                meter.merge(s.verifier.query_meter());
            }
        }
        meter
    }

    /// Total of the work counters, cheaper than building [`Self::meter`].
    pub fn work(&self) -> u64 {
        match &self.regime {
            Regime::Small(s) => s.stats.meter.work() + s.runners.iter().map(|(_, r)| r.meter().work()).sum::<u64>(),
            Regime::Large(s) => {
                s.filter.meter().work() + s.verifier.update_meter().work() + s.verifier.query_meter().work()
            }
        }
    }

    /// Words of state held right now.
    pub fn live_state(&self) -> usize {
        match &self.regime {
            Regime::Small(s) => s.runners.iter().map(|(_, r)| r.live_state()).sum(),
            Regime::Large(s) => s.filter.live_words() + s.verifier.live_state(),
        }
    }

    /// Largest [`Self::live_state`] observed after any symbol.
    pub fn max_live_state(&self) -> usize {
        self.max_live
    }

    /// Consumes `T[i]`; the answer for the window ending at `i` once `i ≥ m - 1`.
    pub fn push(&mut self, c: Symbol) -> Result<Option<AlignmentOutput>> {
        let (m, k) = (self.m, self.k);
        let i = self.seen;
        self.seen += 1;
        let out = match &mut self.regime {
            Regime::Small(s) => {
                if i.is_multiple_of(m) {
                    s.runners.push_back((i, BlockRunner::new(Arc::clone(&s.plan))));
                }
                let mut out = None;
                for (start, runner) in s.runners.iter_mut() {
                    let local = runner.position();
                    let o = runner.push(c)?;
                    if local + 1 >= m && local <= 2 * m - 2 {
                        out = o.map(|o| AlignmentOutput::new(*start + o.end, o.verdict));
                    }
                }
                while s.runners.front().is_some_and(|(_, r)| r.position() >= 2 * m) {
                    let (_, r) = s.runners.pop_front().unwrap();
                    s.stats.absorb(r.meter(), r.aborted_at().is_some(), r.max_live_state());
                }
                if i + 1 >= m && out.is_none() {
                    return Err(KmError::Invariant(format!("no block answered end position {i}")));
                }
                out
            }
            Regime::Large(s) => {
                s.verifier.update(c);
                match s.filter.push_estimate(c) {
                    None => None,
                    Some(mu) => {
                        let estimate = (mu / (1.0 - s.filter.delta())).floor();
                        let verdict = if estimate <= (3 * k / 2) as f64 {
                            s.passes += 1;
                            s.verifier.k_mismatch_query()?.verdict
                        } else {
                            Verdict::No
                        };
                        Some(AlignmentOutput::new(i, verdict))
                    }
                }
            }
        };
        if let Regime::Small(s) = &mut self.regime {
            s.stats.meter.bump(Counter::Symbol, 1);
        }
        self.max_live = self.max_live.max(self.live_state());
        Ok(out)
    }
}
