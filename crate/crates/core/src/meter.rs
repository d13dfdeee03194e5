//! Operation counters standing in for wall-clock asymptotics.

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Counter {
    /// `NewRun` calls on run-length engines.
    NewRun,
    /// `Diff` calls on run-length engines, including the ones `NewRun` triggers.
    Diff,
    /// Rectangle corners pushed into an engine's queue.
    CornerInsert,
    /// Rolling-fingerprint updates in the dictionary matchers.
    MatcherStep,
    /// Register words (64 window positions of one projection) touched by the estimator.
    EstimatorStep,
    /// LCP probes issued by kangaroo verification.
    VerifierProbe,
    /// Alignments handed to a verifier.
    VerifierCall,
    /// One-mismatch queries issued by the k-mismatch query.
    OneMismatchQuery,
    /// Symbols consumed by an algorithm.
    Symbol,
}

impl Counter {
    pub const ALL: [Counter; 9] = [
        Counter::NewRun,
        Counter::Diff,
        Counter::CornerInsert,
        Counter::MatcherStep,
        Counter::EstimatorStep,
        Counter::VerifierProbe,
        Counter::VerifierCall,
        Counter::OneMismatchQuery,
        Counter::Symbol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Counter::NewRun => "new_run",
            Counter::Diff => "diff",
            Counter::CornerInsert => "corner_insert",
            Counter::MatcherStep => "matcher_step",
            Counter::EstimatorStep => "estimator_step",
            Counter::VerifierProbe => "verifier_probe",
            Counter::VerifierCall => "verifier_call",
            Counter::OneMismatchQuery => "one_mismatch_query",
            Counter::Symbol => "symbol",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Monotone named counters. Every algorithm owns one; orchestrators merge them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkMeter {
    counts: [u64; 9],
}

impl WorkMeter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn bump(&mut self, counter: Counter, by: u64) {
        self.counts[counter.index()] += by;
    }

    #[inline]
    pub fn get(&self, counter: Counter) -> u64 {
        self.counts[counter.index()]
    }

    /// Sum of every counter except [`Counter::Symbol`]: the unit of work used for budgeting.
    pub fn work(&self) -> u64 {
        Counter::ALL
            .iter()
            .filter(|c| **c != Counter::Symbol)
            .map(|c| self.get(*c))
            .sum()
    }

    pub fn merge(&mut self, other: &WorkMeter) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += *b;
        }
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, u64> {
        Counter::ALL.iter().map(|c| (c.name(), self.get(*c))).collect()
    }
}

impl Serialize for WorkMeter {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(serializer)
    }
}
