//! Deterministic k-mismatch over a whole text.

use super::filter::exact_distances;
use super::verifier::SuffixLcp;
use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{x_period, AlignmentOutput, Symbol, Verdict};
use crate::small_period::{run_text, SmallPeriodPlan, SmallPeriodStats};
use std::sync::Arc;

#[derive(Debug, Clone, Default)]
pub struct OfflineStats {
    pub period: usize,
    pub small_period: Option<SmallPeriodStats>,
    /// Alignments within `⌊3k/2⌋` that were handed to the verifier.
    pub verifier_calls: u64,
    pub meter: WorkMeter,
}

/// Small period: block algorithm. Large period: exact counting keeps the
/// alignments within `⌊3k/2⌋`, which must be at least `ℓ` apart, and each is
/// confirmed by kangaroo jumps.
pub fn offline(pattern: &[Symbol], text: &[Symbol], k: usize) -> Result<(Vec<AlignmentOutput>, OfflineStats)> {
    let m = pattern.len();
    if m == 0 {
        return Err(KmError::input("pattern must be non-empty"));
    }
    if m > text.len() {
        return Err(KmError::input(format!("pattern length {m} exceeds text length {}", text.len())));
    }
    let period = x_period(pattern, 3 * k).period;
    if period <= k {
        let plan = Arc::new(SmallPeriodPlan::new(pattern, k)?);
        let (outputs, stats) = run_text(&plan, text)?;
        let meter = stats.meter.clone();
        return Ok((outputs, OfflineStats { period, small_period: Some(stats), verifier_calls: 0, meter }));
    }

    let mut meter = WorkMeter::new();
    let distances = exact_distances(pattern, text, &mut meter);
    let survivors: Vec<usize> = (0..distances.len()).filter(|&s| distances[s] <= 3 * k / 2).collect();
    if let Some(w) = survivors.windows(2).find(|w| w[1] - w[0] < period) {
        return Err(KmError::Invariant(format!(
            "alignments starting at {} and {} are both within {} but closer than the 3k-period {period}",
            w[0],
            w[1],
            3 * k / 2
        )));
    }
    let mut outputs: Vec<AlignmentOutput> =
        (m - 1..text.len()).map(|end| AlignmentOutput::new(end, Verdict::No)).collect();
    if !survivors.is_empty() {
        let verifier = SuffixLcp::new(pattern, text);
        for &s in &survivors {
            let verdict = verifier.verify(s + m - 1, k, &mut meter)?;
            let expected = if distances[s] <= k { Verdict::Exact(distances[s]) } else { Verdict::No };
            if verdict != expected {
                return Err(KmError::Invariant(format!(
                    "verifier says {verdict} at start {s}, counting says {}",
                    distances[s]
                )));
            }
            outputs[s].verdict = verdict;
        }
    }
    meter.bump(Counter::Symbol, text.len() as u64);
    let stats = OfflineStats { period, small_period: None, verifier_calls: survivors.len() as u64, meter };
    Ok((outputs, stats))
}
