//! Ground truth: exact Hamming distance, the x-period, and the brute-force
//! k-mismatch oracle every other algorithm is checked against.

use crate::error::{KmError, Result};
use serde::Serialize;
use std::fmt;

/// An alphabet symbol. Byte input is widened on ingestion.
pub type Symbol = u32;

/// A pattern or text as an owned sequence of integer symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolSequence(Vec<Symbol>);

impl SymbolSequence {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        SymbolSequence(symbols)
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        SymbolSequence(bytes.iter().map(|&b| Symbol::from(b)).collect())
    }

    /// Parses whitespace-separated non-negative integer tokens.
    pub fn from_tokens(text: &str) -> Result<Self> {
        text.split_whitespace()
            .map(|tok| {
                tok.parse::<Symbol>()
                    .map_err(|e| KmError::input(format!("bad symbol token {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(SymbolSequence)
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }
}

impl From<&str> for SymbolSequence {
    fn from(s: &str) -> Self {
        SymbolSequence::from_bytes(s.as_bytes())
    }
}

impl From<Vec<Symbol>> for SymbolSequence {
    fn from(v: Vec<Symbol>) -> Self {
        SymbolSequence(v)
    }
}

impl std::ops::Deref for SymbolSequence {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

/// The answer at one alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    /// The exact distance, at most `k`.
    Exact(usize),
    /// A `(1+ε)`-approximation of the distance.
    Approx(usize),
    No,
}

impl Verdict {
    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No)
    }

    /// The reported distance, exact or approximate.
    pub fn value(&self) -> Option<usize> {
        match *self {
            Verdict::Exact(d) | Verdict::Approx(d) => Some(d),
            Verdict::No => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Exact(d) => write!(f, "{d}"),
            Verdict::Approx(x) => write!(f, "~{x}"),
            Verdict::No => f.write_str("No"),
        }
    }
}

/// Result for the window `T[end - m + 1 ..= end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AlignmentOutput {
    pub end: usize,
    pub verdict: Verdict,
}

impl AlignmentOutput {
    pub fn new(end: usize, verdict: Verdict) -> Self {
        AlignmentOutput { end, verdict }
    }

    /// Applies the k-threshold to an exact distance.
    pub fn thresholded(end: usize, distance: usize, k: usize) -> Self {
        let verdict = if distance <= k { Verdict::Exact(distance) } else { Verdict::No };
        AlignmentOutput { end, verdict }
    }
}

impl fmt::Display for AlignmentOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.end, self.verdict)
    }
}

/// Number of positions at which `a` and `b` differ.
pub fn ham(a: &[Symbol], b: &[Symbol]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(KmError::input(format!(
            "hamming distance of unequal lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(ham_unchecked(a, b))
}

#[inline]
pub(crate) fn ham_unchecked(a: &[Symbol], b: &[Symbol]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Counts mismatches but gives up once the count exceeds `limit`.
#[inline]
pub(crate) fn ham_bounded(a: &[Symbol], b: &[Symbol], limit: usize) -> usize {
    let mut d = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            d += 1;
            if d > limit {
                break;
            }
        }
    }
    d
}

/// Brute-force k-mismatch: one output per end position `m-1 ..= n-1`.
pub fn kmismatch_oracle(pattern: &[Symbol], text: &[Symbol], k: usize) -> Result<Vec<AlignmentOutput>> {
    let m = pattern.len();
    if m == 0 {
        return Err(KmError::input("pattern must be non-empty"));
    }
    if m > text.len() {
        return Err(KmError::input(format!(
            "pattern length {m} exceeds text length {}",
            text.len()
        )));
    }
    Ok(text
        .windows(m)
        .enumerate()
        .map(|(start, window)| AlignmentOutput::thresholded(start + m - 1, ham_unchecked(pattern, window), k))
        .collect())
}

/// Exact distances at every alignment, without thresholding.
pub fn all_distances(pattern: &[Symbol], text: &[Symbol]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > text.len() {
        return Vec::new();
    }
    text.windows(pattern.len()).map(|w| ham_unchecked(pattern, w)).collect()
}

/// The smallest shift under which a string mismatches its own overlap in at most `threshold` positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XPeriod {
    pub threshold: usize,
    pub period: usize,
}

/// Smallest `l >= 1` with `ham(P[l..], P[..m-l]) <= x`; `m` when no shorter shift qualifies.
///
/// Brute force over all shifts with an early exit once a shift exceeds `x`.
pub fn x_period(pattern: &[Symbol], x: usize) -> XPeriod {
    let m = pattern.len();
    let period = (1..m)
        .find(|&shift| ham_bounded(&pattern[shift..], &pattern[..m - shift], x) <= x)
        .unwrap_or(m.max(1));
    XPeriod { threshold: x, period }
}
