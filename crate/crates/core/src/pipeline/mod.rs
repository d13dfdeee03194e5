//! End-to-end runners for each algorithm variant, with run-wide statistics.

pub mod filter;
pub mod offline;
pub mod online;
pub mod streaming;
pub mod verifier;

pub use offline::OfflineStats;
pub use online::{OnlineMatcher, FILTER_EPSILON};
pub use streaming::{work_budget, LagBuffer, StreamingMatcher, DEFAULT_BUDGET_FACTOR};
pub use verifier::{kangaroo, LcpOracle, RollingLcp, SuffixLcp};

use crate::approx_stream::ApproxStream;
use crate::error::{KmError, Result};
use crate::meter::Counter;
use crate::oracle::{kmismatch_oracle, x_period, AlignmentOutput, Symbol, Verdict};
use crate::one_mismatch::VerifierMode;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Oracle,
    Offline,
    Online,
    Approx,
    Streaming,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Oracle, Variant::Offline, Variant::Online, Variant::Approx, Variant::Streaming];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Oracle => "oracle",
            Variant::Offline => "offline",
            Variant::Online => "online",
            Variant::Approx => "approx",
            Variant::Streaming => "streaming",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = KmError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| KmError::config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub k: usize,
    /// Approximation parameter of the `approx` variant.
    pub epsilon: f64,
    pub seed: u64,
    /// Streaming head allowance per symbol, in units of `⌈log₂ m⌉³` work steps.
    pub budget_factor: u64,
    pub verifier_mode: VerifierMode,
}

impl RunConfig {
    pub fn new(variant: Variant, k: usize) -> Self {
        RunConfig {
            variant,
            k,
            epsilon: 0.5,
            seed: 0,
            budget_factor: DEFAULT_BUDGET_FACTOR,
            verifier_mode: VerifierMode::Auto,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant == Variant::Approx && !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(KmError::config(format!("epsilon {} outside (0, 1/2]", self.epsilon)));
        }
        if self.budget_factor == 0 {
            return Err(KmError::config("work budget factor must be positive"));
        }
        Ok(())
    }
}

/// Instrumentation of one run; fields that do not apply to a variant stay zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub variant: String,
    pub pattern_len: usize,
    pub text_len: usize,
    pub k: usize,
    /// The 3k-period of the pattern (of the head, for a split streaming run).
    pub period: usize,
    pub small_period: bool,
    pub work: BTreeMap<&'static str, u64>,
    pub verifier_calls: u64,
    pub filter_passes: u64,
    pub blocks: usize,
    pub aborted_blocks: usize,
    pub max_block_ops: u64,
    pub max_live_state: usize,
    pub tail_len: usize,
    pub max_lag: usize,
    pub budget_per_symbol: u64,
    pub integrity_faults: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outputs: Vec<AlignmentOutput>,
    pub stats: RunStats,
}

fn check_lengths(pattern: &[Symbol], text: &[Symbol]) -> Result<()> {
    if pattern.is_empty() {
        return Err(KmError::input("pattern must be non-empty"));
    }
    if pattern.len() > text.len() {
        return Err(KmError::input(format!(
            "pattern length {} exceeds text length {}",
            pattern.len(),
            text.len()
        )));
    }
    Ok(())
}

fn base_stats(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> RunStats {
    RunStats {
        variant: config.variant.name().to_string(),
        pattern_len: pattern.len(),
        text_len: text.len(),
        k: config.k,
        ..RunStats::default()
    }
}

/// Runs the configured variant over a complete text.
pub fn run(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> Result<RunReport> {
    config.validate()?;
    match config.variant {
        Variant::Oracle => {
            let outputs = kmismatch_oracle(pattern, text, config.k)?;
            let mut stats = base_stats(config, pattern, text);
            stats.period = x_period(pattern, 3 * config.k).period;
            stats.small_period = stats.period <= config.k;
            Ok(RunReport { outputs, stats })
        }
        Variant::Offline => run_offline(config, pattern, text),
        Variant::Online => run_online(config, pattern, text),
        Variant::Approx => run_approx(config, pattern, text),
        Variant::Streaming => run_streaming(config, pattern, text),
    }
}

pub fn run_offline(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> Result<RunReport> {
    let (outputs, off) = offline::offline(pattern, text, config.k)?;
    let mut stats = base_stats(config, pattern, text);
    stats.period = off.period;
    stats.verifier_calls = off.verifier_calls;
    stats.work = off.meter.to_map();
    if let Some(sp) = off.small_period {
        stats.small_period = true;
        stats.blocks = sp.blocks;
        stats.aborted_blocks = sp.aborted_blocks;
        stats.max_block_ops = sp.max_block_ops;
        stats.max_live_state = sp.max_live_state;
    }
    Ok(RunReport { outputs, stats })
}

fn online_stats(stats: &mut RunStats, matcher: &OnlineMatcher) {
    stats.period = matcher.period();
    stats.small_period = matcher.is_small_period();
    stats.filter_passes = matcher.filter_passes();
    stats.verifier_calls = matcher.meter().get(Counter::VerifierCall);
    stats.integrity_faults = matcher.integrity_faults();
    stats.max_live_state = matcher.max_live_state();
    stats.work = matcher.meter().to_map();
    if let Some(sp) = matcher.small_period_stats() {
        stats.blocks = sp.blocks;
        stats.aborted_blocks = sp.aborted_blocks;
        stats.max_block_ops = sp.max_block_ops;
    }
}

/// Feeds `source` one symbol at a time, handing each answer to `sink` before the next symbol is read.
pub fn run_online_with<I, F>(config: &RunConfig, pattern: &[Symbol], source: I, mut sink: F) -> Result<RunStats>
where
    I: IntoIterator<Item = Symbol>,
    F: FnMut(AlignmentOutput),
{
    config.validate()?;
    let mut matcher = OnlineMatcher::new(pattern, config.k, config.seed, config.verifier_mode)?;
    for c in source {
        if let Some(o) = matcher.push(c)? {
            sink(o);
        }
    }
    let mut stats = RunStats {
        variant: config.variant.name().to_string(),
        pattern_len: pattern.len(),
        text_len: matcher.seen(),
        k: config.k,
        ..RunStats::default()
    };
    online_stats(&mut stats, &matcher);
    Ok(stats)
}

pub fn run_online(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> Result<RunReport> {
    check_lengths(pattern, text)?;
    let mut outputs = Vec::with_capacity(text.len() + 1 - pattern.len());
    let stats = run_online_with(config, pattern, text.iter().copied(), |o| outputs.push(o))?;
    Ok(RunReport { outputs, stats })
}

/// Streaming counterpart of [`run_online_with`].
pub fn run_streaming_with<I, F>(config: &RunConfig, pattern: &[Symbol], source: I, mut sink: F) -> Result<RunStats>
where
    I: IntoIterator<Item = Symbol>,
    F: FnMut(AlignmentOutput),
{
    config.validate()?;
    let mut matcher =
        StreamingMatcher::with_mode(pattern, config.k, config.seed, config.budget_factor, config.verifier_mode)?;
    let mut seen = 0;
    for c in source {
        seen += 1;
        if let Some(o) = matcher.push(c)? {
            sink(o);
        }
    }
    let mut stats = RunStats {
        variant: config.variant.name().to_string(),
        pattern_len: pattern.len(),
        text_len: seen,
        k: config.k,
        ..RunStats::default()
    };
    if let Some(head) = matcher.head() {
        online_stats(&mut stats, head);
        stats.budget_per_symbol = work_budget(pattern.len(), config.budget_factor);
    } else {
        stats.period = x_period(pattern, 3 * config.k).period;
        stats.small_period = stats.period <= config.k;
    }
    let meter = matcher.meter();
    stats.verifier_calls = meter.get(Counter::VerifierCall);
    stats.work = meter.to_map();
    stats.tail_len = matcher.tail_len();
    stats.max_lag = matcher.max_lag();
    stats.max_live_state = matcher.max_live_state();
    Ok(stats)
}

pub fn run_streaming(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> Result<RunReport> {
    check_lengths(pattern, text)?;
    let mut outputs = Vec::with_capacity(text.len() + 1 - pattern.len());
    let stats = run_streaming_with(config, pattern, text.iter().copied(), |o| outputs.push(o))?;
    Ok(RunReport { outputs, stats })
}

pub fn run_approx(config: &RunConfig, pattern: &[Symbol], text: &[Symbol]) -> Result<RunReport> {
    config.validate()?;
    check_lengths(pattern, text)?;
    let mut stream = ApproxStream::new(pattern, config.k, config.epsilon, config.seed)?;
    let mut outputs = Vec::with_capacity(text.len() + 1 - pattern.len());
    for &c in text {
        match stream.approx_push(c) {
            Ok(o) => outputs.push(o),
            Err(KmError::NotReady(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut stats = base_stats(config, pattern, text);
    stats.period = x_period(pattern, 3 * config.k).period;
    stats.small_period = stats.period <= config.k;
    stats.work = stream.meter().to_map();
    stats.max_live_state = stream.live_words();
    Ok(RunReport { outputs, stats })
}

/// Alignments where `outputs` differs from the oracle; approximate answers
/// count as agreeing when they bracket the true distance within `1 + ε`.
pub fn disagreements(
    outputs: &[AlignmentOutput],
    pattern: &[Symbol],
    text: &[Symbol],
    k: usize,
    epsilon: f64,
) -> Result<Vec<(AlignmentOutput, AlignmentOutput)>> {
    let expected = kmismatch_oracle(pattern, text, k)?;
    if outputs.len() != expected.len() {
        return Err(KmError::Invariant(format!("{} outputs for {} alignments", outputs.len(), expected.len())));
    }
    let distances = crate::oracle::all_distances(pattern, text);
    Ok(outputs
        .iter()
        .zip(&expected)
        .zip(distances)
        .filter(|((got, want), y)| {
            if got.end != want.end {
                return true;
            }
            match got.verdict {
                Verdict::Approx(x) => !(*y <= x && (x as f64) <= (1.0 + epsilon) * *y as f64),
                Verdict::No if matches!(want.verdict, Verdict::Exact(_)) => *y <= k,
                Verdict::No => false,
                v => v != want.verdict,
            }
        })
        .map(|((got, want), _)| (*got, *want))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(text: &str) -> Vec<Symbol> {
        text.bytes().map(Symbol::from).collect()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("karloff".parse::<Variant>().is_err());
    }

    #[test]
    fn offline_k0_is_exact_matching() {
        let p = s("babaa");
        let t = s("babaababaabbabaa");
        let report = run(&RunConfig::new(Variant::Offline, 0), &p, &t).unwrap();
        assert_eq!(report.stats.period, x_period(&p, 0).period);
        let hits: Vec<usize> =
            report.outputs.iter().filter(|o| o.verdict == Verdict::Exact(0)).map(|o| o.end).collect();
        assert_eq!(hits, vec![4, 9, 15]);
    }

    #[test]
    fn offline_matches_oracle_both_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut regimes = [0, 0];
        for _ in 0..300 {
            let k = rng.gen_range(0..6);
            let m = rng.gen_range(4..40);
            let sigma = [2, 4][rng.gen_range(0..2)];
            let p: Vec<Symbol> = if rng.gen_bool(0.5) {
                let base: Vec<Symbol> = (0..rng.gen_range(1..=k.max(1))).map(|_| rng.gen_range(0..sigma)).collect();
                (0..m).map(|j| base[j % base.len()]).collect()
            } else {
                (0..m).map(|_| rng.gen_range(0..sigma)).collect()
            };
            let n = rng.gen_range(m..200);
            let t: Vec<Symbol> = (0..n)
                .map(|j| if rng.gen_bool(0.8) { p[j % m] } else { rng.gen_range(0..sigma) })
                .collect();
            let report = run(&RunConfig::new(Variant::Offline, k), &p, &t).unwrap();
            regimes[usize::from(report.stats.small_period)] += 1;
            assert_eq!(report.outputs, kmismatch_oracle(&p, &t, k).unwrap());
        }
        assert!(regimes[0] > 30 && regimes[1] > 30, "{regimes:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = RunConfig::new(Variant::Offline, 1);
        assert!(matches!(run(&cfg, &[], &[1]), Err(KmError::Input(_))));
        assert!(matches!(run(&cfg, &[1, 2], &[1]), Err(KmError::Input(_))));
        let cfg = RunConfig::new(Variant::Approx, 1).with_epsilon(0.9);
        assert!(matches!(run(&cfg, &[1], &[1]), Err(KmError::Config(_))));
    }

    #[test]
    fn streaming_interleaves_reads_and_outputs() {
        use std::cell::RefCell;
        let p = s("abracadabra");
        let t = s("xabracadabrabracadabracadabraxx");
        for k in [0, 1, 3] {
            let log = RefCell::new(Vec::new());
            let source = t.iter().enumerate().map(|(i, &c)| {
                log.borrow_mut().push(('r', i));
                c
            });
            let cfg = RunConfig::new(Variant::Streaming, k);
            run_streaming_with(&cfg, &p, source, |o| log.borrow_mut().push(('w', o.end))).unwrap();
            let log = log.into_inner();
            let mut expected = Vec::new();
            for i in 0..t.len() {
                expected.push(('r', i));
                if i + 1 >= p.len() {
                    expected.push(('w', i));
                }
            }
            assert_eq!(log, expected, "k = {k}");
        }
    }
}
