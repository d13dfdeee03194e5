//! k-mismatch for patterns whose 3k-period `ℓ` is at most `k`.
//!
//! The text is cut into blocks of length `2m` overlapping by `m`. Within a
//! block, the windows that can possibly match lie in a region that compresses
//! well under the ℓ-run-length encoding. For each pair `(r, s)` of pattern
//! residue and text residue an [`RleEngine`] tracks the distance between
//! `P^r` and the substream `T^s`; the block distances are sums of engine
//! values, maintained incrementally `ℓ` alignments at a time.
//!
//! All positions here are block-local. Text before the retained suffix `T_L`
//! is treated as unknown, so engine values overcount exactly for windows that
//! start before `T_L`, and those windows are far from the pattern anyway.

use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::{x_period, AlignmentOutput, Symbol, Verdict};
use crate::rle_ham::{rle_encode_mod, DiffOutput, ModularRleWindow, RleEngine, Run};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Run-count limits for one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunCaps {
    /// Maximum `runs_ℓ` of the retained suffix `T_L`.
    pub suffix: usize,
    /// Maximum runs processed by the engines before the block gives up.
    pub total: usize,
}

impl RunCaps {
    /// Caps that never discard a window within distance `k`.
    ///
    /// A window at distance at most `k` from `P` has at most `runs_ℓ(P) + 2k`
    /// ℓ-runs: each mismatch can split one run into three.
    pub fn for_pattern(pattern_runs: usize, k: usize) -> Self {
        let window = pattern_runs + 2 * k;
        RunCaps { suffix: window, total: 2 * window }
    }

    /// Caps as fixed multiples of `k` (`5k` for the suffix, `8k` in total).
    ///
    /// These are too tight for some valid inputs; kept for comparison.
    pub fn fixed_multiples(k: usize) -> Self {
        RunCaps { suffix: 5 * k, total: 8 * k }
    }
}

/// Per-pattern data shared by all blocks.
#[derive(Debug, Clone)]
pub struct SmallPeriodPlan {
    pattern: Vec<Symbol>,
    k: usize,
    period: usize,
    sub_runs: Vec<Vec<Run>>,
    sub_len: Vec<usize>,
    // (m - 1 - r) mod ℓ
    rho: Vec<usize>,
    pattern_runs: usize,
    caps: RunCaps,
}

impl SmallPeriodPlan {
    pub fn new(pattern: &[Symbol], k: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(KmError::input("pattern must be non-empty"));
        }
        let period = x_period(pattern, 3 * k).period;
        if period > k {
            return Err(KmError::config(format!("3k-period {period} exceeds k = {k}; not a small-period pattern")));
        }
        let enc = rle_encode_mod(pattern, period)?;
        let pattern_runs = enc.total_runs();
        if pattern_runs > 4 * k {
            return Err(KmError::Invariant(format!(
                "pattern with 3k-period {period} has {pattern_runs} ℓ-runs, more than 4k = {}",
                4 * k
            )));
        }
        let m = pattern.len();
        Ok(SmallPeriodPlan {
            pattern: pattern.to_vec(),
            k,
            period,
            sub_runs: (0..period).map(|r| enc.list(r).to_vec()).collect(),
            sub_len: (0..period).map(|r| (m - r - 1) / period + 1).collect(),
            rho: (0..period).map(|r| (m - 1 - r) % period).collect(),
            pattern_runs,
            caps: RunCaps::for_pattern(pattern_runs, k),
        })
    }

    pub fn with_caps(mut self, caps: RunCaps) -> Self {
        self.caps = caps;
        self
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn pattern_len(&self) -> usize {
        self.pattern.len()
    }

    pub fn pattern_runs(&self) -> usize {
        self.pattern_runs
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn caps(&self) -> RunCaps {
        self.caps
    }
}

/// The ℓ-run-length encoding of the longest suffix of the text seen so far
/// whose run count stays within a cap.
#[derive(Debug, Clone)]
pub struct SuffixEncoder {
    window: ModularRleWindow,
    cap: usize,
}

impl SuffixEncoder {
    pub fn new(period: usize, cap: usize) -> Self {
        SuffixEncoder { window: ModularRleWindow::new(period, 0), cap }
    }

    pub fn push(&mut self, c: Symbol) {
        self.window.push_back(c);
        while self.window.total_runs() > self.cap {
            self.window.pop_front();
        }
    }

    /// First position of the retained suffix.
    pub fn start(&self) -> usize {
        self.window.first()
    }

    pub fn runs(&self) -> usize {
        self.window.total_runs()
    }

    pub fn window(&self) -> &ModularRleWindow {
        &self.window
    }
}

#[derive(Debug, Clone)]
struct Instance {
    engine: RleEngine,
    prev: Option<DiffOutput>,
    last: Option<DiffOutput>,
    sub_len: usize,
}

impl Instance {
    fn covering(&self, x: usize) -> Option<&DiffOutput> {
        match (&self.last, &self.prev) {
            (Some(d), _) if x >= d.pos => Some(d),
            (_, Some(d)) if x >= d.pos => Some(d),
            _ => None,
        }
    }

    fn ham_at(&self, x: usize) -> i64 {
        match self.covering(x) {
            Some(d) => d.ham_at(x) as i64,
            // nothing known yet: every aligned text position is unknown
            None => self.sub_len as i64,
        }
    }

    fn delta_at(&self, x: usize) -> i64 {
        self.covering(x).map_or(0, |d| d.delta)
    }
}

#[derive(Debug, Clone)]
struct Grid {
    instances: Vec<Instance>,
    pending: Vec<BTreeSet<(usize, usize)>>,
    last_symbol: Vec<Option<Symbol>>,
    total_runs: usize,
    ham_ring: Vec<i64>,
    step_ring: Vec<i64>,
    change_ring: Vec<i64>,
}

#[derive(Debug, Clone)]
enum Phase {
    Setup(SuffixEncoder),
    Output(Box<Grid>),
    Aborted,
}

/// Streams one block `T[b·m ..]` symbol by symbol, producing outputs from local end `m - 1` on.
#[derive(Debug, Clone)]
pub struct BlockRunner {
    plan: Arc<SmallPeriodPlan>,
    pos: usize,
    phase: Phase,
    meter: WorkMeter,
    max_live: usize,
    aborted_at: Option<usize>,
}

impl BlockRunner {
    pub fn new(plan: Arc<SmallPeriodPlan>) -> Self {
        let enc = SuffixEncoder::new(plan.period, plan.caps.suffix);
        BlockRunner { plan, pos: 0, phase: Phase::Setup(enc), meter: WorkMeter::new(), max_live: 0, aborted_at: None }
    }

    /// Symbols consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn meter(&self) -> &WorkMeter {
        &self.meter
    }

    pub fn max_live_state(&self) -> usize {
        self.max_live
    }

    pub fn aborted_at(&self) -> Option<usize> {
        self.aborted_at
    }

    /// Live tuples: encoder runs, engine state, retained diffs, pending change points and rings.
    pub fn live_state(&self) -> usize {
        match &self.phase {
            Phase::Setup(enc) => enc.runs(),
            Phase::Output(grid) => {
                let engines: usize = grid.instances.iter().map(|i| i.engine.live_state() + 2).sum();
                let pending: usize = grid.pending.iter().map(BTreeSet::len).sum();
                engines + pending + 4 * self.plan.period
            }
            Phase::Aborted => 0,
        }
    }

    /// Consumes the next block symbol; returns the output for that local end position, if any.
    pub fn push(&mut self, c: Symbol) -> Result<Option<AlignmentOutput>> {
        let m = self.plan.pattern.len();
        let i = self.pos;
        if i >= 2 * m {
            return Err(KmError::protocol(format!("block of length {} is full", 2 * m)));
        }
        self.pos += 1;
        let out = match &mut self.phase {
            Phase::Setup(enc) => {
                enc.push(c);
                if i + 1 < m {
                    None
                } else {
                    let grid = self.handover()?;
                    self.phase = Phase::Output(Box::new(grid));
                    Some(self.emit(i))
                }
            }
            Phase::Output(_) => {
                self.output_step(i, c)?;
                match self.phase {
                    Phase::Aborted => Some(AlignmentOutput::new(i, Verdict::No)),
                    _ => Some(self.emit(i)),
                }
            }
            Phase::Aborted => Some(AlignmentOutput::new(i, Verdict::No)),
        };
        self.max_live = self.max_live.max(self.live_state());
        Ok(out)
    }

    fn handover(&mut self) -> Result<Grid> {
        let plan = Arc::clone(&self.plan);
        let ell = plan.period;
        let m = plan.pattern.len();
        let Phase::Setup(enc) = &self.phase else { unreachable!("handover outside setup") };
        let window = enc.window().clone();
        let mut grid = Grid {
            instances: Vec::with_capacity(ell * ell),
            pending: vec![BTreeSet::new(); ell],
            last_symbol: (0..ell).map(|s| window.last_symbol(s)).collect(),
            total_runs: window.total_runs(),
            ham_ring: vec![0; ell],
            step_ring: vec![0; ell],
            change_ring: vec![0; ell],
        };
        for r in 0..ell {
            for _s in 0..ell {
                grid.instances.push(Instance {
                    engine: RleEngine::from_runs(&plan.sub_runs[r])?,
                    prev: None,
                    last: None,
                    sub_len: plan.sub_len[r],
                });
            }
        }
        for s in 0..ell {
            if s >= m {
                continue;
            }
            let latest = (m - 1 - s) / ell;
            for r in 0..ell {
                for t in window.list(s) {
                    let out = grid.instances[r * ell + s].engine.new_run(t.pos / ell, t.symbol)?;
                    self.meter.bump(Counter::NewRun, 1);
                    record(&plan, &mut grid, r, s, out);
                }
                while let Some(star) = grid.instances[r * ell + s].last.and_then(|d| d.next_change) {
                    if star > latest {
                        break;
                    }
                    let out = grid.instances[r * ell + s].engine.diff(star)?;
                    self.meter.bump(Counter::Diff, 1);
                    record(&plan, &mut grid, r, s, out);
                }
            }
        }
        Ok(grid)
    }

    fn output_step(&mut self, i: usize, c: Symbol) -> Result<()> {
        let plan = Arc::clone(&self.plan);
        let ell = plan.period;
        let Phase::Output(grid) = &mut self.phase else { unreachable!("output step outside output phase") };
        let s = i % ell;
        let t = i / ell;
        if grid.last_symbol[s] != Some(c) {
            grid.last_symbol[s] = Some(c);
            grid.total_runs += 1;
            for r in 0..ell {
                let out = grid.instances[r * ell + s].engine.new_run(t, c)?;
                self.meter.bump(Counter::NewRun, 1);
                record(&plan, grid, r, s, out);
            }
        }
        while let Some(&(star, r)) = grid.pending[s].first() {
            debug_assert!(star >= t, "change point {star} missed at substream position {t}");
            if star != t {
                break;
            }
            let out = grid.instances[r * ell + s].engine.diff(t)?;
            self.meter.bump(Counter::Diff, 1);
            record(&plan, grid, r, s, out);
        }
        if grid.total_runs > plan.caps.total {
            self.phase = Phase::Aborted;
            self.aborted_at = Some(i);
        }
        Ok(())
    }

    fn emit(&mut self, i: usize) -> AlignmentOutput {
        let plan = &self.plan;
        let Phase::Output(grid) = &mut self.phase else { unreachable!("emit outside output phase") };
        let m = plan.pattern.len();
        let ell = plan.period;
        let slot = i % ell;
        let change = std::mem::take(&mut grid.change_ring[slot]);
        let (ham, step) = if i < m + ell - 1 {
            direct(plan, grid, i)
        } else {
            let step = grid.step_ring[slot] + change;
            let ham = grid.ham_ring[slot] + step;
            debug_assert_eq!((ham, step), direct(plan, grid, i), "incremental sum diverged at {i}");
            (ham, step)
        };
        grid.ham_ring[slot] = ham;
        grid.step_ring[slot] = step;
        AlignmentOutput::thresholded(i, ham as usize, plan.k)
    }
}

/// `Ham[i]` and `Ham[i] - Ham[i - ℓ]` summed directly over the pattern residues.
fn direct(plan: &SmallPeriodPlan, grid: &Grid, i: usize) -> (i64, i64) {
    let m = plan.pattern.len();
    let ell = plan.period;
    let mut ham = 0;
    let mut step = 0;
    for r in 0..ell {
        let a = i + 1 + r - m;
        let s = a % ell;
        let q = a / ell + plan.sub_len[r] - 1;
        let inst = &grid.instances[r * ell + s];
        ham += inst.ham_at(q);
        step += inst.delta_at(q);
    }
    (ham, step)
}

/// Stores a diff output for instance `(r, s)` and schedules the change in `Δ` it reveals.
fn record(plan: &SmallPeriodPlan, grid: &mut Grid, r: usize, s: usize, out: DiffOutput) {
    let ell = plan.period;
    let m = plan.pattern.len();
    let inst = &mut grid.instances[r * ell + s];
    let old_delta = inst.last.map_or(0, |d| d.delta);
    if let Some(star) = inst.last.and_then(|d| d.next_change) {
        grid.pending[s].remove(&(star, r));
    }
    inst.prev = inst.last;
    inst.last = Some(out);
    if let Some(star) = out.next_change {
        grid.pending[s].insert((star, r));
    }
    if out.delta != old_delta {
        // the alignment whose residue-r term reads this engine at position out.pos
        let target = ell * out.pos + s + plan.rho[r];
        if target >= m + ell - 1 {
            grid.change_ring[target % ell] += out.delta - old_delta;
        }
    }
}

/// Outputs of one block for local end positions `m - 1 ..= |block| - 1`.
#[derive(Debug, Clone)]
pub struct BlockResult {
    pub outputs: Vec<AlignmentOutput>,
    pub aborted: bool,
    pub meter: WorkMeter,
    pub max_live_state: usize,
}

pub fn run_block(plan: &Arc<SmallPeriodPlan>, block: &[Symbol]) -> Result<BlockResult> {
    let m = plan.pattern.len();
    if block.len() < m || block.len() > 2 * m {
        return Err(KmError::input(format!("block length {} outside [{m}, {}]", block.len(), 2 * m)));
    }
    let mut runner = BlockRunner::new(Arc::clone(plan));
    let mut outputs = Vec::with_capacity(block.len() + 1 - m);
    for &c in block {
        if let Some(o) = runner.push(c)? {
            outputs.push(o);
        }
    }
    Ok(BlockResult {
        outputs,
        aborted: runner.aborted_at().is_some(),
        meter: runner.meter().clone(),
        max_live_state: runner.max_live_state(),
    })
}

/// Aggregate instrumentation over a whole text.
#[derive(Debug, Clone, Default)]
pub struct SmallPeriodStats {
    pub blocks: usize,
    pub aborted_blocks: usize,
    pub max_block_ops: u64,
    pub max_live_state: usize,
    pub meter: WorkMeter,
}

impl SmallPeriodStats {
    pub fn absorb(&mut self, meter: &WorkMeter, aborted: bool, max_live: usize) {
        self.blocks += 1;
        self.aborted_blocks += usize::from(aborted);
        let ops = meter.get(Counter::NewRun) + meter.get(Counter::Diff);
        self.max_block_ops = self.max_block_ops.max(ops);
        self.max_live_state = self.max_live_state.max(max_live);
        self.meter.merge(meter);
    }
}

/// Runs every block of `text`; block `b` answers global ends `b·m + m - 1 ..= b·m + 2m - 2`.
pub fn run_text(plan: &Arc<SmallPeriodPlan>, text: &[Symbol]) -> Result<(Vec<AlignmentOutput>, SmallPeriodStats)> {
    let m = plan.pattern.len();
    if m > text.len() {
        return Err(KmError::input(format!("pattern length {m} exceeds text length {}", text.len())));
    }
    let mut outputs = Vec::with_capacity(text.len() + 1 - m);
    let mut stats = SmallPeriodStats::default();
    let mut start = 0;
    while start + m <= text.len() {
        let end = (start + 2 * m).min(text.len());
        let result = run_block(plan, &text[start..end])?;
        stats.absorb(&result.meter, result.aborted, result.max_live_state);
        outputs.extend(
            result
                .outputs
                .into_iter()
                .filter(|o| o.end <= 2 * m - 2)
                .map(|o| AlignmentOutput::new(o.end + start, o.verdict)),
        );
        start += m;
    }
    Ok((outputs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::kmismatch_oracle;
    use crate::rle_ham::rle_encode;

    fn s(text: &str) -> Vec<Symbol> {
        text.bytes().map(Symbol::from).collect()
    }

    fn plan(p: &[Symbol], k: usize) -> Arc<SmallPeriodPlan> {
        Arc::new(SmallPeriodPlan::new(p, k).unwrap())
    }

    /// Longest suffix with at most `cap` ℓ-runs, recomputed from scratch.
    fn maximal_suffix_start(text: &[Symbol], period: usize, cap: usize) -> usize {
        (0..=text.len())
            .find(|&start| {
                let runs: usize = (0..period)
                    .map(|res| {
                        let sub: Vec<Symbol> = (start..text.len()).filter(|j| j % period == res).map(|j| text[j]).collect();
                        rle_encode(&sub).len()
                    })
                    .sum();
                runs <= cap
            })
            .unwrap()
    }

    #[test]
    fn encoder_constant_text() {
        let mut enc = SuffixEncoder::new(2, 5);
        for _ in 0..20 {
            enc.push(7);
        }
        assert_eq!(enc.start(), 0);
        assert_eq!(enc.runs(), 2);
    }

    #[test]
    fn encoder_alternating_text() {
        let mut enc = SuffixEncoder::new(1, 5);
        for j in 0..40u32 {
            enc.push(j % 7);
            assert!(enc.runs() <= 5);
        }
        assert_eq!(enc.window().len(), 5);
    }

    #[test]
    fn encoder_matches_recomputation() {
        let text = s("aabbbabababccccaaabxyxyxyxyzzzzabab");
        for period in 1..4 {
            for cap in [period, period + 2, 3 * period + 1] {
                let mut enc = SuffixEncoder::new(period, cap);
                for j in 0..text.len() {
                    enc.push(text[j]);
                    assert_eq!(enc.start(), maximal_suffix_start(&text[..=j], period, cap));
                }
            }
        }
    }

    #[test]
    fn rejects_large_period() {
        assert!(matches!(SmallPeriodPlan::new(&s("abcdefgh"), 1), Err(KmError::Config(_))));
    }

    #[test]
    fn constant_pattern_constant_text() {
        let p = vec![4; 12];
        let result = run_block(&plan(&p, 1), &[4; 24]).unwrap();
        assert!(result.outputs.iter().all(|o| o.verdict == Verdict::Exact(0)));
        assert_eq!(result.outputs.len(), 13);
    }

    #[test]
    fn worked_example_pattern_against_itself() {
        let p = s("aabaabaabaabaabaabaac");
        let pl = plan(&p, 3);
        assert_eq!(pl.period(), 3);
        let mut block = p.clone();
        block.extend_from_slice(&p);
        let result = run_block(&pl, &block).unwrap();
        assert_eq!(result.outputs[0].verdict, Verdict::Exact(0));
        assert_eq!(result.outputs, kmismatch_oracle(&p, &block, 3).unwrap()[..]);
    }

    #[test]
    fn k_plus_one_substitutions_give_no() {
        let base = s("abcabcabcabcabcabcabcabcabcabc");
        let k = 3;
        let mut text = vec![9; 30];
        let mut window = base.clone();
        for j in [2, 9, 17, 25] {
            window[j] = 8;
        }
        text.extend_from_slice(&window);
        let result = run_block(&plan(&base, k), &text).unwrap();
        let last = result.outputs.last().unwrap();
        assert_eq!(last.end, 59);
        assert_eq!(last.verdict, Verdict::No);
        assert_eq!(result.outputs, kmismatch_oracle(&base, &text, k).unwrap()[..]);
    }

    /// `ℓ = 1`, a pattern of `a`s with `3k/2` isolated `b`s, and a matching window at end `2m - 2`
    /// whose left part carries many runs.
    fn dense_valid_window(k: usize) -> (Vec<Symbol>, Vec<Symbol>) {
        let m = 40 * k;
        let mut p = vec![0; m];
        for j in 0..(3 * k / 2) {
            p[3 + 4 * j] = 1;
        }
        let mut window = p.clone();
        for j in 0..k {
            window[m - 4 - 4 * j] = 2;
        }
        let mut text: Vec<Symbol> = (0..m - 1).map(|j| 3 + (j % 2) as Symbol).collect();
        text.extend_from_slice(&window);
        (p, text)
    }

    #[test]
    fn fixed_multiple_caps_lose_valid_windows() {
        let k = 4;
        let (p, text) = dense_valid_window(k);
        let expected = kmismatch_oracle(&p, &text, k).unwrap();
        assert_eq!(expected.last().unwrap().verdict, Verdict::Exact(k));
        let m = p.len();
        let tight = plan(&p, k);
        assert_eq!(tight.period(), 1);
        assert_eq!(run_block(&tight, &text).unwrap().outputs, expected);

        let fixed = Arc::new(SmallPeriodPlan::new(&p, k).unwrap().with_caps(RunCaps::fixed_multiples(k)));
        let outputs = run_block(&fixed, &text).unwrap().outputs;
        assert_eq!(outputs.len(), m);
        assert_eq!(outputs.last().unwrap().verdict, Verdict::No);
    }

    #[test]
    fn far_text_is_all_no() {
        let p = s("abababababababab");
        let t = s("ccddccddccddccddccddccddccddccdd");
        let result = run_block(&plan(&p, 2), &t).unwrap();
        assert!(result.outputs.iter().all(|o| o.verdict == Verdict::No));
    }

    #[test]
    fn stitched_text_matches_oracle() {
        let p = s("xyzxyzxyzxyzxyzxyzxqz");
        let mut t = Vec::new();
        for rep in 0..12 {
            t.extend_from_slice(&p);
            t.push(b'x' as Symbol + (rep % 3) as Symbol);
        }
        let pl = plan(&p, 3);
        let (outputs, stats) = run_text(&pl, &t).unwrap();
        assert_eq!(outputs, kmismatch_oracle(&p, &t, 3).unwrap());
        assert!(stats.blocks > 10);
    }

    fn small_period_instance(
        base: Vec<Symbol>,
        m: usize,
        k: usize,
        edits: Vec<(usize, Symbol)>,
        pieces: Vec<(bool, Vec<(usize, Symbol)>, usize)>,
    ) -> (Vec<Symbol>, Vec<Symbol>) {
        let base = &base[..base.len().min(k)];
        let mut p: Vec<Symbol> = (0..m).map(|j| base[j % base.len()]).collect();
        for (j, c) in edits.into_iter().take(k) {
            p[j % m] = c;
        }
        let mut t = Vec::new();
        for (copy, noise, junk) in pieces {
            if copy {
                let mut w = p.clone();
                for (j, c) in noise {
                    w[j % m] = c;
                }
                t.extend_from_slice(&w);
            }
            t.extend((0..junk).map(|j| (j % 3) as Symbol));
        }
        while t.len() < m {
            t.push(0);
        }
        (p, t)
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]
        #[test]
        fn blocks_match_oracle(
            k in 1usize..6,
            base in proptest::collection::vec(0u32..3, 1..6),
            m in 8usize..48,
            edits in proptest::collection::vec((0usize..64, 0u32..4), 0..6),
            pieces in proptest::collection::vec((proptest::bool::ANY, proptest::collection::vec((0usize..64, 0u32..4), 0..8), 0usize..9), 1..6),
        ) {
            let (p, t) = small_period_instance(base, m, k, edits, pieces);
            let pl = plan(&p, k);
            let (outputs, stats) = run_text(&pl, &t).unwrap();
            proptest::prop_assert_eq!(outputs, kmismatch_oracle(&p, &t, k).unwrap());
            proptest::prop_assert!(stats.max_block_ops as usize <= 40 * k * k + 8);
        }
    }
}
