//! Run-length-encoded Hamming distance.
//!
//! [`RleEngine`] streams the distance between a run-length-encoded pattern
//! `P'` and a text `T'` announced run by run. The mismatch matrix
//! `D[x][y] = [T'[x] != P'[y]]` splits into monochromatic rectangles along
//! text and pattern run boundaries; along diagonal `i` (the alignment ending
//! at text position `i`) the first difference `Δ[i] = Ham[i] - Ham[i-1]`
//! only changes where a diagonal crosses a rectangle corner. The engine keeps
//! those corners in a priority queue and sweeps the diagonal forward.
//!
//! The module also provides the ℓ-run-length encoding ([`ModularRle`]) and
//! its sliding-window variant ([`ModularRleWindow`]) that supports constant
//! work extension on the right and trimming on the left.

use crate::error::{KmError, Result};
use crate::meter::{Counter, WorkMeter};
use crate::oracle::Symbol;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// A run: its first index in the (sub)string and its symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub symbol: Symbol,
    pub len: usize,
}

/// Plain run-length encoding.
pub fn rle_encode(seq: &[Symbol]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (j, &c) in seq.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.symbol == c => run.len += 1,
            _ => runs.push(Run { start: j, symbol: c, len: 1 }),
        }
    }
    runs
}

pub fn rle_decode(runs: &[Run]) -> Vec<Symbol> {
    runs.iter().flat_map(|r| std::iter::repeat_n(r.symbol, r.len)).collect()
}

/// The ℓ-run-length encoding: one run list per residue class `S^r = S[r] S[r+ℓ] ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModularRle {
    period: usize,
    len: usize,
    lists: Vec<Vec<Run>>,
}

/// Encodes `seq` by residue classes modulo `period`. Run starts are indices within `S^r`.
pub fn rle_encode_mod(seq: &[Symbol], period: usize) -> Result<ModularRle> {
    if period == 0 {
        return Err(KmError::input("period must be positive"));
    }
    let lists = (0..period)
        .map(|r| {
            let sub: Vec<Symbol> = seq.iter().skip(r).step_by(period).copied().collect();
            rle_encode(&sub)
        })
        .collect();
    Ok(ModularRle { period, len: seq.len(), lists })
}

impl ModularRle {
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn list(&self, r: usize) -> &[Run] {
        &self.lists[r]
    }

    /// `(symbol, length)` pairs of residue class `r`.
    pub fn pairs(&self, r: usize) -> Vec<(Symbol, usize)> {
        self.lists[r].iter().map(|run| (run.symbol, run.len)).collect()
    }

    /// `runs_ℓ(S) = Σ_r runs(S^r)`.
    pub fn total_runs(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn decode(&self) -> Vec<Symbol> {
        let subs: Vec<Vec<Symbol>> = self.lists.iter().map(|l| rle_decode(l)).collect();
        (0..self.len).map(|j| subs[j % self.period][j / self.period]).collect()
    }
}

/// One `(position, symbol)` tuple of a [`ModularRleWindow`]; `position` is a global text index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunTuple {
    pub pos: usize,
    pub symbol: Symbol,
}

/// ℓ-run-length encoding of a sliding text window `T[first..end]`.
///
/// Lists are indexed by the global residue `pos mod ℓ` and hold the start of
/// every run of that residue class inside the window.
#[derive(Debug, Clone)]
pub struct ModularRleWindow {
    period: usize,
    first: usize,
    end: usize,
    lists: Vec<VecDeque<RunTuple>>,
    total: usize,
}

impl ModularRleWindow {
    /// An empty window starting at global position `first`.
    pub fn new(period: usize, first: usize) -> Self {
        assert!(period > 0, "period must be positive");
        ModularRleWindow { period, first, end: first, lists: vec![VecDeque::new(); period], total: 0 }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.first
    }

    pub fn total_runs(&self) -> usize {
        self.total
    }

    pub fn list(&self, residue: usize) -> &VecDeque<RunTuple> {
        &self.lists[residue]
    }

    /// Symbol of the latest window position with the given residue.
    pub fn last_symbol(&self, residue: usize) -> Option<Symbol> {
        self.lists[residue].back().map(|t| t.symbol)
    }

    /// Appends `T[end]`. Returns the number of tuples added (0 or 1).
    pub fn push_back(&mut self, c: Symbol) -> usize {
        let pos = self.end;
        let list = &mut self.lists[pos % self.period];
        self.end += 1;
        match list.back() {
            Some(t) if t.symbol == c => 0,
            _ => {
                list.push_back(RunTuple { pos, symbol: c });
                self.total += 1;
                1
            }
        }
    }

    /// Drops `T[first]`. Returns the number of tuples removed (0 or 1).
    pub fn pop_front(&mut self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let pos = self.first;
        let next = pos + self.period;
        let list = &mut self.lists[pos % self.period];
        self.first += 1;
        let front = *list.front().expect("window position without a run tuple");
        debug_assert_eq!(front.pos, pos);
        let run_is_single = next >= self.end || list.get(1).is_some_and(|t| t.pos == next);
        if run_is_single {
            list.pop_front();
            self.total -= 1;
            1
        } else {
            list[0] = RunTuple { pos: next, symbol: front.symbol };
            0
        }
    }

    pub fn decode(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.len());
        let mut cursors = vec![0usize; self.period];
        for pos in self.first..self.end {
            let r = pos % self.period;
            let list = &self.lists[r];
            if cursors[r] + 1 < list.len() && list[cursors[r] + 1].pos <= pos {
                cursors[r] += 1;
            }
            out.push(list[cursors[r]].symbol);
        }
        out
    }
}

/// Output of a `Diff` operation at text position `pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOutput {
    pub pos: usize,
    /// `Ham[pos] - Ham[pos - 1]`.
    pub delta: i64,
    /// Smallest diagonal `> pos` with a pending corner; `Δ` is constant on `[pos, next_change)`.
    pub next_change: Option<usize>,
    pub ham: usize,
}

impl DiffOutput {
    /// Extrapolates `Ham[x]` for `x` in `[pos, next_change)`.
    pub fn ham_at(&self, x: usize) -> usize {
        debug_assert!(x >= self.pos && self.next_change.is_none_or(|c| x < c));
        (self.ham as i64 + self.delta * (x as i64 - self.pos as i64)) as usize
    }
}

#[derive(Debug, Clone, Copy)]
struct Boundary {
    x: i64,
    before: Option<Symbol>,
    after: Symbol,
}

#[derive(Debug, Clone, Copy)]
struct PatternRun {
    symbol: Symbol,
}

/// Streaming Hamming distance between a fixed run-length-encoded pattern and
/// a text supplied one run at a time.
///
/// Text positions before the first `NewRun` act as a symbol that mismatches
/// everything, so values at alignments reaching back before the first run
/// overcount: they are exact for the known part plus one per unknown position.
#[derive(Debug, Clone)]
pub struct RleEngine {
    m: usize,
    runs: Vec<PatternRun>,
    // one horizontal division line per pattern run start, plus the bottom edge at y = m
    rows: Vec<usize>,
    boundaries: VecDeque<Boundary>,
    base_index: usize,
    cursor: Vec<usize>,
    queued: Vec<bool>,
    heap: BinaryHeap<Reverse<(i64, usize, i64)>>,
    cur: Option<i64>,
    ham: i64,
    slope: i64,
    last_symbol: Option<Symbol>,
    last_new_run: Option<i64>,
    last_next_change: Option<i64>,
    max_queue: usize,
    corners_inserted: u64,
    meter: WorkMeter,
}

impl RleEngine {
    pub fn new(pattern: &[Symbol]) -> Result<Self> {
        Self::from_runs(&rle_encode(pattern))
    }

    pub fn from_runs(runs: &[Run]) -> Result<Self> {
        if runs.is_empty() {
            return Err(KmError::input("engine pattern must be non-empty"));
        }
        let m: usize = runs.iter().map(|r| r.len).sum();
        let mut rows: Vec<usize> = runs.iter().map(|r| r.start).collect();
        rows.push(m);
        let n_rows = rows.len();
        Ok(RleEngine {
            m,
            runs: runs.iter().map(|r| PatternRun { symbol: r.symbol }).collect(),
            rows,
            boundaries: VecDeque::new(),
            base_index: 0,
            cursor: vec![0; n_rows],
            queued: vec![false; n_rows],
            heap: BinaryHeap::new(),
            cur: None,
            ham: 0,
            slope: 0,
            last_symbol: None,
            last_new_run: None,
            last_next_change: None,
            max_queue: 0,
            corners_inserted: 0,
            meter: WorkMeter::new(),
        })
    }

    pub fn pattern_len(&self) -> usize {
        self.m
    }

    pub fn pattern_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn queue_len(&self) -> usize {
        self.heap.len()
    }

    pub fn max_queue_len(&self) -> usize {
        self.max_queue
    }

    pub fn corners_inserted(&self) -> u64 {
        self.corners_inserted
    }

    pub fn meter(&self) -> &WorkMeter {
        &self.meter
    }

    /// Live tuples: pattern runs, division lines, queued corners, buffered text boundaries.
    pub fn live_state(&self) -> usize {
        self.runs.len() + self.rows.len() + self.heap.len() + self.boundaries.len()
    }

    /// Announces that a run of `symbol` starts at text position `pos`, then performs `Diff(pos)`.
    pub fn new_run(&mut self, pos: usize, symbol: Symbol) -> Result<DiffOutput> {
        let x = pos as i64;
        if let Some(cur) = self.cur {
            if x <= cur {
                return Err(KmError::protocol(format!("NewRun at {pos} does not advance past {cur}")));
            }
        }
        if self.last_symbol == Some(symbol) {
            return Err(KmError::protocol(format!("NewRun at {pos} repeats the previous run symbol")));
        }
        self.init_at(x);
        self.boundaries.push_back(Boundary { x, before: self.last_symbol, after: symbol });
        self.last_symbol = Some(symbol);
        self.last_new_run = Some(x);
        let newest = self.base_index + self.boundaries.len() - 1;
        for row in 0..self.rows.len() {
            if !self.queued[row] && self.cursor[row] <= newest {
                self.schedule(row);
            }
        }
        self.drop_passed_boundaries();
        self.meter.bump(Counter::NewRun, 1);
        Ok(self.emit(x))
    }

    /// Reports `Δ[pos]`, the next change point, and `Ham[pos]`.
    pub fn diff(&mut self, pos: usize) -> Result<DiffOutput> {
        let x = pos as i64;
        if let Some(cur) = self.cur {
            if x < cur {
                return Err(KmError::protocol(format!("Diff at {pos} moves back from {cur}")));
            }
            if self.last_new_run == Some(x) {
                return Err(KmError::protocol(format!("Diff at {pos} duplicates the NewRun at the same position")));
            }
        }
        if let Some(limit) = self.last_next_change {
            if x > limit {
                return Err(KmError::protocol(format!("Diff at {pos} skips the change point {limit}")));
            }
        }
        self.init_at(x);
        Ok(self.emit(x))
    }

    fn init_at(&mut self, x: i64) {
        if self.cur.is_none() {
            self.cur = Some(x - 1);
            self.ham = self.m as i64;
            self.slope = 0;
        }
    }

    fn emit(&mut self, x: i64) -> DiffOutput {
        self.advance(x);
        self.meter.bump(Counter::Diff, 1);
        let next = self.heap.peek().map(|Reverse((d, _, _))| *d);
        self.last_next_change = next;
        DiffOutput {
            pos: x as usize,
            delta: self.slope,
            next_change: next.map(|d| d as usize),
            ham: self.ham as usize,
        }
    }

    fn advance(&mut self, target: i64) {
        let mut cur = self.cur.expect("engine initialised");
        while let Some(&Reverse((diag, _, _))) = self.heap.peek() {
            if diag > target {
                break;
            }
            self.ham += self.slope * (diag - 1 - cur);
            while let Some(&Reverse((d, row, w))) = self.heap.peek() {
                if d != diag {
                    break;
                }
                self.heap.pop();
                self.slope += w;
                self.queued[row] = false;
                self.cursor[row] += 1;
                self.schedule(row);
            }
            self.ham += self.slope;
            cur = diag;
        }
        self.ham += self.slope * (target - cur);
        self.cur = Some(target);
    }

    /// Mismatch indicator of text symbol `c` (None = unknown) against pattern run `run`.
    #[inline]
    fn mismatch(c: Option<Symbol>, run: &PatternRun) -> i64 {
        i64::from(c != Some(run.symbol))
    }

    fn weight(&self, row: usize, b: &Boundary) -> i64 {
        let change = |run: &PatternRun| Self::mismatch(Some(b.after), run) - Self::mismatch(b.before, run);
        let above = if row > 0 { change(&self.runs[row - 1]) } else { 0 };
        let below = if row < self.runs.len() { change(&self.runs[row]) } else { 0 };
        above - below
    }

    /// Queues the next non-zero corner on division line `row`.
    fn schedule(&mut self, row: usize) {
        let end = self.base_index + self.boundaries.len();
        while self.cursor[row] < end {
            let b = self.boundaries[self.cursor[row] - self.base_index];
            let w = self.weight(row, &b);
            if w != 0 {
                let diag = b.x - self.rows[row] as i64 + self.m as i64;
                self.heap.push(Reverse((diag, row, w)));
                self.queued[row] = true;
                self.corners_inserted += 1;
                self.meter.bump(Counter::CornerInsert, 1);
                self.max_queue = self.max_queue.max(self.heap.len());
                return;
            }
            self.cursor[row] += 1;
        }
    }

    fn drop_passed_boundaries(&mut self) {
        let min_cursor = self.cursor.iter().copied().min().unwrap_or(0);
        // the newest boundary carries the previous run symbol for the next boundary
        while self.base_index < min_cursor && self.boundaries.len() > 1 {
            self.boundaries.pop_front();
            self.base_index += 1;
        }
    }
}
