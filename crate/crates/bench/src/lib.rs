//! Input generators and drivers shared by the benchmarks.

use kmismatch::rle_ham::{DiffOutput, RleEngine};
use kmismatch::Symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A pattern, a text and a mismatch threshold.
#[derive(Debug, Clone)]
pub struct Workload {
    pub pattern: Vec<Symbol>,
    pub text: Vec<Symbol>,
    pub k: usize,
}

fn random_symbols(rng: &mut ChaCha8Rng, len: usize, sigma: Symbol) -> Vec<Symbol> {
    (0..len).map(|_| rng.gen_range(0..sigma)).collect()
}

/// Plants noisy copies of the pattern every `m` positions or so, with up to `2k` flips each.
fn plant(rng: &mut ChaCha8Rng, pattern: &[Symbol], text: &mut [Symbol], k: usize, sigma: Symbol) {
    let m = pattern.len();
    let mut at = rng.gen_range(0..m);
    while at + m <= text.len() {
        text[at..at + m].copy_from_slice(pattern);
        for _ in 0..rng.gen_range(0..=2 * k) {
            text[at + rng.gen_range(0..m)] = rng.gen_range(0..sigma);
        }
        at += m + rng.gen_range(0..m);
    }
}

/// Random pattern over `sigma` symbols; its period is essentially `m`.
pub fn aperiodic(seed: u64, m: usize, n: usize, k: usize, sigma: Symbol) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = random_symbols(&mut rng, m, sigma);
    let mut text = random_symbols(&mut rng, n, sigma);
    plant(&mut rng, &pattern, &mut text, k, sigma);
    Workload { pattern, text, k }
}

/// Pattern with period `period` and `k` scattered flips; the text repeats the same block.
pub fn periodic(seed: u64, period: usize, m: usize, n: usize, k: usize, sigma: Symbol) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = random_symbols(&mut rng, period, sigma);
    let mut pattern: Vec<Symbol> = block.iter().cycle().take(m).copied().collect();
    for _ in 0..k {
        pattern[rng.gen_range(0..m)] = rng.gen_range(0..sigma);
    }
    let mut text: Vec<Symbol> = block.iter().cycle().take(n).copied().collect();
    for _ in 0..n / 16 {
        text[rng.gen_range(0..n)] = rng.gen_range(0..sigma);
    }
    Workload { pattern, text, k }
}

/// Text made of runs with lengths in `1..=max_run`, over a small alphabet.
pub fn runny(seed: u64, runs: usize, max_run: usize, sigma: Symbol) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut prev = None;
    for _ in 0..runs {
        let mut c = rng.gen_range(0..sigma);
        while Some(c) == prev {
            c = rng.gen_range(0..sigma);
        }
        prev = Some(c);
        out.extend(std::iter::repeat_n(c, rng.gen_range(1..=max_run)));
    }
    out
}

/// Feeds `text` to a fresh copy of `engine`, issuing `NewRun` at run starts and
/// `Diff` at every reported change point. Returns each reported `(position, distance)`.
pub fn drive_rle(engine: &RleEngine, text: &[Symbol]) -> Vec<(usize, usize)> {
    let mut engine = engine.clone();
    let mut last: Option<DiffOutput> = None;
    let mut reports = Vec::new();
    for (i, &c) in text.iter().enumerate() {
        let out = if i == 0 || text[i - 1] != c {
            engine.new_run(i, c)
        } else if last.and_then(|o| o.next_change) == Some(i) {
            engine.diff(i)
        } else {
            continue;
        };
        let out = out.expect("well-formed run stream");
        reports.push((i, out.ham));
        last = Some(out);
    }
    reports
}
