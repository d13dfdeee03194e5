//! Exact match counts for every alignment by per-symbol correlation.
//!
//! Symbols that occur rarely are handled by pairing their occurrences
//! directly; frequent ones by an FFT cross-correlation of indicator vectors.

use crate::meter::{Counter, WorkMeter};
use crate::oracle::Symbol;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::collections::HashMap;

/// `ham(P, T[s .. s + m])` for every start `s` in `0 ..= n - m`; empty if `m > n` or `m = 0`.
pub fn exact_distances(pattern: &[Symbol], text: &[Symbol], meter: &mut WorkMeter) -> Vec<usize> {
    let (m, n) = (pattern.len(), text.len());
    if m == 0 || m > n {
        return Vec::new();
    }
    let starts = n - m + 1;
    let mut in_pattern: HashMap<Symbol, Vec<usize>> = HashMap::new();
    for (j, &c) in pattern.iter().enumerate() {
        in_pattern.entry(c).or_default().push(j);
    }
    let mut in_text: HashMap<Symbol, Vec<usize>> = HashMap::new();
    for (t, &c) in text.iter().enumerate() {
        if in_pattern.contains_key(&c) {
            in_text.entry(c).or_default().push(t);
        }
    }
    let size = (n + m).next_power_of_two();
    let pair_limit = (size * (size.trailing_zeros() as usize + 1)) as u64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut matches = vec![0usize; starts];
    let mut symbols: Vec<Symbol> = in_text.keys().copied().collect();
    symbols.sort_unstable();
    for c in symbols {
        let (ps, ts) = (&in_pattern[&c], &in_text[&c]);
        let pairs = (ps.len() * ts.len()) as u64;
        if pairs <= pair_limit {
            meter.bump(Counter::MatcherStep, pairs);
            for &j in ps {
                for &t in ts {
                    if t >= j && t - j < starts {
                        matches[t - j] += 1;
                    }
                }
            }
            continue;
        }
        meter.bump(Counter::MatcherStep, pair_limit);
        let mut a = vec![Complex::new(0.0, 0.0); size];
        for &j in ps {
            a[m - 1 - j].re = 1.0;
        }
        let mut b = vec![Complex::new(0.0, 0.0); size];
        for &t in ts {
            b[t].re = 1.0;
        }
        fft.process(&mut a);
        fft.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        ifft.process(&mut a);
        let scale = size as f64;
        for (s, slot) in matches.iter_mut().enumerate() {
            *slot += (a[s + m - 1].re / scale).round() as usize;
        }
    }
    matches.into_iter().map(|x| m - x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::all_distances;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        let mut meter = WorkMeter::new();
        assert_eq!(exact_distances(&[1, 2], &[1, 2, 1, 2], &mut meter), vec![0, 2, 0]);
        assert!(exact_distances(&[1, 2, 3], &[1, 2], &mut meter).is_empty());
        assert_eq!(exact_distances(&[5], &[1, 5], &mut meter), vec![1, 0]);
    }

    #[test]
    fn fft_branch_on_binary_text() {
        let p: Vec<Symbol> = (0..300).map(|j| (j * 7 % 5 == 0) as Symbol).collect();
        let t: Vec<Symbol> = (0..2000).map(|j| (j * 13 % 3 == 0) as Symbol).collect();
        assert_eq!(exact_distances(&p, &t, &mut WorkMeter::new()), all_distances(&p, &t));
    }

    proptest! {
        #[test]
        fn matches_direct_count(
            p in prop::collection::vec(0u32..4, 1..40),
            t in prop::collection::vec(0u32..4, 0..300),
        ) {
            prop_assert_eq!(exact_distances(&p, &t, &mut WorkMeter::new()), all_distances(&p, &t));
        }
    }
}
