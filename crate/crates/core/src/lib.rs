//! k-mismatch pattern matching.
//!
//! For a pattern `P` of length `m` and a text `T`, the k-mismatch problem asks
//! for the Hamming distance between `P` and every length-`m` window of `T`,
//! reporting the distance when it is at most `k` and "No" otherwise.
//!
//! The crate provides a brute-force [`oracle`], a deterministic offline
//! algorithm, a randomised online algorithm, a `(1+ε)`-approximate streaming
//! algorithm and a deamortised streaming algorithm with worst-case per-symbol
//! work. The orchestrators live in [`pipeline`]; the building blocks in the
//! remaining modules.

pub mod approx_stream;
pub mod error;
pub mod meter;
pub mod one_mismatch;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod rle_ham;
pub mod small_period;

pub use error::{KmError, Result};
pub use meter::{Counter, WorkMeter};
pub use oracle::{ham, kmismatch_oracle, x_period, AlignmentOutput, Symbol, SymbolSequence, Verdict, XPeriod};
pub use pipeline::{run, run_offline, run_online, run_streaming, RunConfig, RunReport, RunStats, Variant};
