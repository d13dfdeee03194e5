//! Command-line front end: read a pattern and a text, run one variant, print
//! one `<end>\t<verdict>` line per alignment.

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use kmismatch::one_mismatch::VerifierMode;
use kmismatch::pipeline::{self, disagreements, RunConfig, RunStats, Variant, DEFAULT_BUDGET_FACTOR};
use kmismatch::{AlignmentOutput, Symbol, SymbolSequence};
use std::cell::RefCell;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Oracle,
    Offline,
    Online,
    Approx,
    Streaming,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Oracle => Variant::Oracle,
            VariantArg::Offline => Variant::Offline,
            VariantArg::Online => Variant::Online,
            VariantArg::Approx => Variant::Approx,
            VariantArg::Streaming => Variant::Streaming,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifierArg {
    Auto,
    Sketch,
    Window,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "hamstream", version, about = "k-mismatch pattern matching over files and streams")]
pub struct Args {
    #[arg(long, value_enum)]
    pub variant: VariantArg,

    /// Pattern file.
    #[arg(long)]
    pub pattern: PathBuf,

    /// Text file, or `-` for standard input.
    #[arg(long)]
    pub text: String,

    #[arg(long)]
    pub k: usize,

    /// Approximation parameter for `approx`, as a decimal or a fraction like `1/4`.
    #[arg(long, default_value = "1/2", value_parser = parse_rational)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write run statistics as JSON to this file.
    #[arg(long)]
    pub stats: Option<PathBuf>,

    /// Compare every output against the brute-force oracle and report disagreements.
    #[arg(long)]
    pub self_check: bool,

    /// Read whitespace-separated integer symbols instead of raw bytes.
    #[arg(long)]
    pub tokens: bool,

    /// Streaming head allowance per symbol, in units of ⌈log₂ m⌉³ work steps.
    #[arg(long, default_value_t = DEFAULT_BUDGET_FACTOR)]
    pub budget_factor: u64,

    #[arg(long, value_enum, default_value_t = VerifierArg::Auto)]
    pub verifier: VerifierArg,
}

pub fn parse_rational(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            num / den
        }
        None => s.trim().parse().map_err(|e| format!("bad number {s:?}: {e}"))?,
    };
    Ok(value)
}

impl Args {
    pub fn config(&self) -> RunConfig {
        let mut config = RunConfig::new(self.variant.into(), self.k).with_seed(self.seed).with_epsilon(self.epsilon);
        config.budget_factor = self.budget_factor;
        config.verifier_mode = match self.verifier {
            VerifierArg::Auto => VerifierMode::Auto,
            VerifierArg::Sketch => VerifierMode::ForceSketch,
            VerifierArg::Window => VerifierMode::ForceWindow,
        };
        config
    }
}

/// What a run produced besides its output lines.
#[derive(Debug, Clone)]
pub struct Summary {
    pub stats: RunStats,
    /// `Some(count)` when `--self-check` was given.
    pub disagreements: Option<usize>,
}

/// Pulls symbols from a reader one at a time, remembering the first error.
struct SymbolSource<R> {
    reader: R,
    tokens: bool,
    error: Option<anyhow::Error>,
    offset: usize,
}

impl<R: BufRead> SymbolSource<R> {
    fn new(reader: R, tokens: bool) -> Self {
        SymbolSource { reader, tokens, error: None, offset: 0 }
    }

    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        let buf = self.reader.fill_buf()?;
        let Some(&b) = buf.first() else { return Ok(None) };
        self.reader.consume(1);
        self.offset += 1;
        Ok(Some(b))
    }

    fn next_symbol(&mut self) -> Result<Option<Symbol>> {
        if !self.tokens {
            return Ok(self.next_byte()?.map(Symbol::from));
        }
        let mut token = String::new();
        loop {
            match self.next_byte()? {
                None => break,
                Some(b) if b.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        break;
                    }
                }
                Some(b) => token.push(b as char),
            }
        }
        if token.is_empty() {
            return Ok(None);
        }
        let value = token
            .parse::<Symbol>()
            .with_context(|| format!("bad symbol token {token:?} ending at byte {}", self.offset))?;
        Ok(Some(value))
    }
}

impl<R: BufRead> Iterator for SymbolSource<R> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        if self.error.is_some() {
            return None;
        }
        match self.next_symbol() {
            Ok(s) => s,
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}

pub fn read_symbols(bytes: &[u8], tokens: bool) -> Result<Vec<Symbol>> {
    if tokens {
        let text = std::str::from_utf8(bytes).context("token input is not UTF-8")?;
        Ok(SymbolSequence::from_tokens(text)?.into_inner())
    } else {
        Ok(SymbolSequence::from_bytes(bytes).into_inner())
    }
}

fn write_line(out: &mut impl Write, o: &AlignmentOutput) -> io::Result<()> {
    writeln!(out, "{o}")
}

/// Runs one invocation. Outputs go to `out`; `stdin` backs `--text -`.
pub fn cli_run(args: &Args, stdin: impl Read, out: impl Write) -> Result<Summary> {
    let config = args.config();
    config.validate()?;
    let pattern_bytes =
        std::fs::read(&args.pattern).with_context(|| format!("reading pattern {}", args.pattern.display()))?;
    let pattern = read_symbols(&pattern_bytes, args.tokens).context("parsing pattern")?;
    if pattern.is_empty() {
        bail!("pattern {} is empty", args.pattern.display());
    }
    let reader: Box<dyn BufRead> = if args.text == "-" {
        Box::new(BufReader::new(stdin))
    } else {
        Box::new(BufReader::new(File::open(&args.text).with_context(|| format!("opening text {}", args.text))?))
    };
    let mut out = BufWriter::new(out);

    let (outputs, text, stats) = match config.variant {
        Variant::Online | Variant::Streaming => {
            // answer each symbol before reading the next
            let recorded = RefCell::new(Vec::new());
            let mut source = SymbolSource::new(reader, args.tokens);
            let keep = args.self_check;
            let symbols = std::iter::from_fn(|| {
                let c = source.next()?;
                if keep {
                    recorded.borrow_mut().push(c);
                }
                Some(c)
            });
            let mut outputs = Vec::new();
            let mut io_error = None;
            let sink = |o: AlignmentOutput| {
                if io_error.is_none() {
                    io_error = write_line(&mut out, &o).err();
                }
                if keep {
                    outputs.push(o);
                }
            };
            let stats = if config.variant == Variant::Online {
                pipeline::run_online_with(&config, &pattern, symbols, sink)
            } else {
                pipeline::run_streaming_with(&config, &pattern, symbols, sink)
            };
            if let Some(e) = source.error.take() {
                return Err(e.context("parsing text"));
            }
            if let Some(e) = io_error {
                return Err(e).context("writing output");
            }
            let stats = stats?;
            if stats.text_len < pattern.len() {
                bail!("pattern length {} exceeds text length {}", pattern.len(), stats.text_len);
            }
            (outputs, recorded.into_inner(), stats)
        }
        _ => {
            let mut bytes = Vec::new();
            let mut reader = reader;
            reader.read_to_end(&mut bytes).context("reading text")?;
            let text = read_symbols(&bytes, args.tokens).context("parsing text")?;
            let report = pipeline::run(&config, &pattern, &text)?;
            for o in &report.outputs {
                write_line(&mut out, o).context("writing output")?;
            }
            (report.outputs, text, report.stats)
        }
    };
    out.flush().context("writing output")?;

    let disagreement_count = if args.self_check {
        let bad = disagreements(&outputs, &pattern, &text, args.k, config.epsilon)?;
        for (got, want) in bad.iter().take(20) {
            eprintln!("self-check: end {}: got {}, oracle {}", got.end, got.verdict, want.verdict);
        }
        eprintln!("self-check: {} of {} alignments disagree with the oracle", bad.len(), outputs.len());
        Some(bad.len())
    } else {
        None
    };

    if let Some(path) = &args.stats {
        let json = serde_json::to_string_pretty(&stats)?;
        std::fs::write(path, json + "\n").with_context(|| format!("writing stats {}", path.display()))?;
    }
    Ok(Summary { stats, disagreements: disagreement_count })
}
