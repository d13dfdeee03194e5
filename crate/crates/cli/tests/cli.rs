use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn hamstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamstream")).args(args).output().expect("spawn hamstream")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exact_variants_match_golden_files() {
    let cases = [
        ("dna_pattern.txt", "dna_text.txt", "2", "dna_k2.expected", false),
        ("periodic_pattern.tok", "periodic_text.tok", "3", "periodic_k3.expected", true),
    ];
    for (p, t, k, expected, tokens) in cases {
        let want = std::fs::read_to_string(data(expected)).unwrap();
        for variant in ["oracle", "offline", "online", "streaming"] {
            let (p, t) = (data(p), data(t));
            let mut args = vec!["--variant", variant, "--pattern", p.to_str().unwrap(), "--text", t.to_str().unwrap(), "--k", k];
            if tokens {
                args.push("--tokens");
            }
            assert_eq!(stdout(&hamstream(&args)), want, "{variant} on {expected}");
        }
    }
}

#[test]
fn offline_k0_finds_exact_occurrences() {
    let dir = tempfile::tempdir().unwrap();
    let text = "abracadabra abracadabra cadabra";
    let (p, t) = (dir.path().join("p"), dir.path().join("t"));
    std::fs::write(&p, "cadabra").unwrap();
    std::fs::write(&t, text).unwrap();
    let out = stdout(&hamstream(&["--variant", "offline", "--pattern", p.to_str().unwrap(), "--text", t.to_str().unwrap(), "--k", "0"]));
    let hits: Vec<usize> = out
        .lines()
        .filter_map(|l| l.strip_suffix("\t0"))
        .map(|e| e.parse::<usize>().unwrap() + 1 - 7)
        .collect();
    let want: Vec<usize> = text.match_indices("cadabra").map(|(i, _)| i).collect();
    assert_eq!(hits, want);
    assert_eq!(out.lines().count(), text.len() - 6);
}

#[test]
fn self_check_reports_no_disagreements() {
    for variant in ["offline", "online", "approx", "streaming"] {
        let out = hamstream(&[
            "--variant", variant,
            "--pattern", data("dna_pattern.txt").to_str().unwrap(),
            "--text", data("dna_text.txt").to_str().unwrap(),
            "--k", "3",
            "--epsilon", "1/4",
            "--self-check",
        ]);
        stdout(&out);
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("self-check: 0 of 389 alignments disagree"), "{variant}: {err}");
    }
}

#[test]
fn streaming_reads_stdin_incrementally() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hamstream"))
        .args(["--variant", "streaming", "--pattern", data("dna_pattern.txt").to_str().unwrap(), "--text", "-", "--k", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let text = std::fs::read(data("dna_text.txt")).unwrap();
    let mut stdin = child.stdin.take().unwrap();
    for chunk in text.chunks(17) {
        stdin.write_all(chunk).unwrap();
    }
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert_eq!(stdout(&out), std::fs::read_to_string(data("dna_k2.expected")).unwrap());
}

#[test]
fn malformed_tokens_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (p, t) = (dir.path().join("p"), dir.path().join("t"));
    std::fs::write(&p, "1 2 3").unwrap();
    std::fs::write(&t, "1 2 3 4 five 6").unwrap();
    for variant in ["oracle", "online"] {
        let out = hamstream(&["--variant", variant, "--pattern", p.to_str().unwrap(), "--text", t.to_str().unwrap(), "--k", "1", "--tokens"]);
        assert_eq!(out.status.code(), Some(2), "{variant}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("five"), "{variant}");
    }
}

#[test]
fn bad_arguments_fail() {
    let p = data("dna_pattern.txt");
    let p = p.to_str().unwrap();
    let long = data("dna_text.txt");
    let long = long.to_str().unwrap();
    // pattern longer than the text
    assert_eq!(hamstream(&["--variant", "online", "--pattern", long, "--text", p, "--k", "1"]).status.code(), Some(2));
    assert_eq!(hamstream(&["--variant", "approx", "--pattern", p, "--text", long, "--k", "1", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(hamstream(&["--variant", "approx", "--pattern", p, "--text", long, "--k", "1", "--epsilon", "1/0"]).status.code(), Some(2));
    assert_eq!(hamstream(&["--variant", "streaming", "--pattern", p, "--text", long, "--k", "1", "--budget-factor", "0"]).status.code(), Some(2));
    assert!(!hamstream(&["--variant", "fast", "--pattern", p, "--text", long, "--k", "1"]).status.success());
}

#[test]
fn stats_file_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    stdout(&hamstream(&[
        "--variant", "streaming",
        "--pattern", data("periodic_pattern.tok").to_str().unwrap(),
        "--text", data("periodic_text.tok").to_str().unwrap(),
        "--k", "3",
        "--tokens",
        "--stats", stats.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(v["variant"], "streaming");
    assert_eq!(v["pattern_len"], 20);
    assert_eq!(v["text_len"], 240);
    assert_eq!(v["tail_len"], 18);
    assert_eq!(v["small_period"], true);
    assert!(v["max_lag"].as_u64().unwrap() <= 18);
    assert!(v["work"]["symbol"].as_u64().unwrap() >= 240);
}

#[test]
fn fractional_epsilon() {
    assert_eq!(hamstream::parse_rational("1/4"), Ok(0.25));
    assert_eq!(hamstream::parse_rational("0.5"), Ok(0.5));
    assert!(hamstream::parse_rational("a/2").is_err());
}
