use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use certainty::corpus::{ScientificFinding, Source};
use certainty::lexicon::Lexicon;
use certainty::scoring::external::{score_external, Endpoint, ExternalConfig, ExternalScorer, TransportError};
use certainty::scoring::stub::stub_scores;
use certainty::scoring::Scorer;
use certainty::Error;

const STUB: &str = env!("CARGO_BIN_EXE_certainty-stub-scorer");

fn finding(id: &str, text: &str) -> ScientificFinding {
    ScientificFinding {
        finding_id: id.into(),
        text: text.into(),
        source: Source::Abstract,
        origin_doi: "10.1/x".into(),
        origin_article_id: None,
        extraction_keyword: None,
        char_span: (0, text.len()),
    }
}

fn corpus(n: usize) -> Vec<ScientificFinding> {
    let texts = [
        "Coffee may reduce the risk of stroke.",
        "The drug lowers mortality by 12% in adults.",
        "These results suggest that sleep possibly affects memory.",
        "Exercise improves mood.",
    ];
    (0..n).map(|i| finding(&format!("f{i:04}"), texts[i % texts.len()])).collect()
}

fn stub(extra: &str) -> Endpoint {
    Endpoint::Command(format!("{STUB} {extra}"))
}

fn config(ms: u64, in_flight: usize) -> ExternalConfig {
    ExternalConfig { timeout: Duration::from_millis(ms), max_in_flight: in_flight }
}

fn assert_matches_stub(findings: &[ScientificFinding], scores: &[certainty::scoring::CertaintyScore]) {
    let lex = Lexicon::default_hedges();
    assert_eq!(scores.len(), findings.len());
    for (f, s) in findings.iter().zip(scores) {
        assert_eq!(s.finding_id, f.finding_id);
        let (c, a) = stub_scores(&f.text, &lex);
        assert_eq!(s.sentence_certainty, c);
        assert_eq!(s.aspects, a);
    }
}

#[test]
fn thousand_requests_over_stdio() {
    let findings = corpus(1000);
    let scores = score_external(&findings, &stub(""), &config(10_000, 32)).unwrap();
    assert_matches_stub(&findings, &scores);
}

#[test]
fn out_of_order_responses_are_reassembled() {
    let findings = corpus(96);
    let scores = score_external(&findings, &stub("--reverse-window 8"), &config(10_000, 16)).unwrap();
    assert_matches_stub(&findings, &scores);
}

#[test]
fn tcp_transport() {
    let mut child = Command::new(STUB)
        .args(["--tcp", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening ").unwrap().to_string();
    let findings = corpus(50);
    let scorer = ExternalScorer::new(Endpoint::parse(&addr), config(10_000, 8));
    let scores = scorer.score_all(&findings).unwrap();
    assert_matches_stub(&findings, &scores);
    assert!(child.wait().unwrap().success());
}

#[test]
fn out_of_range_score_is_clamped() {
    let scores = score_external(&corpus(3), &stub("--fixed-certainty 7.2"), &config(10_000, 4)).unwrap();
    assert!(scores.iter().all(|s| s.sentence_certainty == 6.0));
}

#[test]
fn missing_aspect_key_is_malformed() {
    match score_external(&corpus(3), &stub("--drop-aspect framing"), &config(10_000, 4)) {
        Err(Error::Transport(TransportError::Malformed { payload, .. })) => {
            assert!(payload.contains("\"number\"") && !payload.contains("framing"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_response_id_is_a_mismatch() {
    match score_external(&corpus(3), &stub("--wrong-id"), &config(10_000, 4)) {
        Err(Error::Transport(TransportError::IdMismatch { id, .. })) => assert!(id.starts_with("x-f")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn silent_scorer_times_out() {
    let start = Instant::now();
    match score_external(&corpus(5), &stub("--stall-after 2"), &config(300, 8)) {
        Err(Error::Transport(TransportError::Timeout { id, .. })) => assert_eq!(id, "f0002"),
        other => panic!("{other:?}"),
    }
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn unreachable_endpoints_fail_without_scores() {
    let r = score_external(&corpus(2), &Endpoint::Command("/nonexistent/scorer".into()), &config(500, 4));
    assert!(matches!(r, Err(Error::Transport(TransportError::Unreachable { .. }))));
    let r = score_external(&corpus(2), &Endpoint::Tcp("127.0.0.1:1".into()), &config(500, 4));
    assert!(matches!(r, Err(Error::Transport(TransportError::Unreachable { .. }))));
}

#[test]
fn early_exit_is_reported_as_closed() {
    let r = score_external(&corpus(2), &Endpoint::Command("true".into()), &config(2_000, 4));
    assert!(matches!(r, Err(Error::Transport(TransportError::Closed { .. }) | Error::Transport(TransportError::Io(_)))), "{r:?}");
}

#[test]
fn duplicate_ids_rejected_before_io() {
    let f = vec![finding("a", "x y"), finding("a", "z")];
    assert!(matches!(score_external(&f, &stub(""), &config(1000, 4)), Err(Error::InvalidInput(_))));
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn golden_transcript() {
    let requests = fixture("wire_requests.jsonl");
    let responses = fixture("wire_responses.jsonl");

    // The client emits exactly the golden request bytes.
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.jsonl");
    let findings: Vec<ScientificFinding> = requests
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            finding(v["id"].as_str().unwrap(), v["text"].as_str().unwrap())
        })
        .collect();
    score_external(&findings, &stub(&format!("--record {}", rec.display())), &config(10_000, 1)).unwrap();
    assert_eq!(std::fs::read_to_string(&rec).unwrap(), requests);

    // Replaying the golden requests yields the golden response bytes.
    let mut child = Command::new(STUB).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(requests.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), responses);
}
