use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use certainty::corpus::{ScientificFinding, Source};
use certainty::io::write_jsonl;

const BIN: &str = env!("CARGO_BIN_EXE_certainty");
const STUB: &str = env!("CARGO_BIN_EXE_certainty-stub-scorer");

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CERTAINTY_LEXICON_DIR").output().expect("spawn cli")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_object(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr line");
    serde_json::from_str(last).expect("json error object")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs every subcommand on the demo corpus, writing into `w`.
fn pipeline(w: &Path) {
    let d = demo();
    let corpus = w.join("corpus");
    let findings = w.join("findings.jsonl");
    let ann = d.join("annotations.jsonl");
    let split = w.join("split.json");
    ok(&["ingest", "--news", s(&d.join("news.jsonl")), "--papers", s(&d.join("papers.jsonl")), "--out", s(&corpus)]);
    ok(&["extract", "--corpus", s(&corpus), "--out", s(&findings)]);
    ok(&["sample", "--findings", s(&findings), "--n", "20", "--seed", "7", "--out", s(&w.join("sample.jsonl"))]);
    ok(&["agreement", "--annotations", s(&ann), "--out", s(&w.join("agreement.csv"))]);
    ok(&["split", "--annotations", s(&ann), "--random-set", s(&d.join("random_set.txt")), "--seed", "7", "--out", s(&split)]);
    for model in ["bow", "hedge"] {
        let m = w.join(format!("{model}.json"));
        ok(&["train", "--findings", s(&findings), "--annotations", s(&ann), "--model", model, "--split", s(&split), "--out", s(&m)]);
        let scores = w.join(format!("scores_{model}.jsonl"));
        ok(&["score", "--findings", s(&findings), "--model", s(&m), "--out", s(&scores)]);
        ok(&["eval", "--scores", s(&scores), "--annotations", s(&ann), "--split", s(&split), "--out", s(&w.join(format!("eval_{model}.csv")))]);
    }
    std::fs::copy(w.join("scores_bow.jsonl"), w.join("scores.jsonl")).unwrap();
    ok(&["score", "--findings", s(&findings), "--external", STUB, "--out", s(&w.join("scores_external.jsonl"))]);
    ok(&["match", "--corpus", s(&corpus), "--findings", s(&findings), "--out", s(&w.join("pairs.jsonl"))]);
    ok(&["analyze", "--rq", "all", "--in", s(w), "--corpus", s(&corpus), "--annotations", s(&ann), "--out", s(&w.join("analysis"))]);
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn has_manifest(name: &Path, bytes: &[u8]) -> bool {
    let text = String::from_utf8_lossy(bytes);
    match name.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => text.starts_with("{\"_manifest\""),
        Some("json") => serde_json::from_str::<Value>(&text).is_ok_and(|v| v["_manifest"]["config_hash"].is_string()),
        Some("csv") => text.starts_with("# manifest: "),
        Some("svg") => text.starts_with("<!-- manifest: "),
        _ => false,
    }
}

#[test]
fn demo_pipeline_emits_every_artifact_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path();
    let inputs_before = snapshot(&demo());
    pipeline(w);
    let first = snapshot(w);

    for name in [
        "corpus/papers.jsonl",
        "corpus/news.jsonl",
        "corpus/preprocess_report.json",
        "findings.jsonl",
        "sample.jsonl",
        "agreement.csv",
        "split.json",
        "bow.json",
        "hedge.json",
        "scores_bow.jsonl",
        "scores_hedge.jsonl",
        "scores_external.jsonl",
        "eval_bow.csv",
        "eval_hedge.csv",
        "pairs.jsonl",
        "analysis/rq1.csv",
        "analysis/rq1_margins.svg",
        "analysis/rq2_probability_uncertain.csv",
        "analysis/rq3.csv",
        "analysis/rq4_news_binned.csv",
        "analysis/rq5_abstract.csv",
        "analysis/fig2.csv",
        "analysis/fig2.svg",
        "analysis/fig3.csv",
    ] {
        assert!(first.contains_key(Path::new(name)), "missing {name}");
    }
    assert_eq!(first.keys().filter(|k| k.starts_with("analysis")).count(), 70);
    for (name, bytes) in &first {
        if name == Path::new("scores.jsonl") {
            continue;
        }
        assert!(has_manifest(name, bytes), "{} has no manifest", name.display());
    }

    pipeline(w);
    let second = snapshot(w);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (name, bytes) in &first {
        assert!(bytes == &second[name], "{} differs between runs", name.display());
    }
    assert_eq!(inputs_before, snapshot(&demo()), "inputs were modified");
}

fn hedge_findings(counts: [usize; 3]) -> Vec<ScientificFinding> {
    let texts = ["Rates rose sharply in the cohort.", "Rates may rise in the cohort.", "Rates may possibly rise in the cohort."];
    let mut out = Vec::new();
    for (k, &n) in counts.iter().enumerate() {
        for i in 0..n {
            out.push(ScientificFinding {
                finding_id: format!("abs:10.1/{k}:{i}"),
                text: texts[k].to_string(),
                source: Source::Abstract,
                origin_doi: format!("10.1/{k}"),
                origin_article_id: None,
                extraction_keyword: None,
                char_span: (0, texts[k].len()),
            });
        }
    }
    out
}

fn strata(out: &Output) -> [u64; 3] {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    ["0 hedges", "1 hedge", "2+ hedges"].map(|k| v["strata"][k].as_u64().unwrap())
}

#[test]
fn sample_of_1000_reports_paper_proportions() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("findings.jsonl");
    write_jsonl(&f, &hedge_findings([900, 600, 300]), None).unwrap();
    let out = ok(&["sample", "--findings", s(&f), "--n", "1000", "--strategy", "hedge-stratified", "--seed", "1"]);
    assert_eq!(strata(&out), [500, 350, 150]);
}

#[test]
fn sample_fails_when_a_stratum_is_short() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("findings.jsonl");
    write_jsonl(&f, &hedge_findings([900, 600, 100]), None).unwrap();
    let out = run(&["sample", "--findings", s(&f), "--n", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_object(&out)["error"]["kind"], "stratum_too_small");
}

#[test]
fn config_file_values_apply_and_flags_override_them() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("findings.jsonl");
    write_jsonl(&f, &hedge_findings([50, 50, 50]), None).unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, format!("seed = 9\n\n[sample]\nfindings = {:?}\nn = 20\nproportions = [0.5, 0.25, 0.25]\n", s(&f))).unwrap();

    let from_file = ok(&["--config", s(&cfg), "sample"]);
    assert_eq!(strata(&from_file), [10, 5, 5]);
    let v: Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(v["_manifest"]["seed"], 9);

    let overridden = ok(&["sample", "--config", s(&cfg), "--n", "40", "--seed", "3"]);
    assert_eq!(strata(&overridden), [20, 10, 10]);
    let v: Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(v["_manifest"]["seed"], 3);

    std::fs::write(&cfg, "[sample]\nbogus = 1\n").unwrap();
    let bad = run(&["--config", s(&cfg), "sample", "--findings", s(&f), "--n", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn errors_are_json_objects_with_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let usage = run(&["sample", "--findings", "x.jsonl"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_object(&usage)["error"]["kind"], "usage");

    let short = run(&["sample", "--findings", "x.jsonl", "--n", "3", "--proportions", "0.5,0.5"]);
    assert_eq!(short.status.code(), Some(2));

    let unknown = run(&["analyze", "--rq", "rq9", "--in", s(tmp.path()), "--out", s(tmp.path())]);
    assert_eq!(unknown.status.code(), Some(2));

    let missing = run(&["extract", "--corpus", s(&tmp.path().join("nope")), "--out", s(&tmp.path().join("f.jsonl"))]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_object(&missing)["error"]["kind"], "io");

    let f = tmp.path().join("findings.jsonl");
    write_jsonl(&f, &hedge_findings([2, 0, 0]), None).unwrap();
    let external = run(&["score", "--findings", s(&f), "--external", &format!("{STUB} --stall-after 0"), "--timeout-ms", "300", "--out", s(&tmp.path().join("s.jsonl"))]);
    assert_eq!(external.status.code(), Some(4));
    assert_eq!(error_object(&external)["error"]["kind"], "external_scorer");
    assert!(!tmp.path().join("s.jsonl").exists());
}

#[test]
fn lexicon_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("findings.jsonl");
    write_jsonl(&f, &hedge_findings([4, 4, 4]), None).unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("lexicons");
    for file in ["report_verbs.txt", "stopwords.txt", "abbreviations.txt"] {
        std::fs::copy(shipped.join(file), tmp.path().join(file)).unwrap();
    }
    std::fs::write(tmp.path().join("hedges.txt"), "rose\n").unwrap();
    let out = Command::new(BIN)
        .args(["sample", "--findings", s(&f), "--n", "8", "--proportions", "0.5,0.5,0"])
        .env("CERTAINTY_LEXICON_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let default = run(&["sample", "--findings", s(&f), "--n", "8", "--proportions", "0.5,0.5,0"]);
    let d: Value = serde_json::from_slice(&default.stdout).unwrap();
    assert_ne!(v["_manifest"]["lexicons"]["hedges"], d["_manifest"]["lexicons"]["hedges"]);
}
