use std::path::Path;

use serde::Deserialize;

use certainty::corpus::{AbstractSentence, NewsArticle, PaperMeta, Role};
use certainty::extraction::{extract_abstract_findings, extract_news_findings, AbbreviationGuard};
use certainty::lexicon::porter::stem;
use certainty::lexicon::{Lexicon, Stopwords};
use certainty::matching::{match_stats, normalize_for_match};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

#[test]
fn porter_reference_vectors() {
    let text = fixture("porter_vectors.txt");
    let mut n = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (word, expected) = line.split_once(' ').unwrap();
        assert_eq!(stem(word), expected, "stem({word})");
        n += 1;
    }
    assert!(n > 1500);
}

#[derive(Deserialize)]
struct ExtractionRow {
    original: String,
    finding: String,
    keyword: Option<String>,
    source: String,
}

/// Extracted text for one table row, with the keyword for news rows.
fn extract_row(row: &ExtractionRow, verbs: &Lexicon, guard: &AbbreviationGuard) -> Vec<(String, Option<String>)> {
    if row.source == "news" {
        let article = NewsArticle {
            article_id: "a".into(),
            outlet: "o".into(),
            body: row.original.clone(),
            linked_dois: vec!["10.1/x".into()],
        };
        extract_news_findings(&article, verbs, guard).into_iter().map(|f| (f.text, f.extraction_keyword)).collect()
    } else {
        let paper = PaperMeta {
            doi: "10.1/x".into(),
            journal_impact_factor: 1.0,
            num_authors: 1,
            field: "f".into(),
            author_rank: 1.0,
            affiliation_rank: 1.0,
            abstract_sentences: vec![
                AbstractSentence { text: "We studied it.".into(), role: Role::Method },
                AbstractSentence { text: row.original.clone(), role: Role::Result },
            ],
        };
        extract_abstract_findings(&paper).into_iter().map(|f| (f.text, f.extraction_keyword)).collect()
    }
}

#[test]
fn published_extraction_rows() {
    let verbs = Lexicon::default_report_verbs();
    let guard = AbbreviationGuard::default_list();
    let rows: Vec<ExtractionRow> = fixture("extracted_findings.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 10);
    let mut reproduced = 0;
    for row in &rows {
        let got = extract_row(row, &verbs, &guard);
        let hit = got.len() == 1 && got[0].0.to_lowercase() == row.finding.to_lowercase() && got[0].1 == row.keyword;
        if hit {
            reproduced += 1;
        } else {
            eprintln!("not reproduced: {:?} -> {got:?}", row.finding);
        }
    }
    assert!(reproduced >= 9, "{reproduced}/10 rows reproduced");
}

#[derive(Deserialize)]
struct PairRow {
    news: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    jaccard: f64,
    overlap: usize,
}

#[test]
fn published_matched_pairs_within_tolerance() {
    let stop = Stopwords::default_list();
    let rows: Vec<PairRow> = fixture("matched_pairs.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 15);
    let mut within = 0;
    for r in &rows {
        let s = match_stats(&normalize_for_match(&r.news, &stop), &normalize_for_match(&r.abstract_text, &stop));
        if (s.jaccard - r.jaccard).abs() <= 0.05 && s.overlap.abs_diff(r.overlap) <= 1 {
            within += 1;
        } else {
            eprintln!("outside tolerance: published {:.2}/{} computed {:.2}/{} for {:?}", r.jaccard, r.overlap, s.jaccard, s.overlap, r.news);
        }
    }
    assert!(within >= 12, "{within}/15 rows within tolerance");
}

#[test]
fn paris_agreement_pair() {
    let stop = Stopwords::default_list();
    let rows: Vec<PairRow> = fixture("matched_pairs.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let r = rows.iter().find(|r| r.news.to_lowercase().contains("paris climate agreement")).unwrap();
    let s = match_stats(&normalize_for_match(&r.news, &stop), &normalize_for_match(&r.abstract_text, &stop));
    assert!((s.jaccard - 0.92).abs() <= 0.05 && s.overlap.abs_diff(11) <= 1, "{s:?}");
}
