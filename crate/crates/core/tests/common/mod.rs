#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use certainty::corpus::{AbstractSentence, AspectLabel, AspectLabels, NewsArticle, PaperMeta, Role, ScientificFinding, Source};
use certainty::matching::MatchedPair;
use certainty::scoring::CertaintyScore;

pub struct Synthetic {
    pub papers: Vec<PaperMeta>,
    pub news: Vec<NewsArticle>,
    pub findings: Vec<ScientificFinding>,
    pub scores: Vec<CertaintyScore>,
    pub pairs: Vec<MatchedPair>,
}

const SUBJECTS: [&str; 5] = ["Regular exercise", "Daily coffee intake", "Screen time", "Air pollution exposure", "Early reading"];
const VERBS: [&str; 4] = ["reduces", "increases", "is associated with", "changes"];
const OBJECTS: [&str; 5] = [
    "the risk of heart disease in older adults.",
    "sleep quality.",
    "academic performance among children in urban schools.",
    "long-term memory.",
    "the incidence of asthma in young patients living near highways.",
];

fn random_labels(rng: &mut ChaCha8Rng) -> AspectLabels {
    let mut l = AspectLabels::default();
    for i in 0..6 {
        l.0[i] = AspectLabel::ALL[rng.gen_range(0..3)];
    }
    l
}

fn score(id: &str, v: f64, aspects: AspectLabels) -> CertaintyScore {
    CertaintyScore {
        finding_id: id.into(),
        sentence_certainty: v,
        aspects,
        scorer_id: "synthetic".into(),
        scorer_version: "0".into(),
    }
}

/// One abstract finding and one news finding per paper, matched. News text
/// repeats the abstract text. With `news_shift`, the news score is the
/// abstract score plus the shift; otherwise it is an independent draw.
pub fn synthetic(seed: u64, n: usize, news_shift: Option<f64>) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = ["biology", "medicine", "psychology"];
    let outlets = ["daily-times", "science-wire", "the-ledger"];
    let mut s = Synthetic { papers: vec![], news: vec![], findings: vec![], scores: vec![], pairs: vec![] };
    for i in 0..n {
        let doi = format!("10.9/{i}");
        let text = format!(
            "{} {} {}",
            SUBJECTS[rng.gen_range(0..SUBJECTS.len())],
            VERBS[rng.gen_range(0..VERBS.len())],
            OBJECTS[rng.gen_range(0..OBJECTS.len())]
        );
        s.papers.push(PaperMeta {
            doi: doi.clone(),
            journal_impact_factor: rng.gen_range(0.5..30.0),
            num_authors: rng.gen_range(1..15),
            field: fields[rng.gen_range(0..3)].into(),
            author_rank: rng.gen_range(1000.0..30000.0),
            affiliation_rank: rng.gen_range(1000.0..30000.0),
            abstract_sentences: vec![AbstractSentence { text: text.clone(), role: Role::Result }],
        });
        let article_id = format!("art{i}");
        s.news.push(NewsArticle {
            article_id: article_id.clone(),
            outlet: outlets[rng.gen_range(0..3)].into(),
            body: format!("Researchers found that {text}"),
            linked_dois: vec![doi.clone()],
        });
        let abs_id = format!("abs:{doi}:0");
        let news_id = format!("news:{article_id}:0");
        s.findings.push(ScientificFinding {
            finding_id: abs_id.clone(),
            text: text.clone(),
            source: Source::Abstract,
            origin_doi: doi.clone(),
            origin_article_id: None,
            extraction_keyword: None,
            char_span: (0, text.len()),
        });
        s.findings.push(ScientificFinding {
            finding_id: news_id.clone(),
            text: text.clone(),
            source: Source::News,
            origin_doi: doi.clone(),
            origin_article_id: Some(article_id),
            extraction_keyword: Some("found".into()),
            char_span: (22, 22 + text.len()),
        });
        let base: f64 = rng.gen_range(2.0..5.5);
        let news = match news_shift {
            Some(d) => base + d,
            None => rng.gen_range(2.0..5.5),
        };
        s.scores.push(score(&abs_id, base, random_labels(&mut rng)));
        s.scores.push(score(&news_id, news, random_labels(&mut rng)));
        s.pairs.push(MatchedPair { news_finding_id: news_id, abstract_finding_id: abs_id, overlap: 5, jaccard: 1.0 });
    }
    s
}
