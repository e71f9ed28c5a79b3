//! Data model for papers, news articles, extracted findings and annotations,
//! plus ingestion, news preprocessing and annotation aggregation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::{self, LineError, Manifest};

/// Default word-count cutoff for news articles (top 5% longest removed).
pub const DEFAULT_NEWS_LENGTH_CUTOFF: usize = 1392;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Background,
    Method,
    Introduction,
    Result,
    Conclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractSentence {
    pub text: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperMeta {
    pub doi: String,
    pub journal_impact_factor: f64,
    pub num_authors: u32,
    pub field: String,
    pub author_rank: f64,
    pub affiliation_rank: f64,
    pub abstract_sentences: Vec<AbstractSentence>,
}

impl PaperMeta {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.doi.trim().is_empty() {
            return Err("doi is empty".into());
        }
        if self.num_authors < 1 {
            return Err("num_authors must be at least 1".into());
        }
        if !(self.journal_impact_factor >= 0.0) {
            return Err("journal_impact_factor must be nonnegative".into());
        }
        Ok(())
    }

    /// The abstract as one string, sentences joined by a single space. Finding
    /// spans for abstract findings index into this string.
    pub fn abstract_text(&self) -> String {
        self.abstract_sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub article_id: String,
    pub outlet: String,
    pub body: String,
    pub linked_dois: Vec<String>,
}

impl NewsArticle {
    /// Whitespace-delimited token count of the body.
    pub fn word_count(&self) -> usize {
        self.body.split_whitespace().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    News,
    Abstract,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::News => "news",
            Source::Abstract => "abstract",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScientificFinding {
    pub finding_id: String,
    pub text: String,
    pub source: Source,
    pub origin_doi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_article_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction_keyword: Option<String>,
    /// UTF-8 byte offsets into the origin document.
    pub char_span: (usize, usize),
}

impl ScientificFinding {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.text.trim().is_empty() {
            return Err(format!("{}: empty text", self.finding_id));
        }
        if self.source == Source::News && self.extraction_keyword.is_none() {
            return Err(format!("{}: news finding without keyword", self.finding_id));
        }
        if self.char_span.0 > self.char_span.1 {
            return Err(format!("{}: inverted span", self.finding_id));
        }
        Ok(())
    }
}

/// The six aspects, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Number,
    Extent,
    Probability,
    Framing,
    Condition,
    Suggestion,
}

impl Aspect {
    pub const ALL: [Aspect; 6] = [
        Aspect::Number,
        Aspect::Extent,
        Aspect::Probability,
        Aspect::Framing,
        Aspect::Condition,
        Aspect::Suggestion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::Number => "number",
            Aspect::Extent => "extent",
            Aspect::Probability => "probability",
            Aspect::Framing => "framing",
            Aspect::Condition => "condition",
            Aspect::Suggestion => "suggestion",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Aspect> {
        Aspect::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AspectLabel {
    NotPresent,
    Certain,
    Uncertain,
}

impl AspectLabel {
    pub const ALL: [AspectLabel; 3] = [
        AspectLabel::NotPresent,
        AspectLabel::Certain,
        AspectLabel::Uncertain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AspectLabel::NotPresent => "not_present",
            AspectLabel::Certain => "certain",
            AspectLabel::Uncertain => "uncertain",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<AspectLabel> {
        AspectLabel::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for AspectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One label per aspect. Serialized as a JSON object with exactly the six
/// aspect keys; deserialization rejects missing or extra keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AspectLabels(pub [AspectLabel; 6]);

impl Default for AspectLabel {
    fn default() -> Self {
        AspectLabel::NotPresent
    }
}

impl AspectLabels {
    pub fn get(&self, aspect: Aspect) -> AspectLabel {
        self.0[aspect.index()]
    }

    pub fn set(&mut self, aspect: Aspect, label: AspectLabel) {
        self.0[aspect.index()] = label;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Aspect, AspectLabel)> + '_ {
        Aspect::ALL.into_iter().map(move |a| (a, self.get(a)))
    }
}

impl Serialize for AspectLabels {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for (aspect, label) in self.iter() {
            map.serialize_entry(aspect.as_str(), label.as_str())?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AspectLabels {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(deserializer)?;
        let mut labels = AspectLabels::default();
        let mut seen = 0;
        for (key, value) in &raw {
            let aspect = Aspect::parse(key)
                .ok_or_else(|| D::Error::custom(format!("unknown aspect key `{key}`")))?;
            let label = AspectLabel::parse(value)
                .ok_or_else(|| D::Error::custom(format!("unknown aspect label `{value}`")))?;
            labels.set(aspect, label);
            seen += 1;
        }
        if seen != 6 {
            let missing: Vec<&str> = Aspect::ALL
                .iter()
                .filter(|a| !raw.contains_key(a.as_str()))
                .map(|a| a.as_str())
                .collect();
            return Err(D::Error::custom(format!("missing aspect keys: {}", missing.join(", "))));
        }
        Ok(labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    SentenceLevel,
    AspectLevel,
    BadText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub finding_id: String,
    pub annotator_id: String,
    pub kind: AnnotationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likert: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "aspects")]
    pub aspect_labels: Option<AspectLabels>,
}

impl AnnotationRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.kind {
            AnnotationKind::SentenceLevel => match self.likert {
                Some(1..=6) => {}
                Some(v) => return Err(format!("likert {v} outside 1..6")),
                None => return Err("sentence_level record without likert".into()),
            },
            AnnotationKind::AspectLevel | AnnotationKind::BadText => {
                if self.likert.is_some() {
                    return Err("likert only allowed on sentence_level records".into());
                }
            }
        }
        match (self.kind, self.aspect_labels.is_some()) {
            (AnnotationKind::AspectLevel, false) => Err("aspect_level record without aspects".into()),
            (AnnotationKind::AspectLevel, true) => Ok(()),
            (_, true) => Err("aspects only allowed on aspect_level records".into()),
            (_, false) => Ok(()),
        }
    }
}

/// Reads `annotations.jsonl`, reporting malformed and invalid lines.
pub fn read_annotations(path: &Path) -> Result<(Vec<AnnotationRecord>, Vec<LineError>)> {
    let (records, mut errors) = io::read_jsonl::<AnnotationRecord>(path)?;
    let mut valid = Vec::with_capacity(records.len());
    for rec in records {
        match rec.validate() {
            Ok(()) => valid.push(rec),
            Err(message) => errors.push(LineError {
                file: path.display().to_string(),
                line: 0,
                message: format!("{}: {message}", rec.finding_id),
            }),
        }
    }
    Ok((valid, errors))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub papers: Vec<PaperMeta>,
    pub news: Vec<NewsArticle>,
}

impl Corpus {
    pub fn paper(&self, doi: &str) -> Option<&PaperMeta> {
        self.papers.iter().find(|p| p.doi == doi)
    }

    pub fn papers_by_doi(&self) -> BTreeMap<&str, &PaperMeta> {
        self.papers.iter().map(|p| (p.doi.as_str(), p)).collect()
    }

    pub fn news_by_id(&self) -> BTreeMap<&str, &NewsArticle> {
        self.news.iter().map(|n| (n.article_id.as_str(), n)).collect()
    }

    /// Loads a corpus directory written by [`write_corpus`]. Any malformed
    /// line is an error here; use [`ingest_corpus`] for raw exports.
    pub fn load_dir(dir: &Path) -> Result<Corpus> {
        let ingested = ingest_corpus(&dir.join("news.jsonl"), &dir.join("papers.jsonl"))?;
        if let Some(first) = ingested.errors.first() {
            return Err(Error::InvalidInput(format!(
                "{}:{}: {}",
                first.file, first.line, first.message
            )));
        }
        Ok(ingested.corpus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub corpus: Corpus,
    pub errors: Vec<LineError>,
}

pub fn ingest_corpus(news_path: &Path, papers_path: &Path) -> Result<Ingested> {
    let (news, mut errors) = io::read_jsonl::<NewsArticle>(news_path)?;
    let (raw_papers, paper_errors) = io::read_jsonl::<PaperMeta>(papers_path)?;
    errors.extend(paper_errors);

    let mut seen = HashSet::new();
    let mut papers = Vec::with_capacity(raw_papers.len());
    for paper in raw_papers {
        let problem = paper.validate().err().or_else(|| {
            (!seen.insert(paper.doi.clone())).then(|| format!("duplicate doi {}", paper.doi))
        });
        match problem {
            Some(message) => errors.push(LineError {
                file: papers_path.display().to_string(),
                line: 0,
                message,
            }),
            None => papers.push(paper),
        }
    }
    Ok(Ingested {
        corpus: Corpus { papers, news },
        errors,
    })
}

pub fn write_corpus(corpus: &Corpus, dir: &Path, manifest: Option<&Manifest>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_jsonl(&dir.join("papers.jsonl"), &corpus.papers, manifest)?;
    io::write_jsonl(&dir.join("news.jsonl"), &corpus.news, manifest)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub input_articles: usize,
    pub removed_too_long: usize,
    pub removed_not_single_link: usize,
    pub quote_paragraphs_stripped: usize,
    pub reference_sections_stripped: usize,
    pub output_articles: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessConfig {
    pub length_cutoff: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            length_cutoff: DEFAULT_NEWS_LENGTH_CUTOFF,
        }
    }
}

/// Applies the news filters: length cutoff, single linked paper, and removal
/// of quote-bearing paragraphs and trailing reference sections. Idempotent.
pub fn preprocess_news(corpus: &Corpus, config: &PreprocessConfig) -> (Corpus, PreprocessReport) {
    let mut report = PreprocessReport {
        input_articles: corpus.news.len(),
        ..Default::default()
    };
    let mut news = Vec::with_capacity(corpus.news.len());
    for article in &corpus.news {
        if article.word_count() > config.length_cutoff {
            report.removed_too_long += 1;
            continue;
        }
        if article.linked_dois.len() != 1 {
            report.removed_not_single_link += 1;
            continue;
        }
        let mut article = article.clone();
        let (body, refs) = strip_reference_section(&article.body);
        if refs {
            report.reference_sections_stripped += 1;
        }
        let (body, quoted) = strip_quote_paragraphs(body);
        report.quote_paragraphs_stripped += quoted;
        if refs || quoted > 0 {
            article.body = body;
        }
        news.push(article);
    }
    report.output_articles = news.len();
    (
        Corpus {
            papers: corpus.papers.clone(),
            news,
        },
        report,
    )
}

fn is_reference_heading(line: &str) -> bool {
    let t = line.trim().trim_end_matches(':').trim_end();
    t.eq_ignore_ascii_case("references") || t.eq_ignore_ascii_case("sources")
}

/// Cuts the body at the first line that is a bare `References`/`Sources`
/// heading. Returns the kept text and whether anything was cut.
fn strip_reference_section(body: &str) -> (&str, bool) {
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        if is_reference_heading(line) {
            return (body[..offset].trim_end(), true);
        }
        offset += line.len();
    }
    (body, false)
}

fn is_quote_char(c: char) -> bool {
    matches!(c, '"' | '\u{201C}' | '\u{201D}')
}

fn paragraphs(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut current_start: Option<usize> = None;
    let mut current_end = 0;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(start) = current_start.take() {
                out.push(&body[start..current_end]);
            }
        } else {
            if current_start.is_none() {
                current_start = Some(offset);
            }
            current_end = offset + line.trim_end().len();
        }
        offset += line.len();
    }
    if let Some(start) = current_start {
        out.push(&body[start..current_end]);
    }
    out
}

fn strip_quote_paragraphs(body: &str) -> (String, usize) {
    let paras = paragraphs(body);
    let before = paras.len();
    let kept: Vec<&str> = paras.into_iter().filter(|p| !p.contains(is_quote_char)).collect();
    let removed = before - kept.len();
    (kept.join("\n\n"), removed)
}

/// Tie-break order for aspect majority votes, highest priority first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub tie_priority: [AspectLabel; 3],
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            tie_priority: [
                AspectLabel::Uncertain,
                AspectLabel::Certain,
                AspectLabel::NotPresent,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldLabel {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspects: Option<AspectLabels>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregated {
    pub gold: BTreeMap<String, GoldLabel>,
    pub excluded_bad_text: Vec<String>,
    pub warnings: Vec<String>,
}

/// Majority label with the configured tie priority.
pub fn majority_label(votes: &[AspectLabel], config: &AggregationConfig) -> Option<AspectLabel> {
    if votes.is_empty() {
        return None;
    }
    let mut counts = [0usize; 3];
    for v in votes {
        counts[v.index()] += 1;
    }
    let best = *counts.iter().max().expect("three counts");
    config
        .tie_priority
        .iter()
        .copied()
        .find(|l| counts[l.index()] == best)
}

/// Sentence gold is the mean Likert score, aspect gold the per-aspect
/// majority. Findings flagged bad text by a strict majority of their distinct
/// annotators are dropped.
pub fn aggregate_annotations(records: &[AnnotationRecord], config: &AggregationConfig) -> Aggregated {
    let mut by_finding: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_finding.entry(r.finding_id.as_str()).or_default().push(r);
    }

    let mut out = Aggregated::default();
    for (id, recs) in by_finding {
        let annotators: BTreeSet<&str> = recs.iter().map(|r| r.annotator_id.as_str()).collect();
        let bad: BTreeSet<&str> = recs
            .iter()
            .filter(|r| r.kind == AnnotationKind::BadText)
            .map(|r| r.annotator_id.as_str())
            .collect();
        if 2 * bad.len() > annotators.len() {
            out.excluded_bad_text.push(id.to_string());
            continue;
        }

        let likerts: Vec<f64> = recs.iter().filter_map(|r| r.likert).map(f64::from).collect();
        let sentence = (!likerts.is_empty()).then(|| likerts.iter().sum::<f64>() / likerts.len() as f64);

        let aspect_recs: Vec<&AspectLabels> = recs.iter().filter_map(|r| r.aspect_labels.as_ref()).collect();
        let aspects = (!aspect_recs.is_empty()).then(|| {
            let mut labels = AspectLabels::default();
            for aspect in Aspect::ALL {
                let votes: Vec<AspectLabel> = aspect_recs.iter().map(|l| l.get(aspect)).collect();
                labels.set(aspect, majority_label(&votes, config).expect("nonempty votes"));
            }
            labels
        });

        if sentence.is_none() && aspects.is_none() {
            out.warnings.push(format!("{id}: no usable annotations"));
            continue;
        }
        out.gold.insert(id.to_string(), GoldLabel { sentence, aspects });
    }
    out
}
