//! Pairing news findings with the abstract findings they paraphrase, by
//! overlap of stemmed content words.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ScientificFinding, Source};
use crate::error::{Error, Result};
use crate::lexicon::{porter, Stopwords};

pub const DEFAULT_MIN_OVERLAP: usize = 3;
pub const DEFAULT_MIN_JACCARD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Pairs need at least this many shared stems.
    pub min_overlap: usize,
    /// Pairs need a Jaccard similarity strictly above this.
    pub min_jaccard: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            min_overlap: DEFAULT_MIN_OVERLAP,
            min_jaccard: DEFAULT_MIN_JACCARD,
        }
    }
}

/// Lowercases, deletes every character that is not alphanumeric, `_` or
/// whitespace, splits on whitespace and drops stopwords.
pub fn match_tokens(text: &str, stopwords: &Stopwords) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '_' || c.is_whitespace())
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !stopwords.contains(w))
        .map(str::to_string)
        .collect()
}

/// Set of Porter stems of [`match_tokens`].
pub fn normalize_for_match(text: &str, stopwords: &Stopwords) -> BTreeSet<String> {
    match_tokens(text, stopwords).iter().map(|t| porter::stem(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub overlap: usize,
    pub jaccard: f64,
}

/// Shared-stem count and Jaccard similarity; two empty sets have Jaccard 0.
pub fn match_stats(a: &BTreeSet<String>, b: &BTreeSet<String>) -> MatchStats {
    let overlap = a.intersection(b).count();
    let union = a.len() + b.len() - overlap;
    MatchStats {
        overlap,
        jaccard: if union == 0 { 0.0 } else { overlap as f64 / union as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub news_finding_id: String,
    pub abstract_finding_id: String,
    pub overlap: usize,
    pub jaccard: f64,
}

impl MatchConfig {
    pub fn accepts(&self, s: MatchStats) -> bool {
        s.overlap >= self.min_overlap && s.jaccard > self.min_jaccard
    }
}

/// For each news finding, the best abstract finding clearing both thresholds:
/// highest Jaccard, then highest overlap, then earliest abstract finding.
pub fn match_findings(
    news: &[ScientificFinding],
    abstracts: &[ScientificFinding],
    config: &MatchConfig,
    stopwords: &Stopwords,
) -> Vec<MatchedPair> {
    let abstract_stems: Vec<BTreeSet<String>> = abstracts.iter().map(|f| normalize_for_match(&f.text, stopwords)).collect();
    let mut pairs = Vec::new();
    for n in news {
        let stems = normalize_for_match(&n.text, stopwords);
        let mut best: Option<(usize, MatchStats)> = None;
        for (i, a) in abstract_stems.iter().enumerate() {
            let s = match_stats(&stems, a);
            if !config.accepts(s) {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, b)) => s.jaccard > b.jaccard || (s.jaccard == b.jaccard && s.overlap > b.overlap),
            };
            if better {
                best = Some((i, s));
            }
        }
        if let Some((i, s)) = best {
            pairs.push(MatchedPair {
                news_finding_id: n.finding_id.clone(),
                abstract_finding_id: abstracts[i].finding_id.clone(),
                overlap: s.overlap,
                jaccard: s.jaccard,
            });
        }
    }
    pairs
}

/// Matches every news finding against the abstract findings of the paper it
/// covers (same `origin_doi`). Output follows the order of `findings`.
pub fn match_corpus(findings: &[ScientificFinding], config: &MatchConfig, stopwords: &Stopwords) -> Result<Vec<MatchedPair>> {
    if !(0.0..=1.0).contains(&config.min_jaccard) {
        return Err(Error::InvalidInput(format!("min_jaccard must lie in [0, 1], got {}", config.min_jaccard)));
    }
    let mut abstracts: BTreeMap<&str, Vec<ScientificFinding>> = BTreeMap::new();
    for f in findings.iter().filter(|f| f.source == Source::Abstract) {
        abstracts.entry(&f.origin_doi).or_default().push(f.clone());
    }
    let mut out = Vec::new();
    for n in findings.iter().filter(|f| f.source == Source::News) {
        if let Some(abs) = abstracts.get(n.origin_doi.as_str()) {
            out.extend(match_findings(std::slice::from_ref(n), abs, config, stopwords));
        }
    }
    Ok(out)
}
