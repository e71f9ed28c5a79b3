//! Bag-of-n-grams ridge model: one ridge regressor for sentence-level
//! certainty and one-vs-rest ridge classifiers (targets -1/+1) for each
//! (aspect, label) pair.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ridge::{ridge_fit, RidgeSolver, SparseRow};
use super::{clamp_certainty, decide_aspect, require_text, CertaintyScore, Scorer};
use crate::corpus::{Aspect, AspectLabel, AspectLabels, ScientificFinding};
use crate::error::{Error, Result};
use crate::lexicon::tokenize;

pub const DEFAULT_VOCAB_CAPACITY: usize = 40_000;
pub const DEFAULT_RIDGE_PENALTY: f64 = 1.0;
pub const BOW_SCORER_ID: &str = "bow-ridge";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowConfig {
    pub ridge_penalty: f64,
    pub vocab_capacity: usize,
    pub max_ngram: usize,
}

impl Default for BowConfig {
    fn default() -> Self {
        BowConfig {
            ridge_penalty: DEFAULT_RIDGE_PENALTY,
            vocab_capacity: DEFAULT_VOCAB_CAPACITY,
            max_ngram: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub text: String,
    pub weight: f64,
    pub sentence: Option<f64>,
    pub aspects: Option<AspectLabels>,
}

impl TrainingExample {
    pub fn new(text: impl Into<String>, sentence: Option<f64>, aspects: Option<AspectLabels>) -> Self {
        TrainingExample {
            text: text.into(),
            weight: 1.0,
            sentence,
            aspects,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearHead {
    fn constant(p: usize, intercept: f64) -> Self {
        LinearHead {
            weights: vec![0.0; p],
            intercept,
        }
    }

    fn apply(&self, x: &SparseRow) -> f64 {
        self.intercept + x.iter().map(|&(k, v)| self.weights[k] * v).sum::<f64>()
    }
}

/// Unigrams through `max_n`-grams, joined with `_`.
pub fn ngrams(tokens: &[String], max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for w in tokens.windows(n) {
            out.push(w.join("_"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowModel {
    pub version: String,
    pub max_ngram: usize,
    pub ridge_penalty: f64,
    /// Vocabulary terms; a term's position is its feature index.
    pub terms: Vec<String>,
    pub sentence: LinearHead,
    /// Indexed by aspect, then by label (not_present, certain, uncertain).
    pub aspects: Vec<Vec<LinearHead>>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl BowModel {
    fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn vocabulary_len(&self) -> usize {
        self.terms.len()
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Count vector over the vocabulary; out-of-vocabulary n-grams are dropped.
    pub fn featurize(&self, text: &str) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(&tokenize(text), self.max_ngram) {
            if let Some(&i) = self.index.get(&g) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        counts.into_iter().collect()
    }

    pub fn predict_sentence(&self, text: &str) -> f64 {
        clamp_certainty(self.sentence.apply(&self.featurize(text)))
    }

    pub fn predict_aspects(&self, text: &str) -> AspectLabels {
        let x = self.featurize(text);
        let mut labels = AspectLabels::default();
        for aspect in Aspect::ALL {
            let heads = &self.aspects[aspect.index()];
            let scores = [heads[0].apply(&x), heads[1].apply(&x), heads[2].apply(&x)];
            labels.set(aspect, decide_aspect(scores));
        }
        labels
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::json("bow model", e))
    }

    pub fn from_json(s: &str) -> Result<BowModel> {
        let mut m: BowModel = serde_json::from_str(s).map_err(|e| Error::json("bow model", e))?;
        let p = m.terms.len();
        let bad = m.sentence.weights.len() != p
            || m.aspects.len() != 6
            || m.aspects.iter().any(|h| h.len() != 3 || h.iter().any(|x| x.weights.len() != p));
        if bad {
            return Err(Error::InvalidInput("bow model weight shapes do not match vocabulary".into()));
        }
        m.rebuild_index();
        Ok(m)
    }
}

impl Scorer for BowModel {
    fn scorer_id(&self) -> &str {
        BOW_SCORER_ID
    }

    fn scorer_version(&self) -> &str {
        &self.version
    }

    fn score(&self, finding: &ScientificFinding) -> Result<CertaintyScore> {
        require_text(finding)?;
        Ok(CertaintyScore {
            finding_id: finding.finding_id.clone(),
            sentence_certainty: self.predict_sentence(&finding.text),
            aspects: self.predict_aspects(&finding.text),
            scorer_id: BOW_SCORER_ID.to_string(),
            scorer_version: self.version.clone(),
        })
    }
}

/// Top-`capacity` n-grams by (weighted) document frequency; ties broken
/// lexicographically. Returned in lexicographic order.
pub fn build_vocabulary(docs: &[(Vec<String>, f64)], capacity: usize) -> Vec<String> {
    let mut df: HashMap<&str, f64> = HashMap::new();
    let mut uniq: Vec<Vec<&str>> = Vec::with_capacity(docs.len());
    for (grams, _) in docs {
        let mut g: Vec<&str> = grams.iter().map(String::as_str).collect();
        g.sort_unstable();
        g.dedup();
        uniq.push(g);
    }
    for (g, (_, w)) in uniq.iter().zip(docs) {
        for term in g {
            *df.entry(term).or_default() += w;
        }
    }
    let mut ranked: Vec<(&str, f64)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(capacity);
    let mut terms: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
    terms.sort();
    terms
}

fn canonical_order(a: &TrainingExample, b: &TrainingExample) -> std::cmp::Ordering {
    let aspects_key = |e: &TrainingExample| e.aspects.map(|l| l.0.map(|x| x.index()));
    a.text
        .cmp(&b.text)
        .then_with(|| a.weight.total_cmp(&b.weight))
        .then_with(|| match (a.sentence, b.sentence) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
        .then_with(|| aspects_key(a).cmp(&aspects_key(b)))
}

/// Fits the vocabulary, the sentence regressor and the 18 one-vs-rest
/// aspect classifiers. Examples are put in a canonical order first, so the
/// fitted model does not depend on input order.
pub fn fit_bow(train: &[TrainingExample], config: &BowConfig) -> Result<BowModel> {
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut examples: Vec<&TrainingExample> = train.iter().collect();
    examples.sort_by(|a, b| canonical_order(a, b));

    let grams: Vec<(Vec<String>, f64)> = examples
        .iter()
        .map(|e| (ngrams(&tokenize(&e.text), config.max_ngram), e.weight))
        .collect();
    let terms = build_vocabulary(&grams, config.vocab_capacity);
    let mut model = BowModel {
        version: format!("{}+penalty={}", env!("CARGO_PKG_VERSION"), config.ridge_penalty),
        max_ngram: config.max_ngram,
        ridge_penalty: config.ridge_penalty,
        terms,
        sentence: LinearHead::constant(0, 0.0),
        aspects: Vec::new(),
        index: HashMap::new(),
    };
    model.rebuild_index();
    let p = model.terms.len();
    let rows: Vec<SparseRow> = examples.iter().map(|e| model.featurize(&e.text)).collect();

    let sentence_idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].sentence.is_some()).collect();
    model.sentence = if sentence_idx.is_empty() {
        log::warn!("no sentence-level labels in training set; sentence head is constant");
        LinearHead::constant(p, 3.5)
    } else {
        let x: Vec<SparseRow> = sentence_idx.iter().map(|&i| rows[i].clone()).collect();
        let y: Vec<f64> = sentence_idx.iter().map(|&i| examples[i].sentence.unwrap()).collect();
        let w: Vec<f64> = sentence_idx.iter().map(|&i| examples[i].weight).collect();
        let fit = ridge_fit(&x, p, &[y], &w, config.ridge_penalty, RidgeSolver::Auto)?;
        LinearHead {
            weights: fit.coefs.into_iter().next().unwrap(),
            intercept: fit.intercepts[0],
        }
    };

    let aspect_idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].aspects.is_some()).collect();
    model.aspects = if aspect_idx.is_empty() {
        log::warn!("no aspect-level labels in training set; aspect heads predict not_present");
        (0..6)
            .map(|_| vec![LinearHead::constant(p, 1.0), LinearHead::constant(p, -1.0), LinearHead::constant(p, -1.0)])
            .collect()
    } else {
        let x: Vec<SparseRow> = aspect_idx.iter().map(|&i| rows[i].clone()).collect();
        let w: Vec<f64> = aspect_idx.iter().map(|&i| examples[i].weight).collect();
        let mut targets = Vec::with_capacity(18);
        for aspect in Aspect::ALL {
            for label in AspectLabel::ALL {
                targets.push(
                    aspect_idx
                        .iter()
                        .map(|&i| if examples[i].aspects.unwrap().get(aspect) == label { 1.0 } else { -1.0 })
                        .collect::<Vec<f64>>(),
                );
            }
        }
        let fit = ridge_fit(&x, p, &targets, &w, config.ridge_penalty, RidgeSolver::Auto)?;
        let mut heads: Vec<LinearHead> = fit
            .coefs
            .into_iter()
            .zip(fit.intercepts)
            .map(|(weights, intercept)| LinearHead { weights, intercept })
            .collect();
        let mut out = Vec::with_capacity(6);
        for _ in 0..6 {
            let rest = heads.split_off(3);
            out.push(heads);
            heads = rest;
        }
        out
    };
    Ok(model)
}
