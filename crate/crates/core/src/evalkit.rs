//! Splits, hedge-stratified sampling, and evaluation/agreement metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationKind, AnnotationRecord, Aspect, AspectLabel, GoldLabel, ScientificFinding};
use crate::error::{Error, Result};
use crate::lexicon::{count_hedges, Lexicon};
use crate::scoring::CertaintyScore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    #[serde(default)]
    pub random_test: Vec<String>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test), ("random_test", &self.random_test)] {
            for id in ids {
                if let Some(prev) = seen.insert(id.as_str(), name) {
                    return Err(Error::InvalidInput(format!("split id {id} appears in both {prev} and {name}")));
                }
            }
        }
        Ok(())
    }

    /// Test partition plus the random set, in that order.
    pub fn full_test(&self) -> Vec<&str> {
        self.test.iter().chain(&self.random_test).map(String::as_str).collect()
    }

    pub fn from_json(s: &str) -> Result<SplitSpec> {
        let spec: SplitSpec = serde_json::from_str(s).map_err(|e| Error::json("split", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes") + "\n"
    }
}

/// Shuffles the ids outside the random set and cuts them 8:1:1. The input
/// order does not matter.
pub fn make_split(ids: &[String], random_test: &[String], seed: u64) -> SplitSpec {
    let random: BTreeSet<&String> = random_test.iter().collect();
    let mut pool: Vec<String> = ids
        .iter()
        .filter(|id| !random.contains(id))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = pool.len();
    let n_train = (n as f64 * 0.8).round() as usize;
    let n_val = ((n as f64 * 0.1).round() as usize).min(n - n_train);
    let test = pool.split_off(n_train + n_val);
    let val = pool.split_off(n_train);
    SplitSpec {
        seed,
        train: pool,
        val,
        test,
        random_test: random.into_iter().cloned().collect(),
    }
}

pub const DEFAULT_STRATA_PROPORTIONS: [f64; 3] = [0.5, 0.35, 0.15];
pub const STRATUM_NAMES: [&str; 3] = ["0 hedges", "1 hedge", "2+ hedges"];

/// Integer stratum sizes summing to `n`: floors of `n * p`, with the
/// remainder handed out by largest fractional part (earlier stratum on ties).
pub fn stratum_sizes(n: usize, proportions: [f64; 3]) -> Result<[usize; 3]> {
    let sum: f64 = proportions.iter().sum();
    if proportions.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("stratum proportions must be nonnegative and sum to 1, got {proportions:?}")));
    }
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = n - sizes.iter().sum::<usize>();
    for k in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    Ok(sizes)
}

pub fn hedge_stratum(hedges: usize) -> usize {
    hedges.min(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeSample {
    /// Sorted by finding id.
    pub findings: Vec<ScientificFinding>,
    pub stratum_counts: [usize; 3],
}

/// Uniform sample without replacement within each hedge stratum.
pub fn stratified_hedge_sample(
    findings: &[ScientificFinding],
    n: usize,
    proportions: [f64; 3],
    seed: u64,
    hedges: &Lexicon,
) -> Result<HedgeSample> {
    let sizes = stratum_sizes(n, proportions)?;
    let mut strata: [Vec<&ScientificFinding>; 3] = Default::default();
    for f in findings {
        strata[hedge_stratum(count_hedges(&f.text, hedges))].push(f);
    }
    for (k, members) in strata.iter_mut().enumerate() {
        if members.len() < sizes[k] {
            return Err(Error::StratumTooSmall {
                stratum: STRATUM_NAMES[k].to_string(),
                required: sizes[k],
                available: members.len(),
            });
        }
        members.sort_by(|a, b| a.finding_id.cmp(&b.finding_id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for (k, members) in strata.iter().enumerate() {
        for i in rand::seq::index::sample(&mut rng, members.len(), sizes[k]) {
            picked.push(members[i].clone());
        }
    }
    picked.sort_by(|a, b| a.finding_id.cmp(&b.finding_id));
    Ok(HedgeSample {
        findings: picked,
        stratum_counts: sizes,
    })
}

pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!("pearson_r: {} xs vs {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("pearson_r needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first variable"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second variable"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One-vs-rest F1 for `positive`; 0 when precision + recall is 0.
pub fn binary_f1<T: PartialEq>(gold: &[T], pred: &[T], positive: &T) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!("binary_f1: {} gold vs {} predicted labels", gold.len(), pred.len())));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        match (g == positive, p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMetric {
    Nominal,
    Interval,
}

/// Krippendorff's alpha from the coincidence matrix. Each unit lists the
/// values it received; units with fewer than two values are not pairable.
pub fn krippendorff_alpha(units: &[Vec<f64>], metric: AlphaMetric) -> Result<f64> {
    let mut values: Vec<f64> = units.iter().filter(|u| u.len() >= 2).flatten().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("agreement values must be finite".into()));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.is_empty() {
        return Err(Error::NoPairableValues);
    }
    let k = values.len();
    let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value indexed");

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in units.iter().filter(|u| u.len() >= 2) {
        let w = 1.0 / (unit.len() - 1) as f64;
        for (i, &a) in unit.iter().enumerate() {
            for (j, &b) in unit.iter().enumerate() {
                if i != j {
                    coincidence[index(a)][index(b)] += w;
                }
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let delta = |c: usize, k: usize| match metric {
        AlphaMetric::Nominal => f64::from(u8::from(c != k)),
        AlphaMetric::Interval => (values[c] - values[k]).powi(2),
    };
    let (mut observed, mut expected) = (0.0, 0.0);
    for c in 0..k {
        for j in 0..k {
            let d = delta(c, j);
            observed += coincidence[c][j] * d;
            expected += marginals[c] * marginals[j] * d;
        }
    }
    if expected == 0.0 {
        return Err(Error::Degenerate("every pairable value is identical; alpha is undefined".into()));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub sentence: Option<f64>,
    pub aspects: Vec<(Aspect, Option<f64>)>,
    /// Mean over the aspects whose alpha is defined.
    pub aspect_mean: Option<f64>,
}

/// Interval alpha over Likert ratings and nominal alpha per aspect. A task
/// without pairable or varying values reports `None`.
pub fn annotation_agreement(records: &[AnnotationRecord]) -> AgreementReport {
    let mut likert: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut aspects: BTreeMap<&str, Vec<[f64; 6]>> = BTreeMap::new();
    for r in records {
        match r.kind {
            AnnotationKind::SentenceLevel => {
                if let Some(v) = r.likert {
                    likert.entry(&r.finding_id).or_default().push(f64::from(v));
                }
            }
            AnnotationKind::AspectLevel => {
                if let Some(labels) = &r.aspect_labels {
                    let mut row = [0.0; 6];
                    for (a, l) in labels.iter() {
                        row[a.index()] = l.index() as f64;
                    }
                    aspects.entry(&r.finding_id).or_default().push(row);
                }
            }
            AnnotationKind::BadText => {}
        }
    }
    let units: Vec<Vec<f64>> = likert.into_values().collect();
    let sentence = krippendorff_alpha(&units, AlphaMetric::Interval).ok();
    let per_aspect: Vec<(Aspect, Option<f64>)> = Aspect::ALL
        .into_iter()
        .map(|a| {
            let units: Vec<Vec<f64>> = aspects.values().map(|rows| rows.iter().map(|r| r[a.index()]).collect()).collect();
            (a, krippendorff_alpha(&units, AlphaMetric::Nominal).ok())
        })
        .collect();
    let defined: Vec<f64> = per_aspect.iter().filter_map(|(_, v)| *v).collect();
    let aspect_mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    AgreementReport {
        sentence,
        aspects: per_aspect,
        aspect_mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceEval {
    pub r_full_test: f64,
    pub n_full_test: usize,
    pub r_random_set: Option<f64>,
    pub n_random_set: usize,
}

fn scores_by_id(scores: &[CertaintyScore]) -> HashMap<&str, &CertaintyScore> {
    scores.iter().map(|s| (s.finding_id.as_str(), s)).collect()
}

fn paired_sentence(
    ids: &[&str],
    gold: &BTreeMap<String, GoldLabel>,
    scores: &HashMap<&str, &CertaintyScore>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut pred, mut truth) = (Vec::new(), Vec::new());
    for id in ids {
        let Some(g) = gold.get(*id).and_then(|g| g.sentence) else {
            continue;
        };
        let s = scores
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("no score for evaluation item {id}")))?;
        pred.push(s.sentence_certainty);
        truth.push(g);
    }
    Ok((pred, truth))
}

/// Pearson r of predicted vs gold sentence certainty on the test partition
/// plus random set, and on the random set alone (when it is non-empty).
pub fn evaluate_sentence(scores: &[CertaintyScore], gold: &BTreeMap<String, GoldLabel>, split: &SplitSpec) -> Result<SentenceEval> {
    let by_id = scores_by_id(scores);
    let (p, t) = paired_sentence(&split.full_test(), gold, &by_id)?;
    let r_full_test = pearson_r(&p, &t)?;
    let random: Vec<&str> = split.random_test.iter().map(String::as_str).collect();
    let (rp, rt) = paired_sentence(&random, gold, &by_id)?;
    let r_random_set = if rp.is_empty() { None } else { Some(pearson_r(&rp, &rt)?) };
    Ok(SentenceEval {
        r_full_test,
        n_full_test: p.len(),
        r_random_set,
        n_random_set: rp.len(),
    })
}

pub const DEFAULT_F1_CLASSES: [AspectLabel; 2] = [AspectLabel::Certain, AspectLabel::Uncertain];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Cell {
    pub aspect: Aspect,
    pub class: AspectLabel,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectEval {
    pub cells: Vec<F1Cell>,
    pub mean_f1: f64,
    pub n_items: usize,
}

/// Binary F1 per (aspect, class) over the full test set, plus the
/// unweighted mean of the reported cells.
pub fn evaluate_aspects(
    scores: &[CertaintyScore],
    gold: &BTreeMap<String, GoldLabel>,
    split: &SplitSpec,
    classes: &[AspectLabel],
) -> Result<AspectEval> {
    if classes.is_empty() {
        return Err(Error::InvalidInput("no aspect classes to evaluate".into()));
    }
    let by_id = scores_by_id(scores);
    let mut pairs = Vec::new();
    for id in split.full_test() {
        let Some(g) = gold.get(id).and_then(|g| g.aspects.as_ref()) else {
            continue;
        };
        let s = by_id
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("no score for evaluation item {id}")))?;
        pairs.push((*g, s.aspects));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no aspect-labelled items in the test set".into()));
    }
    let mut cells = Vec::new();
    for aspect in Aspect::ALL {
        let g: Vec<AspectLabel> = pairs.iter().map(|(g, _)| g.get(aspect)).collect();
        let p: Vec<AspectLabel> = pairs.iter().map(|(_, p)| p.get(aspect)).collect();
        for &class in classes {
            cells.push(F1Cell {
                aspect,
                class,
                f1: binary_f1(&g, &p, &class)?,
                support: g.iter().filter(|l| **l == class).count(),
            });
        }
    }
    let mean_f1 = cells.iter().map(|c| c.f1).sum::<f64>() / cells.len() as f64;
    Ok(AspectEval {
        cells,
        mean_f1,
        n_items: pairs.len(),
    })
}
