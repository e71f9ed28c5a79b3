//! Linear model on a single feature: the number of hedges in the finding.

use serde::{Deserialize, Serialize};

use super::{clamp_certainty, decide_aspect, require_text, CertaintyScore, Scorer};
use crate::corpus::{Aspect, AspectLabel, AspectLabels, ScientificFinding};
use crate::error::{Error, Result};
use crate::lexicon::{count_hedges, Lexicon, MatchMode};

pub const HEDGE_SCORER_ID: &str = "hedge-linear";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line through `(hedge_count, gold)` points. Needs at least
/// two distinct hedge counts.
pub fn fit_hedge_model(points: &[(usize, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    if points.is_empty() {
        return Err(Error::Degenerate("no training points".into()));
    }
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all hedge counts are equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        intercept: my - slope * mx,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeModel {
    pub version: String,
    pub sentence: LinearFit,
    /// Per aspect, one line per label scoring -1/+1 membership. Empty when
    /// the model was trained without aspect labels.
    #[serde(default)]
    pub aspects: Vec<[LinearFit; 3]>,
    pub lexicon_name: String,
    /// Lexicon source text, so a saved model scores without external files.
    pub lexicon_text: String,
    pub match_mode: MatchMode,
}

/// Fits the sentence line and, when aspect labels are given, a
/// least-squares line per (aspect, label). A label whose line is degenerate
/// falls back to a constant at the mean target.
pub fn fit_hedge_scorer(
    sentence_points: &[(usize, f64)],
    aspect_points: &[(usize, AspectLabels)],
    lexicon: &Lexicon,
    lexicon_text: &str,
) -> Result<HedgeModel> {
    let sentence = fit_hedge_model(sentence_points)?;
    let mut aspects = Vec::new();
    if !aspect_points.is_empty() {
        for aspect in Aspect::ALL {
            let mut heads = [LinearFit { intercept: 0.0, slope: 0.0 }; 3];
            for label in AspectLabel::ALL {
                let pts: Vec<(usize, f64)> = aspect_points
                    .iter()
                    .map(|(h, l)| (*h, if l.get(aspect) == label { 1.0 } else { -1.0 }))
                    .collect();
                heads[label.index()] = fit_hedge_model(&pts).unwrap_or_else(|_| LinearFit {
                    intercept: pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
                    slope: 0.0,
                });
            }
            aspects.push(heads);
        }
    }
    Ok(HedgeModel {
        version: env!("CARGO_PKG_VERSION").to_string(),
        sentence,
        aspects,
        lexicon_name: lexicon.name().to_string(),
        lexicon_text: lexicon_text.to_string(),
        match_mode: lexicon.match_mode(),
    })
}

/// A hedge model bound to its lexicon.
#[derive(Debug, Clone)]
pub struct HedgeScorer {
    pub model: HedgeModel,
    lexicon: Lexicon,
}

impl HedgeScorer {
    pub fn new(model: HedgeModel) -> Result<HedgeScorer> {
        let lexicon = Lexicon::parse(&model.lexicon_name, &model.lexicon_text, model.match_mode)?;
        Ok(HedgeScorer { model, lexicon })
    }

    /// Scorer with fixed coefficients and no aspect heads.
    pub fn with_weights(intercept: f64, slope: f64, lexicon_text: &str) -> Result<HedgeScorer> {
        HedgeScorer::new(HedgeModel {
            version: env!("CARGO_PKG_VERSION").to_string(),
            sentence: LinearFit { intercept, slope },
            aspects: Vec::new(),
            lexicon_name: "inline".into(),
            lexicon_text: lexicon_text.to_string(),
            match_mode: MatchMode::Phrase,
        })
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl Scorer for HedgeScorer {
    fn scorer_id(&self) -> &str {
        HEDGE_SCORER_ID
    }

    fn scorer_version(&self) -> &str {
        &self.model.version
    }

    fn score(&self, finding: &ScientificFinding) -> Result<CertaintyScore> {
        require_text(finding)?;
        let hedges = count_hedges(&finding.text, &self.lexicon) as f64;
        let mut aspects = AspectLabels::default();
        for (aspect, heads) in Aspect::ALL.into_iter().zip(&self.model.aspects) {
            aspects.set(aspect, decide_aspect([heads[0].predict(hedges), heads[1].predict(hedges), heads[2].predict(hedges)]));
        }
        Ok(CertaintyScore {
            finding_id: finding.finding_id.clone(),
            sentence_certainty: clamp_certainty(self.model.sentence.predict(hedges)),
            aspects,
            scorer_id: HEDGE_SCORER_ID.to_string(),
            scorer_version: self.model.version.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn finding(text: &str) -> ScientificFinding {
        ScientificFinding {
            finding_id: "f".into(),
            text: text.into(),
            source: Source::Abstract,
            origin_doi: "d".into(),
            origin_article_id: None,
            extraction_keyword: None,
            char_span: (0, text.len()),
        }
    }

    #[test]
    fn linear_form() {
        let s = HedgeScorer::with_weights(4.0, -0.5, "may\nmight").unwrap();
        assert_eq!(s.score(&finding("The drug reduces risk.")).unwrap().sentence_certainty, 4.0);
        assert_eq!(s.score(&finding("The drug may, or might, reduce risk.")).unwrap().sentence_certainty, 3.0);
    }

    #[test]
    fn exact_line() {
        let fit = fit_hedge_model(&[(0, 4.0), (1, 3.0), (2, 2.0)]).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_counts() {
        assert!(matches!(fit_hedge_model(&[(0, 4.0), (0, 2.0)]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(3..15);
            let pts: Vec<(usize, f64)> = (0..n).map(|_| (rng.gen_range(0..5), rng.gen_range(1.0..6.0))).collect();
            if pts.iter().all(|p| p.0 == pts[0].0) {
                continue;
            }
            let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { pts[i].0 as f64 });
            let y = DVector::from_iterator(n, pts.iter().map(|p| p.1));
            let beta = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * y;
            let fit = fit_hedge_model(&pts).unwrap();
            assert!((fit.intercept - beta[0]).abs() < 1e-10);
            assert!((fit.slope - beta[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_text_rejected() {
        let s = HedgeScorer::with_weights(4.0, -0.5, "may").unwrap();
        assert!(s.score(&finding("  ")).is_err());
    }
}
