//! Certainty scorers behind one interface: a hedge-count linear model, a
//! bag-of-n-grams ridge model, and a client for an external scorer process.

pub mod bow;
pub mod external;
pub mod hedge;
pub mod ridge;
pub mod stub;

use serde::{Deserialize, Serialize};

use crate::corpus::{AspectLabel, AspectLabels, ScientificFinding};
use crate::error::{Error, Result};

pub const MIN_CERTAINTY: f64 = 1.0;
pub const MAX_CERTAINTY: f64 = 6.0;

pub fn clamp_certainty(v: f64) -> f64 {
    v.clamp(MIN_CERTAINTY, MAX_CERTAINTY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyScore {
    pub finding_id: String,
    pub sentence_certainty: f64,
    pub aspects: AspectLabels,
    pub scorer_id: String,
    pub scorer_version: String,
}

pub trait Scorer {
    fn scorer_id(&self) -> &str;
    fn scorer_version(&self) -> &str;

    fn score(&self, finding: &ScientificFinding) -> Result<CertaintyScore>;

    fn score_all(&self, findings: &[ScientificFinding]) -> Result<Vec<CertaintyScore>> {
        findings.iter().map(|f| self.score(f)).collect()
    }
}

pub(crate) fn require_text(finding: &ScientificFinding) -> Result<()> {
    if finding.text.trim().is_empty() {
        return Err(Error::InvalidInput(format!("{}: empty finding text", finding.finding_id)));
    }
    Ok(())
}

/// Argmax over the three per-class scores. Exact ties go to the later class
/// in not_present < certain < uncertain order.
pub fn decide_aspect(scores: [f64; 3]) -> AspectLabel {
    let mut best = 0;
    for k in 1..3 {
        if scores[k] >= scores[best] {
            best = k;
        }
    }
    AspectLabel::ALL[best]
}

/// A trained model as stored on disk: `{"kind": "bow" | "hedge", "model": {...}}`.
pub enum SavedModel {
    Bow(bow::BowModel),
    Hedge(hedge::HedgeScorer),
}

impl SavedModel {
    pub fn to_json(&self) -> Result<String> {
        let (kind, model) = match self {
            SavedModel::Bow(m) => ("bow", serde_json::to_value(m)),
            SavedModel::Hedge(s) => ("hedge", serde_json::to_value(&s.model)),
        };
        let model = model.map_err(|e| Error::json("model", e))?;
        serde_json::to_string(&serde_json::json!({ "kind": kind, "model": model })).map_err(|e| Error::json("model", e))
    }

    pub fn from_json(s: &str) -> Result<SavedModel> {
        #[derive(Deserialize)]
        struct Envelope {
            kind: String,
            model: serde_json::Value,
        }
        let env: Envelope = serde_json::from_str(s).map_err(|e| Error::json("model file", e))?;
        match env.kind.as_str() {
            "bow" => Ok(SavedModel::Bow(bow::BowModel::from_json(&env.model.to_string())?)),
            "hedge" => {
                let m: hedge::HedgeModel = serde_json::from_value(env.model).map_err(|e| Error::json("hedge model", e))?;
                Ok(SavedModel::Hedge(hedge::HedgeScorer::new(m)?))
            }
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn scorer(&self) -> &dyn Scorer {
        match self {
            SavedModel::Bow(m) => m,
            SavedModel::Hedge(s) => s,
        }
    }
}
