//! Descriptive tables over annotated findings: certainty by hedge count, and
//! certainty by aspect label.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{Aspect, AspectLabel, AspectLabels, GoldLabel, ScientificFinding};
use crate::error::Result;
use crate::evalkit::pearson_r;
use crate::lexicon::{count_hedges, Lexicon};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub hedges: usize,
    pub n: usize,
    pub mean_certainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeCurve {
    pub rows: Vec<CurveRow>,
    /// Pearson r over the raw (hedge count, certainty) points.
    pub r: f64,
    pub n: usize,
}

/// (hedge count, gold certainty) for every finding with a sentence label.
pub fn hedge_points(findings: &[ScientificFinding], gold: &BTreeMap<String, GoldLabel>, hedges: &Lexicon) -> Vec<(usize, f64)> {
    findings
        .iter()
        .filter_map(|f| {
            let g = gold.get(&f.finding_id)?.sentence?;
            Some((count_hedges(&f.text, hedges), g))
        })
        .collect()
}

pub fn hedge_certainty_curve(points: &[(usize, f64)]) -> Result<HedgeCurve> {
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let r = pearson_r(&xs, &ys)?;
    let mut groups: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for &(h, y) in points {
        let g = groups.entry(h).or_default();
        g.0 += 1;
        g.1 += y;
    }
    Ok(HedgeCurve {
        rows: groups
            .into_iter()
            .map(|(hedges, (n, sum))| CurveRow {
                hedges,
                n,
                mean_certainty: sum / n as f64,
            })
            .collect(),
        r,
        n: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationCell {
    pub aspect: Aspect,
    pub label: AspectLabel,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Group mean minus the mean over all items.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association {
    pub overall_mean: f64,
    pub n: usize,
    pub cells: Vec<AssociationCell>,
    /// (aspect, label) groups with no members.
    pub omitted: Vec<(Aspect, AspectLabel)>,
}

/// Mean sentence certainty of items whose aspect is certain, and of items
/// whose aspect is uncertain, for every aspect.
pub fn aspect_sentence_association(items: &[(AspectLabels, f64)]) -> Association {
    let n = items.len();
    let overall_mean = if n == 0 { f64::NAN } else { items.iter().map(|i| i.1).sum::<f64>() / n as f64 };
    let mut cells = Vec::new();
    let mut omitted = Vec::new();
    for aspect in Aspect::ALL {
        for label in [AspectLabel::Certain, AspectLabel::Uncertain] {
            let ys: Vec<f64> = items.iter().filter(|(l, _)| l.get(aspect) == label).map(|i| i.1).collect();
            if ys.is_empty() {
                omitted.push((aspect, label));
                continue;
            }
            let k = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / k;
            let se = if ys.len() > 1 {
                (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
            } else {
                f64::NAN
            };
            cells.push(AssociationCell {
                aspect,
                label,
                n: ys.len(),
                mean,
                se,
                ci_lo: mean - 1.96 * se,
                ci_hi: mean + 1.96 * se,
                relative: mean - overall_mean,
            });
        }
    }
    Association {
        overall_mean,
        n,
        cells,
        omitted,
    }
}

/// Items labelled at both levels.
pub fn association_items(gold: &BTreeMap<String, GoldLabel>) -> Vec<(AspectLabels, f64)> {
    gold.values().filter_map(|g| Some((g.aspects?, g.sentence?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn curve_groups_and_correlation() {
        let pts = vec![(0, 5.0), (0, 4.0), (1, 3.0), (2, 2.0), (2, 2.5)];
        let c = hedge_certainty_curve(&pts).unwrap();
        assert_eq!(c.rows.iter().map(|r| (r.hedges, r.n)).collect::<Vec<_>>(), vec![(0, 2), (1, 1), (2, 2)]);
        assert_eq!(c.rows[0].mean_certainty, 4.5);
        assert!(c.r < 0.0);
        let neg: Vec<(usize, f64)> = (0..6).map(|h| (h, -(h as f64))).collect();
        assert!((hedge_certainty_curve(&neg).unwrap().r + 1.0).abs() < 1e-12);
        assert!(matches!(hedge_certainty_curve(&[(0, 3.0), (1, 3.0)]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn planted_probability_gap() {
        let mut items = Vec::new();
        for i in 0..10 {
            let mut l = AspectLabels::default();
            let base = 3.0 + (i % 3) as f64;
            l.set(Aspect::Probability, AspectLabel::Certain);
            items.push((l, base));
            l.set(Aspect::Probability, AspectLabel::Uncertain);
            items.push((l, base - 1.0));
        }
        let a = aspect_sentence_association(&items);
        let mean = |label| a.cells.iter().find(|c| c.aspect == Aspect::Probability && c.label == label).unwrap().mean;
        assert!((mean(AspectLabel::Uncertain) - mean(AspectLabel::Certain) + 1.0).abs() < 1e-12);
        assert!(a.omitted.contains(&(Aspect::Number, AspectLabel::Certain)));
        assert_eq!(a.cells.len(), 2);
    }
}
