//! Design matrices and fits for the research questions, plus the two
//! descriptive figures.
//!
//! | spec | rows | dependent | main predictors |
//! |------|------|-----------|-----------------|
//! | rq1  | both sides of every matched pair | sentence certainty | source |
//! | rq2  | same | 1[aspect = certain], 1[aspect = uncertain] | source |
//! | rq3  | matched pairs | news certainty | abstract aspect labels, abstract certainty |
//! | rq4  | abstract findings; news findings | sentence certainty | impact factor |
//! | rq5  | same | sentence certainty | number of authors |
//!
//! Every model controls for field (fixed effect), author rank, affiliation
//! rank, impact factor, finding length and reading ease; news-side models
//! also take the outlet as a fixed effect.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{Aspect, AspectLabel, AspectLabels, GoldLabel, NewsArticle, PaperMeta, ScientificFinding, Source};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, render_csv_with_comments, Manifest};
use crate::lexicon::Lexicon;
use crate::matching::MatchedPair;
use crate::scoring::CertaintyScore;

use super::descriptive::{aspect_sentence_association, association_items, hedge_certainty_curve, hedge_points};
use super::ols::{marginal_effects, ols_fit, Frame, Margin, RegressionResult, RegressionSpec, SeKind, VarKind};
use super::readability::flesch_reading_ease;
use super::svg::{bar_chart, Bar};

pub const RQ_NAMES: [&str; 7] = ["rq1", "rq2", "rq3", "rq4", "rq5", "fig2", "fig3"];

pub const AUTHOR_BINS: [&str; 7] = ["1", "2", "3", "4", "5", "6-10", "11+"];

pub struct RqInputs<'a> {
    pub papers: &'a [PaperMeta],
    pub news: &'a [NewsArticle],
    pub findings: &'a [ScientificFinding],
    pub scores: &'a [CertaintyScore],
    pub pairs: &'a [MatchedPair],
    pub gold: Option<&'a BTreeMap<String, GoldLabel>>,
    pub hedges: &'a Lexicon,
    pub se_kind: SeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub label: String,
    pub result: RegressionResult,
    pub margins: Vec<Margin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RqReport {
    pub name: String,
    pub models: Vec<ModelReport>,
    pub tables: Vec<Table>,
    pub charts: Vec<(String, String)>,
    /// Rows dropped for missing scores or metadata.
    pub dropped_rows: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
struct Covariates {
    certainty: f64,
    aspects: AspectLabels,
    field: String,
    author_rank: f64,
    affiliation_rank: f64,
    impact: f64,
    num_authors: u32,
    length: f64,
    flesch: f64,
    outlet: Option<String>,
}

struct Lookup<'a> {
    findings: HashMap<&'a str, &'a ScientificFinding>,
    papers: HashMap<&'a str, &'a PaperMeta>,
    news: HashMap<&'a str, &'a NewsArticle>,
    scores: HashMap<&'a str, &'a CertaintyScore>,
}

impl<'a> Lookup<'a> {
    fn new(inp: &RqInputs<'a>) -> Lookup<'a> {
        Lookup {
            findings: inp.findings.iter().map(|f| (f.finding_id.as_str(), f)).collect(),
            papers: inp.papers.iter().map(|p| (p.doi.as_str(), p)).collect(),
            news: inp.news.iter().map(|n| (n.article_id.as_str(), n)).collect(),
            scores: inp.scores.iter().map(|s| (s.finding_id.as_str(), s)).collect(),
        }
    }

    /// None when the score, paper, or (for news) article is missing, or the
    /// text has no words.
    fn covariates(&self, finding_id: &str) -> Option<Covariates> {
        let f = self.findings.get(finding_id)?;
        let s = self.scores.get(finding_id)?;
        let p = self.papers.get(f.origin_doi.as_str())?;
        let outlet = match f.source {
            Source::News => Some(self.news.get(f.origin_article_id.as_deref()?)?.outlet.clone()),
            Source::Abstract => None,
        };
        Some(Covariates {
            certainty: s.sentence_certainty,
            aspects: s.aspects,
            field: p.field.clone(),
            author_rank: p.author_rank,
            affiliation_rank: p.affiliation_rank,
            impact: p.journal_impact_factor,
            num_authors: p.num_authors,
            length: f.text.split_whitespace().count() as f64,
            flesch: flesch_reading_ease(&f.text).ok()?,
            outlet,
        })
    }
}

const CONTROLS: [&str; 5] = ["author_rank", "affiliation_rank", "journal_impact_factor", "finding_length", "flesch"];

fn control_columns(frame: &mut Frame, rows: &[&Covariates]) -> Result<()> {
    frame.categorical("field", rows.iter().map(|r| r.field.clone()).collect())?;
    frame.numeric("author_rank", rows.iter().map(|r| r.author_rank).collect())?;
    frame.numeric("affiliation_rank", rows.iter().map(|r| r.affiliation_rank).collect())?;
    frame.numeric("journal_impact_factor", rows.iter().map(|r| r.impact).collect())?;
    frame.numeric("num_authors", rows.iter().map(|r| f64::from(r.num_authors)).collect())?;
    frame.numeric("finding_length", rows.iter().map(|r| r.length).collect())?;
    frame.numeric("flesch", rows.iter().map(|r| r.flesch).collect())?;
    Ok(())
}

fn spec(name: &str, dependent: &str, predictors: Vec<(String, VarKind)>, fixed: &[&str], filter: &str) -> RegressionSpec {
    RegressionSpec {
        name: name.to_string(),
        dependent: dependent.to_string(),
        predictors,
        fixed_effects: fixed.iter().map(|s| s.to_string()).collect(),
        sample_filter: filter.to_string(),
    }
}

fn continuous(names: &[&str]) -> Vec<(String, VarKind)> {
    names.iter().map(|n| (n.to_string(), VarKind::Continuous)).collect()
}

fn fit_with_margins(label: &str, frame: &Frame, spec: &RegressionSpec, se: SeKind, margin_vars: &[&str]) -> Result<ModelReport> {
    let result = ols_fit(frame, spec, se)?;
    let mut margins = Vec::new();
    for v in margin_vars {
        margins.extend(marginal_effects(&result, v)?);
    }
    Ok(ModelReport {
        label: label.to_string(),
        result,
        margins,
    })
}

/// Both sides of every matched pair whose covariates resolve; the count of
/// unresolved pairs is returned alongside.
fn pair_rows(inp: &RqInputs, lookup: &Lookup) -> (Vec<(Covariates, Covariates)>, usize) {
    let mut rows = Vec::new();
    let mut dropped = 0;
    for p in inp.pairs {
        match (lookup.covariates(&p.abstract_finding_id), lookup.covariates(&p.news_finding_id)) {
            (Some(a), Some(n)) => rows.push((a, n)),
            _ => dropped += 1,
        }
    }
    (rows, dropped)
}

fn source_frame(rows: &[(Covariates, Covariates)]) -> Result<(Frame, Vec<&Covariates>)> {
    let stacked: Vec<&Covariates> = rows.iter().flat_map(|(a, n)| [a, n]).collect();
    let mut frame = Frame::new(stacked.len());
    let sources = rows.iter().flat_map(|_| ["abstract".to_string(), "news".to_string()]).collect();
    frame.categorical("source", sources)?;
    frame.numeric("certainty", stacked.iter().map(|r| r.certainty).collect())?;
    control_columns(&mut frame, &stacked)?;
    Ok((frame, stacked))
}

fn require_rows(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput(format!("{name}: no usable rows (check pairs, scores and metadata)")));
    }
    Ok(())
}

fn rq1(inp: &RqInputs) -> Result<RqReport> {
    let lookup = Lookup::new(inp);
    let (rows, dropped) = pair_rows(inp, &lookup);
    require_rows("rq1", rows.len())?;
    let (frame, _) = source_frame(&rows)?;
    let mut preds = vec![("source".to_string(), VarKind::Categorical)];
    preds.extend(continuous(&CONTROLS));
    let s = spec("rq1", "certainty", preds, &["field"], "both findings of every matched pair");
    Ok(RqReport {
        name: "rq1".into(),
        models: vec![fit_with_margins("rq1", &frame, &s, inp.se_kind, &["source"])?],
        dropped_rows: dropped,
        ..Default::default()
    })
}

fn rq2(inp: &RqInputs) -> Result<RqReport> {
    let lookup = Lookup::new(inp);
    let (rows, dropped) = pair_rows(inp, &lookup);
    require_rows("rq2", rows.len())?;
    let (base, stacked) = source_frame(&rows)?;
    let mut models = Vec::new();
    for aspect in Aspect::ALL {
        for label in [AspectLabel::Certain, AspectLabel::Uncertain] {
            let dep = format!("{}_{}", aspect.as_str(), label.as_str());
            let mut frame = base.clone();
            frame.numeric(&dep, stacked.iter().map(|r| f64::from(u8::from(r.aspects.get(aspect) == label))).collect())?;
            let mut preds = vec![("source".to_string(), VarKind::Categorical)];
            preds.extend(continuous(&CONTROLS));
            let s = spec(&format!("rq2_{dep}"), &dep, preds, &["field"], "both findings of every matched pair; linear probability model");
            models.push(fit_with_margins(&format!("rq2_{dep}"), &frame, &s, inp.se_kind, &["source"])?);
        }
    }
    Ok(RqReport {
        name: "rq2".into(),
        models,
        dropped_rows: dropped,
        ..Default::default()
    })
}

fn rq3(inp: &RqInputs) -> Result<RqReport> {
    let lookup = Lookup::new(inp);
    let (rows, dropped) = pair_rows(inp, &lookup);
    require_rows("rq3", rows.len())?;
    let news: Vec<&Covariates> = rows.iter().map(|(_, n)| n).collect();
    let mut frame = Frame::new(rows.len());
    frame.numeric("news_certainty", news.iter().map(|r| r.certainty).collect())?;
    frame.numeric("abstract_certainty", rows.iter().map(|(a, _)| a.certainty).collect())?;
    frame.categorical("outlet", news.iter().map(|r| r.outlet.clone().unwrap_or_default()).collect())?;
    control_columns(&mut frame, &news)?;

    let order: Vec<String> = AspectLabel::ALL.iter().map(|l| l.as_str().to_string()).collect();
    let mut preds = Vec::new();
    let mut margin_vars = Vec::new();
    let mut notes = Vec::new();
    for aspect in Aspect::ALL {
        let name = format!("abstract_{}", aspect.as_str());
        let values: Vec<String> = rows.iter().map(|(a, _)| a.aspects.get(aspect).as_str().to_string()).collect();
        if values.iter().all(|v| *v == values[0]) {
            notes.push(format!("{name} dropped: every abstract finding is {}", values[0]));
            continue;
        }
        frame.categorical_ordered(&name, values, order.clone())?;
        preds.push((name.clone(), VarKind::Categorical));
        margin_vars.push(name);
    }
    preds.push(("abstract_certainty".to_string(), VarKind::Continuous));
    preds.extend(continuous(&CONTROLS));
    let s = spec("rq3", "news_certainty", preds, &["field", "outlet"], "news finding of every matched pair");
    let vars: Vec<&str> = margin_vars.iter().map(String::as_str).collect();
    Ok(RqReport {
        name: "rq3".into(),
        models: vec![fit_with_margins("rq3", &frame, &s, inp.se_kind, &vars)?],
        dropped_rows: dropped,
        notes,
        ..Default::default()
    })
}

/// Type-7 quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartile bucket labels `q1`..`q4`; a value on a cut point goes to the lower bucket.
pub fn quartile_buckets(values: &[f64]) -> Vec<String> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [0.25, 0.5, 0.75].map(|q| quantile(&sorted, q));
    values
        .iter()
        .map(|v| format!("q{}", 1 + cuts.iter().filter(|c| v > c).count()))
        .collect()
}

pub fn author_bin(n: u32) -> &'static str {
    match n {
        0..=5 => AUTHOR_BINS[n.saturating_sub(1) as usize],
        6..=10 => AUTHOR_BINS[5],
        _ => AUTHOR_BINS[6],
    }
}

fn side_frame(rows: &[&Covariates], news: bool) -> Result<Frame> {
    let mut frame = Frame::new(rows.len());
    frame.numeric("certainty", rows.iter().map(|r| r.certainty).collect())?;
    control_columns(&mut frame, rows)?;
    frame.categorical_ordered("jif_bucket", quartile_buckets(&rows.iter().map(|r| r.impact).collect::<Vec<_>>()), ["q1", "q2", "q3", "q4"].map(String::from).to_vec())?;
    frame.categorical_ordered(
        "authors_bucket",
        rows.iter().map(|r| author_bin(r.num_authors).to_string()).collect(),
        AUTHOR_BINS.map(String::from).to_vec(),
    )?;
    if news {
        frame.categorical("outlet", rows.iter().map(|r| r.outlet.clone().unwrap_or_default()).collect())?;
    }
    Ok(frame)
}

fn rq45(inp: &RqInputs, name: &str) -> Result<RqReport> {
    let lookup = Lookup::new(inp);
    let (focus, bucket, other) = if name == "rq4" {
        ("journal_impact_factor", "jif_bucket", "num_authors")
    } else {
        ("num_authors", "authors_bucket", "journal_impact_factor")
    };
    let mut report = RqReport {
        name: name.into(),
        ..Default::default()
    };
    for source in [Source::Abstract, Source::News] {
        let side = source.to_string();
        let candidates: Vec<&ScientificFinding> = inp.findings.iter().filter(|f| f.source == source).collect();
        let rows: Vec<Covariates> = candidates.iter().filter_map(|f| lookup.covariates(&f.finding_id)).collect();
        report.dropped_rows += candidates.len() - rows.len();
        if rows.is_empty() {
            report.notes.push(format!("{side} models skipped: no scored {side} findings with metadata"));
            continue;
        }
        let refs: Vec<&Covariates> = rows.iter().collect();
        let is_news = source == Source::News;
        let frame = side_frame(&refs, is_news)?;
        let fixed: &[&str] = if is_news { &["field", "outlet"] } else { &["field"] };
        let filter = format!("all scored {side} findings");

        let controls: Vec<&str> = ["author_rank", "affiliation_rank", "finding_length", "flesch"].to_vec();
        let mut preds = continuous(&[focus, other]);
        preds.extend(continuous(&controls));
        let s = spec(&format!("{name}_{side}"), "certainty", preds, fixed, &filter);
        report.models.push(fit_with_margins(&format!("{name}_{side}"), &frame, &s, inp.se_kind, &[focus])?);

        let mut preds = vec![(bucket.to_string(), VarKind::Categorical)];
        preds.extend(continuous(&[other]));
        preds.extend(continuous(&controls));
        let s = spec(&format!("{name}_{side}_binned"), "certainty", preds, fixed, &filter);
        report.models.push(fit_with_margins(&format!("{name}_{side}_binned"), &frame, &s, inp.se_kind, &[bucket])?);
    }
    if report.models.is_empty() {
        return Err(Error::InvalidInput(format!("{name}: no scored findings with metadata")));
    }
    Ok(report)
}

fn require_gold<'a>(inp: &RqInputs<'a>, name: &str) -> Result<&'a BTreeMap<String, GoldLabel>> {
    inp.gold.ok_or_else(|| Error::InvalidInput(format!("{name} needs gold annotations")))
}

fn fig2(inp: &RqInputs) -> Result<RqReport> {
    let gold = require_gold(inp, "fig2")?;
    let curve = hedge_certainty_curve(&hedge_points(inp.findings, gold, inp.hedges))?;
    let rows = curve
        .rows
        .iter()
        .map(|r| vec![r.hedges.to_string(), r.n.to_string(), fmt_f64(r.mean_certainty)])
        .collect();
    let bars: Vec<Bar> = curve
        .rows
        .iter()
        .map(|r| Bar {
            label: r.hedges.to_string(),
            value: r.mean_certainty,
            lo: None,
            hi: None,
        })
        .collect();
    Ok(RqReport {
        name: "fig2".into(),
        tables: vec![Table {
            file: "fig2.csv".into(),
            comments: vec![format!("pearson_r: {}", fmt_f64(curve.r)), format!("n: {}", curve.n)],
            header: ["hedges", "n", "mean_certainty"].map(String::from).to_vec(),
            rows,
        }],
        charts: vec![("fig2.svg".into(), bar_chart(&format!("Certainty by hedge count (r = {:.2})", curve.r), "mean certainty", &bars))],
        ..Default::default()
    })
}

fn fig3(inp: &RqInputs) -> Result<RqReport> {
    let gold = require_gold(inp, "fig3")?;
    let assoc = aspect_sentence_association(&association_items(gold));
    if assoc.n == 0 {
        return Err(Error::InvalidInput("fig3: no findings labelled at both levels".into()));
    }
    let rows = assoc
        .cells
        .iter()
        .map(|c| {
            vec![
                c.aspect.as_str().to_string(),
                c.label.as_str().to_string(),
                c.n.to_string(),
                fmt_f64(c.mean),
                fmt_f64(c.se),
                fmt_f64(c.ci_lo),
                fmt_f64(c.ci_hi),
                fmt_f64(c.relative),
            ]
        })
        .collect();
    let mut comments = vec![format!("overall_mean: {}", fmt_f64(assoc.overall_mean)), format!("n: {}", assoc.n)];
    comments.extend(assoc.omitted.iter().map(|(a, l)| format!("omitted: {} {} (no members)", a.as_str(), l.as_str())));
    let bars: Vec<Bar> = assoc
        .cells
        .iter()
        .map(|c| Bar {
            label: format!("{} {}", c.aspect.as_str(), c.label.as_str()),
            value: c.relative,
            lo: Some(c.ci_lo - assoc.overall_mean),
            hi: Some(c.ci_hi - assoc.overall_mean),
        })
        .collect();
    Ok(RqReport {
        name: "fig3".into(),
        tables: vec![Table {
            file: "fig3.csv".into(),
            comments,
            header: ["aspect", "label", "n", "mean", "se", "ci_lo", "ci_hi", "relative"].map(String::from).to_vec(),
            rows,
        }],
        charts: vec![("fig3.svg".into(), bar_chart("Relative sentence-level certainty by aspect label", "certainty - mean", &bars))],
        ..Default::default()
    })
}

pub fn run_rq(name: &str, inp: &RqInputs) -> Result<RqReport> {
    let mut report = match name {
        "rq1" => rq1(inp),
        "rq2" => rq2(inp),
        "rq3" => rq3(inp),
        "rq4" | "rq5" => rq45(inp, name),
        "fig2" => fig2(inp),
        "fig3" => fig3(inp),
        other => Err(Error::InvalidInput(format!("unknown analysis `{other}`; expected one of {}", RQ_NAMES.join(", ")))),
    }?;
    for m in &report.models {
        if !m.margins.is_empty() {
            let bars: Vec<Bar> = m
                .margins
                .iter()
                .map(|g| Bar {
                    label: format!("{}={}", g.variable, g.level),
                    value: g.margin,
                    lo: Some(g.ci_lo),
                    hi: Some(g.ci_hi),
                })
                .collect();
            report.charts.push((format!("{}_margins.svg", m.label), bar_chart(&format!("Averaged marginal effects ({})", m.label), &m.result.dependent, &bars)));
        }
    }
    Ok(report)
}

fn fmt_p(p: f64) -> String {
    if p.is_finite() && p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        fmt_f64(p)
    }
}

fn model_comments(m: &ModelReport, dropped: usize) -> Vec<String> {
    let r = &m.result;
    let mut c = vec![
        format!("model: {}", m.label),
        format!("dependent: {}", r.dependent),
        format!("n_obs: {}", r.n_obs),
        format!("r_squared: {}", fmt_f64(r.r_squared)),
        format!("se: {:?}", r.se_kind).to_lowercase(),
        format!("dropped_rows: {dropped}"),
    ];
    c.extend(r.reference_levels.iter().map(|(v, l)| format!("reference: {v}={l}")));
    c.extend(r.notes.iter().map(|n| format!("note: {n}")));
    c
}

/// Coefficient and margin CSVs for every model, then the descriptive tables.
pub fn render_outputs(report: &RqReport, manifest: Option<&Manifest>) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for m in &report.models {
        let mut comments = model_comments(m, report.dropped_rows);
        comments.extend(report.notes.iter().map(|n| format!("note: {n}")));
        let rows: Vec<Vec<String>> = m
            .result
            .terms
            .iter()
            .map(|t| vec![t.term.clone(), fmt_f64(t.coef), fmt_f64(t.se), fmt_f64(t.t), fmt_p(t.p), fmt_f64(t.ci_lo), fmt_f64(t.ci_hi)])
            .collect();
        files.push((
            format!("{}.csv", m.label),
            render_csv_with_comments(manifest, &comments, &["term", "coef", "se", "t", "p", "ci_lo", "ci_hi"], &rows),
        ));
        let margin_rows: Vec<Vec<String>> = m
            .margins
            .iter()
            .map(|g| vec![g.variable.clone(), g.level.clone(), fmt_f64(g.margin), fmt_f64(g.ci_lo), fmt_f64(g.ci_hi)])
            .collect();
        files.push((
            format!("{}_margins.csv", m.label),
            render_csv_with_comments(manifest, &comments, &["variable", "level", "margin", "ci_lo", "ci_hi"], &margin_rows),
        ));
    }
    for t in &report.tables {
        let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
        files.push((t.file.clone(), render_csv_with_comments(manifest, &t.comments, &header, &t.rows)));
    }
    for (file, svg) in &report.charts {
        let body = match manifest {
            Some(m) => format!("<!-- manifest: {} -->\n{svg}", serde_json::to_string(m).expect("manifest serializes")),
            None => svg.clone(),
        };
        files.push((file.clone(), body));
    }
    files
}
