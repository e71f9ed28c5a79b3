use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;

use certainty::analysis::{render_outputs, run_rq, RqInputs, SeKind, RQ_NAMES};
use certainty::corpus::{
    aggregate_annotations, ingest_corpus, preprocess_news, read_annotations, write_corpus, Aggregated, AggregationConfig,
    AspectLabel, Corpus, PreprocessConfig, ScientificFinding, Source,
};
use certainty::evalkit::{
    annotation_agreement, evaluate_aspects, evaluate_sentence, make_split, stratified_hedge_sample, SplitSpec, STRATUM_NAMES,
};
use certainty::extraction::{extract_abstract_findings, extract_news_findings, AbbreviationGuard};
use certainty::io::{fmt_f64, read_jsonl_strict, read_text, render_csv, write_jsonl, write_text, LineError, Manifest, MANIFEST_KEY};
use certainty::lexicon::{count_hedges, resolve_lexicon_path, LexiconSet, MatchMode, ABBREVIATIONS_FILE};
use certainty::matching::{match_corpus, MatchConfig, MatchedPair};
use certainty::scoring::bow::{fit_bow, BowConfig, TrainingExample};
use certainty::scoring::external::{Endpoint, ExternalConfig, ExternalScorer};
use certainty::scoring::hedge::{fit_hedge_scorer, HedgeScorer};
use certainty::scoring::{CertaintyScore, SavedModel, Scorer};
use certainty::{Error, Result};

use super::*;

const DEFAULT_SEED: u64 = 0;

struct Ctx<'a> {
    cli: &'a Cli,
    lex: LexiconSet,
    guard: AbbreviationGuard,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.cli.global.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Manifest over the resolved flags (output paths excluded) and the
    /// hashes of every lexicon in play.
    fn manifest(&self, seeded: bool) -> Manifest {
        let mut config = BTreeMap::new();
        flatten_into(&mut config, &self.cli.global);
        flatten_into(&mut config, &self.cli.command);
        Manifest::new(self.cli.command.name(), &config)
            .with_lexicon("hedges", self.lex.hedges.hash())
            .with_lexicon("report_verbs", self.lex.report_verbs.hash())
            .with_lexicon("stopwords", self.lex.stopwords.hash())
            .with_lexicon("abbreviations", self.guard.hash())
            .with_seed(seeded.then(|| self.seed()))
    }
}

fn flatten_into(out: &mut BTreeMap<String, String>, value: &impl serde::Serialize) {
    if let Ok(Value::Object(map)) = serde_json::to_value(value) {
        for (k, v) in map {
            match v {
                Value::Null => {}
                Value::String(s) => {
                    out.insert(k, s);
                }
                other => {
                    out.insert(k, other.to_string());
                }
            }
        }
    }
}

fn load_context(cli: &Cli) -> Result<Ctx<'_>> {
    let g = &cli.global;
    let mode = match g.hedge_match {
        Some(HedgeMatch::Token) => MatchMode::Token,
        _ => MatchMode::Phrase,
    };
    let lex = LexiconSet::load(g.hedge_lexicon.as_deref(), g.verb_lexicon.as_deref(), g.stopwords.as_deref(), mode)?;
    let guard = match resolve_lexicon_path(g.abbreviations.as_deref(), ABBREVIATIONS_FILE) {
        Some(p) => AbbreviationGuard::from_file(&p)?,
        None => AbbreviationGuard::default_list(),
    };
    Ok(Ctx { cli, lex, guard })
}

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let ctx = load_context(cli)?;
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a)?,
        Command::Extract(a) => extract(&ctx, a)?,
        Command::Sample(a) => sample(&ctx, a)?,
        Command::Split(a) => split(&ctx, a)?,
        Command::Train(a) => train(&ctx, a)?,
        Command::Score(a) => score(&ctx, a)?,
        Command::Eval(a) => eval(&ctx, a)?,
        Command::Agreement(a) => agreement(&ctx, a)?,
        Command::Match(a) => match_cmd(&ctx, a)?,
        Command::Analyze(a) => analyze(&ctx, a)?,
    }
    Ok(())
}

fn warn_lines(errors: &[LineError]) {
    for e in errors {
        log::warn!("skipped {}:{}: {}", e.file, e.line, e.message);
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// JSON document with the manifest as its first key.
fn with_manifest(manifest: &Manifest, body: Value) -> String {
    let mut map = serde_json::Map::new();
    map.insert(MANIFEST_KEY.into(), serde_json::to_value(manifest).expect("manifest serializes"));
    match body {
        Value::Object(o) => map.extend(o),
        other => {
            map.insert("value".into(), other);
        }
    }
    serde_json::to_string_pretty(&Value::Object(map)).expect("json serializes") + "\n"
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_gold(path: &Path) -> Result<Aggregated> {
    let (records, errors) = read_annotations(path)?;
    warn_lines(&errors);
    let agg = aggregate_annotations(&records, &AggregationConfig::default());
    for w in &agg.warnings {
        log::warn!("{w}");
    }
    Ok(agg)
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    let ingested = ingest_corpus(&a.news, &a.papers)?;
    warn_lines(&ingested.errors);
    let (corpus, report) = preprocess_news(&ingested.corpus, &PreprocessConfig { length_cutoff: a.length_cutoff });
    let m = ctx.manifest(false);
    write_corpus(&corpus, &a.out, Some(&m))?;
    let body = serde_json::json!({
        "papers": corpus.papers.len(),
        "preprocess": report,
        "skipped_lines": ingested.errors,
    });
    write_text(&a.out.join("preprocess_report.json"), &with_manifest(&m, body))
}

fn extract(ctx: &Ctx, a: &ExtractArgs) -> Result<()> {
    let corpus = Corpus::load_dir(&a.corpus)?;
    let mut findings: Vec<ScientificFinding> = corpus.papers.iter().flat_map(extract_abstract_findings).collect();
    for article in &corpus.news {
        findings.extend(extract_news_findings(article, &ctx.lex.report_verbs, &ctx.guard));
    }
    log::info!("extracted {} findings", findings.len());
    write_jsonl(&a.out, &findings, Some(&ctx.manifest(false)))
}

fn sample(ctx: &Ctx, a: &SampleArgs) -> Result<(), Failure> {
    let Strategy::HedgeStratified = a.strategy;
    let [p0, p1, p2] = a.proportions[..] else {
        return Err(Failure::usage(format!("--proportions needs 3 values, got {}", a.proportions.len())));
    };
    let findings: Vec<ScientificFinding> = read_jsonl_strict(&a.findings)?;
    let drawn = stratified_hedge_sample(&findings, a.n, [p0, p1, p2], ctx.seed(), &ctx.lex.hedges)?;
    let m = ctx.manifest(true);
    if let Some(out) = &a.out {
        write_jsonl(out, &drawn.findings, Some(&m))?;
    }
    let strata: serde_json::Map<String, Value> =
        STRATUM_NAMES.iter().zip(drawn.stratum_counts).map(|(k, v)| (k.to_string(), v.into())).collect();
    print!("{}", with_manifest(&m, serde_json::json!({ "n": a.n, "strata": strata })));
    Ok(())
}

fn read_id_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn split(ctx: &Ctx, a: &SplitArgs) -> Result<()> {
    let gold = read_gold(&a.annotations)?;
    let random = match &a.random_set {
        Some(p) => read_id_list(p)?,
        None => Vec::new(),
    };
    let ids: Vec<String> = gold.gold.keys().cloned().collect();
    let spec = make_split(&ids, &random, ctx.seed());
    spec.validate()?;
    let body = serde_json::to_value(&spec).expect("split serializes");
    write_text(&a.out, &with_manifest(&ctx.manifest(true), body))
}

fn read_split(path: &Path) -> Result<SplitSpec> {
    SplitSpec::from_json(&read_text(path)?)
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let findings: Vec<ScientificFinding> = read_jsonl_strict(&a.findings)?;
    let by_id: BTreeMap<&str, &ScientificFinding> = findings.iter().map(|f| (f.finding_id.as_str(), f)).collect();
    let split = read_split(&a.split)?;
    let gold = read_gold(&a.annotations)?.gold;
    let mut items = Vec::new();
    for id in &split.train {
        let Some(g) = gold.get(id) else { continue };
        let f = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("training id {id} is not among the findings")))?;
        items.push((*f, g));
    }
    if items.is_empty() {
        return Err(Error::InvalidInput("no annotated findings in the training split".into()));
    }
    log::info!("training on {} findings", items.len());
    let saved = match a.model {
        ModelKind::Bow => {
            let examples: Vec<TrainingExample> =
                items.iter().map(|(f, g)| TrainingExample::new(f.text.clone(), g.sentence, g.aspects)).collect();
            let config = BowConfig {
                ridge_penalty: a.ridge_penalty,
                vocab_capacity: a.vocab_size,
                max_ngram: a.max_ngram,
            };
            SavedModel::Bow(fit_bow(&examples, &config)?)
        }
        ModelKind::Hedge => {
            let hedges = &ctx.lex.hedges;
            let count = |f: &ScientificFinding| count_hedges(&f.text, hedges);
            let sentence: Vec<(usize, f64)> = items.iter().filter_map(|(f, g)| g.sentence.map(|s| (count(f), s))).collect();
            let aspects: Vec<_> = items.iter().filter_map(|(f, g)| g.aspects.map(|l| (count(f), l))).collect();
            let model = fit_hedge_scorer(&sentence, &aspects, hedges, hedges.source_text())?;
            SavedModel::Hedge(HedgeScorer::new(model)?)
        }
    };
    let body: Value = serde_json::from_str(&saved.to_json()?).expect("model json");
    write_text(&a.out, &with_manifest(&ctx.manifest(false), body))
}

fn score(ctx: &Ctx, a: &ScoreArgs) -> Result<()> {
    let findings: Vec<ScientificFinding> = read_jsonl_strict(&a.findings)?;
    let scores = match (&a.model, &a.external) {
        (Some(path), _) => SavedModel::from_json(&read_text(path)?)?.scorer().score_all(&findings)?,
        (None, Some(spec)) => {
            let config = ExternalConfig {
                timeout: Duration::from_millis(a.timeout_ms),
                max_in_flight: a.max_in_flight,
            };
            ExternalScorer::new(Endpoint::parse(spec), config).score_all(&findings)?
        }
        (None, None) => unreachable!("clap requires --model or --external"),
    };
    write_jsonl(&a.out, &scores, Some(&ctx.manifest(false)))
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<(), Failure> {
    let classes = a
        .f1_classes
        .iter()
        .map(|c| AspectLabel::parse(c).ok_or_else(|| Failure::usage(format!("unknown aspect class `{c}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let scores: Vec<CertaintyScore> = read_jsonl_strict(&a.scores)?;
    let split = read_split(&a.split)?;
    let gold = read_gold(&a.annotations)?.gold;
    let test_gold: Vec<_> = split.full_test().into_iter().filter_map(|id| gold.get(id)).collect();

    let mut rows = Vec::new();
    if test_gold.iter().any(|g| g.sentence.is_some()) {
        let s = evaluate_sentence(&scores, &gold, &split)?;
        rows.push(vec!["sentence".into(), "pearson_r".into(), "full_test".into(), fmt_f64(s.r_full_test), s.n_full_test.to_string()]);
        if let Some(r) = s.r_random_set {
            rows.push(vec!["sentence".into(), "pearson_r".into(), "random_set".into(), fmt_f64(r), s.n_random_set.to_string()]);
        }
    }
    if test_gold.iter().any(|g| g.aspects.is_some()) {
        let e = evaluate_aspects(&scores, &gold, &split, &classes)?;
        for c in &e.cells {
            rows.push(vec![format!("aspect:{}", c.aspect), "f1".into(), c.class.to_string(), fmt_f64(c.f1), c.support.to_string()]);
        }
        rows.push(vec!["aspect".into(), "mean_f1".into(), "full_test".into(), fmt_f64(e.mean_f1), e.n_items.to_string()]);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no annotated findings in the test split".into()).into());
    }
    let csv = render_csv(Some(&ctx.manifest(false)), &["task", "metric", "subset", "value", "n"], &rows);
    Ok(emit(a.out.as_deref(), &csv)?)
}

fn agreement(ctx: &Ctx, a: &AgreementArgs) -> Result<()> {
    let (records, errors) = read_annotations(&a.annotations)?;
    warn_lines(&errors);
    let report = annotation_agreement(&records);
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_f64);
    let mut rows = vec![vec!["sentence".to_string(), "interval".to_string(), fmt(report.sentence)]];
    for (aspect, alpha) in &report.aspects {
        rows.push(vec![format!("aspect:{aspect}"), "nominal".into(), fmt(*alpha)]);
    }
    rows.push(vec!["aspect_mean".into(), "nominal".into(), fmt(report.aspect_mean)]);
    let csv = render_csv(Some(&ctx.manifest(false)), &["task", "metric", "alpha"], &rows);
    emit(a.out.as_deref(), &csv)
}

/// Findings whose origin document is in the corpus; news findings must also
/// come from an article that links to their paper.
fn findings_in_corpus<'a>(findings: &'a [ScientificFinding], corpus: &Corpus) -> Vec<ScientificFinding> {
    let papers = corpus.papers_by_doi();
    let news = corpus.news_by_id();
    findings
        .iter()
        .filter(|f: &&'a ScientificFinding| {
            papers.contains_key(f.origin_doi.as_str())
                && match f.source {
                    Source::Abstract => true,
                    Source::News => f
                        .origin_article_id
                        .as_deref()
                        .and_then(|id| news.get(id))
                        .is_some_and(|n| n.linked_dois.contains(&f.origin_doi)),
                }
        })
        .cloned()
        .collect()
}

fn match_cmd(ctx: &Ctx, a: &MatchArgs) -> Result<()> {
    let corpus = Corpus::load_dir(&a.corpus)?;
    let findings: Vec<ScientificFinding> = read_jsonl_strict(&a.findings)?;
    let kept = findings_in_corpus(&findings, &corpus);
    if kept.len() < findings.len() {
        log::warn!("{} findings do not belong to the corpus and were ignored", findings.len() - kept.len());
    }
    let config = MatchConfig {
        min_overlap: a.min_overlap,
        min_jaccard: a.min_jaccard,
    };
    let pairs = match_corpus(&kept, &config, &ctx.lex.stopwords)?;
    write_jsonl(&a.out, &pairs, Some(&ctx.manifest(false)))
}

fn input_path(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, file: &str, flag: &str) -> Result<PathBuf, Failure> {
    match (explicit, dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(if file.is_empty() { d.clone() } else { d.join(file) }),
        (None, None) => Err(Failure::usage(format!("analyze needs --{flag} or --in"))),
    }
}

fn analyze(ctx: &Ctx, a: &AnalyzeArgs) -> Result<(), Failure> {
    let annotations = match (&a.annotations, &a.input) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join("annotations.jsonl")).filter(|p| p.exists()),
        _ => None,
    };
    let has_gold = annotations.is_some();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for rq in &a.rq {
        if rq == "all" {
            names.extend(RQ_NAMES.iter().filter(|n| has_gold || !n.starts_with("fig")));
        } else if let Some(n) = RQ_NAMES.iter().find(|n| **n == rq) {
            names.insert(n);
        } else {
            return Err(Failure::usage(format!("unknown analysis `{rq}`; expected one of {} or all", RQ_NAMES.join(", "))));
        }
    }

    let corpus = Corpus::load_dir(&input_path(&a.corpus, &a.input, "", "corpus")?)?;
    let findings: Vec<ScientificFinding> = read_jsonl_strict(&input_path(&a.findings, &a.input, "findings.jsonl", "findings")?)?;
    let scores: Vec<CertaintyScore> = read_jsonl_strict(&input_path(&a.scores, &a.input, "scores.jsonl", "scores")?)?;
    let pairs: Vec<MatchedPair> = match (&a.pairs, &a.input) {
        (Some(p), _) => read_jsonl_strict(p)?,
        (None, Some(d)) if d.join("pairs.jsonl").exists() => read_jsonl_strict(&d.join("pairs.jsonl"))?,
        _ => Vec::new(),
    };
    let gold = annotations.map(|p| read_gold(&p)).transpose()?.map(|g| g.gold);

    let inputs = RqInputs {
        papers: &corpus.papers,
        news: &corpus.news,
        findings: &findings,
        scores: &scores,
        pairs: &pairs,
        gold: gold.as_ref(),
        hedges: &ctx.lex.hedges,
        se_kind: if a.robust_se { SeKind::Hc1 } else { SeKind::Classical },
    };
    create_dir(&a.out)?;
    let m = ctx.manifest(false);
    for name in RQ_NAMES.iter().filter(|n| names.contains(*n)) {
        let report = run_rq(name, &inputs)?;
        for (file, contents) in render_outputs(&report, Some(&m)) {
            write_text(&a.out.join(file), &contents)?;
        }
    }
    Ok(())
}
