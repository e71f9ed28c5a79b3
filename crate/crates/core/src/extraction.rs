//! Finding extraction: result/conclusion sentences from role-labeled
//! abstracts, and report-verb clauses from news bodies.

use crate::corpus::{NewsArticle, PaperMeta, Role, ScientificFinding, Source};
use crate::lexicon::{self, Lexicon};

/// Tokens ending in a period that never end a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationGuard {
    entries: Vec<String>,
    hash: String,
}

impl AbbreviationGuard {
    pub fn parse(text: &str) -> AbbreviationGuard {
        let mut entries: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        entries.sort();
        entries.dedup();
        AbbreviationGuard {
            entries,
            hash: crate::io::sha256_hex(text.as_bytes()),
        }
    }

    pub fn from_file(path: &std::path::Path) -> crate::Result<AbbreviationGuard> {
        Ok(AbbreviationGuard::parse(&crate::io::read_text(path)?))
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn default_list() -> AbbreviationGuard {
        AbbreviationGuard::parse(lexicon::DEFAULT_ABBREVIATIONS)
    }

    /// True when `prefix` (text up to and including a period) ends with a
    /// guarded abbreviation that starts at a word boundary.
    fn guards(&self, prefix: &str) -> bool {
        self.entries.iter().any(|g| {
            prefix.ends_with(g.as_str()) && {
                let before = &prefix[..prefix.len() - g.len()];
                before
                    .chars()
                    .next_back()
                    .is_none_or(|c| c.is_whitespace() || matches!(c, '(' | '[' | '"' | '\u{201C}'))
            }
        })
    }
}

impl Default for AbbreviationGuard {
    fn default() -> Self {
        AbbreviationGuard::default_list()
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}' | '(')
}

/// Splits at `.`, `?` or `!` (plus any closing quotes or brackets) followed
/// by whitespace and an uppercase letter, digit or opening quote, and at
/// blank lines. Spans tile the input: their concatenation is the input.
pub fn split_sentences(text: &str, guard: &AbbreviationGuard) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut boundaries = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let terminal = matches!(c, '.' | '?' | '!');
        let mut j = i + 1;
        if terminal {
            while j < chars.len() && (is_closer(chars[j].1) || matches!(chars[j].1, '.' | '?' | '!')) {
                j += 1;
            }
        } else if !c.is_whitespace() {
            i += 1;
            continue;
        } else {
            j = i;
        }
        let ws_start = j;
        let mut newlines = 0;
        while j < chars.len() && chars[j].1.is_whitespace() {
            if chars[j].1 == '\n' {
                newlines += 1;
            }
            j += 1;
        }
        if j >= chars.len() || j == ws_start {
            i = j.max(i + 1);
            continue;
        }
        let next = chars[j].1;
        let split = if newlines >= 2 {
            true
        } else if terminal {
            let prefix = &text[..pos + c.len_utf8()];
            opens_sentence(next) && !(c == '.' && guard.guards(prefix))
        } else {
            false
        };
        if split {
            boundaries.push(chars[j].0);
        }
        i = j;
    }

    let mut spans = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for b in boundaries {
        if b > start {
            spans.push((start, b));
            start = b;
        }
    }
    if start < text.len() || spans.is_empty() && !text.is_empty() {
        spans.push((start, text.len()));
    }
    spans
}

/// Sentence spans with surrounding whitespace trimmed off; empty ones dropped.
pub fn sentence_ranges(text: &str, guard: &AbbreviationGuard) -> Vec<(usize, usize)> {
    split_sentences(text, guard)
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            (!trimmed.is_empty()).then(|| (s + lead, s + lead + trimmed.len()))
        })
        .collect()
}

pub fn abstract_finding_id(doi: &str, sentence_index: usize) -> String {
    format!("abs:{doi}:{sentence_index}")
}

pub fn news_finding_id(article_id: &str, sentence_index: usize) -> String {
    format!("news:{article_id}:{sentence_index}")
}

/// One finding per result or conclusion sentence, in document order.
pub fn extract_abstract_findings(paper: &PaperMeta) -> Vec<ScientificFinding> {
    let mut offset = 0;
    let mut out = Vec::new();
    for (i, sentence) in paper.abstract_sentences.iter().enumerate() {
        let start = offset;
        let end = start + sentence.text.len();
        offset = end + 1;
        if matches!(sentence.role, Role::Result | Role::Conclusion) && !sentence.text.trim().is_empty() {
            out.push(ScientificFinding {
                finding_id: abstract_finding_id(&paper.doi, i),
                text: sentence.text.clone(),
                source: Source::Abstract,
                origin_doi: paper.doi.clone(),
                origin_article_id: None,
                extraction_keyword: None,
                char_span: (start, end),
            });
        }
    }
    out
}

/// Earliest report-verb phrase in the sentence: token index where it starts,
/// its length in tokens. Among phrases starting at the same token the longest
/// wins.
fn find_trigger(tokens: &[String], verbs: &Lexicon) -> Option<(usize, usize)> {
    (0..tokens.len()).find_map(|i| {
        verbs
            .sequences()
            .iter()
            .find(|seq| i + seq.len() <= tokens.len() && tokens[i..i + seq.len()] == seq[..])
            .map(|seq| (i, seq.len()))
    })
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => c.to_uppercase().chain(chars).collect(),
        _ => s.to_string(),
    }
}

/// Findings from a news body: for each sentence with a report-verb phrase
/// ending in "that", the clause after it.
pub fn extract_news_findings(
    article: &NewsArticle,
    verbs: &Lexicon,
    guard: &AbbreviationGuard,
) -> Vec<ScientificFinding> {
    let body = &article.body;
    let doi = article.linked_dois.first().cloned().unwrap_or_default();
    let mut out = Vec::new();
    for (index, (s_start, s_end)) in sentence_ranges(body, guard).into_iter().enumerate() {
        let sentence = &body[s_start..s_end];
        let spans = lexicon::tokenize_spans(sentence);
        let tokens: Vec<String> = spans.iter().map(|&(a, b)| sentence[a..b].to_lowercase()).collect();
        let Some((at, len)) = find_trigger(&tokens, verbs) else {
            continue;
        };
        if tokens[at + len - 1] != "that" {
            continue;
        }
        let clause_start = spans[at + len - 1].1;
        let raw = &sentence[clause_start..];
        let trimmed = raw.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ':' | ';'));
        let trimmed = trimmed.trim_end();
        if !trimmed.chars().any(char::is_alphabetic) {
            continue;
        }
        let lead = raw.len() - raw.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ':' | ';')).len();
        let start = s_start + clause_start + lead;
        let keyword = tokens[at..at + len - 1].join(" ");
        out.push(ScientificFinding {
            finding_id: news_finding_id(&article.article_id, index),
            text: capitalize_first(trimmed),
            source: Source::News,
            origin_doi: doi.clone(),
            origin_article_id: Some(article.article_id.clone()),
            extraction_keyword: Some(keyword),
            char_span: (start, start + trimmed.len()),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AbstractSentence;
    use proptest::prelude::*;

    fn texts(text: &str) -> Vec<&str> {
        sentence_ranges(text, &AbbreviationGuard::default())
            .into_iter()
            .map(|(s, e)| &text[s..e])
            .collect()
    }

    #[test]
    fn splits_unguarded_initials() {
        assert_eq!(texts("A. B."), ["A.", "B."]);
    }

    #[test]
    fn guard_list_suppresses_split() {
        assert_eq!(texts("Dr. Smith found that X helps."), ["Dr. Smith found that X helps."]);
        assert_eq!(texts("Smith et al. Found it. Then left."), ["Smith et al. Found it.", "Then left."]);
        assert_eq!(texts("Prices in the U.S. Rose sharply."), ["Prices in the U.S. Rose sharply."]);
    }

    #[test]
    fn no_split_inside_numbers_or_before_lowercase() {
        assert_eq!(texts("It rose 10.5 percent. e.g. this stays."), ["It rose 10.5 percent. e.g. this stays."]);
    }

    #[test]
    fn quotes_and_blank_lines() {
        assert_eq!(texts("He left. \"Why?\" she asked."), ["He left.", "\"Why?\" she asked."]);
        assert_eq!(texts("Heading\n\nBody text."), ["Heading", "Body text."]);
    }

    fn article(body: &str) -> NewsArticle {
        NewsArticle {
            article_id: "n1".into(),
            outlet: "o".into(),
            body: body.into(),
            linked_dois: vec!["10.1/x".into()],
        }
    }

    #[test]
    fn conclude_clause_extracted() {
        let a = article("I conclude that we live in one of infinitely many universes - one for each value of the gravitational constant.");
        let f = extract_news_findings(&a, &Lexicon::default_report_verbs(), &AbbreviationGuard::default());
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].text, "We live in one of infinitely many universes - one for each value of the gravitational constant.");
        assert_eq!(f[0].extraction_keyword.as_deref(), Some("conclude"));
        assert_eq!(&a.body[f[0].char_span.0..f[0].char_span.1], "we live in one of infinitely many universes - one for each value of the gravitational constant.");
    }

    #[test]
    fn sentences_without_trigger_skipped() {
        let a = article("The weather was nice. Nobody said anything.");
        assert!(extract_news_findings(&a, &Lexicon::default_report_verbs(), &AbbreviationGuard::default()).is_empty());
    }

    #[test]
    fn trigger_without_that_is_skipped() {
        let verbs = Lexicon::parse("v", "found", crate::lexicon::MatchMode::Phrase).unwrap();
        let a = article("They found a cure.");
        assert!(extract_news_findings(&a, &verbs, &AbbreviationGuard::default()).is_empty());
    }

    #[test]
    fn earliest_trigger_gives_longest_clause() {
        let a = article("They found that others showed that it works.");
        let f = extract_news_findings(&a, &Lexicon::default_report_verbs(), &AbbreviationGuard::default());
        assert_eq!(f[0].text, "Others showed that it works.");
        assert_eq!(f[0].extraction_keyword.as_deref(), Some("found"));
    }

    #[test]
    fn abstract_roles_filtered_in_order() {
        let s = |t: &str, role| AbstractSentence { text: t.into(), role };
        let paper = PaperMeta {
            doi: "d".into(),
            journal_impact_factor: 1.0,
            num_authors: 1,
            field: "f".into(),
            author_rank: 1.0,
            affiliation_rank: 1.0,
            abstract_sentences: vec![
                s("Bg.", Role::Background),
                s("R1.", Role::Result),
                s("M.", Role::Method),
                s("R2.", Role::Result),
                s("C.", Role::Conclusion),
            ],
        };
        let f = extract_abstract_findings(&paper);
        let got: Vec<&str> = f.iter().map(|x| x.text.as_str()).collect();
        assert_eq!(got, ["R1.", "R2.", "C."]);
        let text = paper.abstract_text();
        for finding in &f {
            assert_eq!(&text[finding.char_span.0..finding.char_span.1], finding.text);
        }
        let bg_only = PaperMeta { abstract_sentences: vec![s("Bg.", Role::Background)], ..paper };
        assert!(extract_abstract_findings(&bg_only).is_empty());
    }

    proptest! {
        #[test]
        fn spans_tile_the_input(text in "[A-Za-z0-9 .?!\"\n]{0,120}") {
            let spans = split_sentences(&text, &AbbreviationGuard::default());
            let joined: String = spans.iter().map(|&(s, e)| &text[s..e]).collect();
            prop_assert_eq!(joined, text.clone());
            for w in spans.windows(2) {
                prop_assert_eq!(w[0].1, w[1].0);
            }
        }

        #[test]
        fn news_spans_inside_a_sentence(body in "([A-Z][a-z]{1,8} ){1,4}(found|showed|suggests) that [a-z ]{1,30}\\. [A-Z][a-z ]{0,20}\\.") {
            let a = article(&body);
            let guard = AbbreviationGuard::default();
            let sentences = sentence_ranges(&body, &guard);
            for f in extract_news_findings(&a, &Lexicon::default_report_verbs(), &guard) {
                let (s, e) = f.char_span;
                prop_assert!(sentences.iter().any(|&(a, b)| a <= s && e <= b));
                let again = extract_news_findings(&a, &Lexicon::default_report_verbs(), &guard);
                prop_assert!(again.contains(&f));
            }
        }
    }
}
