//! Token pipeline and word lists: tokenization, hedge counting, Porter
//! stemming, syllable counting, and the shipped lexicon files.

pub mod porter;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sha256_hex;

pub use porter::stem;

/// Environment variable that overrides where default lexicon files are read from.
pub const LEXICON_DIR_ENV: &str = "CERTAINTY_LEXICON_DIR";

pub const HEDGES_FILE: &str = "hedges.txt";
pub const REPORT_VERBS_FILE: &str = "report_verbs.txt";
pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const ABBREVIATIONS_FILE: &str = "abbreviations.txt";

const DEFAULT_HEDGES: &str = include_str!("../../lexicons/hedges.txt");
const DEFAULT_REPORT_VERBS: &str = include_str!("../../lexicons/report_verbs.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../../lexicons/stopwords.txt");
pub(crate) const DEFAULT_ABBREVIATIONS: &str = include_str!("../../lexicons/abbreviations.txt");

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    tokenize_spans(&lower)
        .into_iter()
        .map(|(s, e)| lower[s..e].to_string())
        .collect()
}

/// Byte spans of the tokens [`tokenize`] would produce.
pub fn tokenize_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            spans.push((s, i));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Only single-token entries count; each matching token is one hit.
    Token,
    /// Multiword entries match as token sequences, longest first, without overlap.
    #[default]
    Phrase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    entries: BTreeSet<String>,
    match_mode: MatchMode,
    sequences: Vec<Vec<String>>,
    max_len: usize,
    hash: String,
    text: String,
}

impl Lexicon {
    /// Parses lexicon text: one entry per line, `#` starts a comment.
    pub fn parse(name: &str, text: &str, match_mode: MatchMode) -> Result<Lexicon> {
        let entries: BTreeSet<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(Error::InvalidInput(format!("lexicon `{name}` has no entries")));
        }
        let mut sequences: Vec<Vec<String>> = entries
            .iter()
            .map(|e| tokenize(e))
            .filter(|t| !t.is_empty())
            .collect();
        sequences.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        sequences.dedup();
        let max_len = sequences.first().map_or(0, Vec::len);
        Ok(Lexicon {
            name: name.to_string(),
            hash: sha256_hex(text.as_bytes()),
            text: text.to_string(),
            entries,
            match_mode,
            sequences,
            max_len,
        })
    }

    pub fn from_file(path: &Path, match_mode: MatchMode) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Lexicon::parse(&name, &text, match_mode)
    }

    pub fn default_hedges() -> Lexicon {
        Lexicon::parse(HEDGES_FILE, DEFAULT_HEDGES, MatchMode::Phrase).expect("shipped lexicon")
    }

    pub fn default_report_verbs() -> Lexicon {
        Lexicon::parse(REPORT_VERBS_FILE, DEFAULT_REPORT_VERBS, MatchMode::Phrase)
            .expect("shipped lexicon")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &BTreeSet<String> {
        &self.entries
    }

    pub fn match_mode(&self) -> MatchMode {
        self.match_mode
    }

    /// SHA-256 of the source text, recorded in output manifests.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// The text the lexicon was parsed from.
    pub fn source_text(&self) -> &str {
        &self.text
    }

    /// Entries as token sequences, longest first.
    pub fn sequences(&self) -> &[Vec<String>] {
        &self.sequences
    }

    pub fn with_mode(mut self, match_mode: MatchMode) -> Lexicon {
        self.match_mode = match_mode;
        self
    }

    /// Number of lexicon hits in a token stream.
    pub fn count_in_tokens(&self, tokens: &[String]) -> usize {
        match self.match_mode {
            MatchMode::Token => tokens
                .iter()
                .filter(|t| self.sequences.iter().any(|s| s.len() == 1 && &s[0] == *t))
                .count(),
            MatchMode::Phrase => {
                let mut count = 0;
                let mut i = 0;
                while i < tokens.len() {
                    let window = &tokens[i..tokens.len().min(i + self.max_len)];
                    match self
                        .sequences
                        .iter()
                        .find(|s| s.len() <= window.len() && window[..s.len()] == s[..])
                    {
                        Some(s) => {
                            count += 1;
                            i += s.len();
                        }
                        None => i += 1,
                    }
                }
                count
            }
        }
    }
}

/// Number of hedge occurrences in `text`, duplicates counted.
pub fn count_hedges(text: &str, hedges: &Lexicon) -> usize {
    hedges.count_in_tokens(&tokenize(text))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
    hash: String,
}

impl Stopwords {
    pub fn parse(text: &str) -> Stopwords {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Stopwords {
            words,
            hash: sha256_hex(text.as_bytes()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Stopwords> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Stopwords::parse(&text))
    }

    pub fn default_list() -> Stopwords {
        Stopwords::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate: maximal runs of `aeiouy`, minus a silent
/// final `e` after a single consonant that itself follows a vowel
/// ("make", "increase"), never below one.
pub fn count_syllables(word: &str) -> usize {
    let chars: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let mut runs = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            runs += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    let silent_e = n >= 3
        && chars[n - 1] == 'e'
        && !is_vowel(chars[n - 2])
        && is_vowel(chars[n - 3]);
    if silent_e && runs > 1 {
        runs -= 1;
    }
    runs.max(1)
}

/// Resolves a lexicon file path: an explicit flag wins, then
/// `$CERTAINTY_LEXICON_DIR/<file>`, otherwise `None` (use the built-in copy).
pub fn resolve_lexicon_path(explicit: Option<&Path>, file: &str) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os(LEXICON_DIR_ENV).map(|dir| PathBuf::from(dir).join(file))
}

/// The three lexicons most commands need, loaded once.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    pub hedges: Lexicon,
    pub report_verbs: Lexicon,
    pub stopwords: Stopwords,
}

impl LexiconSet {
    pub fn defaults() -> LexiconSet {
        LexiconSet {
            hedges: Lexicon::default_hedges(),
            report_verbs: Lexicon::default_report_verbs(),
            stopwords: Stopwords::default_list(),
        }
    }

    pub fn load(
        hedges: Option<&Path>,
        verbs: Option<&Path>,
        stopwords: Option<&Path>,
        hedge_mode: MatchMode,
    ) -> Result<LexiconSet> {
        let hedges = match resolve_lexicon_path(hedges, HEDGES_FILE) {
            Some(p) => Lexicon::from_file(&p, hedge_mode)?,
            None => Lexicon::default_hedges().with_mode(hedge_mode),
        };
        let report_verbs = match resolve_lexicon_path(verbs, REPORT_VERBS_FILE) {
            Some(p) => Lexicon::from_file(&p, MatchMode::Phrase)?,
            None => Lexicon::default_report_verbs(),
        };
        let stopwords = match resolve_lexicon_path(stopwords, STOPWORDS_FILE) {
            Some(p) => Stopwords::from_file(&p)?,
            None => Stopwords::default_list(),
        };
        Ok(LexiconSet {
            hedges,
            report_verbs,
            stopwords,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Being bullied may increase."), ["being", "bullied", "may", "increase"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("76% of chances"), ["76", "of", "chances"]);
    }

    #[test]
    fn hedge_counts_on_annotated_examples() {
        let h = Lexicon::default_hedges();
        let cases = [
            ("Circadian rhythm disruptions, such as jet lag, might be linked with an increased risk of cancer, she said.", 1),
            ("Further research is necessary to understand whether this is a causal relationship.", 0),
            ("These mouthwashes may be of modest benefit, it is unclear if a certain subset of patients showed a large response while others derived no benefit.", 2),
            ("The nondemented subjects with Alzheimer pathology may have had \u{201c}preclinical\u{201d} AD, or numerous cortical plaques may occur in some elderly subjects who would never develop clinical dementia.", 3),
            ("Based on these observations, we propose that the apparent receding contact angle should be used for characterizing superliquid-repellent surfaces rather than the apparent advancing contact angle and hysteresis.", 4),
        ];
        for (text, expected) in cases {
            assert_eq!(count_hedges(text, &h), expected, "{text}");
        }
    }

    #[test]
    fn duplicates_are_counted() {
        let lex = Lexicon::parse("t", "may", MatchMode::Token).unwrap();
        assert_eq!(count_hedges("may may may", &lex), 3);
    }

    #[test]
    fn phrases_match_longest_first() {
        let lex = Lexicon::parse("t", "tend to\nto\nin my view\nview", MatchMode::Phrase).unwrap();
        assert_eq!(count_hedges("They tend to agree, in my view.", &lex), 2);
        let tok = lex.clone().with_mode(MatchMode::Token);
        assert_eq!(count_hedges("They tend to agree, in my view.", &tok), 2);
    }

    #[test]
    fn empty_lexicon_rejected() {
        assert!(Lexicon::parse("t", "# only a comment\n\n", MatchMode::Token).is_err());
    }

    #[test]
    fn syllables() {
        assert_eq!(count_syllables("science"), 2);
        assert_eq!(count_syllables("a"), 1);
        assert_eq!(count_syllables("uncertainty"), 4);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("little"), 2);
        assert_eq!(count_syllables("rhythm"), 1);
    }

    #[test]
    fn shipped_lists_load() {
        let set = LexiconSet::defaults();
        assert_eq!(set.report_verbs.entries().len(), 27);
        assert!(set.stopwords.contains("the"));
        assert!(!set.stopwords.contains("might"));
        assert!(set.hedges.entries().contains("might"));
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn token_mode_counts_are_additive(a in "[a-z ]{0,40}", b in "[a-z ]{0,40}") {
            let lex = Lexicon::parse("t", "may\nmight\nabout", MatchMode::Token).unwrap();
            let joined = format!("{a} {b}");
            prop_assert_eq!(count_hedges(&joined, &lex), count_hedges(&a, &lex) + count_hedges(&b, &lex));
        }

        #[test]
        fn syllables_at_least_one(w in "[a-zA-Z]{1,20}") {
            prop_assert!(count_syllables(&w) >= 1);
        }
    }
}
