use crate::error::{Error, Result};
use crate::extraction::{sentence_ranges, AbbreviationGuard};
use crate::lexicon::{count_syllables, tokenize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

pub fn text_counts(text: &str, guard: &AbbreviationGuard) -> TextCounts {
    let words = tokenize(text);
    TextCounts {
        words: words.len(),
        sentences: sentence_ranges(text, guard).len(),
        syllables: words.iter().map(|w| count_syllables(w)).sum(),
    }
}

pub fn flesch_from_counts(c: TextCounts) -> Result<f64> {
    if c.words == 0 || c.sentences == 0 {
        return Err(Error::InvalidInput("reading ease needs at least one word and one sentence".into()));
    }
    Ok(206.835 - 1.015 * (c.words as f64 / c.sentences as f64) - 84.6 * (c.syllables as f64 / c.words as f64))
}

/// Flesch reading ease with the shipped abbreviation guard.
pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    flesch_from_counts(text_counts(text, &AbbreviationGuard::default_list()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formula_examples() {
        let c = |words, sentences, syllables| TextCounts { words, sentences, syllables };
        assert!((flesch_from_counts(c(10, 1, 10)).unwrap() - 112.085).abs() < 1e-9);
        assert!((flesch_from_counts(c(1, 1, 1)).unwrap() - 121.22).abs() < 1e-9);
        assert!(flesch_reading_ease("").is_err());
        assert!(flesch_reading_ease(" ... ").is_err());
    }

    #[test]
    fn hand_computed_paragraphs() {
        // 9 words, 2 sentences, 10 syllables ("happy" has two).
        let v = flesch_reading_ease("The cat sat on the mat. It was happy.").unwrap();
        assert!((v - 108.2675).abs() < 1e-9, "{v}");
        // scientists 2, measure 2, the 1, increase 2, results 2, vary 2: 11 syllables, 6 words, 2 sentences.
        let v = flesch_reading_ease("Scientists measure the increase. Results vary.").unwrap();
        assert!((v - 48.69).abs() < 1e-9, "{v}");
    }

    proptest! {
        #[test]
        fn decreasing_in_syllables_per_word(words in 1usize..200, sentences in 1usize..20, syl in 1usize..400, extra in 1usize..50) {
            let a = flesch_from_counts(TextCounts { words, sentences, syllables: syl }).unwrap();
            let b = flesch_from_counts(TextCounts { words, sentences, syllables: syl + extra }).unwrap();
            prop_assert!(b < a);
        }
    }
}
