//! Utterance → raw 8-feature style vector.
//!
//! Everything here is a pure function of the text and a [`LexiconSet`].

pub mod lexicon;
pub mod tokenize;

use std::collections::HashSet;

pub use lexicon::{LexiconSet, WordSet, LEXICON_VERSION, LSM_CATEGORIES};

use crate::error::{Error, Result};
use crate::vector::RawStyleVector;

/// Valence increment contributed by a booster or dampener.
const BOOSTER_INCREMENT: f64 = 0.293;
/// Multiplier applied to a word's valence when a negator precedes it.
const NEGATION_SCALAR: f64 = -0.74;
/// How many preceding tokens are scanned for negators and boosters.
const LOOKBACK: usize = 3;
/// Booster strength decays with distance from the scored word.
const BOOSTER_DECAY: [f64; LOOKBACK] = [1.0, 0.95, 0.9];
/// Normalization constant of the compound score x / sqrt(x² + α).
const COMPOUND_ALPHA: f64 = 15.0;

/// Counts syllables with a vowel-group heuristic.
///
/// Counts maximal runs of `aeiouy`, subtracts one for a trailing silent `e`
/// (kept when the word ends in consonant + `le`), and floors at one. Words
/// without letters count as one syllable.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0usize;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Flesch Reading Ease over this module's tokenizer and sentence splitter.
pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    let sentences = tokenize::sentences(text);
    let words: usize = sentences.iter().map(Vec::len).sum();
    if words == 0 {
        return Err(Error::EmptyUtterance);
    }
    let syllables: usize = sentences.iter().flatten().map(|w| count_syllables(w)).sum();
    let wps = words as f64 / sentences.len() as f64;
    let spw = syllables as f64 / words as f64;
    Ok(206.835 - 1.015 * wps - 84.6 * spw)
}

/// Lexicon compound sentiment in [-1, 1].
pub fn sentiment_compound(text: &str, lex: &LexiconSet) -> f64 {
    let toks = tokenize::tokens(text);
    let mut total = 0.0;
    for (i, tok) in toks.iter().enumerate() {
        if lex.boosters.contains(tok) || lex.dampeners.contains(tok) {
            continue;
        }
        let Some(&base) = lex.sentiment.get(tok) else {
            continue;
        };
        let mut valence = base;
        let mut negated = false;
        for back in 1..=LOOKBACK.min(i) {
            let prev = &toks[i - back];
            let step = BOOSTER_INCREMENT * BOOSTER_DECAY[back - 1];
            if lex.boosters.contains(prev) {
                valence += step * base.signum();
            } else if lex.dampeners.contains(prev) {
                valence -= step * base.signum();
            }
            negated |= lex.is_negation(prev);
        }
        if negated {
            valence *= NEGATION_SCALAR;
        }
        total += valence;
    }
    if total == 0.0 {
        return 0.0;
    }
    (total / (total * total + COMPOUND_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Weights of the cue-based informality score. Positive cues push toward
/// informal, negative ones toward formal; no cues gives logistic(0) = 0.5.
#[derive(Debug, Clone, Copy)]
pub struct InformalityWeights {
    pub informal_rate: f64,
    pub contraction_rate: f64,
    pub lowercase_i: f64,
    pub repeated_punct: f64,
    pub all_lowercase: f64,
    pub formal_rate: f64,
    pub word_length_excess: f64,
    /// Mean word length (characters) above which the excess cue kicks in.
    pub word_length_pivot: f64,
}

pub const INFORMALITY_WEIGHTS: InformalityWeights = InformalityWeights {
    informal_rate: 4.0,
    contraction_rate: 3.0,
    lowercase_i: 0.75,
    repeated_punct: 0.75,
    all_lowercase: 1.0,
    formal_rate: 4.0,
    word_length_excess: 1.5,
    word_length_pivot: 4.0,
};

/// Observable register cues of one text.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InformalityCues {
    pub informal_rate: f64,
    pub contraction_rate: f64,
    /// Standalone lower-case "i", capped at 2.
    pub lowercase_i: f64,
    /// `!!`/`??`-style runs, capped at 3.
    pub repeated_punct: f64,
    pub all_lowercase: f64,
    pub formal_rate: f64,
    pub word_length_excess: f64,
}

pub fn informality_cues(text: &str, lex: &LexiconSet) -> InformalityCues {
    let raw = tokenize::raw_tokens(text);
    if raw.is_empty() {
        return InformalityCues::default();
    }
    let n = raw.len() as f64;
    let lower: Vec<String> = raw.iter().map(|t| t.to_lowercase()).collect();
    let rate = |set: &WordSet| lower.iter().filter(|t| set.contains(*t)).count() as f64 / n;
    let has_letters = text.chars().any(char::is_alphabetic);
    let has_upper = text.chars().any(char::is_uppercase);
    let mean_len = lower.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / n;
    InformalityCues {
        informal_rate: rate(&lex.informal_markers),
        contraction_rate: lower.iter().filter(|t| t.contains('\'')).count() as f64 / n,
        lowercase_i: raw.iter().filter(|t| t.as_str() == "i").count().min(2) as f64,
        repeated_punct: tokenize::repeated_punctuation_runs(text).min(3) as f64,
        all_lowercase: if has_letters && !has_upper { 1.0 } else { 0.0 },
        formal_rate: rate(&lex.formal_markers),
        word_length_excess: (mean_len - INFORMALITY_WEIGHTS.word_length_pivot).max(0.0),
    }
}

/// Cue-based informality in [0, 1]; 0.5 when the text carries no cues.
pub fn informality_score(text: &str, lex: &LexiconSet) -> f64 {
    let c = informality_cues(text, lex);
    let w = INFORMALITY_WEIGHTS;
    let logit = w.informal_rate * c.informal_rate
        + w.contraction_rate * c.contraction_rate
        + w.lowercase_i * c.lowercase_i
        + w.repeated_punct * c.repeated_punct
        + w.all_lowercase * c.all_lowercase
        - w.formal_rate * c.formal_rate
        - w.word_length_excess * c.word_length_excess;
    1.0 / (1.0 + (-logit).exp())
}

pub fn function_word_ratio(text: &str, lex: &LexiconSet) -> Result<f64> {
    let toks = tokenize::tokens(text);
    if toks.is_empty() {
        return Err(Error::EmptyUtterance);
    }
    let hits = toks
        .iter()
        .filter(|t| lex.function_words.contains(*t))
        .count();
    Ok(hits as f64 / toks.len() as f64)
}

/// Share of tokens found in `set`; 0 for token-less text.
pub fn category_rate(text: &str, set: &HashSet<String>) -> f64 {
    let toks = tokenize::tokens(text);
    let hits = toks.iter().filter(|t| set.contains(*t)).count();
    hits as f64 / toks.len().max(1) as f64
}

/// Assembles the 8 raw features in their fixed order.
pub fn style_vector(text: &str, lex: &LexiconSet) -> Result<RawStyleVector> {
    if text.trim().is_empty() {
        return Err(Error::EmptyUtterance);
    }
    let sentences = tokenize::sentences(text);
    let words: usize = sentences.iter().map(Vec::len).sum();
    if words == 0 {
        return Err(Error::EmptyUtterance);
    }
    Ok(RawStyleVector {
        informality: informality_score(text, lex),
        sentiment: sentiment_compound(text, lex),
        avg_sentence_len: words as f64 / sentences.len() as f64,
        readability: flesch_reading_ease(text)?,
        social_rate: category_rate(text, &lex.social),
        cognitive_rate: category_rate(text, &lex.cognitive),
        affective_rate: category_rate(text, &lex.affective),
        function_word_ratio: function_word_ratio(text, lex)?,
    })
}

/// Keeps only function-word tokens, in order, space-joined.
pub fn function_word_filter(text: &str, lex: &LexiconSet) -> String {
    tokenize::tokens(text)
        .into_iter()
        .filter(|t| lex.function_words.contains(t))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> &'static LexiconSet {
        LexiconSet::shared()
    }

    #[test]
    fn syllable_goldens() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("idea"), 2);
        assert_eq!(count_syllables("cake"), 1);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("happy"), 2);
        assert_eq!(count_syllables("Discussion"), 3);
        assert_eq!(count_syllables("42"), 1);
        assert_eq!(count_syllables("---"), 1);
    }

    #[test]
    fn flesch_goldens() {
        let v = flesch_reading_ease("The cat sat.").unwrap();
        assert!((v - (206.835 - 1.015 * 3.0 - 84.6)).abs() < 1e-12);
        assert!((v - 119.19).abs() < 0.005);
        let hi = flesch_reading_ease("Hi.").unwrap();
        assert!((hi - 121.22).abs() < 1e-9);
        assert!(matches!(
            flesch_reading_ease(""),
            Err(Error::EmptyUtterance)
        ));
        assert!(matches!(
            flesch_reading_ease("?!"),
            Err(Error::EmptyUtterance)
        ));
    }

    #[test]
    fn sentiment_signs_and_negation() {
        assert_eq!(sentiment_compound("", lex()), 0.0);
        assert_eq!(sentiment_compound("the table", lex()), 0.0);
        let pos = sentiment_compound("I love this", lex());
        let neg = sentiment_compound("I do not love this", lex());
        // love = 3.2 in the shipped table
        let x: f64 = 3.2;
        assert!((pos - x / (x * x + 15.0).sqrt()).abs() < 1e-12);
        let y = x * NEGATION_SCALAR;
        assert!((neg - y / (y * y + 15.0).sqrt()).abs() < 1e-12);
        assert!(pos > 0.0 && neg < pos && neg <= 0.0);
        assert!(sentiment_compound("I really love this", lex()) > pos);
        assert!(sentiment_compound("I don't love this", lex()) < 0.0);
    }

    #[test]
    fn informality_bins_on_register_extremes() {
        let formal = informality_score("I wish to understand the scope of our discussion.", lex());
        let casual = informality_score("lol ok nvm. u good?", lex());
        assert!(formal < 0.33, "formal scored {formal}");
        assert!(casual > 0.66, "casual scored {casual}");
        assert_eq!(informality_score("", lex()), 0.5);
    }

    #[test]
    fn informality_cue_oracle() {
        // "lol ok nvm. u good?": 4 of 5 tokens are informal markers, the text
        // is all lower case, and mean word length is 2.6 (< pivot).
        let c = informality_cues("lol ok nvm. u good?", lex());
        assert_eq!(c.informal_rate, 0.8);
        assert_eq!(c.all_lowercase, 1.0);
        assert_eq!(c.word_length_excess, 0.0);
        let expected = 1.0 / (1.0 + (-(4.0 * 0.8 + 1.0f64)).exp());
        assert!((informality_score("lol ok nvm. u good?", lex()) - expected).abs() < 1e-12);
        let c = informality_cues("i think so!! i guess", lex());
        assert_eq!(c.lowercase_i, 2.0);
        assert_eq!(c.repeated_punct, 1.0);
    }

    #[test]
    fn function_words() {
        assert_eq!(
            function_word_ratio("the cat sat on the mat", lex()).unwrap(),
            0.5
        );
        assert_eq!(function_word_ratio("cat mat", lex()).unwrap(), 0.0);
        assert_eq!(function_word_ratio("the the the", lex()).unwrap(), 1.0);
        assert!(function_word_ratio("", lex()).is_err());
        assert_eq!(
            function_word_filter("the cat sat on the mat", lex()),
            "the on the"
        );
        assert_eq!(function_word_filter("cat mat", lex()), "");
    }

    #[test]
    fn category_rates() {
        let set: HashSet<String> = ["friend", "talk"].iter().map(|s| s.to_string()).collect();
        assert_eq!(category_rate("friend talk", &set), 1.0);
        assert_eq!(category_rate("", &set), 0.0);
        let friend: HashSet<String> = ["friend".to_string()].into_iter().collect();
        assert_eq!(category_rate("my friend is here", &friend), 0.25);
    }

    #[test]
    fn style_vector_assembly() {
        let v = style_vector("Hi. Hi there.", lex()).unwrap();
        assert_eq!(v.avg_sentence_len, 1.5);
        assert!(v.is_finite());
        let again = style_vector("Hi. Hi there.", lex()).unwrap();
        assert_eq!(
            v.to_array().map(f64::to_bits),
            again.to_array().map(f64::to_bits)
        );
        assert!(matches!(
            style_vector("", lex()),
            Err(Error::EmptyUtterance)
        ));
        assert!(matches!(
            style_vector("   ", lex()),
            Err(Error::EmptyUtterance)
        ));
    }
}
