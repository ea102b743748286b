//! Versioned word lists and the sentiment valence table.
//!
//! The built-in set is compiled from `data/`; [`LexiconSet::load_dir`] reads
//! the same file layout from disk. Word-set files hold one entry per line
//! (`#` starts a comment); the sentiment file holds `word<TAB>valence` lines
//! with valence in [-4, 4].

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Bumped whenever any shipped list changes; goldens depend on it.
pub const LEXICON_VERSION: &str = "1";

pub const LSM_CATEGORIES: [&str; 9] = [
    "personal_pronouns",
    "impersonal_pronouns",
    "articles",
    "prepositions",
    "conjunctions",
    "auxiliary_verbs",
    "negations",
    "quantifiers",
    "common_adverbs",
];

pub type WordSet = HashSet<String>;

#[derive(Debug, Clone)]
pub struct LexiconSet {
    pub sentiment: HashMap<String, f64>,
    pub boosters: WordSet,
    pub dampeners: WordSet,
    pub negations: WordSet,
    pub function_words: WordSet,
    pub social: WordSet,
    pub cognitive: WordSet,
    pub affective: WordSet,
    pub informal_markers: WordSet,
    pub formal_markers: WordSet,
    /// Closed-class categories for classic LSM, in [`LSM_CATEGORIES`] order.
    pub lsm_categories: Vec<(String, WordSet)>,
}

macro_rules! data {
    ($f:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/", $f))
    };
}

const BUILTIN_LSM: [(&str, &str); 9] = [
    ("personal_pronouns", data!("lsm/personal_pronouns.txt")),
    ("impersonal_pronouns", data!("lsm/impersonal_pronouns.txt")),
    ("articles", data!("lsm/articles.txt")),
    ("prepositions", data!("lsm/prepositions.txt")),
    ("conjunctions", data!("lsm/conjunctions.txt")),
    ("auxiliary_verbs", data!("lsm/auxiliary_verbs.txt")),
    ("negations", data!("lsm/negations.txt")),
    ("quantifiers", data!("lsm/quantifiers.txt")),
    ("common_adverbs", data!("lsm/common_adverbs.txt")),
];

pub(crate) const ARCHETYPE_UTTERANCES: &str = data!("archetype_utterances.txt");
pub(crate) const FRAGMENT_TABLE: &str = data!("fragments.tsv");

fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_word_set(name: &str, src: &str) -> Result<WordSet> {
    let mut set = WordSet::new();
    for (line, word) in content_lines(src) {
        if word.chars().any(char::is_uppercase) {
            return Err(Error::Lexicon {
                name: name.to_string(),
                reason: format!("line {line}: entry `{word}` is not lower-cased"),
            });
        }
        set.insert(word.to_string());
    }
    if set.is_empty() {
        return Err(Error::Lexicon {
            name: name.to_string(),
            reason: "empty word set".into(),
        });
    }
    Ok(set)
}

pub fn parse_sentiment(name: &str, src: &str) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for (line, entry) in content_lines(src) {
        let bad = |reason: String| Error::Lexicon {
            name: name.to_string(),
            reason: format!("line {line}: {reason}"),
        };
        let mut cols = entry.split('\t');
        let (Some(word), Some(val)) = (cols.next(), cols.next()) else {
            return Err(bad("expected word<TAB>valence".into()));
        };
        let word = word.trim();
        if word.chars().any(char::is_uppercase) {
            return Err(bad(format!("entry `{word}` is not lower-cased")));
        }
        let valence: f64 = val
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad valence `{val}`")))?;
        if !(-4.0..=4.0).contains(&valence) {
            return Err(bad(format!("valence {valence} outside [-4, 4]")));
        }
        map.entry(word.to_string()).or_insert(valence);
    }
    if map.is_empty() {
        return Err(Error::Lexicon {
            name: name.to_string(),
            reason: "empty sentiment table".into(),
        });
    }
    Ok(map)
}

impl LexiconSet {
    /// The lists shipped with this crate.
    pub fn builtin() -> Result<Self> {
        let mut lsm = Vec::with_capacity(BUILTIN_LSM.len());
        for (name, src) in BUILTIN_LSM {
            lsm.push((name.to_string(), parse_word_set(name, src)?));
        }
        Ok(Self {
            sentiment: parse_sentiment("sentiment.tsv", data!("sentiment.tsv"))?,
            boosters: parse_word_set("boosters.txt", data!("boosters.txt"))?,
            dampeners: parse_word_set("dampeners.txt", data!("dampeners.txt"))?,
            negations: parse_word_set("negations.txt", data!("negations.txt"))?,
            function_words: parse_word_set("function_words.txt", data!("function_words.txt"))?,
            social: parse_word_set("social.txt", data!("social.txt"))?,
            cognitive: parse_word_set("cognitive.txt", data!("cognitive.txt"))?,
            affective: parse_word_set("affective.txt", data!("affective.txt"))?,
            informal_markers: parse_word_set(
                "informal_markers.txt",
                data!("informal_markers.txt"),
            )?,
            formal_markers: parse_word_set("formal_markers.txt", data!("formal_markers.txt"))?,
            lsm_categories: lsm,
        })
    }

    /// Process-wide shared copy of [`LexiconSet::builtin`].
    pub fn shared() -> &'static LexiconSet {
        static SHARED: OnceLock<LexiconSet> = OnceLock::new();
        SHARED.get_or_init(|| LexiconSet::builtin().expect("built-in lexicons are valid"))
    }

    /// Loads a directory with the same layout as the crate's `data/` folder.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |rel: &str| -> Result<String> {
            let p = dir.join(rel);
            fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        let set = |rel: &str| -> Result<WordSet> { parse_word_set(rel, &read(rel)?) };
        let mut lsm = Vec::with_capacity(LSM_CATEGORIES.len());
        for name in LSM_CATEGORIES {
            let rel = format!("lsm/{name}.txt");
            lsm.push((name.to_string(), set(&rel)?));
        }
        Ok(Self {
            sentiment: parse_sentiment("sentiment.tsv", &read("sentiment.tsv")?)?,
            boosters: set("boosters.txt")?,
            dampeners: set("dampeners.txt")?,
            negations: set("negations.txt")?,
            function_words: set("function_words.txt")?,
            social: set("social.txt")?,
            cognitive: set("cognitive.txt")?,
            affective: set("affective.txt")?,
            informal_markers: set("informal_markers.txt")?,
            formal_markers: set("formal_markers.txt")?,
            lsm_categories: lsm,
        })
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token) || token.ends_with("n't")
    }
}
