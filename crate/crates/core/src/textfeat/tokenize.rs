//! Tokenizer and sentence splitter shared by every text feature.
//!
//! Tokens are maximal runs of Unicode letters, digits and apostrophes; any
//! other character separates. Curly apostrophes fold to `'`, and apostrophes
//! at token edges are dropped. Sentences end at runs of `.`, `!` or `?` and at
//! end of text; a sentence counts only if it holds at least one token.

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}')
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn push_token(out: &mut Vec<String>, buf: &mut String) {
    let trimmed = buf.trim_matches('\'');
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    buf.clear();
}

/// Tokens with their original casing.
pub fn raw_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut buf = String::new();
    for c in text.chars() {
        if is_token_char(c) {
            buf.push(if is_apostrophe(c) { '\'' } else { c });
        } else if !buf.is_empty() {
            push_token(&mut out, &mut buf);
        }
    }
    if !buf.is_empty() {
        push_token(&mut out, &mut buf);
    }
    out
}

/// Lower-cased tokens.
pub fn tokens(text: &str) -> Vec<String> {
    raw_tokens(text)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect()
}

/// Sentence segments, each a lower-cased token list, empty segments dropped.
pub fn sentences(text: &str) -> Vec<Vec<String>> {
    text.split(is_terminal)
        .map(tokens)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Runs of two or more `!`/`?` characters ("!!", "??", "?!").
pub fn repeated_punctuation_runs(text: &str) -> usize {
    let mut runs = 0;
    let mut len = 0;
    for c in text.chars() {
        if c == '!' || c == '?' {
            len += 1;
        } else {
            if len >= 2 {
                runs += 1;
            }
            len = 0;
        }
    }
    if len >= 2 {
        runs += 1;
    }
    runs
}
