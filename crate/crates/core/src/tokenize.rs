//! Deterministic word tokenization and n-gram extraction.
//!
//! The rule: lowercase the text, split on Unicode whitespace, and emit every
//! character that is neither alphanumeric nor whitespace as a token of its
//! own. `"Hello, world!"` becomes `["hello", ",", "world", "!"]`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Pooled n-gram multiset: n-gram key (tokens joined by a single space) to
/// occurrence count.
pub type NgramCounts = HashMap<String, usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

impl From<Vec<String>> for TokenSequence {
    /// Empty strings are dropped.
    fn from(tokens: Vec<String>) -> Self {
        TokenSequence {
            tokens: tokens.into_iter().filter(|t| !t.is_empty()).collect(),
        }
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

pub fn tokenize(text: &str) -> TokenSequence {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for word in lowered.split_whitespace() {
        let mut current = String::new();
        for c in word.chars() {
            if is_punct(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSequence { tokens }
}

/// Adds the n-grams of `tokens` into `counts`.
pub fn accumulate_ngrams(tokens: &TokenSequence, n: usize, counts: &mut NgramCounts) -> Result<()> {
    if n == 0 {
        return Err(Error::arg("n-gram order must be at least 1"));
    }
    for window in tokens.tokens.windows(n) {
        *counts.entry(window.join(" ")).or_insert(0) += 1;
    }
    Ok(())
}

pub fn extract_ngrams(tokens: &TokenSequence, n: usize) -> Result<NgramCounts> {
    let mut counts = NgramCounts::new();
    accumulate_ngrams(tokens, n, &mut counts)?;
    Ok(counts)
}
