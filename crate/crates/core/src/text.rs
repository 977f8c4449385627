//! Tokenization and term-frequency vectors.
//!
//! A [`TermVector`] is a sparse map from term to a strictly positive weight.
//! It is backed by a `BTreeMap` so that every fold over its entries runs in
//! the same order on every platform; profile replay relies on that to
//! reproduce stored weights bit for bit.

use std::collections::{btree_map, BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Built-in English stopwords used when no list is configured.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by",
    "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how",
    "if", "in", "into", "is", "it", "its", "more", "new", "no", "not", "of", "on", "or", "our", "out",
    "over", "says", "she", "so", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "to", "up", "was", "we", "were", "what", "when", "which", "who", "will", "with", "would", "you",
    "your",
];

/// Ordered list of terms extracted from one text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Splits text into lowercase terms.
///
/// Text is lowercased and NFC-normalized, then split on every character that
/// is neither alphanumeric nor an apostrophe/hyphen sitting between two
/// alphanumeric characters. Single-character tokens and stopwords are dropped.
/// No stemming is applied.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::with_stopwords(DEFAULT_STOPWORDS.iter().copied())
    }
}

impl Tokenizer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = words
            .into_iter()
            .map(|w| normalize(w.as_ref().trim()))
            .filter(|w| !w.is_empty())
            .collect();
        Self { stopwords }
    }

    /// Loads a stopword list: one term per line, blank lines and `#` comments ignored.
    pub fn from_stopword_file(path: impl AsRef<Path>) -> io::Result<Self> {
        let contents = fs::read_to_string(path)?;
        Ok(Self::with_stopwords(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }

    pub fn tokenize(&self, text: &str) -> TokenStream {
        let normalized = normalize(text);
        let chars: Vec<char> = normalized.chars().collect();
        let mut tokens = Vec::new();
        let mut current = String::new();

        for (i, &c) in chars.iter().enumerate() {
            let keep = c.is_alphanumeric()
                || (is_joiner(c)
                    && !current.is_empty()
                    && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()));
            if keep {
                current.push(c);
            } else if !current.is_empty() {
                self.emit(&mut tokens, std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            self.emit(&mut tokens, current);
        }
        TokenStream(tokens)
    }

    fn emit(&self, tokens: &mut Vec<String>, token: String) {
        if token.chars().nth(1).is_some() && !self.stopwords.contains(&token) {
            tokens.push(token);
        }
    }

    /// Tokenizes `text` and returns its term-frequency vector.
    pub fn vectorize(&self, text: &str) -> TermVector {
        tf_vector(&self.tokenize(text))
    }
}

fn normalize(text: &str) -> String {
    text.nfc().collect::<String>().to_lowercase().nfc().collect()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

/// Sparse term-weight vector. Every stored weight is finite and > 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct TermVector {
    entries: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid weight {weight} for term {term:?}")]
pub struct InvalidWeight {
    pub term: String,
    pub weight: f64,
}

impl TryFrom<BTreeMap<String, f64>> for TermVector {
    type Error = InvalidWeight;

    fn try_from(entries: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        for (term, &weight) in &entries {
            if !(weight.is_finite() && weight > 0.0) || term.is_empty() {
                return Err(InvalidWeight {
                    term: term.clone(),
                    weight,
                });
            }
        }
        Ok(Self { entries })
    }
}

impl From<TermVector> for BTreeMap<String, f64> {
    fn from(v: TermVector) -> Self {
        v.entries
    }
}

impl TermVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(term, weight)` pairs, summing repeated terms and
    /// dropping entries whose final weight is not strictly positive.
    pub fn from_weights<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (term, weight) in pairs {
            *entries.entry(term.into()).or_insert(0.0) += weight;
        }
        entries.retain(|t: &String, w: &mut f64| !t.is_empty() && w.is_finite() && *w > 0.0);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.entries.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn iter(&self) -> btree_map::Iter<'_, String, f64> {
        self.entries.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Sparse dot product, iterating over the smaller vector.
    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .filter_map(|(t, w)| large.entries.get(t).map(|v| w * v))
            .sum()
    }

    /// True when the two supports share at least one term.
    pub fn intersects(&self, other: &TermVector) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.entries.keys().any(|t| large.entries.contains_key(t))
    }

    pub fn scaled(&self, factor: f64) -> TermVector {
        Self::from_weights(self.entries.iter().map(|(t, w)| (t.clone(), w * factor)))
    }

    /// Inserts an entry built by the crate's own arithmetic; non-positive
    /// results are dropped to keep the vector sparse.
    pub(crate) fn insert_weight(&mut self, term: String, weight: f64) {
        if weight > 0.0 && weight.is_finite() {
            self.entries.insert(term, weight);
        }
    }
}

impl<'a> IntoIterator for &'a TermVector {
    type Item = (&'a String, &'a f64);
    type IntoIter = btree_map::Iter<'a, String, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Weight of each term is its count divided by the total number of tokens.
pub fn tf_vector(tokens: &TokenStream) -> TermVector {
    if tokens.is_empty() {
        return TermVector::new();
    }
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for t in tokens.iter() {
        *counts.entry(t).or_insert(0) += 1;
    }
    let total = tokens.len() as f64;
    let mut out = TermVector::new();
    for (term, count) in counts {
        out.insert_weight(term.to_owned(), f64::from(count) / total);
    }
    out
}

/// Entrywise sum of `vectors` (absent terms count as zero), multiplied by `scale`.
///
/// Terms are accumulated in list order, so the result is deterministic for a
/// given input order.
///
/// # Panics
///
/// Panics if `scale` is not a finite positive number.
pub fn vector_sum_scaled(vectors: &[TermVector], scale: f64) -> TermVector {
    assert!(
        scale.is_finite() && scale > 0.0,
        "scale must be a finite positive number, got {scale}"
    );
    let mut acc: BTreeMap<&str, f64> = BTreeMap::new();
    for v in vectors {
        for (t, w) in v {
            *acc.entry(t.as_str()).or_insert(0.0) += w;
        }
    }
    let mut out = TermVector::new();
    for (t, w) in acc {
        out.insert_weight(t.to_owned(), w * scale);
    }
    out
}
