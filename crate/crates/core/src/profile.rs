//! Session profiles and the end-of-session user profile update.
//!
//! A session profile is the mean tf vector of the headlines chosen in one
//! session; the summary profile is the mean tf vector of the summaries of
//! those choices. At session end each term of the stored profile becomes
//!
//! ```text
//! (a * stored + b * session) + summary   if the term was already stored
//! session + summary                      otherwise
//! ```
//!
//! with absent terms read as zero. The profile is never renormalized.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::item::NewsItem;
use crate::text::{vector_sum_scaled, TermVector, Tokenizer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("session has no chosen headlines")]
    EmptySession,
    #[error("hyperlink {0:?} chosen more than once in one session")]
    DuplicateChoice(String),
    #[error("profile weights must satisfy a + b = 1 with both in [0, 1] (got a = {a}, b = {b})")]
    InvalidConstants { a: f64, b: f64 },
}

/// Mixing constants for the stored profile (`a`) and the session profile (`b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ProfileConfig {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawConfig {
    a: f64,
    b: f64,
}

impl TryFrom<RawConfig> for ProfileConfig {
    type Error = ProfileError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        Self::new(raw.a, raw.b)
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { a: 0.5, b: 0.5 }
    }
}

impl ProfileConfig {
    pub fn new(a: f64, b: f64) -> Result<Self, ProfileError> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if in_unit(a) && in_unit(b) && (a + b - 1.0).abs() <= 1e-9 {
            Ok(Self { a, b })
        } else {
            Err(ProfileError::InvalidConstants { a, b })
        }
    }

    /// Builds the pair from `a` alone, with `b = 1 - a`.
    pub fn from_history_weight(a: f64) -> Result<Self, ProfileError> {
        Self::new(a, 1.0 - a)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// The accumulated interest profile of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub vector: TermVector,
    pub sessions_completed: u64,
    pub config: ProfileConfig,
}

impl UserProfile {
    pub fn empty(config: ProfileConfig) -> Self {
        Self {
            vector: TermVector::new(),
            sessions_completed: 0,
            config,
        }
    }
}

/// Items a user chose during one session, in presentation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionSelections {
    chosen: Vec<NewsItem>,
}

impl SessionSelections {
    pub fn new(chosen: Vec<NewsItem>) -> Result<Self, ProfileError> {
        let mut seen = HashSet::new();
        for item in &chosen {
            if !seen.insert(item.hyperlink.as_str()) {
                return Err(ProfileError::DuplicateChoice(item.hyperlink.clone()));
            }
        }
        Ok(Self { chosen })
    }

    pub fn chosen(&self) -> &[NewsItem] {
        &self.chosen
    }

    pub fn chosen_with_summary(&self) -> impl Iterator<Item = &NewsItem> {
        self.chosen.iter().filter(|i| i.summary_text().is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }
}

/// Mean headline tf vector over the chosen items.
pub fn session_profile(
    selections: &SessionSelections,
    tokenizer: &Tokenizer,
) -> Result<TermVector, ProfileError> {
    if selections.is_empty() {
        return Err(ProfileError::EmptySession);
    }
    let vectors: Vec<TermVector> = selections
        .chosen()
        .iter()
        .map(|i| tokenizer.vectorize(&i.headline))
        .collect();
    Ok(vector_sum_scaled(&vectors, 1.0 / vectors.len() as f64))
}

/// Mean summary tf vector over the chosen items that carry a summary; empty
/// when none do.
pub fn summary_profile(selections: &SessionSelections, tokenizer: &Tokenizer) -> TermVector {
    let vectors: Vec<TermVector> = selections
        .chosen_with_summary()
        .filter_map(|i| i.summary_text())
        .map(|s| tokenizer.vectorize(s))
        .collect();
    if vectors.is_empty() {
        return TermVector::new();
    }
    vector_sum_scaled(&vectors, 1.0 / vectors.len() as f64)
}

/// Folds one session's profiles into the stored profile.
pub fn update_profile(
    profile: &UserProfile,
    session: &TermVector,
    summary: &TermVector,
) -> Result<UserProfile, ProfileError> {
    if session.is_empty() {
        return Err(ProfileError::EmptySession);
    }
    let (a, b) = (profile.config.a, profile.config.b);
    let stored = &profile.vector;

    let mut vector = TermVector::new();
    let union = stored
        .terms()
        .chain(session.terms())
        .chain(summary.terms())
        .collect::<std::collections::BTreeSet<_>>();
    for term in union {
        let s = session.get(term).unwrap_or(0.0);
        let r = summary.get(term).unwrap_or(0.0);
        let weight = match stored.get(term) {
            Some(p) => (a * p + b * s) + r,
            None => s + r,
        };
        vector.insert_weight(term.to_owned(), weight);
    }

    Ok(UserProfile {
        vector,
        sessions_completed: profile.sessions_completed + 1,
        config: profile.config,
    })
}

/// Applies one session to `profile`.
///
/// Sessions with no choices, or whose chosen headlines tokenize to nothing,
/// leave the profile and its session counter unchanged.
pub fn apply_session(
    profile: &UserProfile,
    selections: &SessionSelections,
    tokenizer: &Tokenizer,
) -> UserProfile {
    let Ok(session) = session_profile(selections, tokenizer) else {
        return profile.clone();
    };
    if session.is_empty() {
        return profile.clone();
    }
    let summary = summary_profile(selections, tokenizer);
    update_profile(profile, &session, &summary).unwrap_or_else(|_| profile.clone())
}

/// Rebuilds a profile from a full session history by folding
/// [`apply_session`] over it in order.
pub fn replay_profile(
    sessions: &[SessionSelections],
    config: ProfileConfig,
    tokenizer: &Tokenizer,
) -> UserProfile {
    sessions
        .iter()
        .fold(UserProfile::empty(config), |profile, selections| {
            apply_session(&profile, selections, tokenizer)
        })
}
