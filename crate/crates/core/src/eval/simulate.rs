//! Simulated readers that click headlines overlapping their interests.

use std::collections::{BTreeSet, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::corpus::{derive_seed, SyntheticCorpus};
use crate::rank::ScoredItem;
use crate::text::Tokenizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedUser {
    pub user_id: String,
    pub interest_terms: BTreeSet<String>,
    /// Minimum share of a headline's distinct terms that must be interesting.
    pub selection_threshold: f64,
    pub max_choices_per_session: usize,
    /// Chance of clicking an item that does not qualify, checked per item.
    #[serde(default)]
    pub stray_click_probability: f64,
    pub rng_seed: u64,
}

impl SimulatedUser {
    pub fn validate(&self) -> Result<(), String> {
        if self.interest_terms.is_empty() {
            return Err(format!("user {}: interest_terms is empty", self.user_id));
        }
        if !(self.selection_threshold > 0.0 && self.selection_threshold <= 1.0) {
            return Err(format!(
                "user {}: selection_threshold {} outside (0, 1]",
                self.user_id, self.selection_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.stray_click_probability) {
            return Err(format!(
                "user {}: stray_click_probability {} outside [0, 1]",
                self.user_id, self.stray_click_probability
            ));
        }
        Ok(())
    }

    /// Share of the distinct terms of `headline` that are interesting to this user.
    pub fn overlap(&self, headline: &str, tokenizer: &Tokenizer) -> f64 {
        let terms: HashSet<String> = tokenizer.tokenize(headline).into_inner().into_iter().collect();
        if terms.is_empty() {
            return 0.0;
        }
        let hits = terms.iter().filter(|t| self.interest_terms.contains(*t)).count();
        hits as f64 / terms.len() as f64
    }
}

/// How simulated users are drawn from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserModel {
    /// Topics each user is interested in.
    pub interest_topics: usize,
    /// Probability that a term of an interesting topic is itself interesting.
    pub interest_fraction: f64,
    pub selection_threshold: f64,
    pub max_choices_per_session: usize,
    pub stray_click_probability: f64,
}

impl Default for UserModel {
    fn default() -> Self {
        Self {
            interest_topics: 4,
            interest_fraction: 1.0,
            selection_threshold: 0.5,
            max_choices_per_session: 5,
            stray_click_probability: 0.0,
        }
    }
}

impl UserModel {
    pub fn validate(&self, topics: usize) -> Result<(), String> {
        if self.interest_topics == 0 || self.interest_topics > topics {
            return Err(format!(
                "users.interest_topics must lie in 1..={topics}, got {}",
                self.interest_topics
            ));
        }
        if !(self.interest_fraction > 0.0 && self.interest_fraction <= 1.0) {
            return Err("users.interest_fraction must lie in (0, 1]".into());
        }
        if !(self.selection_threshold > 0.0 && self.selection_threshold <= 1.0) {
            return Err("users.selection_threshold must lie in (0, 1]".into());
        }
        if self.max_choices_per_session == 0 {
            return Err("users.max_choices_per_session must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.stray_click_probability) {
            return Err("users.stray_click_probability must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Draws user `index` (0-based) with a random subset of topics as interests.
    pub fn draw(&self, corpus: &SyntheticCorpus, seed: u64, index: usize) -> SimulatedUser {
        let user_seed = derive_seed(seed, &[2, index as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
        let topics = corpus.spec().topics;
        let mut chosen: Vec<usize> = index::sample(&mut rng, topics, self.interest_topics).into_vec();
        chosen.sort_unstable();
        let mut interest_terms = BTreeSet::new();
        for t in chosen {
            let terms = corpus.topic_terms(t);
            for term in terms {
                if self.interest_fraction >= 1.0 || rng.random_bool(self.interest_fraction) {
                    interest_terms.insert(term.clone());
                }
            }
            if interest_terms.is_empty() {
                interest_terms.insert(terms[0].clone());
            }
        }
        SimulatedUser {
            user_id: format!("user-{:02}", index + 1),
            interest_terms,
            selection_threshold: self.selection_threshold,
            max_choices_per_session: self.max_choices_per_session,
            stray_click_probability: self.stray_click_probability,
            rng_seed: user_seed,
        }
    }
}

/// Hyperlinks the user clicks among `offered`.
///
/// An item qualifies when its interest overlap reaches the user's threshold.
/// At most `max_choices_per_session` are kept, preferring higher overlap and
/// breaking ties with `rng`. Any room left under the cap goes to stray
/// clicks on non-qualifying items, each taken with the user's stray-click
/// probability in page order.
pub fn simulate_choices(
    user: &SimulatedUser,
    offered: &[ScoredItem],
    rng: &mut impl Rng,
    tokenizer: &Tokenizer,
) -> BTreeSet<String> {
    let mut qualifying: Vec<(f64, u64, &str)> = Vec::new();
    let mut others: Vec<&str> = Vec::new();
    for s in offered {
        let o = user.overlap(&s.item.headline, tokenizer);
        if o > 0.0 && o >= user.selection_threshold {
            qualifying.push((o, 0, s.item.hyperlink.as_str()));
        } else {
            others.push(s.item.hyperlink.as_str());
        }
    }
    for q in &mut qualifying {
        q.1 = rng.random();
    }
    qualifying.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<&str> = qualifying
        .into_iter()
        .take(user.max_choices_per_session)
        .map(|(_, _, link)| link)
        .collect();
    if user.stray_click_probability > 0.0 {
        for link in others {
            if rng.random_bool(user.stray_click_probability) && chosen.len() < user.max_choices_per_session {
                chosen.push(link);
            }
        }
    }
    chosen.into_iter().map(str::to_string).collect()
}
