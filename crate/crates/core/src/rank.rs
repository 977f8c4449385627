//! Headline scoring and page ordering.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::item::NewsItem;
use crate::text::{TermVector, Tokenizer};

/// Cosine of the angle between two non-negative vectors; 0 when either is empty.
pub fn cosine_score(profile: &TermVector, headline: &TermVector) -> f64 {
    let denom = profile.norm() * headline.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (profile.dot(headline) / denom).clamp(0.0, 1.0)
}

/// 1 if any headline term occurs in the profile, else 0.
pub fn binary_score(profile: &TermVector, headline: &TermVector) -> f64 {
    if profile.intersects(headline) {
        1.0
    } else {
        0.0
    }
}

/// How a page of headlines is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RankingMode {
    Cosine,
    Binary,
    Random { seed: u64 },
}

impl RankingMode {
    pub fn kind(&self) -> ModeKind {
        match self {
            RankingMode::Cosine => ModeKind::Cosine,
            RankingMode::Binary => ModeKind::Binary,
            RankingMode::Random { .. } => ModeKind::Random,
        }
    }
}

/// A ranking mode without its seed, as named in plans and on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[default]
    Cosine,
    Binary,
    Random,
}

impl ModeKind {
    pub fn with_seed(self, seed: u64) -> RankingMode {
        match self {
            ModeKind::Cosine => RankingMode::Cosine,
            ModeKind::Binary => RankingMode::Binary,
            ModeKind::Random => RankingMode::Random { seed },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Cosine => "cosine",
            ModeKind::Binary => "binary",
            ModeKind::Random => "random",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "order" => Ok(ModeKind::Cosine),
            "binary" => Ok(ModeKind::Binary),
            "random" => Ok(ModeKind::Random),
            other => Err(format!(
                "unknown ranking mode {other:?} (expected cosine, binary or random)"
            )),
        }
    }
}

/// A news item paired with its headline tf vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub item: NewsItem,
    pub headline: TermVector,
}

impl Candidate {
    pub fn new(item: NewsItem, tokenizer: &Tokenizer) -> Self {
        let headline = tokenizer.vectorize(&item.headline);
        Self { item, headline }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: NewsItem,
    pub score: f64,
    /// 1-based position on the page.
    pub rank: usize,
}

/// Newest first, then by hyperlink.
fn tie_break(a: &NewsItem, b: &NewsItem) -> Ordering {
    b.fetched_at
        .cmp(&a.fetched_at)
        .then_with(|| a.hyperlink.cmp(&b.hyperlink))
}

/// Scores every candidate against `profile` under `mode` (RANDOM scores 0).
pub fn score_all(
    profile: &TermVector,
    candidates: &[Candidate],
    mode: RankingMode,
    exec: Execution,
) -> Vec<f64> {
    match mode {
        RankingMode::Cosine => exec.map(candidates, |c| cosine_score(profile, &c.headline)),
        RankingMode::Binary => exec.map(candidates, |c| binary_score(profile, &c.headline)),
        RankingMode::Random { .. } => vec![0.0; candidates.len()],
    }
}

/// Orders `candidates` and returns the first `page_size` of them.
///
/// Scored modes sort by descending score, breaking ties by newest fetch time
/// and then by hyperlink. RANDOM starts from the tie-break order and shuffles
/// it with its seed, so the same seed always yields the same page.
/// Candidates must already be unique by hyperlink.
pub fn rank_candidates(
    profile: &TermVector,
    candidates: &[Candidate],
    mode: RankingMode,
    page_size: usize,
    exec: Execution,
) -> Vec<ScoredItem> {
    let scores = score_all(profile, candidates, mode, exec);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .total_cmp(&scores[i])
            .then_with(|| tie_break(&candidates[i].item, &candidates[j].item))
    });
    if let RankingMode::Random { seed } = mode {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
        .into_iter()
        .take(page_size)
        .enumerate()
        .map(|(pos, i)| ScoredItem {
            item: candidates[i].item.clone(),
            score: scores[i],
            rank: pos + 1,
        })
        .collect()
}

/// Convenience wrapper that tokenizes headlines first.
pub fn rank(
    profile: &TermVector,
    candidates: &[NewsItem],
    mode: RankingMode,
    page_size: usize,
    tokenizer: &Tokenizer,
) -> Vec<ScoredItem> {
    let prepared: Vec<Candidate> = candidates
        .iter()
        .map(|i| Candidate::new(i.clone(), tokenizer))
        .collect();
    rank_candidates(profile, &prepared, mode, page_size, Execution::Sequential)
}
