use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use feedrank_core::{ProfileConfig, RankingMode, ScoredItem, SessionSelections, TermVector, UserProfile};
use serde::{Deserialize, Serialize};

/// A finished session as it sits in the journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// 1-based, increasing by one per user.
    pub session_id: u64,
    pub user_id: String,
    pub mode: RankingMode,
    /// The page exactly as shown, in order.
    pub offered: Vec<ScoredItem>,
    pub chosen: BTreeSet<String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
    pub profile_version_before: u64,
    /// Equal to `profile_version_before` when the session had no effect.
    pub profile_version_after: u64,
}

impl SessionRecord {
    /// Chosen items in the order they were offered, which is the order the
    /// profile update averages them in.
    pub fn selections(&self) -> SessionSelections {
        let chosen = self
            .offered
            .iter()
            .filter(|s| self.chosen.contains(&s.item.hyperlink))
            .map(|s| s.item.clone())
            .collect();
        SessionSelections::new(chosen).expect("offered hyperlinks are unique")
    }

    /// `(hyperlink, score)` pairs in offered order, the input of the metrics.
    pub fn offered_scores(&self) -> Vec<(&str, f64)> {
        self.offered
            .iter()
            .map(|s| (s.item.hyperlink.as_str(), s.score))
            .collect()
    }
}

/// A session not ended yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSession {
    pub session_id: u64,
    pub user_id: String,
    pub mode: RankingMode,
    pub offered: Vec<ScoredItem>,
    pub clicks: BTreeSet<String>,
    pub started_at: DateTime<Utc>,
}

impl OpenSession {
    pub fn offers(&self, hyperlink: &str) -> bool {
        self.offered.iter().any(|s| s.item.hyperlink == hyperlink)
    }
}

/// One stored version of a user's profile. Version 0 is the empty profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub user_id: String,
    pub version: u64,
    pub vector: TermVector,
    pub sessions_completed: u64,
    pub config: ProfileConfig,
}

impl ProfileSnapshot {
    pub fn initial(user_id: &str, config: ProfileConfig) -> Self {
        Self::of(user_id, 0, &UserProfile::empty(config))
    }

    pub fn of(user_id: &str, version: u64, profile: &UserProfile) -> Self {
        Self {
            user_id: user_id.to_string(),
            version,
            vector: profile.vector.clone(),
            sessions_completed: profile.sessions_completed,
            config: profile.config,
        }
    }

    pub fn profile(&self) -> UserProfile {
        UserProfile {
            vector: self.vector.clone(),
            sessions_completed: self.sessions_completed,
            config: self.config,
        }
    }
}

/// Input of [`crate::Store::append_session`]: a complete session before the
/// store assigns its id and profile versions.
#[derive(Debug, Clone, PartialEq)]
pub struct NewSession {
    pub user_id: String,
    pub mode: RankingMode,
    pub offered: Vec<ScoredItem>,
    pub chosen: BTreeSet<String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}
