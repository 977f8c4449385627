use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// One syndicated entry: a headline, the hyperlink that identifies it, and an
/// optional summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub headline: String,
    /// Absolute URL; unique within any candidate set.
    pub hyperlink: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub feed_id: String,
    pub fetched_at: DateTime<Utc>,
}

impl NewsItem {
    /// The summary, if present and not blank.
    pub fn summary_text(&self) -> Option<&str> {
        self.summary.as_deref().filter(|s| !s.trim().is_empty())
    }
}
