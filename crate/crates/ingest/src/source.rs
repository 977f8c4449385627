//! Subscribed feeds and their polling state.

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSource {
    /// Stable identifier derived from the URL.
    pub feed_id: String,
    pub url: Url,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_fetch: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_modified: Option<String>,
    /// Consecutive failed fetches.
    #[serde(default)]
    pub failures: u32,
    /// Earliest time of the next attempt after a failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_at: Option<DateTime<Utc>>,
}

/// First 16 hex digits of the SHA-256 of the URL.
pub fn feed_id_for(url: &Url) -> String {
    let digest = Sha256::digest(url.as_str().as_bytes());
    hex::encode(&digest[..8])
}

/// Delay before retry number `failures` (1-based): `base * 2^(failures-1)`,
/// never more than `cap`.
pub fn backoff_delay(failures: u32, base: Duration, cap: Duration) -> Duration {
    let exp = failures.saturating_sub(1).min(31);
    base.saturating_mul(1u32 << exp).min(cap)
}

impl FeedSource {
    pub fn new(url: Url, title: Option<String>) -> Self {
        Self {
            feed_id: feed_id_for(&url),
            url,
            title,
            last_fetch: None,
            etag: None,
            last_modified: None,
            failures: 0,
            retry_at: None,
        }
    }

    /// Whether a poll at `now` should fetch this source.
    pub fn is_due(&self, now: DateTime<Utc>, poll_interval: Duration) -> bool {
        if let Some(retry) = self.retry_at {
            return now >= retry;
        }
        match self.last_fetch {
            None => true,
            Some(last) => {
                now - last >= chrono::Duration::from_std(poll_interval).unwrap_or(chrono::Duration::MAX)
            }
        }
    }

    pub fn record_success(
        &mut self,
        now: DateTime<Utc>,
        etag: Option<String>,
        last_modified: Option<String>,
    ) {
        self.last_fetch = Some(now);
        if etag.is_some() {
            self.etag = etag;
        }
        if last_modified.is_some() {
            self.last_modified = last_modified;
        }
        self.failures = 0;
        self.retry_at = None;
    }

    pub fn record_failure(&mut self, now: DateTime<Utc>, base: Duration, cap: Duration) {
        self.failures = self.failures.saturating_add(1);
        let delay = backoff_delay(self.failures, base, cap);
        let delay = chrono::Duration::from_std(delay).unwrap_or(chrono::Duration::MAX);
        self.retry_at = Some(now.checked_add_signed(delay).unwrap_or(DateTime::<Utc>::MAX_UTC));
    }
}
