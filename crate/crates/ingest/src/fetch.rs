//! Conditional HTTP fetching of feed documents.

use std::time::Duration;

use bytes::Bytes;
use chrono::{DateTime, Utc};
use reqwest::header::{ETAG, IF_MODIFIED_SINCE, IF_NONE_MATCH, LAST_MODIFIED, USER_AGENT};
use reqwest::{redirect, StatusCode};

use crate::source::FeedSource;
use crate::FeedError;

pub const DEFAULT_USER_AGENT: &str = concat!(
    "feedrank/",
    env!("CARGO_PKG_VERSION"),
    " (personalized feed reader)"
);

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub timeout: Duration,
    pub max_redirects: usize,
    pub user_agent: String,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(20),
            max_redirects: 5,
            user_agent: DEFAULT_USER_AGENT.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Modified(Bytes),
    NotModified,
}

#[derive(Debug, Clone)]
pub struct Fetcher {
    client: reqwest::Client,
    user_agent: String,
}

impl Fetcher {
    pub fn new(config: &FetchConfig) -> Result<Self, FeedError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .redirect(redirect::Policy::limited(config.max_redirects))
            .build()
            .map_err(|e| FeedError::Network(e.to_string()))?;
        Ok(Self {
            client,
            user_agent: config.user_agent.clone(),
        })
    }

    /// GETs `source`, sending stored validators. On success the returned
    /// source carries the new validators and fetch time; on failure the
    /// caller decides how to record it.
    pub async fn fetch(
        &self,
        source: &FeedSource,
        now: DateTime<Utc>,
    ) -> Result<(FetchOutcome, FeedSource), FeedError> {
        let mut req = self
            .client
            .get(source.url.clone())
            .header(USER_AGENT, &self.user_agent);
        if let Some(etag) = &source.etag {
            req = req.header(IF_NONE_MATCH, etag);
        }
        if let Some(lm) = &source.last_modified {
            req = req.header(IF_MODIFIED_SINCE, lm);
        }
        let resp = req.send().await.map_err(network_error)?;
        let status = resp.status();
        let header = |name| {
            resp.headers()
                .get(name)
                .and_then(|v: &reqwest::header::HeaderValue| v.to_str().ok())
                .map(str::to_string)
        };
        let etag = header(ETAG);
        let last_modified = header(LAST_MODIFIED);
        let mut updated = source.clone();
        if status == StatusCode::NOT_MODIFIED {
            updated.record_success(now, etag, last_modified);
            return Ok((FetchOutcome::NotModified, updated));
        }
        if !status.is_success() {
            return Err(FeedError::Http(status.as_u16()));
        }
        let body = resp.bytes().await.map_err(network_error)?;
        updated.record_success(now, etag, last_modified);
        Ok((FetchOutcome::Modified(body), updated))
    }
}

fn network_error(e: reqwest::Error) -> FeedError {
    let reason = if e.is_redirect() {
        "too many redirects".to_string()
    } else if e.is_timeout() {
        "timed out".to_string()
    } else if e.is_connect() {
        format!("connection failed: {e}")
    } else {
        e.to_string()
    };
    FeedError::Network(reason)
}
