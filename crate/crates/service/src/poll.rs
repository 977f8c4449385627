//! Background feed polling with exponential backoff after failures.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use feedrank_ingest::{parse_feed, FeedSource, FetchOutcome, Fetcher};
use feedrank_store::Store;
use serde::Serialize;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::config::ServiceConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PollOutcome {
    Updated {
        items: usize,
        new: usize,
    },
    NotModified,
    Failed {
        error: String,
        retry_at: Option<DateTime<Utc>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PollReport {
    pub feed_id: String,
    pub url: String,
    #[serde(flatten)]
    pub outcome: PollOutcome,
}

/// Fetches every due source once (every source when `force`), at most
/// `feeds.concurrency` at a time, and stores what arrives. Reports come back
/// in source order.
pub async fn poll_once(
    store: Arc<Store>,
    fetcher: Fetcher,
    config: &ServiceConfig,
    now: DateTime<Utc>,
    force: bool,
) -> Vec<PollReport> {
    let due: Vec<FeedSource> = store
        .sources()
        .into_iter()
        .filter(|s| force || s.is_due(now, config.poll_interval()))
        .collect();
    let permits = Arc::new(Semaphore::new(config.feeds.concurrency));
    let (base, cap) = (config.retry_base(), config.retry_cap());
    let mut tasks = JoinSet::new();
    for (i, source) in due.into_iter().enumerate() {
        let (store, fetcher, permits) = (Arc::clone(&store), fetcher.clone(), Arc::clone(&permits));
        tasks.spawn(async move {
            let _permit = permits.acquire_owned().await.expect("semaphore is never closed");
            (i, poll_source(&store, &fetcher, source, now, base, cap).await)
        });
    }
    let mut reports: Vec<(usize, PollReport)> = tasks.join_all().await;
    reports.sort_by_key(|(i, _)| *i);
    reports.into_iter().map(|(_, r)| r).collect()
}

async fn poll_source(
    store: &Arc<Store>,
    fetcher: &Fetcher,
    source: FeedSource,
    now: DateTime<Utc>,
    base: std::time::Duration,
    cap: std::time::Duration,
) -> PollReport {
    let report = |outcome| PollReport {
        feed_id: source.feed_id.clone(),
        url: source.url.to_string(),
        outcome,
    };
    let result = match fetcher.fetch(&source, now).await {
        Ok((FetchOutcome::NotModified, updated)) => Ok((PollOutcome::NotModified, updated)),
        Ok((FetchOutcome::Modified(body), updated)) => {
            match parse_feed(&body, &source.feed_id, now, Some(&source.url)) {
                Ok(items) => {
                    let store2 = Arc::clone(store);
                    let feed_id = source.feed_id.clone();
                    let n = items.len();
                    let stored = tokio::task::spawn_blocking(move || store2.store_items(&feed_id, &items))
                        .await
                        .expect("storage task panicked");
                    match stored {
                        Ok(new) => Ok((PollOutcome::Updated { items: n, new }, updated)),
                        Err(e) => Err(e.to_string()),
                    }
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Err(e) => Err(e.to_string()),
    };
    let (outcome, updated) = match result {
        Ok(ok) => ok,
        Err(error) => {
            let mut failed = source.clone();
            failed.record_failure(now, base, cap);
            tracing::warn!(feed = %source.url, failures = failed.failures, %error, "fetch failed");
            (
                PollOutcome::Failed {
                    error,
                    retry_at: failed.retry_at,
                },
                failed,
            )
        }
    };
    let store2 = Arc::clone(store);
    let saved = tokio::task::spawn_blocking(move || store2.update_source(&updated))
        .await
        .expect("storage task panicked");
    if let Err(e) = saved {
        // The source may have been unsubscribed meanwhile.
        tracing::debug!(feed = %source.url, error = %e, "polling state not saved");
    }
    report(outcome)
}
