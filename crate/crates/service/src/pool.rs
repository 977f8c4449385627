//! Which stored items a user is offered when a session starts.

use std::collections::HashSet;

use chrono::{DateTime, Duration, Utc};
use feedrank_core::NewsItem;
use feedrank_store::{Store, StoreError};

/// Candidate items for the next session of `user_id`.
///
/// Items from the user's feeds fetched within `horizon`, minus anything
/// the user already clicked. Items fetched since the previous session ended
/// come first; when there are fewer than `page_size` of them, the newest
/// older unclicked items fill up the remainder.
pub fn candidate_pool(
    store: &Store,
    user_id: &str,
    now: DateTime<Utc>,
    page_size: usize,
    horizon: Duration,
) -> Result<Vec<NewsItem>, StoreError> {
    let sessions = store.list_sessions(user_id)?;
    let clicked: HashSet<&str> = sessions
        .iter()
        .flat_map(|s| s.chosen.iter().map(String::as_str))
        .collect();
    let last_end = sessions.last().map(|s| s.ended_at);
    let since = now.checked_sub_signed(horizon);

    let mut seen = HashSet::new();
    let mut fresh = Vec::new();
    let mut older = Vec::new();
    for feed in store.user_feeds(user_id)? {
        for item in store.load_items(&feed.feed_id, since)? {
            if clicked.contains(item.hyperlink.as_str()) || !seen.insert(item.hyperlink.clone()) {
                continue;
            }
            if last_end.is_none_or(|end| item.fetched_at > end) {
                fresh.push(item);
            } else {
                older.push(item);
            }
        }
    }
    if fresh.len() < page_size {
        older.sort_by(|a, b| {
            b.fetched_at
                .cmp(&a.fetched_at)
                .then_with(|| a.hyperlink.cmp(&b.hyperlink))
        });
        older.truncate(page_size - fresh.len());
        fresh.extend(older);
    }
    Ok(fresh)
}
