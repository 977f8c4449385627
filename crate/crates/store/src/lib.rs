//! On-disk state of the feed reader.
//!
//! Everything lives under one data directory:
//!
//! ```text
//! users/<user_id>/journal.jsonl   session journal with profile snapshots
//! items/<feed_id>.jsonl           fetched items, one per line
//! feeds.json                      sources, polling state and subscriptions
//! ```
//!
//! Journals are append-only JSON lines; `feeds.json` is replaced atomically.
//! Each user has a single writer at a time, guarded by a per-user mutex;
//! different users never wait on each other.

mod feeds;
mod items;
mod journal;
mod record;
mod user;

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use feedrank_core::{NewsItem, ProfileConfig, RankingMode, ScoredItem, Tokenizer};
use feedrank_ingest::FeedSource;

pub use journal::SCHEMA_VERSION;
pub use record::{NewSession, OpenSession, ProfileSnapshot, SessionRecord};

use feeds::FeedRegistry;
use items::ItemCache;
use user::UserState;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}, line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("could not encode record: {0}")]
    Encode(String),
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("user {user_id} already has session {session_id} open")]
    SessionAlreadyOpen { user_id: String, session_id: u64 },
    #[error("user {0} has no open session")]
    NoOpenSession(String),
    #[error("session {expected} of user {user_id} is no longer open")]
    Conflict { user_id: String, expected: u64 },
    #[error("{0:?} was not offered in this session")]
    NotOffered(String),
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("unknown feed {0}")]
    UnknownFeed(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Settings fixed for the lifetime of a [`Store`].
#[derive(Debug, Clone, Default)]
pub struct StoreOptions {
    /// Constants given to users who have no journal yet.
    pub default_config: ProfileConfig,
    /// Used to turn chosen items into session profiles.
    pub tokenizer: Tokenizer,
}

pub struct Store {
    root: PathBuf,
    options: StoreOptions,
    users: Mutex<HashMap<String, Arc<Mutex<UserState>>>>,
    feeds: Mutex<FeedRegistry>,
    items: Mutex<HashMap<String, Arc<Mutex<ItemCache>>>>,
}

/// Locks `m` even if a panicking thread held it. In-memory state is only
/// changed after the matching write succeeded, so it is never half-updated.
pub(crate) fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// User and feed ids become file names, so they are kept to a safe alphabet.
fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

impl Store {
    /// Opens (creating if needed) the data directory at `root`.
    pub fn open(root: impl Into<PathBuf>, options: StoreOptions) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| StoreError::io(&root, e))?;
        let feeds = FeedRegistry::load(root.join("feeds.json"))?;
        Ok(Self {
            root,
            options,
            users: Mutex::new(HashMap::new()),
            feeds: Mutex::new(feeds),
            items: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn options(&self) -> &StoreOptions {
        &self.options
    }

    fn journal_path(&self, user_id: &str) -> PathBuf {
        self.root.join("users").join(user_id).join("journal.jsonl")
    }

    fn user(&self, user_id: &str) -> Result<Arc<Mutex<UserState>>> {
        check_id(user_id)?;
        let mut users = lock(&self.users);
        if let Some(u) = users.get(user_id) {
            return Ok(Arc::clone(u));
        }
        let state = UserState::load(self.journal_path(user_id), user_id, self.options.default_config)?;
        let state = Arc::new(Mutex::new(state));
        users.insert(user_id.to_string(), Arc::clone(&state));
        Ok(state)
    }

    /// Users with a journal on disk, sorted.
    pub fn list_users(&self) -> Result<Vec<String>> {
        let dir = self.root.join("users");
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::io(&dir, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| StoreError::io(&dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if check_id(&name).is_ok() && entry.path().join("journal.jsonl").exists() {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// The latest profile; version 0 and empty for a user never seen.
    pub fn load_profile(&self, user_id: &str) -> Result<ProfileSnapshot> {
        let user = self.user(user_id)?;
        let state = lock(&user);
        Ok(state.latest().clone())
    }

    /// Every stored profile version, starting at 0.
    pub fn profile_history(&self, user_id: &str) -> Result<Vec<ProfileSnapshot>> {
        let user = self.user(user_id)?;
        let state = lock(&user);
        Ok(state.snapshots.clone())
    }

    /// Committed sessions in order.
    pub fn list_sessions(&self, user_id: &str) -> Result<Vec<SessionRecord>> {
        let user = self.user(user_id)?;
        let state = lock(&user);
        Ok(state.sessions.clone())
    }

    pub fn current_session(&self, user_id: &str) -> Result<Option<OpenSession>> {
        let user = self.user(user_id)?;
        let state = lock(&user);
        Ok(state.open.clone())
    }

    /// Records the page shown to the user as a new open session.
    pub fn open_session(
        &self,
        user_id: &str,
        mode: RankingMode,
        offered: Vec<ScoredItem>,
        started_at: DateTime<Utc>,
    ) -> Result<OpenSession> {
        let user = self.user(user_id)?;
        let mut state = lock(&user);
        state.open_session(mode, offered, started_at)
    }

    /// Adds a click to the open session. Returns false if it was already there.
    pub fn record_click(&self, user_id: &str, hyperlink: &str, at: DateTime<Utc>) -> Result<bool> {
        let user = self.user(user_id)?;
        let mut state = lock(&user);
        state.record_click(hyperlink, at)
    }

    /// Closes the open session, updates the profile from its clicks and
    /// commits both in one journal line.
    ///
    /// With `expected` set, fails with [`StoreError::Conflict`] unless that
    /// very session is still open, so of two racing closes only one wins.
    pub fn end_session(
        &self,
        user_id: &str,
        expected: Option<u64>,
        ended_at: DateTime<Utc>,
    ) -> Result<SessionRecord> {
        let user = self.user(user_id)?;
        let mut state = lock(&user);
        state.end_session(expected, ended_at, &self.options.tokenizer)
    }

    /// Commits a complete session that was never opened through the store.
    pub fn append_session(&self, session: NewSession) -> Result<SessionRecord> {
        let user = self.user(&session.user_id)?;
        let mut state = lock(&user);
        state.append_session(session, &self.options.tokenizer)
    }

    /// Subscribes `user_id` to `source`, registering the source if it is new.
    /// Returns the stored source and whether the subscription is new.
    pub fn subscribe(&self, user_id: &str, source: FeedSource) -> Result<(FeedSource, bool)> {
        check_id(user_id)?;
        lock(&self.feeds).subscribe(user_id, source)
    }

    /// Removes a subscription; the source goes once nobody follows it.
    pub fn unsubscribe(&self, user_id: &str, feed_id: &str) -> Result<bool> {
        check_id(user_id)?;
        lock(&self.feeds).unsubscribe(user_id, feed_id)
    }

    pub fn user_feeds(&self, user_id: &str) -> Result<Vec<FeedSource>> {
        check_id(user_id)?;
        Ok(lock(&self.feeds).user_feeds(user_id))
    }

    /// All registered sources.
    pub fn sources(&self) -> Vec<FeedSource> {
        lock(&self.feeds).sources()
    }

    /// Saves new polling state for a registered source.
    pub fn update_source(&self, source: &FeedSource) -> Result<()> {
        lock(&self.feeds).update(source)
    }

    fn item_cache(&self, feed_id: &str) -> Result<Arc<Mutex<ItemCache>>> {
        check_id(feed_id)?;
        let mut caches = lock(&self.items);
        if let Some(c) = caches.get(feed_id) {
            return Ok(Arc::clone(c));
        }
        let cache = Arc::new(Mutex::new(ItemCache::load(
            self.root.join("items").join(format!("{feed_id}.jsonl")),
        )?));
        caches.insert(feed_id.to_string(), Arc::clone(&cache));
        Ok(cache)
    }

    /// Appends the items whose hyperlinks are not stored yet; returns how many.
    pub fn store_items(&self, feed_id: &str, items: &[NewsItem]) -> Result<usize> {
        let cache = self.item_cache(feed_id)?;
        let mut cache = lock(&cache);
        cache.store(items)
    }

    /// Items of a feed fetched at or after `since` (all when `None`), in
    /// storage order.
    pub fn load_items(&self, feed_id: &str, since: Option<DateTime<Utc>>) -> Result<Vec<NewsItem>> {
        let cache = self.item_cache(feed_id)?;
        let cache = lock(&cache);
        Ok(cache.since(since))
    }
}
