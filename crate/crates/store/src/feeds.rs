use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::PathBuf;

use feedrank_ingest::FeedSource;
use serde::{Deserialize, Serialize};

use crate::journal::{write_atomic, SCHEMA_VERSION};
use crate::StoreError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct FeedsFile {
    schema_version: u32,
    sources: Vec<FeedSource>,
    /// user id to the feed ids they follow
    subscriptions: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug)]
pub(crate) struct FeedRegistry {
    path: PathBuf,
    data: FeedsFile,
}

impl FeedRegistry {
    pub fn load(path: PathBuf) -> Result<Self, StoreError> {
        let data = match fs::read(&path) {
            Ok(bytes) => {
                let data: FeedsFile = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: e.line(),
                    reason: e.to_string(),
                })?;
                if data.schema_version != SCHEMA_VERSION {
                    return Err(StoreError::Corrupt {
                        path,
                        line: 1,
                        reason: format!("unsupported schema_version {}", data.schema_version),
                    });
                }
                data
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => FeedsFile {
                schema_version: SCHEMA_VERSION,
                ..FeedsFile::default()
            },
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        Ok(Self { path, data })
    }

    /// Saves `next` and adopts it once it is on disk.
    fn save(&mut self, next: FeedsFile) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec_pretty(&next).map_err(|e| StoreError::Encode(e.to_string()))?;
        write_atomic(&self.path, &bytes)?;
        self.data = next;
        Ok(())
    }

    pub fn subscribe(&mut self, user_id: &str, source: FeedSource) -> Result<(FeedSource, bool), StoreError> {
        let mut next = self.data.clone();
        let stored = match next.sources.iter().find(|s| s.feed_id == source.feed_id) {
            Some(existing) => existing.clone(),
            None => {
                next.sources.push(source.clone());
                source
            }
        };
        let added = next
            .subscriptions
            .entry(user_id.to_string())
            .or_default()
            .insert(stored.feed_id.clone());
        if added {
            self.save(next)?;
        }
        Ok((stored, added))
    }

    pub fn unsubscribe(&mut self, user_id: &str, feed_id: &str) -> Result<bool, StoreError> {
        let mut next = self.data.clone();
        let removed = next
            .subscriptions
            .get_mut(user_id)
            .is_some_and(|subs| subs.remove(feed_id));
        if !removed {
            return Ok(false);
        }
        next.subscriptions.retain(|_, subs| !subs.is_empty());
        if !next.subscriptions.values().any(|subs| subs.contains(feed_id)) {
            next.sources.retain(|s| s.feed_id != feed_id);
        }
        self.save(next)?;
        Ok(true)
    }

    pub fn user_feeds(&self, user_id: &str) -> Vec<FeedSource> {
        let Some(subs) = self.data.subscriptions.get(user_id) else {
            return Vec::new();
        };
        self.data
            .sources
            .iter()
            .filter(|s| subs.contains(&s.feed_id))
            .cloned()
            .collect()
    }

    pub fn sources(&self) -> Vec<FeedSource> {
        self.data.sources.clone()
    }

    pub fn update(&mut self, source: &FeedSource) -> Result<(), StoreError> {
        let mut next = self.data.clone();
        let slot = next
            .sources
            .iter_mut()
            .find(|s| s.feed_id == source.feed_id)
            .ok_or_else(|| StoreError::UnknownFeed(source.feed_id.clone()))?;
        if slot == source {
            return Ok(());
        }
        *slot = source.clone();
        self.save(next)
    }
}
