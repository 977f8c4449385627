use std::collections::HashSet;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use feedrank_core::NewsItem;

use crate::journal::{self, Journal, SCHEMA_VERSION};
use crate::StoreError;

/// Items of one feed, deduplicated by hyperlink.
#[derive(Debug)]
pub(crate) struct ItemCache {
    items: Vec<NewsItem>,
    links: HashSet<String>,
    journal: Journal,
}

#[derive(serde::Serialize)]
struct ItemLine<'a> {
    schema_version: u32,
    #[serde(flatten)]
    item: &'a NewsItem,
}

impl ItemCache {
    pub fn load(path: PathBuf) -> Result<Self, StoreError> {
        let loaded = journal::read::<NewsItem>(&path)?;
        let mut cache = Self {
            items: Vec::new(),
            links: HashSet::new(),
            journal: Journal::new(path, loaded.torn.then_some(loaded.valid_len)),
        };
        for item in loaded.entries {
            if cache.links.insert(item.hyperlink.clone()) {
                cache.items.push(item);
            }
        }
        Ok(cache)
    }

    pub fn store(&mut self, items: &[NewsItem]) -> Result<usize, StoreError> {
        let mut fresh = Vec::new();
        let mut seen = HashSet::new();
        for item in items {
            if !self.links.contains(&item.hyperlink) && seen.insert(item.hyperlink.as_str()) {
                fresh.push(item);
            }
        }
        if fresh.is_empty() {
            return Ok(0);
        }
        // One write for the batch; a tear can only lose a suffix of it.
        let mut buf = Vec::new();
        for item in &fresh {
            serde_json::to_writer(
                &mut buf,
                &ItemLine {
                    schema_version: SCHEMA_VERSION,
                    item,
                },
            )
            .map_err(|e| StoreError::Encode(e.to_string()))?;
            buf.push(b'\n');
        }
        self.journal.append_raw(&buf)?;
        for item in &fresh {
            self.links.insert(item.hyperlink.clone());
            self.items.push((*item).clone());
        }
        Ok(fresh.len())
    }

    pub fn since(&self, since: Option<DateTime<Utc>>) -> Vec<NewsItem> {
        self.items
            .iter()
            .filter(|i| since.is_none_or(|t| i.fetched_at >= t))
            .cloned()
            .collect()
    }
}
