//! Feed ingestion: RSS 2.0 / Atom 1.0 parsing, OPML import and conditional
//! HTTP fetching.

mod feed;
mod fetch;
pub mod markup;
mod opml;
mod source;

pub use feed::parse_feed;
pub use fetch::{FetchConfig, FetchOutcome, Fetcher, DEFAULT_USER_AGENT};
pub use opml::import_opml;
pub use source::{backoff_delay, feed_id_for, FeedSource};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeedError {
    #[error("malformed document at byte {position}: {reason}")]
    Parse { position: u64, reason: String },
    #[error("not an RSS or Atom document (root element <{0}>)")]
    UnknownFormat(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP status {0}")]
    Http(u16),
}
