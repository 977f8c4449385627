//! Service settings: one TOML file, overridable from the environment.
//!
//! Environment variables use the `FEEDRANK_` prefix and `__` between
//! section and key, e.g. `FEEDRANK_SERVER__PORT=9000` or
//! `FEEDRANK_PROFILE__A=0.7`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use feedrank_core::{ProfileConfig, Tokenizer};
use feedrank_ingest::{FetchConfig, DEFAULT_USER_AGENT};
use figment::providers::{Env, Format, Serialized, Toml};
use figment::Figment;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub server: ServerSection,
    pub storage: StorageSection,
    pub feeds: FeedsSection,
    pub ranking: RankingSection,
    pub profile: ProfileConfig,
    pub text: TextSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerSection {
    pub bind: String,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageSection {
    pub data_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedsSection {
    pub poll_interval_secs: u64,
    /// First retry delay after a failed fetch; doubles per further failure.
    pub retry_base_secs: u64,
    pub retry_cap_secs: u64,
    pub timeout_secs: u64,
    pub max_redirects: usize,
    pub user_agent: String,
    /// Fetches running at once during a poll.
    pub concurrency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingSection {
    pub page_size: usize,
    /// Unclicked items older than this are no longer offered.
    pub item_horizon_days: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TextSection {
    /// One stopword per line; the built-in English list when unset.
    pub stopwords: Option<PathBuf>,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

impl Default for StorageSection {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("feedrank-data"),
        }
    }
}

impl Default for FeedsSection {
    fn default() -> Self {
        Self {
            poll_interval_secs: 900,
            retry_base_secs: 60,
            retry_cap_secs: 6 * 3600,
            timeout_secs: 20,
            max_redirects: 5,
            user_agent: DEFAULT_USER_AGENT.into(),
            concurrency: 4,
        }
    }
}

impl Default for RankingSection {
    fn default() -> Self {
        Self {
            page_size: 14,
            item_horizon_days: 7,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Load(#[from] Box<figment::Error>),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read stopwords from {path}: {source}")]
    Stopwords { path: PathBuf, source: std::io::Error },
}

impl ServiceConfig {
    /// Defaults, then `file` if given, then `FEEDRANK_*` variables.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut fig = Figment::from(Serialized::defaults(ServiceConfig::default()));
        if let Some(path) = file {
            if !path.exists() {
                return Err(ConfigError::Invalid(format!(
                    "config file {} does not exist",
                    path.display()
                )));
            }
            fig = fig.merge(Toml::file(path));
        }
        let config: ServiceConfig = fig
            .merge(Env::prefixed("FEEDRANK_").split("__"))
            .extract()
            .map_err(Box::new)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.ranking.page_size == 0 {
            return bad("ranking.page_size must be positive");
        }
        if self.feeds.poll_interval_secs == 0 {
            return bad("feeds.poll_interval_secs must be positive");
        }
        if self.feeds.retry_base_secs == 0 || self.feeds.retry_cap_secs < self.feeds.retry_base_secs {
            return bad("feeds.retry_base_secs must be positive and at most feeds.retry_cap_secs");
        }
        if self.feeds.concurrency == 0 {
            return bad("feeds.concurrency must be positive");
        }
        Ok(())
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, ConfigError> {
        match &self.text.stopwords {
            None => Ok(Tokenizer::default()),
            Some(path) => Tokenizer::from_stopword_file(path).map_err(|source| ConfigError::Stopwords {
                path: path.clone(),
                source,
            }),
        }
    }

    pub fn fetch_config(&self) -> FetchConfig {
        FetchConfig {
            timeout: Duration::from_secs(self.feeds.timeout_secs),
            max_redirects: self.feeds.max_redirects,
            user_agent: self.feeds.user_agent.clone(),
        }
    }

    pub fn poll_interval(&self) -> Duration {
        Duration::from_secs(self.feeds.poll_interval_secs)
    }

    pub fn retry_base(&self) -> Duration {
        Duration::from_secs(self.feeds.retry_base_secs)
    }

    pub fn retry_cap(&self) -> Duration {
        Duration::from_secs(self.feeds.retry_cap_secs)
    }
}
