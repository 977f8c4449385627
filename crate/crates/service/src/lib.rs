//! The feed reader service: HTTP API, candidate selection and feed polling.

pub mod api;
pub mod config;
pub mod poll;
pub mod pool;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use feedrank_ingest::Fetcher;
use feedrank_store::{Store, StoreOptions};
use tokio::sync::watch;

pub use api::{router, AppState};
pub use config::{ConfigError, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("storage: {0}")]
    Store(#[from] feedrank_store::StoreError),
    #[error("http client: {0}")]
    Client(#[from] feedrank_ingest::FeedError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Opens the data directory described by `config`.
pub fn open_store(config: &ServiceConfig) -> Result<Store, ServeError> {
    let options = StoreOptions {
        default_config: config.profile,
        tokenizer: config.tokenizer()?,
    };
    Ok(Store::open(&config.storage.data_dir, options)?)
}

/// Serves the API and polls feeds in the background until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let store = Arc::new(open_store(&config)?);
    let fetcher = Fetcher::new(&config.fetch_config())?;
    let state = AppState::new(Arc::clone(&store), config.clone());

    let addr = format!("{}:{}", config.server.bind, config.server.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: addr.clone(),
            source,
        })?;
    let local: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(addr = ?local, data_dir = %config.storage.data_dir.display(), "listening");

    let (stop_tx, stop_rx) = watch::channel(false);
    let poller = tokio::spawn(poll_loop(
        store,
        fetcher,
        config,
        Arc::clone(&state.poll_now),
        stop_rx,
    ));

    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
        .map_err(ServeError::Server);
    let _ = stop_tx.send(true);
    let _ = poller.await;
    result
}

/// Polls due feeds every minute, or at once when woken through `poll_now`.
async fn poll_loop(
    store: Arc<Store>,
    fetcher: Fetcher,
    config: ServiceConfig,
    poll_now: Arc<tokio::sync::Notify>,
    mut stop: watch::Receiver<bool>,
) {
    let tick = Duration::from_secs(60).min(config.poll_interval());
    loop {
        let reports = poll::poll_once(
            Arc::clone(&store),
            fetcher.clone(),
            &config,
            chrono::Utc::now(),
            false,
        )
        .await;
        for r in reports {
            tracing::info!(feed = %r.url, outcome = ?r.outcome, "polled");
        }
        tokio::select! {
            _ = tokio::time::sleep(tick) => {}
            _ = poll_now.notified() => {}
            changed = stop.changed() => {
                if changed.is_err() || *stop.borrow() {
                    return;
                }
            }
        }
    }
}
