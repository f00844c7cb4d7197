//! Process wiring: one writer thread (ingest, reload models, orchestrate,
//! publish) and the HTTP server on a tokio runtime.

use std::future::Future;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use needminer_core::enrich::{NameLexicon, SentimentLexicon};

use crate::api::{router, AppState};
use crate::config::ServiceConfig;
use crate::error::{Result, ServiceError};
use crate::orchestrate::{orchestrate_with, Enrichers};
use crate::registry::{LoadedModels, ModelRegistry};
use crate::source::{ingest, SourceSpec};
use crate::store::{FileStore, TweetStore};

pub fn enrichers(cfg: &ServiceConfig) -> Result<Enrichers> {
    let mut e = Enrichers::default();
    if let Some(p) = &cfg.sentiment_lexicon {
        e.sentiment = Arc::new(SentimentLexicon::load(p)?);
    }
    if let Some(p) = &cfg.name_lexicon {
        e.gender = Arc::new(NameLexicon::load(p)?);
    }
    Ok(e)
}

/// Loads the registry's models, logging rather than failing so the API can
/// come up and answer 503 until models exist.
fn try_load(registry: &ModelRegistry) -> Option<LoadedModels> {
    match registry.load() {
        Ok(m) => Some(m),
        Err(e) => {
            log::error!("models not loaded: {e}");
            None
        }
    }
}

/// One writer cycle. Models are swapped in only when the registry's active
/// versions changed and every model loads.
pub fn cycle(
    store: &mut dyn TweetStore,
    source: Option<&SourceSpec>,
    registry_path: &std::path::Path,
    state: &AppState,
    enrich: &Enrichers,
) -> Result<()> {
    if let Some(spec) = source {
        match ingest(spec, store) {
            Ok(r) => log::info!("ingest: {r:?}"),
            Err(e) => log::error!("ingest failed: {e}"),
        }
    }
    let registry = ModelRegistry::open(registry_path)?;
    let current = state.models();
    if current
        .as_ref()
        .is_none_or(|m| m.versions != registry.active_versions())
    {
        if let Some(m) = try_load(&registry) {
            state.set_models(Some(m));
        }
    }
    if let Some(models) = state.models() {
        let r = orchestrate_with(store, &models, enrich, state.thresholds())?;
        if r.processed > 0 {
            log::info!("orchestrate: {r:?}");
        }
    }
    state.publish(store.snapshot());
    Ok(())
}

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Runs the service described by `cfg` until Ctrl-C.
pub fn run(cfg: &ServiceConfig) -> Result<()> {
    let enrich = enrichers(cfg)?;
    let mut store = FileStore::open_with(&cfg.store, cfg.compact_every)?;
    let registry = ModelRegistry::open(&cfg.registry)?;
    let state = AppState::new(
        store.snapshot(),
        try_load(&registry),
        cfg.thresholds(),
        enrich.clone(),
    );

    let stop = Arc::new(AtomicBool::new(false));
    let writer = {
        let (state, stop, cfg) = (state.clone(), stop.clone(), cfg.clone());
        std::thread::spawn(move || {
            let interval =
                Duration::from_secs(cfg.source.as_ref().map_or(60, |s| s.interval_secs.max(1)));
            while !stop.load(Ordering::SeqCst) {
                if let Err(e) = cycle(
                    &mut store,
                    cfg.source.as_ref(),
                    &cfg.registry,
                    &state,
                    &enrich,
                ) {
                    log::error!("writer cycle failed: {e}");
                }
                let mut slept = Duration::ZERO;
                while slept < interval && !stop.load(Ordering::SeqCst) {
                    std::thread::sleep(Duration::from_millis(200));
                    slept += Duration::from_millis(200);
                }
            }
        })
    };

    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| ServiceError::Config(format!("tokio runtime: {e}")))?;
    let served = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .map_err(|e| ServiceError::Config(format!("cannot bind {}: {e}", cfg.bind)))?;
        log::info!("listening on {}", cfg.bind);
        serve_on(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Config(format!("server: {e}")))
    });
    stop.store(true, Ordering::SeqCst);
    let _ = writer.join();
    served
}
