//! HTTP service for the annotation workflow: batches of seven items, live
//! validation, submission intake, consolidation and statistics.
//!
//! State lives in an append-only JSON-lines journal; restarting over the
//! same journal reproduces the same state.

mod api;
pub mod store;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use conjr_core::{DatasetStats, Instance, LabelProfile};
use tower_http::cors::CorsLayer;

pub use store::{Event, State, Store, StoreError};

/// Items per batch, as in the crowdsourcing task.
pub const BATCH_SIZE: usize = 7;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Submissions required before `/consolidate` runs.
    pub min_submissions: usize,
    pub batch_size: usize,
    pub profile: LabelProfile,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            min_submissions: 3,
            batch_size: BATCH_SIZE,
            profile: LabelProfile::default(),
        }
    }
}

/// Shared handler state.
#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    config: ServiceConfig,
    instances: BTreeMap<String, Instance>,
    /// Batch ids in hand-out order, each with its instance ids.
    batches: Vec<(String, Vec<String>)>,
    dataset_stats: DatasetStats,
    store: Store,
}

impl AppState {
    /// Loads the journal at `journal` and cuts `instances` into batches in
    /// dataset order.
    pub fn open(
        instances: Vec<Instance>,
        journal: impl AsRef<Path>,
        config: ServiceConfig,
    ) -> Result<Self, StoreError> {
        let store = Store::open(journal)?;
        let size = config.batch_size.max(1);
        let batches = instances
            .chunks(size)
            .enumerate()
            .map(|(i, chunk)| {
                (
                    format!("b{:05}", i + 1),
                    chunk.iter().map(|inst| inst.id.clone()).collect(),
                )
            })
            .collect();
        let dataset_stats = conjr_core::dataset::stats(&instances, &config.profile);
        Ok(AppState {
            inner: Arc::new(Inner {
                config,
                instances: instances.into_iter().map(|i| (i.id.clone(), i)).collect(),
                batches,
                dataset_stats,
                store,
            }),
        })
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/batches/next", get(api::next_batch))
        .route("/batches/{id}/assign", post(api::assign_batch))
        .route("/validate", post(api::validate))
        .route("/submissions", post(api::submit))
        .route("/consolidate/{instance}", post(api::consolidate))
        .route("/stats", get(api::stats))
        .route("/instances/{id}", get(api::instance))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
