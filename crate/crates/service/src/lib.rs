//! HTTP facade over the sociface engine: recognition sessions, the dialogue
//! loop, social-store queries and experiment runs. Plain request/response;
//! clients poll `GET /sessions/{id}`.
//!
//! Every handler is a thin projection of module calls and adds no behavior of
//! its own. Requests to one session are serialized by a per-session lock;
//! store writes are serialized by the store lock.

pub mod api;
mod error;
mod experiments;
mod sessions;
mod social;
mod state;

use axum::routing::{get, post};
use axum::Router;

pub use error::{ApiError, ErrorCode};
pub use state::{corpus_world, AppState, Clock, ServiceConfig, SessionHandle, ROBOT_ID};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(sessions::create))
        .route("/sessions/{id}", get(sessions::get))
        .route("/sessions/{id}/frames", post(sessions::frames))
        .route("/sessions/{id}/reset", post(sessions::reset))
        .route("/sessions/{id}/dialogue", post(sessions::start_dialogue))
        .route("/sessions/{id}/replies", post(sessions::reply))
        .route("/sessions/{id}/close", post(sessions::close))
        .route("/graph/persons/{id}", get(social::person))
        .route("/graph/mutual", get(social::mutual))
        .route("/memory/{person_id}", get(social::memory))
        .route("/photos", post(social::photos))
        .route(
            "/experiments/{name}",
            post(experiments::run).get(experiments::get),
        )
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Serves the router on an already-bound listener until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
