use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::Json;
use serde::Deserialize;
use sociface_core::socialstore::{PersonId, Photo};

use crate::api::{LastEncounter, MemoryView, MutualView, PersonView, PhotoIngested};
use crate::error::{parse_required, ApiError};
use crate::state::AppState;

#[derive(Debug, Deserialize)]
pub(crate) struct ViewerQuery {
    /// When set, the friend list honours the target's visibility setting.
    viewer: Option<String>,
}

pub(crate) async fn person(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewerQuery>,
) -> Result<Json<PersonView>, ApiError> {
    let id = PersonId::new(id);
    let store = app.store();
    let person = store.person(&id)?;
    let friends = match q.viewer {
        Some(v) => store.friends_visible_to(&PersonId::new(v), &id)?,
        None => store.friends(&id)?,
    };
    Ok(Json(PersonView { person, friends }))
}

#[derive(Debug, Deserialize)]
pub(crate) struct MutualQuery {
    a: String,
    b: String,
}

pub(crate) async fn mutual(
    State(app): State<AppState>,
    Query(q): Query<MutualQuery>,
) -> Result<Json<MutualView>, ApiError> {
    let (a, b) = (PersonId::new(q.a), PersonId::new(q.b));
    let mutual = app.store().mutual_friends(&a, &b)?;
    Ok(Json(MutualView { a, b, mutual }))
}

pub(crate) async fn memory(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<MemoryView>, ApiError> {
    let id = PersonId::new(id);
    let store = app.store();
    let records = store.interactions_for(&id)?;
    let last_encounter = store
        .last_encounter(&id)?
        .map(|(session_id, timestamp)| LastEncounter {
            session_id,
            timestamp,
        });
    Ok(Json(MemoryView {
        person_id: id,
        last_encounter,
        records,
    }))
}

/// Binds every tag against the detections, then stores the photo.
pub(crate) async fn photos(
    State(app): State<AppState>,
    body: Bytes,
) -> Result<Json<PhotoIngested>, ApiError> {
    let photo: Photo = parse_required(&body)?;
    let mut store = app.store();
    let mut staged = store.clone();
    let photo = staged.add_tagged_photo(photo)?;
    app.persist(&staged)?;
    *store = staged;
    Ok(Json(PhotoIngested { photo }))
}
