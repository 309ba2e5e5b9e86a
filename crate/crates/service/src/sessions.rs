use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::Json;
use sociface_core::dialogue::Reply;
use sociface_core::facekit::{preprocess, FaceRect, ImageBuffer, Pose, PreprocessOutcome};
use sociface_core::recognizer::{decide, DecisionPolicy};

use crate::api::{
    ActsResponse, CreateSession, FrameRequest, FrameResponse, SessionCreated, SessionView,
    WindowFill,
};
use crate::error::{parse_body, parse_required, ApiError};
use crate::state::{AppState, SessionHandle};

fn fill(h: &SessionHandle) -> WindowFill {
    WindowFill {
        len: h.window.len(),
        capacity: h.window.capacity(),
    }
}

pub(crate) async fn create(
    State(app): State<AppState>,
    body: Bytes,
) -> Result<Json<SessionCreated>, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let base = app.config().policy;
    let policy = DecisionPolicy::new(
        req.theta.unwrap_or(base.theta),
        req.min_win.or(base.min_win),
        req.window.unwrap_or(base.window),
    )?;
    let handle = SessionHandle {
        session_id: uuid::Uuid::new_v4().simple().to_string(),
        created_at: app.now(),
        policy,
        window: policy.new_window(),
        frames_received: 0,
        decision: None,
        dialogue: None,
        transcript: Vec::new(),
    };
    let out = SessionCreated {
        session_id: handle.session_id.clone(),
        created_at: handle.created_at,
        policy,
    };
    app.insert_session(handle);
    Ok(Json(out))
}

pub(crate) async fn get(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.session(&id)?;
    let h = session.lock().await;
    Ok(Json(SessionView {
        session_id: h.session_id.clone(),
        created_at: h.created_at,
        policy: h.policy,
        frames_received: h.frames_received,
        window: fill(&h),
        accumulated_mean: h.window.mean().cloned(),
        decision: h.decision.clone(),
        dialogue: h.dialogue.clone(),
        transcript: h.transcript.clone(),
    }))
}

fn frame_input(app: &AppState, req: FrameRequest) -> Result<(ImageBuffer, FaceRect), ApiError> {
    match (req.image, req.corpus) {
        (Some(img), None) => {
            let image = ImageBuffer::from_rgb_bytes(img.width, img.height, &img.rgb)
                .map_err(|e| ApiError::bad_request(e.to_string()))?;
            let rect = req
                .rect
                .unwrap_or_else(|| FaceRect::new(0, 0, img.width, img.height, Pose::Frontal));
            Ok((image, rect))
        }
        (None, Some(r)) if req.rect.is_none() => app
            .corpus()
            .render(&r)
            .map_err(|e| ApiError::bad_request(e.to_string())),
        _ => Err(ApiError::bad_request(
            "frame needs exactly one of `image` (optionally with `rect`) or `corpus`",
        )),
    }
}

pub(crate) async fn frames(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FrameResponse>, ApiError> {
    let session = app.session(&id)?;
    let req: FrameRequest = parse_required(&body)?;
    let (image, rect) = frame_input(&app, req)?;
    let outcome = preprocess(&image, &rect).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut h = session.lock().await;
    h.frames_received += 1;
    let (rejection, scores) = match outcome {
        PreprocessOutcome::Rejected(r) => (Some(r), None),
        PreprocessOutcome::Face(face) => {
            let sv = app.registry().score_all(&face)?;
            h.window.push(sv.clone())?;
            let policy = h.policy;
            h.decision = Some(decide(&h.window, &policy)?);
            (None, Some(sv))
        }
    };
    Ok(Json(FrameResponse {
        session_id: h.session_id.clone(),
        rejection,
        scores,
        accumulated_mean: h.window.mean().cloned(),
        window: fill(&h),
        decision: h.decision.clone(),
    }))
}

/// Clears the evidence window, e.g. after the tracked face was lost.
pub(crate) async fn reset(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<WindowFill>, ApiError> {
    let session = app.session(&id)?;
    let mut h = session.lock().await;
    h.window.reset();
    h.decision = None;
    Ok(Json(fill(&h)))
}

pub(crate) async fn start_dialogue(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ActsResponse>, ApiError> {
    let session = app.session(&id)?;
    let mut h = session.lock().await;
    if h.dialogue.is_some() {
        return Err(ApiError::conflict("dialogue already started"));
    }
    let decision = h
        .decision
        .clone()
        .ok_or_else(|| ApiError::conflict("no evidence yet; send frames first"))?;
    let mut store = app.store();
    let (state, acts) = app.0.engine.start_session_with_id(
        &mut store,
        &decision,
        h.session_id.clone(),
        app.now(),
    )?;
    app.persist(&store)?;
    drop(store);
    h.transcript.extend(acts.iter().cloned());
    h.dialogue = Some(state.clone());
    Ok(Json(ActsResponse { acts, state }))
}

pub(crate) async fn reply(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActsResponse>, ApiError> {
    let session = app.session(&id)?;
    let reply: Reply = parse_required(&body)?;
    let mut h = session.lock().await;
    let mut state = h
        .dialogue
        .clone()
        .ok_or_else(|| ApiError::conflict("dialogue not started"))?;
    let mut store = app.store();
    let acts = app
        .0
        .engine
        .handle_reply(&mut store, &mut state, reply, app.now())?;
    app.persist(&store)?;
    drop(store);
    h.transcript.extend(acts.iter().cloned());
    h.dialogue = Some(state.clone());
    Ok(Json(ActsResponse { acts, state }))
}

pub(crate) async fn close(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ActsResponse>, ApiError> {
    let session = app.session(&id)?;
    let mut h = session.lock().await;
    let mut state = h
        .dialogue
        .clone()
        .ok_or_else(|| ApiError::conflict("dialogue not started"))?;
    let mut store = app.store();
    let act = app
        .0
        .engine
        .end_session(&mut store, &mut state, app.now())?;
    app.persist(&store)?;
    drop(store);
    h.transcript.push(act.clone());
    h.dialogue = Some(state.clone());
    Ok(Json(ActsResponse {
        acts: vec![act],
        state,
    }))
}
