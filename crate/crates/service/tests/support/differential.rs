#![allow(dead_code)]

//! Differential fixture suite: drives the HTTP surface and the module-level
//! call sequence with the same inputs and compares the observable results.
//! Shared between the service tests and the acceptance target.

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sociface_core::dialogue::{
    DialogueContext, DialogueEngine, Expects, Reply, SessionState, TemplateTable,
};
use sociface_core::facekit::{
    preprocess, FaceRect, ImageBuffer, Pose, PreprocessOutcome, TagMatchResult,
};
use sociface_core::harness::{
    default_enrollment, identity_id, run_named, Corpus, CorpusSpec, ExperimentConfig, SampleRef,
    WindowConfig,
};
use sociface_core::recognizer::{decide, DecisionPolicy, Registry};
use sociface_core::socialstore::{PersonId, Photo, PhotoTag, SocialStore};
use sociface_service::{corpus_world, router, AppState, Clock, ServiceConfig, ROBOT_ID};
use tower::ServiceExt;

pub const START: i64 = 1_700_000_000;
const STEP: i64 = 7;

pub fn fixture_spec() -> CorpusSpec {
    CorpusSpec {
        n_identities: 4,
        n_strangers: 2,
        sessions_per_identity: 6,
        frames_per_session: 30,
        ..CorpusSpec::default()
    }
}

/// A service over the fixture corpus plus everything the direct path needs.
pub struct Fixture {
    pub app: Router,
    pub state: AppState,
    pub clock: Clock,
    pub corpus: Arc<Corpus>,
    pub registry: Arc<Registry>,
    pub policy: DecisionPolicy,
    pub engine: DialogueEngine,
    pub store: SocialStore,
}

impl Fixture {
    pub fn new(report_dir: &Path) -> Self {
        let corpus = Arc::new(Corpus::generate(&fixture_spec()).expect("fixture corpus"));
        let registry = Arc::new(default_enrollment(&corpus).expect("enrollment"));
        let clock = Clock::manual(START);
        let mut config = ServiceConfig::new(report_dir);
        config.clock = clock.clone();
        let store = corpus_world(&corpus, START);
        let policy = config.policy;
        let engine = DialogueEngine::new(
            TemplateTable::embedded(),
            DialogueContext::new(PersonId::new(ROBOT_ID)),
        );
        let state = AppState::new(config, corpus.clone(), registry.clone(), store.clone());
        Self {
            app: router(state.clone()),
            state,
            clock,
            corpus,
            registry,
            policy,
            engine,
            store,
        }
    }

    pub async fn call(
        &self,
        method: Method,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        call(&self.app, method, uri, body).await
    }
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let body = match body {
        Some(v) => Body::from(serde_json::to_vec(&v).expect("json")),
        None => Body::empty(),
    };
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body)
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("infallible router");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

pub async fn raw_call(app: &Router, method: Method, uri: &str, body: &'static str) -> StatusCode {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .expect("request");
    app.clone()
        .oneshot(req)
        .await
        .expect("infallible router")
        .status()
}

/// Tally of differential checks; a failure records what diverged.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Outcome {
    fn eq(&mut self, what: &str, got: &Value, expected: &Value) {
        self.checks += 1;
        if got != expected {
            self.failures
                .push(format!("{what}:\n  http:   {got}\n  direct: {expected}"));
        }
    }

    fn ok(&mut self, what: &str, cond: bool) {
        self.checks += 1;
        if !cond {
            self.failures.push(what.to_string());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }
}

fn v<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn track(identity: usize, n: usize) -> Vec<SampleRef> {
    (0..n).map(|f| SampleRef::camera(identity, 5, f)).collect()
}

/// Direct per-frame results for a track: the module-level sequence
/// preprocess, score_all, push, decide.
fn direct_frames(fx: &Fixture, session_id: &str, refs: &[SampleRef]) -> Vec<Value> {
    let mut win = fx.policy.new_window();
    let mut decision = None;
    refs.iter()
        .map(|r| {
            let (img, rect) = fx.corpus.render(r).expect("render");
            let face = preprocess(&img, &rect)
                .expect("preprocess")
                .face()
                .expect("skin");
            let sv = fx.registry.score_all(&face).expect("scores");
            win.push(sv.clone()).expect("push");
            decision = Some(decide(&win, &fx.policy).expect("decide"));
            json!({
                "session_id": session_id,
                "rejection": null,
                "scores": v(&sv),
                "accumulated_mean": v(win.mean().expect("non-empty")),
                "window": {"len": win.len(), "capacity": win.capacity()},
                "decision": v(&decision),
            })
        })
        .collect()
}

async fn new_session(fx: &Fixture) -> String {
    let (_, body) = fx.call(Method::POST, "/sessions", None).await;
    body["session_id"].as_str().expect("session id").to_string()
}

/// Feeds a track both ways and returns the session id.
async fn frames_case(fx: &Fixture, out: &mut Outcome, identity: usize) -> String {
    let sid = new_session(fx).await;
    let refs = track(identity, fx.policy.window + 3);
    let expected = direct_frames(fx, &sid, &refs);
    for (k, (r, exp)) in refs.iter().zip(&expected).enumerate() {
        let (status, got) = fx
            .call(
                Method::POST,
                &format!("/sessions/{sid}/frames"),
                Some(json!({"corpus": v(r)})),
            )
            .await;
        out.ok(
            &format!("frame {k} of identity {identity}: status {status}"),
            status == StatusCode::OK,
        );
        out.eq(&format!("frame {k} of identity {identity}"), &got, exp);
    }
    sid
}

/// A reply chosen from what the pending act expects; yes/no alternates.
fn scripted(expects: Expects, turn: usize, deny_first: usize) -> Reply {
    match expects {
        Expects::YesNo if turn < deny_first => Reply::No,
        Expects::YesNo if turn.is_multiple_of(2) => Reply::Yes,
        Expects::YesNo => Reply::No,
        Expects::Name => Reply::Name("Rowan Pike".into()),
        Expects::FreeText | Expects::None => Reply::FreeText("fine, thanks".into()),
    }
}

async fn dialogue_case(
    fx: &Fixture,
    direct_store: &mut SocialStore,
    out: &mut Outcome,
    sid: &str,
    deny_first: usize,
) {
    let (status, view) = fx
        .call(Method::GET, &format!("/sessions/{sid}"), None)
        .await;
    out.ok(
        &format!("get session {sid}: {status}"),
        status == StatusCode::OK,
    );
    let decision = serde_json::from_value(view["decision"].clone()).expect("decision");
    fx.clock.advance(STEP);
    let now = fx.clock.now();
    let (status, got) = fx
        .call(Method::POST, &format!("/sessions/{sid}/dialogue"), None)
        .await;
    let (mut state, acts): (SessionState, _) = fx
        .engine
        .start_session_with_id(direct_store, &decision, sid.to_string(), now)
        .expect("direct start");
    out.ok(
        &format!("start dialogue {sid}: {status}"),
        status == StatusCode::OK,
    );
    out.eq(
        &format!("start dialogue {sid}"),
        &got,
        &json!({"acts": v(&acts), "state": v(&state)}),
    );

    let (status, _) = fx
        .call(Method::POST, &format!("/sessions/{sid}/dialogue"), None)
        .await;
    out.ok(
        "second dialogue start is a conflict",
        status == StatusCode::CONFLICT,
    );

    let mut turn = 0;
    while let Some(pending) = state.pending.clone() {
        if turn > 40 {
            break;
        }
        // a mismatched kind first: Conflict on both paths, nothing changes
        let wrong = if pending.expects == Expects::YesNo {
            Reply::Name("Nobody".into())
        } else {
            Reply::Yes
        };
        let (status, body) = fx
            .call(
                Method::POST,
                &format!("/sessions/{sid}/replies"),
                Some(v(&wrong)),
            )
            .await;
        let before = state.clone();
        let direct = fx
            .engine
            .handle_reply(direct_store, &mut state, wrong, fx.clock.now());
        out.ok(
            &format!("mismatched reply on turn {turn}: {status} {body}"),
            status == StatusCode::CONFLICT
                && body["code"] == "conflict"
                && direct.is_err()
                && state == before,
        );

        fx.clock.advance(STEP);
        let reply = scripted(pending.expects, turn, deny_first);
        let (status, got) = fx
            .call(
                Method::POST,
                &format!("/sessions/{sid}/replies"),
                Some(v(&reply)),
            )
            .await;
        let acts = fx
            .engine
            .handle_reply(direct_store, &mut state, reply, fx.clock.now())
            .expect("direct reply");
        out.ok(
            &format!("reply turn {turn}: {status}"),
            status == StatusCode::OK,
        );
        out.eq(
            &format!("reply turn {turn} of {sid}"),
            &got,
            &json!({"acts": v(&acts), "state": v(&state)}),
        );
        turn += 1;
    }
    fx.clock.advance(STEP);
    let (status, got) = fx
        .call(Method::POST, &format!("/sessions/{sid}/close"), None)
        .await;
    match fx
        .engine
        .end_session(direct_store, &mut state, fx.clock.now())
    {
        Ok(act) => {
            out.ok(&format!("close {sid}: {status}"), status == StatusCode::OK);
            out.eq(
                &format!("close {sid}"),
                &got,
                &json!({"acts": [v(&act)], "state": v(&state)}),
            );
        }
        Err(_) => out.ok(
            &format!("close of finished {sid}: {status}"),
            status == StatusCode::CONFLICT,
        ),
    }
    let (status, _) = fx
        .call(
            Method::POST,
            &format!("/sessions/{sid}/replies"),
            Some(v(&Reply::Yes)),
        )
        .await;
    out.ok(
        "reply after close is a conflict",
        status == StatusCode::CONFLICT,
    );
}

async fn graph_case(fx: &Fixture, store: &SocialStore, out: &mut Outcome) {
    let persons = store.persons();
    for p in &persons {
        let (status, got) = fx
            .call(Method::GET, &format!("/graph/persons/{}", p.id), None)
            .await;
        out.ok(
            &format!("person {}: {status}", p.id),
            status == StatusCode::OK,
        );
        let expected = json!({"person": v(p), "friends": v(&store.friends(&p.id).unwrap())});
        out.eq(&format!("person {}", p.id), &got, &expected);
        for q in &persons {
            let (_, got) = fx
                .call(
                    Method::GET,
                    &format!("/graph/mutual?a={}&b={}", p.id, q.id),
                    None,
                )
                .await;
            let expected = json!({"a": v(&p.id), "b": v(&q.id), "mutual": v(&store.mutual_friends(&p.id, &q.id).unwrap())});
            out.eq(&format!("mutual {} {}", p.id, q.id), &got, &expected);
        }
    }
    let (status, body) = fx.call(Method::GET, "/graph/persons/ghost", None).await;
    out.ok(
        "unknown person is NotFound",
        status == StatusCode::NOT_FOUND && body["code"] == "not_found",
    );
    let (status, _) = fx
        .call(Method::GET, "/graph/mutual?a=p0&b=ghost", None)
        .await;
    out.ok(
        "mutual with unknown person is NotFound",
        status == StatusCode::NOT_FOUND,
    );
}

async fn memory_case(fx: &Fixture, store: &SocialStore, out: &mut Outcome) {
    for p in store.persons() {
        let (status, got) = fx
            .call(Method::GET, &format!("/memory/{}", p.id), None)
            .await;
        out.ok(
            &format!("memory {}: {status}", p.id),
            status == StatusCode::OK,
        );
        let last = store
            .last_encounter(&p.id)
            .unwrap()
            .map(|(s, t)| json!({"session_id": s, "timestamp": t}));
        let expected = json!({
            "person_id": v(&p.id),
            "last_encounter": last,
            "records": v(&store.interactions_for(&p.id).unwrap()),
        });
        out.eq(&format!("memory {}", p.id), &got, &expected);
    }
    let (status, _) = fx.call(Method::GET, "/memory/ghost", None).await;
    out.ok(
        "memory of unknown person is NotFound",
        status == StatusCode::NOT_FOUND,
    );
}

/// Tag 0 is nearest a profile detection (a frontal one is farther away),
/// tag 1 sits on a frontal face, tag 2 has no detections to bind to.
pub fn photo_fixtures() -> Vec<Photo> {
    let tag = |id: &str, cx, cy| PhotoTag {
        person_id: PersonId::new(id),
        cx,
        cy,
        outcome: None,
    };
    vec![
        Photo {
            photo_id: "harbor-group".into(),
            owner: Some(identity_id(1)),
            timestamp: START - 500,
            detections: vec![
                FaceRect::new(10, 10, 20, 20, Pose::Profile),
                FaceRect::new(40, 10, 20, 20, Pose::Frontal),
                FaceRect::new(90, 12, 20, 20, Pose::Frontal),
            ],
            tags: vec![tag("p0", 22.0, 21.0), tag("p2", 99.0, 22.0)],
        },
        Photo {
            photo_id: "empty-frame".into(),
            owner: None,
            timestamp: START - 400,
            detections: vec![],
            tags: vec![tag("p3", 5.0, 5.0)],
        },
    ]
}

async fn photos_case(fx: &Fixture, store: &mut SocialStore, out: &mut Outcome) {
    for photo in photo_fixtures() {
        let (status, got) = fx.call(Method::POST, "/photos", Some(v(&photo))).await;
        let bound = store
            .add_tagged_photo(photo.clone())
            .expect("direct ingest");
        out.ok(
            &format!("photo {}: {status}", photo.photo_id),
            status == StatusCode::OK,
        );
        out.eq(
            &format!("photo {}", photo.photo_id),
            &got,
            &json!({"photo": v(&bound)}),
        );
    }
    let first = store.photo("harbor-group").expect("stored");
    out.ok(
        "profile-nearest tag records DiscardedProfile",
        first.tags[0].outcome == Some(TagMatchResult::DiscardedProfile { index: 0 }),
    );
    let (status, _) = fx
        .call(Method::POST, "/photos", Some(json!({"tags": 3})))
        .await;
    out.ok(
        "malformed photo is BadRequest",
        status == StatusCode::BAD_REQUEST,
    );
}

async fn rejection_case(fx: &Fixture, out: &mut Outcome) {
    let sid = new_session(fx).await;
    // saturated blue fails every skin inequality
    let img = ImageBuffer::filled(24, 24, [20, 40, 200]).unwrap();
    let rect = FaceRect::new(0, 0, 24, 24, Pose::Frontal);
    let PreprocessOutcome::Rejected(rej) = preprocess(&img, &rect).unwrap() else {
        out.ok("blue crop should fail the skin gate", false);
        return;
    };
    let rgb: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let (status, got) = fx
        .call(
            Method::POST,
            &format!("/sessions/{sid}/frames"),
            Some(json!({"image": {"width": 24, "height": 24, "rgb": rgb}})),
        )
        .await;
    out.ok(
        &format!("low-skin frame: {status}"),
        status == StatusCode::OK,
    );
    let expected = json!({
        "session_id": sid,
        "rejection": v(&rej),
        "scores": null,
        "accumulated_mean": null,
        "window": {"len": 0, "capacity": fx.policy.window},
        "decision": null,
    });
    out.eq("low-skin frame", &got, &expected);

    // raw pixels of a corpus sample give the same result as its reference
    let r = SampleRef::camera(2, 5, 0);
    let (img, rect) = fx.corpus.render(&r).unwrap();
    let rgb: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let raw = json!({"image": {"width": img.width(), "height": img.height(), "rgb": rgb}, "rect": v(&rect)});
    let (_, by_pixels) = fx
        .call(Method::POST, &format!("/sessions/{sid}/frames"), Some(raw))
        .await;
    let expected = direct_frames(fx, &sid, &[r]).remove(0);
    out.eq("raw-pixel frame", &by_pixels, &expected);

    let (status, _) = fx
        .call(
            Method::POST,
            &format!("/sessions/{sid}/frames"),
            Some(json!({"corpus": v(&r), "image": {"width": 1, "height": 1, "rgb": [0, 0, 0]}})),
        )
        .await;
    out.ok(
        "ambiguous frame payload is BadRequest",
        status == StatusCode::BAD_REQUEST,
    );
    let (status, _) = fx
        .call(
            Method::POST,
            &format!("/sessions/{sid}/frames"),
            Some(json!({"corpus": v(&SampleRef::camera(99, 0, 0))})),
        )
        .await;
    out.ok(
        "out-of-range corpus frame is BadRequest",
        status == StatusCode::BAD_REQUEST,
    );
}

async fn experiment_case(fx: &Fixture, report_dir: &Path, out: &mut Outcome) {
    let cfg = ExperimentConfig {
        window: WindowConfig {
            windows: vec![1, 5, 10],
            theta: 0.0,
        },
        ..ExperimentConfig::default()
    };
    let (status, got) = fx
        .call(Method::POST, "/experiments/window", Some(v(&cfg)))
        .await;
    let report = run_named("window", &fx.corpus, &cfg).expect("direct run");
    out.ok(
        &format!("experiment run: {status}"),
        status == StatusCode::OK,
    );
    let csv = report_dir.join("window.csv");
    let json_path = report_dir.join("window.json");
    out.eq(
        "experiment location",
        &got,
        &json!({"experiment": "window", "csv": v(&csv), "json": v(&json_path), "rows": report.rows.len()}),
    );
    let written = std::fs::read_to_string(&csv).unwrap_or_default();
    out.ok(
        "experiment CSV equals direct report",
        written == report.to_csv(),
    );
    let (_, fetched) = fx.call(Method::GET, "/experiments/window", None).await;
    out.eq("experiment fetch", &fetched, &v(&report));
    let (status, _) = fx.call(Method::POST, "/experiments/bogus", None).await;
    out.ok(
        "unknown experiment is NotFound",
        status == StatusCode::NOT_FOUND,
    );
    let (status, _) = fx.call(Method::GET, "/experiments/cost", None).await;
    out.ok(
        "experiment never run is NotFound",
        status == StatusCode::NOT_FOUND,
    );
}

async fn session_contract_case(fx: &Fixture, out: &mut Outcome) {
    let (s1, a) = fx.call(Method::POST, "/sessions", None).await;
    let (_, b) = fx.call(Method::POST, "/sessions", None).await;
    out.ok("session create is OK", s1 == StatusCode::OK);
    let (ia, ib) = (
        a["session_id"].as_str().unwrap_or(""),
        b["session_id"].as_str().unwrap_or(""),
    );
    out.ok("session ids are distinct", ia != ib);
    out.ok(
        "session ids carry 128 random bits",
        ia.len() == 32 && ia.chars().all(|c| c.is_ascii_hexdigit()),
    );
    out.eq(
        "default policy",
        &a["policy"],
        &v(&DecisionPolicy::default()),
    );
    out.ok("default window is 25", a["policy"]["window"] == 25);
    let (status, _) = fx
        .call(
            Method::POST,
            "/sessions",
            Some(json!({"theta": 0.9, "window": 5})),
        )
        .await;
    out.ok("policy override accepted", status == StatusCode::OK);
    for bad in [
        "{",
        "[1,2]",
        "{\"window\": 0}",
        "{\"theta\": -1}",
        "{\"speed\": 3}",
    ] {
        let status = raw_call(&fx.app, Method::POST, "/sessions", bad).await;
        out.ok(
            &format!("malformed create body {bad} is BadRequest"),
            status == StatusCode::BAD_REQUEST,
        );
    }
    let (status, body) = fx.call(Method::GET, "/sessions/nope", None).await;
    out.ok(
        "unknown session is NotFound",
        status == StatusCode::NOT_FOUND && body["code"] == "not_found",
    );
    let (status, _) = fx
        .call(
            Method::POST,
            &format!("/sessions/{ia}/replies"),
            Some(v(&Reply::Yes)),
        )
        .await;
    out.ok(
        "reply before dialogue is a conflict",
        status == StatusCode::CONFLICT,
    );
    let (status, _) = fx
        .call(Method::POST, &format!("/sessions/{ia}/dialogue"), None)
        .await;
    out.ok(
        "dialogue without evidence is a conflict",
        status == StatusCode::CONFLICT,
    );
    fx.call(
        Method::POST,
        &format!("/sessions/{ia}/frames"),
        Some(json!({"corpus": v(&SampleRef::camera(0, 5, 0))})),
    )
    .await;
    let (status, body) = fx
        .call(Method::POST, &format!("/sessions/{ia}/dialogue"), None)
        .await;
    out.ok(
        &format!("dialogue on a provisional decision is a conflict: {body}"),
        status == StatusCode::CONFLICT,
    );
}

/// Runs every case. `report_dir` receives the experiment output.
pub async fn run_suite(report_dir: &Path) -> Outcome {
    let fx = Fixture::new(report_dir);
    let mut out = Outcome::default();
    let mut store = fx.store.clone();

    session_contract_case(&fx, &mut out).await;
    rejection_case(&fx, &mut out).await;

    let mut tracks = Vec::new();
    let spec = fx.corpus.spec().clone();
    for i in 0..spec.n_identities + spec.n_strangers {
        tracks.push((i, frames_case(&fx, &mut out, i).await));
    }
    // confirm-yes, deny then accept the runner-up, deny both then give a name
    for (k, (_, sid)) in tracks.iter().enumerate() {
        dialogue_case(&fx, &mut store, &mut out, sid, k % 3).await;
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut verdicts = std::collections::BTreeSet::new();
    for (_, sid) in &tracks {
        let (_, view) = fx
            .call(Method::GET, &format!("/sessions/{sid}"), None)
            .await;
        verdicts.insert(
            view["decision"]["verdict"]
                .as_str()
                .unwrap_or("")
                .to_string(),
        );
        for act in view["transcript"].as_array().into_iter().flatten() {
            seen.insert(act["act_type"].as_str().unwrap_or("").to_string());
        }
    }
    // the fixture must exercise each branch, or the comparisons prove little
    for verdict in ["identified", "unknown"] {
        out.ok(
            &format!("fixture reaches a {verdict} decision: {verdicts:?}"),
            verdicts.contains(verdict),
        );
    }
    for act in [
        "greet",
        "confirm_identity",
        "second_guess",
        "ask_name",
        "acknowledge",
        "farewell",
    ] {
        out.ok(
            &format!("fixture transcripts include {act}: {seen:?}"),
            seen.contains(act),
        );
    }

    photos_case(&fx, &mut store, &mut out).await;
    graph_case(&fx, &store, &mut out).await;
    memory_case(&fx, &store, &mut out).await;
    out.ok(
        "store after the suite equals the direct store",
        fx.state.store_snapshot().to_json() == store.to_json(),
    );
    experiment_case(&fx, report_dir, &mut out).await;
    out
}
