//! Request and response bodies. Scores are plain JSON numbers written in
//! shortest round-trip form, so a client parsing them recovers the exact f64.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sociface_core::dialogue::{DialogueAct, SessionState};
use sociface_core::facekit::{FaceRect, Rejection};
use sociface_core::harness::SampleRef;
use sociface_core::recognizer::{Decision, DecisionPolicy, ScoreVector};
use sociface_core::socialstore::{InteractionRecord, Person, PersonId, Photo};

/// Optional overrides for a new session; omitted fields take the service default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_win: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub created_at: i64,
    pub policy: DecisionPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowFill {
    pub len: usize,
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: i64,
    pub policy: DecisionPolicy,
    pub frames_received: usize,
    pub window: WindowFill,
    pub accumulated_mean: Option<ScoreVector>,
    pub decision: Option<Decision>,
    pub dialogue: Option<SessionState>,
    pub transcript: Vec<DialogueAct>,
}

/// Raw RGB frame: `rgb` is row-major `[r, g, b, r, g, b, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagePayload {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
}

/// Either `image` (with an optional face `rect`, default the whole image)
/// or a `corpus` sample reference.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImagePayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<FaceRect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<SampleRef>,
}

impl FrameRequest {
    pub fn corpus(r: SampleRef) -> Self {
        Self {
            corpus: Some(r),
            ..Self::default()
        }
    }
}

/// Result of one frame. On a skin-gate rejection `scores` is null and the
/// window is untouched; `accumulated_mean` and `decision` still describe the
/// current window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResponse {
    pub session_id: String,
    pub rejection: Option<Rejection>,
    pub scores: Option<ScoreVector>,
    pub accumulated_mean: Option<ScoreVector>,
    pub window: WindowFill,
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActsResponse {
    pub acts: Vec<DialogueAct>,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonView {
    pub person: Person,
    pub friends: BTreeSet<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualView {
    pub a: PersonId,
    pub b: PersonId,
    pub mutual: BTreeSet<PersonId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastEncounter {
    pub session_id: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryView {
    pub person_id: PersonId,
    pub last_encounter: Option<LastEncounter>,
    pub records: Vec<InteractionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoIngested {
    pub photo: Photo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub experiment: String,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub rows: usize,
}
