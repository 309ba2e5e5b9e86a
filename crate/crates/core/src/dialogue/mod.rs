//! Robot-initiative encounter script: greet, confirm identity with a
//! second-guess fallback, learn names, small talk from social data, farewell.
//!
//! Every robot act and every human reply is written to the interaction log.
//! Records made before the user is confirmed go under the context's
//! `unknown_id` so a rejected guess never pollutes the guessed person's
//! memory.

mod demo;
mod engine;
mod templates;

pub use demo::{
    demo_decision, demo_engine, demo_store, run_scripted, ScriptedReplies, Speaker, Transcript,
    TranscriptLine, DEMO_NOW,
};
pub use engine::{DialogueContext, DialogueEngine};
pub use templates::{Template, TemplateTable};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::socialstore::{PersonId, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActType {
    Greet,
    ConfirmIdentity,
    SecondGuess,
    AskName,
    QueryState,
    NewsItem,
    StatusComment,
    MutualFriendNews,
    SendReminder,
    PastEncounterRef,
    OfferConnect,
    Acknowledge,
    Farewell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expects {
    None,
    YesNo,
    Name,
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAct {
    pub act_type: ActType,
    pub text: String,
    pub expects: Expects,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Greeting,
    Confirming,
    SecondGuessing,
    Naming,
    SmallTalk,
    Closing,
    Done,
}

/// Declaration order is selection priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicKind {
    OwnStatus,
    MutualFriendStatus,
    NewPhotoPost,
    PastEncounter,
    OnlineFriendConnect,
    GeneralNews,
    PreScripted,
}

impl TopicKind {
    pub const PRIORITY: [TopicKind; 7] = [
        TopicKind::OwnStatus,
        TopicKind::MutualFriendStatus,
        TopicKind::NewPhotoPost,
        TopicKind::PastEncounter,
        TopicKind::OnlineFriendConnect,
        TopicKind::GeneralNews,
        TopicKind::PreScripted,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TopicPayload {
    Status {
        person_id: PersonId,
        text: String,
        timestamp: i64,
    },
    Photo {
        owner: PersonId,
        photo_id: String,
        timestamp: i64,
    },
    Encounter {
        friend: PersonId,
        session_id: String,
        timestamp: i64,
    },
    OnlineFriend {
        friend: PersonId,
    },
    Text {
        item: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub kind: TopicKind,
    pub payload: TopicPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Reply {
    Yes,
    No,
    Name(String),
    FreeText(String),
}

impl Reply {
    pub fn fits(&self, expects: Expects) -> bool {
        match self {
            Reply::Yes | Reply::No => expects == Expects::YesNo,
            Reply::Name(n) => expects == Expects::Name && !n.trim().is_empty(),
            Reply::FreeText(_) => expects == Expects::FreeText,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Reply::Yes => "yes",
            Reply::No => "no",
            Reply::Name(_) => "name",
            Reply::FreeText(_) => "free_text",
        }
    }
}

/// The act awaiting a reply, with whatever the engine needs to resolve it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingAct {
    pub act_type: ActType,
    pub expects: Expects,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<Topic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub phase: Phase,
    /// `None` while the user is still pending confirmation or naming.
    pub user: Option<PersonId>,
    pub topics_used: BTreeSet<TopicKind>,
    /// Robot acts emitted so far.
    pub turn_count: usize,
    /// Identity currently offered for confirmation.
    pub candidate: Option<PersonId>,
    pub second: Option<PersonId>,
    pub pending: Option<PendingAct>,
    /// Freshness cutoff for social news: the user's previous encounter.
    pub since: i64,
    /// Timestamp of the last record written for this session.
    pub clock: i64,
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("decision is still provisional; wait for a full evidence window")]
    Provisional,
    #[error("reply '{got}' does not fit the pending act (expects {expected:?})")]
    UnexpectedReply {
        expected: Expects,
        got: &'static str,
    },
    #[error("no act is awaiting a reply")]
    NoPendingAct,
    #[error("session '{0}' is already closed")]
    SessionDone(String),
    #[error("session id '{0}' already exists in the interaction log")]
    DuplicateSession(String),
    #[error("robot identity '{0}' is not in the store")]
    UnknownRobot(PersonId),
    #[error("template table: {0}")]
    Template(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}
