use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::facekit::{FaceRect, TagMatchResult};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct PersonId(pub String);

impl PersonId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PersonId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// General profile fields. `None` means "unknown" and, on upsert, "keep
/// whatever is already stored".
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PersonInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub education: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highschool: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hometown: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_history: Option<String>,
}

impl PersonInfo {
    pub(crate) fn merge_from(&mut self, other: &PersonInfo) {
        fn take(dst: &mut Option<String>, src: &Option<String>) {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        take(&mut self.affiliation, &other.affiliation);
        take(&mut self.current_location, &other.current_location);
        take(&mut self.education, &other.education);
        take(&mut self.highschool, &other.highschool);
        take(&mut self.hometown, &other.hometown);
        take(&mut self.work_history, &other.work_history);
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    /// Empty on insert means "resolve by name, else derive from the name".
    #[serde(default)]
    pub id: PersonId,
    pub name: String,
    #[serde(default)]
    pub on_facebook: bool,
    /// Currently reachable over chat.
    #[serde(default)]
    pub online: bool,
    /// When false the friend list is hidden from queries rooted at
    /// non-friends.
    #[serde(default = "default_true")]
    pub friends_visible: bool,
    #[serde(default)]
    pub info: PersonInfo,
}

impl Person {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: PersonId::new(id),
            name: name.into(),
            on_facebook: true,
            online: false,
            friends_visible: true,
            info: PersonInfo::default(),
        }
    }

    pub fn first_name(&self) -> &str {
        self.name.split_whitespace().next().unwrap_or(&self.name)
    }
}

/// Undirected friendship, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FriendEdge {
    pub a: PersonId,
    pub b: PersonId,
}

impl FriendEdge {
    /// Canonical form; `None` for a self-edge.
    pub fn canonical(x: PersonId, y: PersonId) -> Option<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Some(Self { a: x, b: y }),
            std::cmp::Ordering::Greater => Some(Self { a: y, b: x }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusPost {
    pub person_id: PersonId,
    pub text: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventItem {
    pub person_id: PersonId,
    pub title: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoTag {
    pub person_id: PersonId,
    pub cx: f64,
    pub cy: f64,
    /// Filled in when the tag has been bound against the detections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<TagMatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Photo {
    pub photo_id: String,
    #[serde(default)]
    pub owner: Option<PersonId>,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default)]
    pub detections: Vec<FaceRect>,
    #[serde(default)]
    pub tags: Vec<PhotoTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    Greeting,
    Confirm,
    Deny,
    QueryState,
    NewsItem,
    StatusComment,
    MutualFriendNews,
    Reminder,
    PastEncounterRef,
    ConnectOnline,
    Farewell,
    NameLearned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncounterChannel {
    #[default]
    Physical,
    Online,
}

/// One episodic-memory entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub timestamp: i64,
    pub session_id: String,
    pub interaction_type: InteractionType,
    pub description: String,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    pub user_id: PersonId,
    #[serde(default)]
    pub channel: EncounterChannel,
}

impl InteractionRecord {
    pub fn new(
        timestamp: i64,
        session_id: impl Into<String>,
        interaction_type: InteractionType,
        description: impl Into<String>,
        user_id: PersonId,
    ) -> Self {
        Self {
            timestamp,
            session_id: session_id.into(),
            interaction_type,
            description: description.into(),
            flags: BTreeMap::new(),
            user_id,
            channel: EncounterChannel::Physical,
        }
    }

    pub fn with_flag(mut self, name: &str, value: bool) -> Self {
        self.flags.insert(name.to_string(), value);
        self
    }
}

/// Well-known interaction flag names.
pub mod flags {
    pub const CONFIRMED: &str = "confirmed";
    pub const MESSAGE_SENT: &str = "message_sent";
    pub const STATUS_POSTED: &str = "status_posted";
    pub const TRAINING_CAPTURE: &str = "training_capture";
    pub const ROBOT_ACT: &str = "robot_act";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutboxChannel {
    Message,
    Chat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxMessage {
    pub to: PersonId,
    pub text: String,
    pub timestamp: i64,
    pub channel: OutboxChannel,
}
