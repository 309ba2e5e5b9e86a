//! Social database (persons, friendships, statuses, events, tagged photos)
//! and interaction database (episodic memory), persisted as one versioned
//! JSON document.

mod persist;
mod store;
mod types;

pub use persist::{IngestSummary, StoreDocument, SCHEMA_VERSION};
pub use store::{FriendGraph, SocialStore};
pub use types::{
    flags, EncounterChannel, EventItem, FriendEdge, InteractionRecord, InteractionType,
    OutboxChannel, OutboxMessage, Person, PersonId, PersonInfo, Photo, PhotoTag, StatusPost,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown person '{0}'")]
    UnknownPerson(PersonId),
    #[error("person name must be non-empty")]
    EmptyName,
    #[error("a person cannot befriend themselves ('{0}')")]
    SelfEdge(PersonId),
    #[error("session '{session}': timestamp {timestamp} is not after {last}")]
    TimestampOrder {
        session: String,
        timestamp: i64,
        last: i64,
    },
    #[error("status feed of '{person}' goes backwards ({timestamp} < {last})")]
    StatusOrder {
        person: PersonId,
        timestamp: i64,
        last: i64,
    },
    #[error("event title must be non-empty")]
    EmptyEventTitle,
    #[error("friend list of '{target}' is not visible to '{viewer}'")]
    Hidden { viewer: PersonId, target: PersonId },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}
