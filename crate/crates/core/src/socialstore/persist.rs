use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    EventItem, FriendEdge, InteractionRecord, OutboxMessage, Person, PersonId, Photo, SocialStore,
    StatusPost, StoreError,
};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk layout of the store file, also used for social-export ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDocument {
    pub version: u32,
    #[serde(default)]
    pub persons: Vec<Person>,
    #[serde(default)]
    pub edges: Vec<FriendEdge>,
    #[serde(default)]
    pub statuses: Vec<StatusPost>,
    #[serde(default)]
    pub events: Vec<EventItem>,
    #[serde(default)]
    pub photos: Vec<Photo>,
    #[serde(default)]
    pub interactions: Vec<InteractionRecord>,
    #[serde(default)]
    pub outbox: Vec<OutboxMessage>,
}

impl Default for StoreDocument {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            persons: Vec::new(),
            edges: Vec::new(),
            statuses: Vec::new(),
            events: Vec::new(),
            photos: Vec::new(),
            interactions: Vec::new(),
            outbox: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub persons: usize,
    pub edges: usize,
    pub statuses: usize,
    pub events: usize,
    pub photos: usize,
    /// Interaction and outbox entries are robot-local and never imported.
    pub skipped: usize,
}

fn schema(msg: impl Into<String>) -> StoreError {
    StoreError::Schema(msg.into())
}

impl SocialStore {
    pub fn to_document(&self) -> StoreDocument {
        StoreDocument {
            version: SCHEMA_VERSION,
            persons: self.persons.values().cloned().collect(),
            edges: self.edges.iter().cloned().collect(),
            statuses: self.statuses.clone(),
            events: self.events.clone(),
            photos: self.photos.clone(),
            interactions: self.interactions.clone(),
            outbox: self.outbox.clone(),
        }
    }

    /// Builds a store from a document, checking every store invariant.
    pub fn from_document(doc: StoreDocument) -> Result<Self, StoreError> {
        if doc.version != SCHEMA_VERSION {
            return Err(StoreError::Version {
                found: doc.version,
                expected: SCHEMA_VERSION,
            });
        }
        let mut persons = BTreeMap::new();
        for p in doc.persons {
            if p.id.is_empty() {
                return Err(schema("person with empty id"));
            }
            if p.name.trim().is_empty() {
                return Err(schema(format!("person '{}' has an empty name", p.id)));
            }
            if persons.insert(p.id.clone(), p).is_some() {
                return Err(schema("duplicate person id"));
            }
        }
        let known = |id: &PersonId| -> Result<(), StoreError> {
            if persons.contains_key(id) {
                Ok(())
            } else {
                Err(schema(format!("reference to unknown person '{id}'")))
            }
        };

        let mut edges = BTreeSet::new();
        for e in doc.edges {
            known(&e.a)?;
            known(&e.b)?;
            if e.a >= e.b {
                return Err(schema(format!("edge ({}, {}) is not canonical", e.a, e.b)));
            }
            if !edges.insert(e) {
                return Err(schema("duplicate edge"));
            }
        }

        let mut last_status: BTreeMap<&PersonId, i64> = BTreeMap::new();
        for s in &doc.statuses {
            known(&s.person_id)?;
            let last = last_status.entry(&s.person_id).or_insert(s.timestamp);
            if s.timestamp < *last {
                return Err(schema(format!(
                    "status feed of '{}' goes backwards",
                    s.person_id
                )));
            }
            *last = s.timestamp;
        }
        for e in &doc.events {
            known(&e.person_id)?;
            if e.title.trim().is_empty() {
                return Err(schema("event with empty title"));
            }
        }
        let mut photo_ids = BTreeSet::new();
        for p in &doc.photos {
            if !photo_ids.insert(p.photo_id.as_str()) {
                return Err(schema(format!("duplicate photo '{}'", p.photo_id)));
            }
            if let Some(o) = &p.owner {
                known(o)?;
            }
            for t in &p.tags {
                known(&t.person_id)?;
            }
        }
        let mut last_in_session: BTreeMap<&str, i64> = BTreeMap::new();
        for r in &doc.interactions {
            known(&r.user_id)?;
            if let Some(&last) = last_in_session.get(r.session_id.as_str()) {
                if r.timestamp <= last {
                    return Err(schema(format!(
                        "session '{}' timestamps not strictly increasing",
                        r.session_id
                    )));
                }
            }
            last_in_session.insert(&r.session_id, r.timestamp);
        }
        for m in &doc.outbox {
            known(&m.to)?;
        }

        let mut store = SocialStore {
            persons,
            edges,
            statuses: doc.statuses,
            events: doc.events,
            photos: doc.photos,
            interactions: doc.interactions,
            outbox: doc.outbox,
            ..Default::default()
        };
        store.rebuild_indexes();
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("store document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let doc: StoreDocument =
            serde_json::from_str(text).map_err(|e| StoreError::Schema(e.to_string()))?;
        Self::from_document(doc)
    }

    /// Writes a consistent snapshot to `path` via a sibling temp file and
    /// rename, so readers never observe a partial file.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let text = self.to_json();
        let file_name = path
            .file_name()
            .ok_or_else(|| StoreError::Io(std::io::Error::other("store path has no file name")))?;
        let mut tmp_name = file_name.to_os_string();
        tmp_name.push(format!(".tmp{}", std::process::id()));
        let tmp = path.with_file_name(tmp_name);
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path).inspect_err(|_| {
            let _ = std::fs::remove_file(&tmp);
        })?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Merges a social export shaped like the store document. Persons are
    /// upserted, edges added, statuses/events appended, photos replaced by id.
    pub fn ingest(&mut self, export: StoreDocument) -> Result<IngestSummary, StoreError> {
        if export.version != SCHEMA_VERSION {
            return Err(StoreError::Version {
                found: export.version,
                expected: SCHEMA_VERSION,
            });
        }
        let mut staged = self.clone();
        let mut summary = IngestSummary::default();
        for p in export.persons {
            staged.upsert_person(p)?;
            summary.persons += 1;
        }
        for e in export.edges {
            staged.add_friendship(&e.a, &e.b)?;
            summary.edges += 1;
        }
        for s in export.statuses {
            staged.add_status(s)?;
            summary.statuses += 1;
        }
        for e in export.events {
            staged.add_event(e)?;
            summary.events += 1;
        }
        for p in export.photos {
            staged.upsert_photo(p)?;
            summary.photos += 1;
        }
        summary.skipped = export.interactions.len() + export.outbox.len();
        *self = staged;
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let s = SocialStore::new();
        s.save(&path).unwrap();
        let back = SocialStore::load(&path).unwrap();
        assert_eq!(back, s);
        assert!(back.persons().is_empty());
    }

    #[test]
    fn corrupted_file_is_schema_error_and_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            SocialStore::load(&path),
            Err(StoreError::Schema(_))
        ));
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "{ not json");
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            SocialStore::load(&dir.path().join("nope.json")),
            Err(StoreError::Io(_))
        ));
    }

    #[test]
    fn wrong_version_is_reported() {
        let err = SocialStore::from_json(r#"{"version": 9}"#).unwrap_err();
        assert!(matches!(err, StoreError::Version { found: 9, .. }));
    }

    #[test]
    fn non_canonical_edge_rejected() {
        let text = r#"{"version":1,
            "persons":[{"id":"a","name":"A"},{"id":"b","name":"B"}],
            "edges":[{"a":"b","b":"a"}]}"#;
        assert!(matches!(
            SocialStore::from_json(text),
            Err(StoreError::Schema(_))
        ));
    }

    #[test]
    fn ingest_is_all_or_nothing() {
        let mut s = SocialStore::new();
        let export = StoreDocument {
            persons: vec![Person::new("a", "A")],
            edges: vec![FriendEdge {
                a: PersonId::new("a"),
                b: PersonId::new("ghost"),
            }],
            ..Default::default()
        };
        assert!(s.ingest(export).is_err());
        assert!(s.persons().is_empty());
    }
}
