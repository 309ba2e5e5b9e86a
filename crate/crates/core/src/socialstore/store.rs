use std::collections::{BTreeMap, BTreeSet};

use crate::facekit::{match_tag, TagCenter};

use super::{
    EventItem, FriendEdge, InteractionRecord, OutboxMessage, Person, PersonId, Photo, StatusPost,
    StoreError,
};

/// Read access to friendship relations, as needed by score biasing.
pub trait FriendGraph {
    fn contains_person(&self, id: &PersonId) -> bool;
    fn friends_of(&self, id: &PersonId) -> Result<BTreeSet<PersonId>, StoreError>;
}

/// In-memory social + interaction database.
///
/// All query results are owned copies. Wrap in a `RwLock` for shared use.
#[derive(Debug, Clone, Default)]
pub struct SocialStore {
    pub(super) persons: BTreeMap<PersonId, Person>,
    pub(super) edges: BTreeSet<FriendEdge>,
    pub(super) statuses: Vec<StatusPost>,
    pub(super) events: Vec<EventItem>,
    pub(super) photos: Vec<Photo>,
    pub(super) interactions: Vec<InteractionRecord>,
    pub(super) outbox: Vec<OutboxMessage>,

    pub(super) adjacency: BTreeMap<PersonId, BTreeSet<PersonId>>,
    pub(super) session_last: BTreeMap<String, i64>,
}

impl PartialEq for SocialStore {
    fn eq(&self, other: &Self) -> bool {
        self.persons == other.persons
            && self.edges == other.edges
            && self.statuses == other.statuses
            && self.events == other.events
            && self.photos == other.photos
            && self.interactions == other.interactions
            && self.outbox == other.outbox
    }
}

fn slug(name: &str) -> String {
    let mut s = String::new();
    for part in name
        .split(|c: char| !c.is_alphanumeric())
        .filter(|p| !p.is_empty())
    {
        if !s.is_empty() {
            s.push('-');
        }
        s.extend(part.chars().flat_map(char::to_lowercase));
    }
    if s.is_empty() {
        s.push_str("person");
    }
    s
}

impl SocialStore {
    pub fn new() -> Self {
        Self::default()
    }

    // ----- persons -------------------------------------------------------

    /// Inserts or merges a person and returns its id.
    ///
    /// With an empty `id`, an existing person with exactly the same name is
    /// updated; otherwise a fresh id is derived from the name. On update,
    /// `None` info fields keep their stored value.
    pub fn upsert_person(&mut self, person: Person) -> Result<PersonId, StoreError> {
        if person.name.trim().is_empty() {
            return Err(StoreError::EmptyName);
        }
        let id = if person.id.is_empty() {
            match self.find_by_name(&person.name) {
                Some(id) => id,
                None => self.fresh_id(&person.name),
            }
        } else {
            person.id.clone()
        };
        match self.persons.get_mut(&id) {
            Some(existing) => {
                existing.name = person.name;
                existing.on_facebook = person.on_facebook;
                existing.online = person.online;
                existing.friends_visible = person.friends_visible;
                existing.info.merge_from(&person.info);
            }
            None => {
                let mut p = person;
                p.id = id.clone();
                self.persons.insert(id.clone(), p);
            }
        }
        Ok(id)
    }

    fn fresh_id(&self, name: &str) -> PersonId {
        let base = slug(name);
        let mut candidate = PersonId::new(base.clone());
        let mut n = 2;
        while self.persons.contains_key(&candidate) {
            candidate = PersonId::new(format!("{base}-{n}"));
            n += 1;
        }
        candidate
    }

    pub fn find_by_name(&self, name: &str) -> Option<PersonId> {
        self.persons
            .values()
            .find(|p| p.name == name)
            .map(|p| p.id.clone())
    }

    pub fn person(&self, id: &PersonId) -> Result<Person, StoreError> {
        self.persons
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownPerson(id.clone()))
    }

    pub fn persons(&self) -> Vec<Person> {
        self.persons.values().cloned().collect()
    }

    pub fn contains(&self, id: &PersonId) -> bool {
        self.persons.contains_key(id)
    }

    fn require(&self, id: &PersonId) -> Result<(), StoreError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(StoreError::UnknownPerson(id.clone()))
        }
    }

    pub fn set_online(&mut self, id: &PersonId, online: bool) -> Result<(), StoreError> {
        let p = self
            .persons
            .get_mut(id)
            .ok_or_else(|| StoreError::UnknownPerson(id.clone()))?;
        p.online = online;
        Ok(())
    }

    // ----- friendships ---------------------------------------------------

    /// Adds an undirected edge; repeated or reversed calls are no-ops.
    pub fn add_friendship(&mut self, a: &PersonId, b: &PersonId) -> Result<(), StoreError> {
        self.require(a)?;
        self.require(b)?;
        let edge =
            FriendEdge::canonical(a.clone(), b.clone()).ok_or(StoreError::SelfEdge(a.clone()))?;
        if self.edges.insert(edge) {
            self.adjacency
                .entry(a.clone())
                .or_default()
                .insert(b.clone());
            self.adjacency
                .entry(b.clone())
                .or_default()
                .insert(a.clone());
        }
        Ok(())
    }

    pub fn remove_friendship(&mut self, a: &PersonId, b: &PersonId) -> Result<bool, StoreError> {
        self.require(a)?;
        self.require(b)?;
        let Some(edge) = FriendEdge::canonical(a.clone(), b.clone()) else {
            return Ok(false);
        };
        let removed = self.edges.remove(&edge);
        if removed {
            if let Some(s) = self.adjacency.get_mut(a) {
                s.remove(b);
            }
            if let Some(s) = self.adjacency.get_mut(b) {
                s.remove(a);
            }
        }
        Ok(removed)
    }

    pub fn edges(&self) -> Vec<FriendEdge> {
        self.edges.iter().cloned().collect()
    }

    pub fn are_friends(&self, a: &PersonId, b: &PersonId) -> bool {
        self.adjacency.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn friends(&self, id: &PersonId) -> Result<BTreeSet<PersonId>, StoreError> {
        self.require(id)?;
        Ok(self.adjacency.get(id).cloned().unwrap_or_default())
    }

    /// Friend list of `target` as readable by `viewer`. Hidden lists are
    /// readable only by the owner and the owner's friends.
    pub fn friends_visible_to(
        &self,
        viewer: &PersonId,
        target: &PersonId,
    ) -> Result<BTreeSet<PersonId>, StoreError> {
        self.require(viewer)?;
        let person = self.person(target)?;
        if person.friends_visible || viewer == target || self.are_friends(viewer, target) {
            self.friends(target)
        } else {
            Err(StoreError::Hidden {
                viewer: viewer.clone(),
                target: target.clone(),
            })
        }
    }

    /// friends(a) ∩ friends(b), never containing `a` or `b`.
    pub fn mutual_friends(
        &self,
        a: &PersonId,
        b: &PersonId,
    ) -> Result<BTreeSet<PersonId>, StoreError> {
        let fa = self.friends(a)?;
        let fb = self.friends(b)?;
        Ok(fa
            .intersection(&fb)
            .filter(|p| *p != a && *p != b)
            .cloned()
            .collect())
    }

    // ----- statuses & events ---------------------------------------------

    pub fn add_status(&mut self, post: StatusPost) -> Result<(), StoreError> {
        self.require(&post.person_id)?;
        if let Some(last) = self
            .statuses
            .iter()
            .rev()
            .find(|s| s.person_id == post.person_id)
        {
            if post.timestamp < last.timestamp {
                return Err(StoreError::StatusOrder {
                    person: post.person_id,
                    timestamp: post.timestamp,
                    last: last.timestamp,
                });
            }
        }
        self.statuses.push(post);
        Ok(())
    }

    /// Posts by `id` strictly after `since`, oldest first.
    pub fn status_updates_since(
        &self,
        id: &PersonId,
        since: i64,
    ) -> Result<Vec<StatusPost>, StoreError> {
        self.require(id)?;
        let mut out: Vec<StatusPost> = self
            .statuses
            .iter()
            .filter(|s| &s.person_id == id && s.timestamp > since)
            .cloned()
            .collect();
        out.sort_by_key(|s| s.timestamp);
        Ok(out)
    }

    pub fn add_event(&mut self, event: EventItem) -> Result<(), StoreError> {
        self.require(&event.person_id)?;
        if event.title.trim().is_empty() {
            return Err(StoreError::EmptyEventTitle);
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events_for(&self, id: &PersonId) -> Result<Vec<EventItem>, StoreError> {
        self.require(id)?;
        let mut out: Vec<EventItem> = self
            .events
            .iter()
            .filter(|e| &e.person_id == id)
            .cloned()
            .collect();
        out.sort_by_key(|e| e.timestamp);
        Ok(out)
    }

    // ----- photos --------------------------------------------------------

    /// Inserts a photo, replacing any previous photo with the same id.
    pub fn upsert_photo(&mut self, photo: Photo) -> Result<(), StoreError> {
        if let Some(owner) = &photo.owner {
            self.require(owner)?;
        }
        for t in &photo.tags {
            self.require(&t.person_id)?;
        }
        match self
            .photos
            .iter_mut()
            .find(|p| p.photo_id == photo.photo_id)
        {
            Some(slot) => *slot = photo,
            None => self.photos.push(photo),
        }
        Ok(())
    }

    /// Binds every tag against the photo's detections (overwriting any
    /// previous outcome) and upserts the result.
    pub fn add_tagged_photo(&mut self, mut photo: Photo) -> Result<Photo, StoreError> {
        for t in &mut photo.tags {
            t.outcome = Some(match_tag(TagCenter::new(t.cx, t.cy), &photo.detections));
        }
        self.upsert_photo(photo.clone())?;
        Ok(photo)
    }

    pub fn photos(&self) -> Vec<Photo> {
        self.photos.clone()
    }

    pub fn photo(&self, photo_id: &str) -> Option<Photo> {
        self.photos.iter().find(|p| p.photo_id == photo_id).cloned()
    }

    /// Photos posted by `owner` strictly after `since`, oldest first.
    pub fn photos_posted_since(
        &self,
        owner: &PersonId,
        since: i64,
    ) -> Result<Vec<Photo>, StoreError> {
        self.require(owner)?;
        let mut out: Vec<Photo> = self
            .photos
            .iter()
            .filter(|p| p.owner.as_ref() == Some(owner) && p.timestamp > since)
            .cloned()
            .collect();
        out.sort_by_key(|p| p.timestamp);
        Ok(out)
    }

    // ----- interactions --------------------------------------------------

    /// Appends to episodic memory. Timestamps must strictly increase within a
    /// session; the first record of an unseen session id opens it.
    pub fn record_interaction(&mut self, record: InteractionRecord) -> Result<(), StoreError> {
        self.require(&record.user_id)?;
        if let Some(&last) = self.session_last.get(&record.session_id) {
            if record.timestamp <= last {
                return Err(StoreError::TimestampOrder {
                    session: record.session_id,
                    timestamp: record.timestamp,
                    last,
                });
            }
        }
        self.session_last
            .insert(record.session_id.clone(), record.timestamp);
        self.interactions.push(record);
        Ok(())
    }

    /// Session ids in order of first appearance.
    pub fn sessions(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.interactions
            .iter()
            .filter(|r| seen.insert(r.session_id.clone()))
            .map(|r| r.session_id.clone())
            .collect()
    }

    pub fn session_records(&self, session_id: &str) -> Vec<InteractionRecord> {
        self.interactions
            .iter()
            .filter(|r| r.session_id == session_id)
            .cloned()
            .collect()
    }

    pub fn interactions_for(&self, id: &PersonId) -> Result<Vec<InteractionRecord>, StoreError> {
        self.require(id)?;
        let mut out: Vec<InteractionRecord> = self
            .interactions
            .iter()
            .filter(|r| &r.user_id == id)
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.session_id.cmp(&b.session_id))
        });
        Ok(out)
    }

    pub fn interactions(&self) -> &[InteractionRecord] {
        &self.interactions
    }

    /// Session and timestamp of the most recent record about `id`.
    pub fn last_encounter(&self, id: &PersonId) -> Result<Option<(String, i64)>, StoreError> {
        self.require(id)?;
        Ok(self
            .interactions
            .iter()
            .filter(|r| &r.user_id == id)
            .max_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.session_id.cmp(&b.session_id))
            })
            .map(|r| (r.session_id.clone(), r.timestamp)))
    }

    // ----- outbox --------------------------------------------------------

    pub fn append_outbox(&mut self, msg: OutboxMessage) -> Result<(), StoreError> {
        self.require(&msg.to)?;
        self.outbox.push(msg);
        Ok(())
    }

    pub fn outbox(&self) -> &[OutboxMessage] {
        &self.outbox
    }

    pub(super) fn rebuild_indexes(&mut self) {
        self.adjacency.clear();
        for e in &self.edges {
            self.adjacency
                .entry(e.a.clone())
                .or_default()
                .insert(e.b.clone());
            self.adjacency
                .entry(e.b.clone())
                .or_default()
                .insert(e.a.clone());
        }
        self.session_last.clear();
        for r in &self.interactions {
            let last = self
                .session_last
                .entry(r.session_id.clone())
                .or_insert(r.timestamp);
            *last = (*last).max(r.timestamp);
        }
    }
}

impl FriendGraph for SocialStore {
    fn contains_person(&self, id: &PersonId) -> bool {
        self.contains(id)
    }

    fn friends_of(&self, id: &PersonId) -> Result<BTreeSet<PersonId>, StoreError> {
        self.friends(id)
    }
}
