use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{
    ActType, DialogueAct, DialogueError, Expects, PendingAct, Phase, Reply, SessionState,
    TemplateTable, Topic, TopicKind, TopicPayload,
};
use crate::recognizer::Decision;
use crate::socialstore::{
    flags, InteractionRecord, InteractionType, OutboxChannel, OutboxMessage, Person, PersonId,
    SocialStore,
};

/// Per-deployment inputs that are not in the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueContext {
    /// The robot's own person entry; "mutual" means mutual with it.
    pub robot_id: PersonId,
    /// Owner of records written before the user is known.
    #[serde(default = "default_unknown")]
    pub unknown_id: PersonId,
    #[serde(default)]
    pub news: Vec<String>,
    #[serde(default)]
    pub prescripted: Vec<String>,
}

fn default_unknown() -> PersonId {
    PersonId::new("unknown-visitor")
}

impl DialogueContext {
    pub fn new(robot_id: PersonId) -> Self {
        Self {
            robot_id,
            unknown_id: default_unknown(),
            news: Vec::new(),
            prescripted: Vec::new(),
        }
    }

    /// Newline-delimited items; blank lines skipped.
    pub fn with_news_text(mut self, text: &str) -> Self {
        self.news = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        self
    }
}

pub struct DialogueEngine {
    templates: TemplateTable,
    ctx: DialogueContext,
    counter: AtomicU64,
}

/// Output collected while handling one call; committed only on success.
struct Turn<'a> {
    engine: &'a DialogueEngine,
    state: SessionState,
    acts: Vec<DialogueAct>,
    now: i64,
}

impl DialogueEngine {
    pub fn new(templates: TemplateTable, ctx: DialogueContext) -> Self {
        Self {
            templates,
            ctx,
            counter: AtomicU64::new(0),
        }
    }

    pub fn context(&self) -> &DialogueContext {
        &self.ctx
    }

    pub fn templates(&self) -> &TemplateTable {
        &self.templates
    }

    /// Opens a session with an engine-assigned id not yet present in the log.
    pub fn start_session(
        &self,
        store: &mut SocialStore,
        decision: &Decision,
        now: i64,
    ) -> Result<(SessionState, Vec<DialogueAct>), DialogueError> {
        let existing = store.sessions();
        let id = loop {
            let n = self.counter.fetch_add(1, Ordering::Relaxed) + 1;
            let id = format!("session-{n:06}");
            if !existing.contains(&id) {
                break id;
            }
        };
        self.start_session_with_id(store, decision, id, now)
    }

    /// Identified: Greet + ConfirmIdentity(best). Unknown: Greet + AskName.
    pub fn start_session_with_id(
        &self,
        store: &mut SocialStore,
        decision: &Decision,
        session_id: String,
        now: i64,
    ) -> Result<(SessionState, Vec<DialogueAct>), DialogueError> {
        if decision.is_provisional() {
            return Err(DialogueError::Provisional);
        }
        if !store.contains(&self.ctx.robot_id) {
            return Err(DialogueError::UnknownRobot(self.ctx.robot_id.clone()));
        }
        if store.sessions().contains(&session_id) {
            return Err(DialogueError::DuplicateSession(session_id));
        }
        if let Decision::Identified { best, second } = decision {
            store.person(best)?;
            if let Some(s) = second {
                store.person(s)?;
            }
        }
        if !store.contains(&self.ctx.unknown_id) {
            let mut p = Person::new(self.ctx.unknown_id.as_str(), "Unknown visitor");
            p.on_facebook = false;
            store.upsert_person(p)?;
        }
        let state = SessionState {
            session_id,
            phase: Phase::Greeting,
            user: None,
            topics_used: Default::default(),
            turn_count: 0,
            candidate: None,
            second: None,
            pending: None,
            since: i64::MIN,
            clock: i64::MIN,
        };
        let mut t = Turn::new(self, state, now);
        t.say(
            store,
            "greet",
            ActType::Greet,
            InteractionType::Greeting,
            &[],
        )?;
        match decision {
            Decision::Identified { best, second } => {
                let name = store.person(best)?.name;
                let first = first_name(&name);
                t.state.candidate = Some(best.clone());
                t.state.second = second.clone().filter(|s| s != best);
                t.state.phase = Phase::Confirming;
                t.ask(
                    store,
                    "confirm_identity",
                    ActType::ConfirmIdentity,
                    InteractionType::Confirm,
                    &[("name", &name), ("first", first)],
                    None,
                )?;
            }
            Decision::Unknown => {
                t.state.phase = Phase::Naming;
                t.ask(
                    store,
                    "ask_name",
                    ActType::AskName,
                    InteractionType::NameLearned,
                    &[],
                    None,
                )?;
            }
            Decision::Provisional { .. } => unreachable!("rejected above"),
        }
        Ok(t.finish())
    }

    /// Resolves the pending act. On error the state is left untouched.
    pub fn handle_reply(
        &self,
        store: &mut SocialStore,
        state: &mut SessionState,
        reply: Reply,
        now: i64,
    ) -> Result<Vec<DialogueAct>, DialogueError> {
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionDone(state.session_id.clone()));
        }
        let pending = state.pending.clone().ok_or(DialogueError::NoPendingAct)?;
        if !reply.fits(pending.expects) {
            return Err(DialogueError::UnexpectedReply {
                expected: pending.expects,
                got: reply.kind_name(),
            });
        }
        let mut t = Turn::new(self, state.clone(), now);
        t.state.pending = None;
        match (t.state.phase, &reply) {
            (Phase::Confirming | Phase::SecondGuessing, Reply::Yes) => {
                let who = t
                    .state
                    .candidate
                    .clone()
                    .expect("candidate set while confirming");
                t.accept(store, who, InteractionType::Confirm)?;
                t.next_topic(store)?;
            }
            (Phase::Confirming, Reply::No) => {
                t.log_reply(store, InteractionType::Deny, "reply: no", |r| {
                    r.with_flag(flags::CONFIRMED, false)
                })?;
                match t.state.second.clone() {
                    Some(second) => {
                        let name = store.person(&second)?.name;
                        t.state.candidate = Some(second);
                        t.state.phase = Phase::SecondGuessing;
                        t.ask(
                            store,
                            "second_guess",
                            ActType::SecondGuess,
                            InteractionType::Confirm,
                            &[("name", &name), ("first", first_name(&name))],
                            None,
                        )?;
                    }
                    None => t.enter_naming(store)?,
                }
            }
            (Phase::SecondGuessing, Reply::No) => {
                t.log_reply(store, InteractionType::Deny, "reply: no", |r| {
                    r.with_flag(flags::CONFIRMED, false)
                })?;
                t.enter_naming(store)?;
            }
            (Phase::Naming, Reply::Name(name)) => {
                let name = name.trim().to_string();
                let id = match store.find_by_name(&name) {
                    Some(id) => id,
                    None => {
                        let mut p = Person::new("", name.clone());
                        p.on_facebook = false;
                        store.upsert_person(p)?
                    }
                };
                t.accept(store, id, InteractionType::NameLearned)?;
                let first = first_name(&name).to_string();
                t.say(
                    store,
                    "name_ack",
                    ActType::Acknowledge,
                    InteractionType::NameLearned,
                    &[("name", &name), ("first", &first)],
                )?;
                t.next_topic(store)?;
            }
            (Phase::SmallTalk, reply) => {
                let topic = pending
                    .topic
                    .clone()
                    .expect("small-talk acts carry their topic");
                t.small_talk_reply(store, &pending, &topic, reply)?;
                t.next_topic(store)?;
            }
            _ => return Err(DialogueError::NoPendingAct),
        }
        let (s, acts) = t.finish();
        *state = s;
        Ok(acts)
    }

    /// Highest-priority topic kind that is available and unused, if any.
    pub fn select_topic(&self, store: &SocialStore, state: &SessionState) -> Option<Topic> {
        if state.phase != Phase::SmallTalk {
            return None;
        }
        let user = state.user.as_ref()?;
        TopicKind::PRIORITY
            .into_iter()
            .filter(|k| !state.topics_used.contains(k))
            .find_map(|k| self.topic_of_kind(store, user, state.since, k))
    }

    fn topic_of_kind(
        &self,
        store: &SocialStore,
        user: &PersonId,
        since: i64,
        kind: TopicKind,
    ) -> Option<Topic> {
        let mutual = store
            .mutual_friends(&self.ctx.robot_id, user)
            .unwrap_or_default();
        let payload = match kind {
            TopicKind::OwnStatus => {
                let s = store.status_updates_since(user, since).ok()?.pop()?;
                TopicPayload::Status {
                    person_id: s.person_id,
                    text: s.text,
                    timestamp: s.timestamp,
                }
            }
            TopicKind::MutualFriendStatus => {
                let s = mutual
                    .iter()
                    .filter_map(|m| store.status_updates_since(m, since).ok()?.pop())
                    // latest first; ties to the smaller id (iteration order)
                    .reduce(|a, b| if b.timestamp > a.timestamp { b } else { a })?;
                TopicPayload::Status {
                    person_id: s.person_id,
                    text: s.text,
                    timestamp: s.timestamp,
                }
            }
            TopicKind::NewPhotoPost => {
                let (owner, p) = mutual
                    .iter()
                    .filter_map(|m| {
                        Some((m.clone(), store.photos_posted_since(m, since).ok()?.pop()?))
                    })
                    .reduce(|a, b| if b.1.timestamp > a.1.timestamp { b } else { a })?;
                TopicPayload::Photo {
                    owner,
                    photo_id: p.photo_id,
                    timestamp: p.timestamp,
                }
            }
            TopicKind::PastEncounter => {
                let (friend, (session_id, timestamp)) = mutual
                    .iter()
                    .filter_map(|m| Some((m.clone(), store.last_encounter(m).ok()??)))
                    .reduce(|a, b| if b.1 .1 > a.1 .1 { b } else { a })?;
                TopicPayload::Encounter {
                    friend,
                    session_id,
                    timestamp,
                }
            }
            TopicKind::OnlineFriendConnect => {
                let friend = store
                    .friends(user)
                    .ok()?
                    .into_iter()
                    .filter(|f| *f != self.ctx.robot_id)
                    .find(|f| store.person(f).map(|p| p.online).unwrap_or(false))?;
                TopicPayload::OnlineFriend { friend }
            }
            TopicKind::GeneralNews => TopicPayload::Text {
                item: self.ctx.news.first()?.clone(),
            },
            TopicKind::PreScripted => TopicPayload::Text {
                item: self.ctx.prescripted.first()?.clone(),
            },
        };
        Some(Topic { kind, payload })
    }

    /// Farewell from any phase but Done.
    pub fn end_session(
        &self,
        store: &mut SocialStore,
        state: &mut SessionState,
        now: i64,
    ) -> Result<DialogueAct, DialogueError> {
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionDone(state.session_id.clone()));
        }
        let mut t = Turn::new(self, state.clone(), now);
        t.state.pending = None;
        t.state.phase = Phase::Closing;
        match t.state.user.clone() {
            Some(u) => {
                let name = store.person(&u)?.name;
                let first = first_name(&name).to_string();
                t.say(
                    store,
                    "farewell_named",
                    ActType::Farewell,
                    InteractionType::Farewell,
                    &[("name", &name), ("first", &first)],
                )?;
            }
            None => t.say(
                store,
                "farewell_anonymous",
                ActType::Farewell,
                InteractionType::Farewell,
                &[],
            )?,
        }
        t.state.phase = Phase::Done;
        let (s, mut acts) = t.finish();
        *state = s;
        Ok(acts.pop().expect("farewell emitted"))
    }
}

fn first_name(name: &str) -> &str {
    name.split_whitespace().next().unwrap_or(name)
}

fn topic_act(kind: TopicKind) -> (ActType, InteractionType, &'static str) {
    match kind {
        TopicKind::OwnStatus => (
            ActType::StatusComment,
            InteractionType::StatusComment,
            "status_comment",
        ),
        TopicKind::MutualFriendStatus => (
            ActType::MutualFriendNews,
            InteractionType::MutualFriendNews,
            "mutual_friend_status",
        ),
        TopicKind::NewPhotoPost => (
            ActType::MutualFriendNews,
            InteractionType::MutualFriendNews,
            "new_photo",
        ),
        TopicKind::PastEncounter => (
            ActType::PastEncounterRef,
            InteractionType::PastEncounterRef,
            "past_encounter",
        ),
        TopicKind::OnlineFriendConnect => (
            ActType::OfferConnect,
            InteractionType::ConnectOnline,
            "offer_connect",
        ),
        TopicKind::GeneralNews => (ActType::NewsItem, InteractionType::NewsItem, "general_news"),
        TopicKind::PreScripted => (
            ActType::QueryState,
            InteractionType::QueryState,
            "prescripted",
        ),
    }
}

fn ago(seconds: i64) -> String {
    let s = seconds.max(0);
    let (n, unit) = if s >= 86_400 {
        (s / 86_400, "day")
    } else if s >= 3_600 {
        (s / 3_600, "hour")
    } else {
        ((s / 60).max(1), "minute")
    };
    if n == 1 {
        format!("1 {unit}")
    } else {
        format!("{n} {unit}s")
    }
}

impl<'a> Turn<'a> {
    fn new(engine: &'a DialogueEngine, state: SessionState, now: i64) -> Self {
        Self {
            engine,
            state,
            acts: Vec::new(),
            now,
        }
    }

    fn finish(self) -> (SessionState, Vec<DialogueAct>) {
        (self.state, self.acts)
    }

    fn owner(&self) -> PersonId {
        self.state
            .user
            .clone()
            .unwrap_or_else(|| self.engine.ctx.unknown_id.clone())
    }

    fn tick(&mut self) -> i64 {
        let ts = if self.state.clock == i64::MIN {
            self.now
        } else {
            self.now.max(self.state.clock + 1)
        };
        self.state.clock = ts;
        ts
    }

    fn log(
        &mut self,
        store: &mut SocialStore,
        rec: InteractionRecord,
    ) -> Result<(), DialogueError> {
        store.record_interaction(rec)?;
        Ok(())
    }

    fn record(&mut self, ty: InteractionType, description: &str) -> InteractionRecord {
        let ts = self.tick();
        InteractionRecord::new(
            ts,
            self.state.session_id.clone(),
            ty,
            description,
            self.owner(),
        )
    }

    fn emit(
        &mut self,
        store: &mut SocialStore,
        key: &str,
        act_type: ActType,
        ty: InteractionType,
        slots: &[(&str, &str)],
    ) -> Result<DialogueAct, DialogueError> {
        let (text, expects) = self.engine.templates.render(key, slots);
        let rec = self.record(ty, &text).with_flag(flags::ROBOT_ACT, true);
        self.log(store, rec)?;
        self.state.turn_count += 1;
        let act = DialogueAct {
            act_type,
            text,
            expects,
        };
        self.acts.push(act.clone());
        Ok(act)
    }

    /// An act that expects no reply.
    fn say(
        &mut self,
        store: &mut SocialStore,
        key: &str,
        act_type: ActType,
        ty: InteractionType,
        slots: &[(&str, &str)],
    ) -> Result<(), DialogueError> {
        self.emit(store, key, act_type, ty, slots).map(|_| ())
    }

    /// An act that becomes the pending one.
    fn ask(
        &mut self,
        store: &mut SocialStore,
        key: &str,
        act_type: ActType,
        ty: InteractionType,
        slots: &[(&str, &str)],
        topic: Option<Topic>,
    ) -> Result<(), DialogueError> {
        let act = self.emit(store, key, act_type, ty, slots)?;
        self.state.pending = (act.expects != Expects::None).then_some(PendingAct {
            act_type,
            expects: act.expects,
            topic,
        });
        Ok(())
    }

    fn log_reply(
        &mut self,
        store: &mut SocialStore,
        ty: InteractionType,
        description: &str,
        decorate: impl FnOnce(InteractionRecord) -> InteractionRecord,
    ) -> Result<(), DialogueError> {
        let rec = self
            .record(ty, description)
            .with_flag(flags::ROBOT_ACT, false);
        let rec = decorate(rec);
        self.log(store, rec)
    }

    fn enter_naming(&mut self, store: &mut SocialStore) -> Result<(), DialogueError> {
        self.state.candidate = None;
        self.state.phase = Phase::Naming;
        self.ask(
            store,
            "ask_name",
            ActType::AskName,
            InteractionType::NameLearned,
            &[],
            None,
        )
    }

    /// Binds the session to `who`, logs the confirmation and the robot's
    /// "interacting with" status, and enters small talk.
    fn accept(
        &mut self,
        store: &mut SocialStore,
        who: PersonId,
        ty: InteractionType,
    ) -> Result<(), DialogueError> {
        let person = store.person(&who)?;
        self.state.since = store
            .last_encounter(&who)?
            .map(|(_, ts)| ts)
            .unwrap_or(i64::MIN);
        self.state.user = Some(who);
        self.state.candidate = None;
        let description = if ty == InteractionType::NameLearned {
            format!("name: {}", person.name)
        } else {
            "reply: yes".to_string()
        };
        self.log_reply(store, ty, &description, |r| {
            r.with_flag(flags::CONFIRMED, true)
                .with_flag(flags::TRAINING_CAPTURE, true)
        })?;
        let (status, _) = self
            .engine
            .templates
            .render("msg_status", &[("name", &person.name)]);
        let rec = self
            .record(InteractionType::Confirm, &status)
            .with_flag(flags::ROBOT_ACT, true)
            .with_flag(flags::STATUS_POSTED, true);
        let ts = rec.timestamp;
        self.log(store, rec)?;
        store.append_outbox(OutboxMessage {
            to: self.engine.ctx.robot_id.clone(),
            text: status,
            timestamp: ts,
            channel: OutboxChannel::Message,
        })?;
        self.state.phase = Phase::SmallTalk;
        Ok(())
    }

    /// Emits the next topic act, or moves to Closing when none is left.
    fn next_topic(&mut self, store: &mut SocialStore) -> Result<(), DialogueError> {
        let Some(topic) = self.engine.select_topic(store, &self.state) else {
            self.state.phase = Phase::Closing;
            return Ok(());
        };
        self.state.topics_used.insert(topic.kind);
        let user = store.person(self.state.user.as_ref().expect("user set in small talk"))?;
        let first = user.first_name().to_string();
        let (act_type, ty, key) = topic_act(topic.kind);
        let mut friend = String::new();
        let mut extra = String::new();
        let extra_slot = match &topic.payload {
            TopicPayload::Status {
                person_id, text, ..
            } => {
                friend = store.person(person_id)?.name;
                extra.clone_from(text);
                "status"
            }
            TopicPayload::Photo { owner, .. } => {
                friend = store.person(owner)?.name;
                "status"
            }
            TopicPayload::Encounter {
                friend: f,
                timestamp,
                ..
            } => {
                friend = store.person(f)?.name;
                extra = ago(self.now - timestamp);
                "ago"
            }
            TopicPayload::OnlineFriend { friend: f } => {
                friend = store.person(f)?.name;
                "status"
            }
            TopicPayload::Text { item } => {
                extra.clone_from(item);
                "item"
            }
        };
        let friend_first = first_name(&friend).to_string();
        let slots = [
            ("first", first.as_str()),
            ("friend", friend.as_str()),
            ("friend_first", friend_first.as_str()),
            (extra_slot, extra.as_str()),
        ];
        self.ask(store, key, act_type, ty, &slots, Some(topic.clone()))?;
        if self.state.pending.is_none() {
            // a reply-less topic act chains straight to the next topic
            self.next_topic(store)?;
        }
        Ok(())
    }

    fn small_talk_reply(
        &mut self,
        store: &mut SocialStore,
        pending: &PendingAct,
        topic: &Topic,
        reply: &Reply,
    ) -> Result<(), DialogueError> {
        let (_, ty, _) = topic_act(topic.kind);
        let description = match reply {
            Reply::FreeText(t) => format!("reply: {t}"),
            other => format!("reply: {}", other.kind_name()),
        };
        self.log_reply(store, ty, &description, |r| r)?;
        let user_id = self.state.user.clone().expect("user set in small talk");
        let user = store.person(&user_id)?;
        let first = user.first_name().to_string();

        match (pending.act_type, reply, &topic.payload) {
            (ActType::OfferConnect, Reply::Yes, TopicPayload::OnlineFriend { friend }) => {
                let friend = store.person(friend)?;
                let (text, _) = self.engine.templates.render(
                    "msg_connect",
                    &[
                        ("friend_first", friend.first_name()),
                        ("user_first", &first),
                        ("friend", &friend.name),
                        ("user", &user.name),
                    ],
                );
                let ts = self.state.clock;
                store.append_outbox(OutboxMessage {
                    to: friend.id.clone(),
                    text,
                    timestamp: ts,
                    channel: OutboxChannel::Chat,
                })?;
                let (ack, expects) = self.engine.templates.render(
                    "connect_sent",
                    &[
                        ("friend", &friend.name),
                        ("friend_first", friend.first_name()),
                    ],
                );
                let rec = self
                    .record(InteractionType::ConnectOnline, &ack)
                    .with_flag(flags::ROBOT_ACT, true)
                    .with_flag(flags::MESSAGE_SENT, true);
                self.log(store, rec)?;
                self.state.turn_count += 1;
                self.acts.push(DialogueAct {
                    act_type: ActType::Acknowledge,
                    text: ack,
                    expects,
                });
            }
            (_, Reply::No, _)
                if matches!(
                    topic.kind,
                    TopicKind::MutualFriendStatus
                        | TopicKind::NewPhotoPost
                        | TopicKind::GeneralNews
                ) =>
            {
                let topic_text = self
                    .acts_text_of_pending(store)
                    .unwrap_or_else(|| format!("{:?}", topic.kind));
                let (note, _) = self
                    .engine
                    .templates
                    .render("msg_reminder", &[("first", &first), ("topic", &topic_text)]);
                store.append_outbox(OutboxMessage {
                    to: user_id,
                    text: note,
                    timestamp: self.state.clock,
                    channel: OutboxChannel::Message,
                })?;
                self.say(
                    store,
                    "send_reminder",
                    ActType::SendReminder,
                    InteractionType::Reminder,
                    &[("first", &first)],
                )?;
            }
            (_, Reply::Yes, _) => self.say(
                store,
                "ack_yes",
                ActType::Acknowledge,
                ty,
                &[("first", &first)],
            )?,
            (_, Reply::No, _) => self.say(
                store,
                "ack_no",
                ActType::Acknowledge,
                ty,
                &[("first", &first)],
            )?,
            _ => self.say(
                store,
                "ack_text",
                ActType::Acknowledge,
                ty,
                &[("first", &first)],
            )?,
        }
        Ok(())
    }

    /// Text of the most recent robot act in this session, used as the body
    /// of a reminder note.
    fn acts_text_of_pending(&self, store: &SocialStore) -> Option<String> {
        store
            .session_records(&self.state.session_id)
            .into_iter()
            .rev()
            .find(|r| r.flags.get(flags::ROBOT_ACT) == Some(&true))
            .map(|r| r.description)
    }
}
