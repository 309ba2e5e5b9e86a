use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use sociface_core::dialogue::{
    DialogueAct, DialogueContext, DialogueEngine, SessionState, TemplateTable,
};
use sociface_core::harness::{identity_id, Corpus, ExperimentConfig};
use sociface_core::recognizer::{Decision, DecisionPolicy, EvidenceWindow, Registry};
use sociface_core::socialstore::{Person, PersonId, SocialStore, StatusPost};

use crate::error::ApiError;

/// Time source for record timestamps. `Manual` makes responses reproducible.
#[derive(Debug, Clone)]
pub enum Clock {
    System,
    Manual(Arc<AtomicI64>),
}

impl Clock {
    pub fn manual(start: i64) -> Self {
        Clock::Manual(Arc::new(AtomicI64::new(start)))
    }

    pub fn now(&self) -> i64 {
        match self {
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0),
            Clock::Manual(t) => t.load(Ordering::SeqCst),
        }
    }

    /// No-op for the system clock.
    pub fn advance(&self, secs: i64) {
        if let Clock::Manual(t) = self {
            t.fetch_add(secs, Ordering::SeqCst);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Policy for sessions created without overrides.
    pub policy: DecisionPolicy,
    pub report_dir: PathBuf,
    /// When set, the store is saved here after every write.
    pub store_path: Option<PathBuf>,
    pub experiments: ExperimentConfig,
    pub dialogue: DialogueContext,
    pub clock: Clock,
}

impl ServiceConfig {
    pub fn new(report_dir: impl Into<PathBuf>) -> Self {
        Self {
            policy: DecisionPolicy::default(),
            report_dir: report_dir.into(),
            store_path: None,
            experiments: ExperimentConfig::default(),
            dialogue: DialogueContext::new(PersonId::new(ROBOT_ID)),
            clock: Clock::System,
        }
    }
}

pub const ROBOT_ID: &str = "robot";

const NAMES: [&str; 8] = [
    "Dana Voss",
    "Milo Hart",
    "Ines Calder",
    "Theo Brandt",
    "Rowan Pike",
    "Lena Ortiz",
    "Yusuf Amar",
    "Greta Lind",
];

/// Social world whose persons are the corpus identities: the robot, one
/// person per enrolled identity, a friendship chain and one status post.
pub fn corpus_world(corpus: &Corpus, now: i64) -> SocialStore {
    let mut s = SocialStore::new();
    s.upsert_person(Person::new(ROBOT_ID, "Sociface Robot"))
        .expect("robot entry");
    let n = corpus.spec().n_identities;
    for i in 0..n {
        let base = NAMES[i % NAMES.len()];
        let name = if i < NAMES.len() {
            base.to_string()
        } else {
            format!("{base} {}", i / NAMES.len() + 1)
        };
        let mut p = Person::new(identity_id(i).as_str(), name);
        p.online = i % 3 == 2;
        s.upsert_person(p).expect("corpus person");
    }
    let robot = PersonId::new(ROBOT_ID);
    for i in 0..n {
        if i % 2 == 0 {
            s.add_friendship(&robot, &identity_id(i))
                .expect("robot edge");
        }
        if i + 1 < n {
            s.add_friendship(&identity_id(i), &identity_id(i + 1))
                .expect("chain edge");
        }
    }
    if n > 0 {
        s.add_status(StatusPost {
            person_id: identity_id(0),
            text: "back from a week of hiking".into(),
            timestamp: now - 3600,
        })
        .expect("status");
    }
    s
}

/// One recognition-plus-dialogue encounter.
#[derive(Debug)]
pub struct SessionHandle {
    pub session_id: String,
    pub created_at: i64,
    pub policy: DecisionPolicy,
    pub window: EvidenceWindow,
    /// Frames received, including skin-gate rejections.
    pub frames_received: usize,
    pub decision: Option<Decision>,
    pub dialogue: Option<SessionState>,
    /// Every act emitted so far, in order.
    pub transcript: Vec<DialogueAct>,
}

pub(crate) struct Inner {
    pub config: ServiceConfig,
    pub corpus: Arc<Corpus>,
    pub registry: Arc<Registry>,
    pub engine: DialogueEngine,
    pub store: Mutex<SocialStore>,
    pub sessions: RwLock<HashMap<String, Arc<tokio::sync::Mutex<SessionHandle>>>>,
}

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    pub fn new(
        config: ServiceConfig,
        corpus: Arc<Corpus>,
        registry: Arc<Registry>,
        store: SocialStore,
    ) -> Self {
        let engine = DialogueEngine::new(TemplateTable::embedded(), config.dialogue.clone());
        Self(Arc::new(Inner {
            config,
            corpus,
            registry,
            engine,
            store: Mutex::new(store),
            sessions: RwLock::new(HashMap::new()),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.0.corpus
    }

    pub fn registry(&self) -> &Registry {
        &self.0.registry
    }

    /// Snapshot of the store.
    pub fn store_snapshot(&self) -> SocialStore {
        self.store().clone()
    }

    pub(crate) fn store(&self) -> MutexGuard<'_, SocialStore> {
        // a panic mid-write cannot leave a half-applied change: every store
        // mutation validates before touching state
        self.0.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub(crate) fn now(&self) -> i64 {
        self.0.config.clock.now()
    }

    pub(crate) fn persist(&self, store: &SocialStore) -> Result<(), ApiError> {
        match &self.0.config.store_path {
            Some(p) => store
                .save(p)
                .map_err(|e| ApiError::internal(format!("saving store: {e}"))),
            None => Ok(()),
        }
    }

    pub(crate) fn session(
        &self,
        id: &str,
    ) -> Result<Arc<tokio::sync::Mutex<SessionHandle>>, ApiError> {
        self.0
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session '{id}'")))
    }

    pub(crate) fn insert_session(&self, handle: SessionHandle) {
        let id = handle.session_id.clone();
        self.0
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::new(tokio::sync::Mutex::new(handle)));
    }
}
