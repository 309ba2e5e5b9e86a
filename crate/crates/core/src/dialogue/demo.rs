use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    ActType, DialogueContext, DialogueEngine, DialogueError, Expects, Phase, Reply, SessionState,
    TemplateTable,
};
use crate::recognizer::Decision;
use crate::socialstore::{Person, PersonId, Photo, SocialStore, StatusPost};

/// Fixed clock for the demo so its records are reproducible.
pub const DEMO_NOW: i64 = 1_700_000_000;

/// Seconds between scripted steps.
const STEP: i64 = 5;

/// Hard stop for scripts that never run out of topics.
const MAX_REPLIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Robot,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub speaker: Speaker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act_type: Option<ActType>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub lines: Vec<TranscriptLine>,
}

impl Transcript {
    pub fn robot_turns(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| l.speaker == Speaker::Robot)
            .count()
    }

    pub fn act_types(&self) -> Vec<ActType> {
        self.lines.iter().filter_map(|l| l.act_type).collect()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            match l.speaker {
                Speaker::Robot => writeln!(f, "ROBOT: {}", l.text)?,
                Speaker::Human => writeln!(f, "HUMAN: {}", l.text)?,
            }
        }
        Ok(())
    }
}

/// How the simulated human answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedReplies {
    /// Answers to ConfirmIdentity then SecondGuess; missing entries mean yes.
    pub confirm: Vec<bool>,
    pub name: String,
    /// Small-talk yes/no answers alternate starting from this value.
    pub first_topic_yes: bool,
    pub free_text: String,
}

impl Default for ScriptedReplies {
    fn default() -> Self {
        Self {
            confirm: vec![true],
            name: "Rowan Pike".into(),
            first_topic_yes: true,
            free_text: "Pretty well, thanks.".into(),
        }
    }
}

/// Runs one full session against `store` and closes it.
pub fn run_scripted(
    engine: &DialogueEngine,
    store: &mut SocialStore,
    decision: &Decision,
    script: &ScriptedReplies,
    start: i64,
) -> Result<(Transcript, SessionState), DialogueError> {
    let mut now = start;
    let (mut state, acts) = engine.start_session(store, decision, now)?;
    let mut lines: Vec<TranscriptLine> = Vec::new();
    let robot = |lines: &mut Vec<TranscriptLine>, acts: Vec<super::DialogueAct>| {
        lines.extend(acts.into_iter().map(|a| TranscriptLine {
            speaker: Speaker::Robot,
            act_type: Some(a.act_type),
            text: a.text,
        }))
    };
    robot(&mut lines, acts);
    let mut confirms = script.confirm.iter().copied();
    let mut topic_yes = script.first_topic_yes;
    for _ in 0..MAX_REPLIES {
        let Some(pending) = state.pending.clone() else {
            break;
        };
        let reply = match pending.expects {
            Expects::YesNo if matches!(state.phase, Phase::Confirming | Phase::SecondGuessing) => {
                if confirms.next().unwrap_or(true) {
                    Reply::Yes
                } else {
                    Reply::No
                }
            }
            Expects::YesNo => {
                let r = if topic_yes { Reply::Yes } else { Reply::No };
                topic_yes = !topic_yes;
                r
            }
            Expects::Name => Reply::Name(script.name.clone()),
            Expects::FreeText => Reply::FreeText(script.free_text.clone()),
            Expects::None => break,
        };
        lines.push(TranscriptLine {
            speaker: Speaker::Human,
            act_type: None,
            text: match &reply {
                Reply::Yes => "Yes.".into(),
                Reply::No => "No.".into(),
                Reply::Name(n) | Reply::FreeText(n) => n.clone(),
            },
        });
        now += STEP;
        let acts = engine.handle_reply(store, &mut state, reply, now)?;
        robot(&mut lines, acts);
    }
    now += STEP;
    let bye = engine.end_session(store, &mut state, now)?;
    robot(&mut lines, vec![bye]);
    Ok((
        Transcript {
            session_id: state.session_id.clone(),
            lines,
        },
        state,
    ))
}

fn pid(s: &str) -> PersonId {
    PersonId::new(s)
}

/// Small fictional network: the robot, the visitor `dana`, a runner-up
/// `milo`, a shared friend `ines` with a fresh photo, and `theo`, a friend of
/// the visitor who is online.
pub fn demo_store() -> SocialStore {
    let mut s = SocialStore::new();
    let add = |s: &mut SocialStore, id: &str, name: &str, online: bool| {
        let mut p = Person::new(id, name);
        p.online = online;
        s.upsert_person(p).expect("demo person");
    };
    add(&mut s, "robot", "Sociface Robot", false);
    add(&mut s, "dana", "Dana Voss", false);
    add(&mut s, "milo", "Milo Hart", false);
    add(&mut s, "ines", "Ines Calder", false);
    add(&mut s, "theo", "Theo Brandt", true);
    for (a, b) in [
        ("robot", "dana"),
        ("robot", "milo"),
        ("robot", "ines"),
        ("dana", "ines"),
        ("dana", "theo"),
    ] {
        s.add_friendship(&pid(a), &pid(b)).expect("demo edge");
    }
    s.add_status(StatusPost {
        person_id: pid("dana"),
        text: "rebuilding an old sailboat in the garage".into(),
        timestamp: DEMO_NOW - 3_600,
    })
    .expect("demo status");
    s.upsert_photo(Photo {
        photo_id: "ines-harbor".into(),
        owner: Some(pid("ines")),
        timestamp: DEMO_NOW - 7_200,
        detections: Vec::new(),
        tags: Vec::new(),
    })
    .expect("demo photo");
    s
}

pub fn demo_decision() -> Decision {
    Decision::Identified {
        best: pid("dana"),
        second: Some(pid("milo")),
    }
}

pub fn demo_engine() -> DialogueEngine {
    DialogueEngine::new(
        TemplateTable::embedded(),
        DialogueContext::new(pid("robot")),
    )
}
