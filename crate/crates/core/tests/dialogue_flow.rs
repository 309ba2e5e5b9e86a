use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sociface_core::dialogue::{
    demo_decision, demo_engine, demo_store, run_scripted, ActType, DialogueContext, DialogueEngine,
    DialogueError, Expects, Phase, Reply, ScriptedReplies, TemplateTable, TopicKind, DEMO_NOW,
};
use sociface_core::harness::synthetic_store;
use sociface_core::recognizer::Decision;
use sociface_core::socialstore::{
    flags, InteractionType, Person, PersonId, SocialStore, StatusPost,
};

fn pid(s: &str) -> PersonId {
    PersonId::new(s)
}

fn identified(best: &str, second: Option<&str>) -> Decision {
    Decision::Identified {
        best: pid(best),
        second: second.map(pid),
    }
}

#[test]
fn identified_start_greets_and_asks_to_confirm_by_name() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (state, acts) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    assert_eq!(acts.len(), 2);
    assert_eq!(acts[0].act_type, ActType::Greet);
    assert_eq!(acts[1].act_type, ActType::ConfirmIdentity);
    assert!(acts[1].text.contains("Dana Voss"));
    assert_eq!(acts[1].expects, Expects::YesNo);
    assert_eq!(state.phase, Phase::Confirming);
    assert_eq!(state.turn_count, 2);
    let recs = store.session_records(&state.session_id);
    assert_eq!(recs[0].interaction_type, InteractionType::Greeting);
    assert!(acts.iter().all(|a| !a.text.is_empty()));
}

#[test]
fn unknown_start_asks_for_a_name() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (state, acts) = engine
        .start_session(&mut store, &Decision::Unknown, DEMO_NOW)
        .unwrap();
    assert_eq!(acts.last().unwrap().act_type, ActType::AskName);
    assert_eq!(acts.last().unwrap().expects, Expects::Name);
    assert_eq!(state.phase, Phase::Naming);
    assert_eq!(state.user, None);
}

#[test]
fn provisional_decision_is_refused() {
    let engine = demo_engine();
    let mut store = demo_store();
    let before = store.interactions().len();
    let r = engine.start_session(
        &mut store,
        &Decision::Provisional { best: pid("dana") },
        DEMO_NOW,
    );
    assert!(matches!(r, Err(DialogueError::Provisional)));
    assert_eq!(store.interactions().len(), before);
}

#[test]
fn two_starts_get_distinct_session_ids() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (a, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let (b, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    assert_ne!(a.session_id, b.session_id);
    let explicit =
        engine.start_session_with_id(&mut store, &demo_decision(), a.session_id.clone(), DEMO_NOW);
    assert!(matches!(explicit, Err(DialogueError::DuplicateSession(_))));
}

#[test]
fn denial_walks_second_guess_then_naming() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::No, DEMO_NOW + 1)
        .unwrap();
    assert_eq!(acts.len(), 1);
    assert_eq!(acts[0].act_type, ActType::SecondGuess);
    assert!(acts[0].text.contains("Milo Hart"));
    assert_eq!(st.phase, Phase::SecondGuessing);

    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::No, DEMO_NOW + 2)
        .unwrap();
    assert_eq!(acts[0].act_type, ActType::AskName);
    assert_eq!(st.phase, Phase::Naming);

    let acts = engine
        .handle_reply(
            &mut store,
            &mut st,
            Reply::Name("Quinn Ashby".into()),
            DEMO_NOW + 3,
        )
        .unwrap();
    assert_eq!(acts[0].act_type, ActType::Acknowledge);
    assert!(acts[0].text.contains("Quinn"));
    let quinn = store.find_by_name("Quinn Ashby").expect("person created");
    assert_eq!(st.user.as_ref(), Some(&quinn));
    let learned = store
        .session_records(&st.session_id)
        .into_iter()
        .find(|r| r.interaction_type == InteractionType::NameLearned && r.user_id == quinn)
        .unwrap();
    assert_eq!(learned.flags.get(flags::TRAINING_CAPTURE), Some(&true));
    // a stranger has no social data, so small talk is already exhausted
    assert_eq!(st.phase, Phase::Closing);
    // the rejected guesses keep no records
    assert!(store.interactions_for(&pid("dana")).unwrap().is_empty());
    assert!(store.interactions_for(&pid("milo")).unwrap().is_empty());
}

#[test]
fn second_guess_accepted_binds_the_runner_up() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    engine
        .handle_reply(&mut store, &mut st, Reply::No, DEMO_NOW + 1)
        .unwrap();
    engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 2)
        .unwrap();
    assert_eq!(st.user, Some(pid("milo")));
}

#[test]
fn denial_without_runner_up_goes_straight_to_naming() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &identified("dana", None), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::No, DEMO_NOW + 1)
        .unwrap();
    assert_eq!(acts[0].act_type, ActType::AskName);
}

#[test]
fn confirmation_logs_and_posts_the_interacting_status() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 1)
        .unwrap();
    assert_eq!(st.phase, Phase::SmallTalk);
    assert_eq!(acts[0].act_type, ActType::StatusComment);
    assert!(acts[0].text.contains("sailboat"));
    let status = store
        .interactions_for(&pid("dana"))
        .unwrap()
        .into_iter()
        .find(|r| r.flags.get(flags::STATUS_POSTED) == Some(&true))
        .unwrap();
    assert!(status.description.contains("interacting with Dana Voss"));
    assert_eq!(store.outbox().len(), 1);
    assert_eq!(store.outbox()[0].to, pid("robot"));
}

#[test]
fn mismatched_reply_leaves_state_and_store_untouched() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let (before_state, before_log) = (st.clone(), store.interactions().to_vec());
    let r = engine.handle_reply(
        &mut store,
        &mut st,
        Reply::Name("Dana".into()),
        DEMO_NOW + 1,
    );
    assert!(matches!(r, Err(DialogueError::UnexpectedReply { .. })));
    let r = engine.handle_reply(
        &mut store,
        &mut st,
        Reply::FreeText("hm".into()),
        DEMO_NOW + 1,
    );
    assert!(matches!(r, Err(DialogueError::UnexpectedReply { .. })));
    assert_eq!(st, before_state);
    assert_eq!(store.interactions(), before_log.as_slice());
}

#[test]
fn reply_without_pending_act_is_rejected() {
    let mut store = SocialStore::new();
    store
        .upsert_person(Person::new("robot", "Sociface Robot"))
        .unwrap();
    store.upsert_person(Person::new("lee", "Lee Park")).unwrap();
    let engine = DialogueEngine::new(
        TemplateTable::embedded(),
        DialogueContext::new(pid("robot")),
    );
    let (mut st, _) = engine
        .start_session(&mut store, &identified("lee", None), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 1)
        .unwrap();
    assert!(acts.is_empty());
    assert_eq!(st.phase, Phase::Closing);
    assert!(matches!(
        engine.handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 2),
        Err(DialogueError::NoPendingAct)
    ));
    engine
        .end_session(&mut store, &mut st, DEMO_NOW + 3)
        .unwrap();
    assert!(matches!(
        engine.handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 4),
        Err(DialogueError::SessionDone(_))
    ));
}

#[test]
fn second_visit_only_discusses_news_since_the_last_encounter() {
    let engine = demo_engine();
    let mut store = demo_store();
    run_scripted(
        &engine,
        &mut store,
        &demo_decision(),
        &ScriptedReplies::default(),
        DEMO_NOW,
    )
    .unwrap();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW + 86_400)
        .unwrap();
    engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 86_401)
        .unwrap();
    let topic = engine.select_topic(&store, &st);
    // own status and the photo predate the first visit; the shared friend
    // was not met, so the online friend is next
    assert!(st.topics_used.contains(&TopicKind::OnlineFriendConnect));
    assert!(!st.topics_used.contains(&TopicKind::OwnStatus));
    assert!(!st.topics_used.contains(&TopicKind::NewPhotoPost));
    assert!(topic.is_none());
}

#[test]
fn fresh_own_status_is_commented_on() {
    let engine = demo_engine();
    let mut store = demo_store();
    store
        .add_status(StatusPost {
            person_id: pid("dana"),
            text: "teaching a parrot to whistle".into(),
            timestamp: DEMO_NOW - 10,
        })
        .unwrap();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 1)
        .unwrap();
    assert_eq!(acts[0].act_type, ActType::StatusComment);
    assert!(acts[0].text.contains("teaching a parrot to whistle"));
}

#[test]
fn empty_store_falls_back_to_news_then_exhausts() {
    let mut store = SocialStore::new();
    store
        .upsert_person(Person::new("robot", "Sociface Robot"))
        .unwrap();
    store.upsert_person(Person::new("lee", "Lee Park")).unwrap();
    let ctx = DialogueContext::new(pid("robot")).with_news_text("\nTides ran unusually high\n\n");
    let engine = DialogueEngine::new(TemplateTable::embedded(), ctx);
    let (mut st, _) = engine
        .start_session(&mut store, &identified("lee", None), DEMO_NOW)
        .unwrap();
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 1)
        .unwrap();
    assert_eq!(acts[0].act_type, ActType::NewsItem);
    assert!(acts[0].text.contains("Tides ran unusually high"));
    assert_eq!(st.topics_used, BTreeSet::from([TopicKind::GeneralNews]));
    let acts = engine
        .handle_reply(&mut store, &mut st, Reply::Yes, DEMO_NOW + 2)
        .unwrap();
    assert_eq!(acts.len(), 1);
    assert_eq!(st.phase, Phase::Closing);
    assert!(engine.select_topic(&store, &st).is_none());
}

#[test]
fn close_during_naming_says_goodbye_without_a_name() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &Decision::Unknown, DEMO_NOW)
        .unwrap();
    let bye = engine
        .end_session(&mut store, &mut st, DEMO_NOW + 3)
        .unwrap();
    assert_eq!(bye.act_type, ActType::Farewell);
    assert!(!bye.text.contains("{"));
    assert_eq!(st.phase, Phase::Done);
    assert!(matches!(
        engine.end_session(&mut store, &mut st, DEMO_NOW + 4),
        Err(DialogueError::SessionDone(_))
    ));
}

#[test]
fn normal_close_names_the_user() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (t, _) = run_scripted(
        &engine,
        &mut store,
        &demo_decision(),
        &ScriptedReplies::default(),
        DEMO_NOW,
    )
    .unwrap();
    let last = t.lines.last().unwrap();
    assert_eq!(last.act_type, Some(ActType::Farewell));
    assert!(last.text.contains("Dana"));
}

#[test]
fn offer_connect_accept_appends_one_message_naming_both() {
    let engine = demo_engine();
    let mut store = demo_store();
    let (mut st, _) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    let mut now = DEMO_NOW;
    let mut reply = Reply::Yes;
    loop {
        now += 1;
        let pending = st.pending.clone().expect("offer comes before exhaustion");
        if pending.act_type == ActType::OfferConnect {
            let before = store.outbox().len();
            engine
                .handle_reply(&mut store, &mut st, Reply::Yes, now)
                .unwrap();
            assert_eq!(store.outbox().len(), before + 1);
            let msg = store.outbox().last().unwrap();
            assert_eq!(msg.to, pid("theo"));
            assert!(msg.text.contains("Theo") && msg.text.contains("Dana"));
            break;
        }
        engine
            .handle_reply(&mut store, &mut st, reply.clone(), now)
            .unwrap();
        reply = Reply::Yes;
    }
}

#[test]
fn offer_connect_decline_sends_nothing() {
    let engine = demo_engine();
    let mut store = demo_store();
    let script = ScriptedReplies {
        first_topic_yes: false,
        ..ScriptedReplies::default()
    };
    run_scripted(&engine, &mut store, &demo_decision(), &script, DEMO_NOW).unwrap();
    assert!(store.outbox().iter().all(|m| m.to != pid("theo")));
}

/// Robot plus a random network, the robot befriending about half of it.
fn random_world(seed: u64) -> (SocialStore, DialogueEngine, Decision) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..12);
    let mut store = synthetic_store(seed, n);
    store
        .upsert_person(Person::new("robot", "Sociface Robot"))
        .unwrap();
    for p in store.persons() {
        if p.id != pid("robot") && rng.random_bool(0.5) {
            store.add_friendship(&pid("robot"), &p.id).unwrap();
        }
    }
    let mut ctx = DialogueContext::new(pid("robot"));
    if rng.random_bool(0.6) {
        ctx.news = vec!["a comet is visible tonight".into()];
    }
    if rng.random_bool(0.6) {
        ctx.prescripted = vec!["What are you working on these days?".into()];
    }
    let best = format!("u{:03}", rng.random_range(0..n));
    let second = format!("u{:03}", rng.random_range(0..n));
    let decision = match rng.random_range(0..3) {
        0 => Decision::Unknown,
        _ => identified(&best, Some(&second)),
    };
    (
        store,
        DialogueEngine::new(TemplateTable::embedded(), ctx),
        decision,
    )
}

#[test]
fn randomized_sessions_keep_their_invariants() {
    for seed in 0..200u64 {
        let (mut store, engine, decision) = random_world(seed);
        let script = ScriptedReplies {
            confirm: vec![seed % 3 != 0, seed % 2 == 0],
            first_topic_yes: seed % 2 == 0,
            ..ScriptedReplies::default()
        };
        let snapshot = store.clone();
        let (t, st) = run_scripted(&engine, &mut store, &decision, &script, DEMO_NOW).unwrap();

        let kinds: Vec<ActType> = t.act_types();
        assert_eq!(st.turn_count, kinds.len());
        let recs = store.session_records(&st.session_id);
        assert!(recs.len() >= kinds.len(), "seed {seed}");
        let robot_recs = recs
            .iter()
            .filter(|r| r.flags.get(flags::ROBOT_ACT) == Some(&true))
            .count();
        // robot records = acts + the "interacting with" status post
        assert!(robot_recs >= kinds.len());
        assert!(recs.windows(2).all(|w| w[0].timestamp < w[1].timestamp));

        // the session's records sit contiguously in the log
        let positions: Vec<usize> = store
            .interactions()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.session_id == st.session_id)
            .map(|(i, _)| i)
            .collect();
        assert!(
            positions.windows(2).all(|w| w[1] == w[0] + 1),
            "seed {seed}"
        );

        let used: Vec<TopicKind> = st.topics_used.iter().copied().collect();
        let topic_acts = kinds
            .iter()
            .filter(|k| {
                matches!(
                    k,
                    ActType::StatusComment
                        | ActType::MutualFriendNews
                        | ActType::PastEncounterRef
                        | ActType::OfferConnect
                        | ActType::NewsItem
                        | ActType::QueryState
                )
            })
            .count();
        assert_eq!(
            topic_acts,
            used.len(),
            "seed {seed}: each kind at most once"
        );

        let mut again = snapshot.clone();
        let engine2 = DialogueEngine::new(TemplateTable::embedded(), engine.context().clone());
        let (t2, _) = run_scripted(&engine2, &mut again, &decision, &script, DEMO_NOW).unwrap();
        assert_eq!(t.to_string(), t2.to_string(), "seed {seed}");
        assert_eq!(store.to_json(), again.to_json(), "seed {seed}");
    }
}

#[test]
fn default_demo_is_nine_turns_and_deterministic() {
    let run = || {
        let engine = demo_engine();
        let mut store = demo_store();
        let (t, _) = run_scripted(
            &engine,
            &mut store,
            &demo_decision(),
            &ScriptedReplies::default(),
            DEMO_NOW,
        )
        .unwrap();
        (t, store)
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(sa.to_json(), sb.to_json());
    assert!((8..=10).contains(&a.robot_turns()));
    assert_eq!(a.robot_turns(), 9);
}

#[test]
fn template_file_can_replace_the_wording() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let text = include_str!("../data/templates.json").replace("Hello there!", "Ahoy!");
    std::fs::write(&path, text).unwrap();
    let table = TemplateTable::load(&path).unwrap();
    let engine = DialogueEngine::new(table, DialogueContext::new(pid("robot")));
    let mut store = demo_store();
    let (_, acts) = engine
        .start_session(&mut store, &demo_decision(), DEMO_NOW)
        .unwrap();
    assert_eq!(acts[0].text, "Ahoy!");
}
