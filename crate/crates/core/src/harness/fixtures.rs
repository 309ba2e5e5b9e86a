use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::facekit::{FaceRect, Pose};
use crate::socialstore::{
    EventItem, InteractionRecord, InteractionType, OutboxChannel, OutboxMessage, Person, PersonId,
    Photo, PhotoTag, SocialStore, StatusPost,
};

const KINDS: [InteractionType; 6] = [
    InteractionType::Greeting,
    InteractionType::Confirm,
    InteractionType::StatusComment,
    InteractionType::NewsItem,
    InteractionType::Reminder,
    InteractionType::Farewell,
];

/// Seeded random store exercising every table: persons with mixed flags,
/// edges, per-person monotone status feeds, events, tagged photos, sessions
/// of strictly increasing records, and outbox entries.
pub fn synthetic_store(seed: u64, persons: usize) -> SocialStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SocialStore::new();
    let ids: Vec<PersonId> = (0..persons)
        .map(|i| PersonId::new(format!("u{i:03}")))
        .collect();
    for (i, id) in ids.iter().enumerate() {
        let mut p = Person::new(id.as_str(), format!("Person {i} {}", seed % 97));
        p.online = rng.random_bool(0.3);
        p.on_facebook = rng.random_bool(0.8);
        p.friends_visible = rng.random_bool(0.8);
        if rng.random_bool(0.5) {
            p.info.hometown = Some(format!("Town {}", rng.random_range(0..20)));
        }
        s.upsert_person(p).expect("fresh person");
    }
    if persons < 2 {
        return s;
    }
    for _ in 0..persons * 2 {
        let a = rng.random_range(0..persons);
        let b = rng.random_range(0..persons);
        if a != b {
            s.add_friendship(&ids[a], &ids[b]).expect("valid edge");
        }
    }
    for id in &ids {
        let mut ts = 1_000 + rng.random_range(0..100);
        for k in 0..rng.random_range(0..4) {
            s.add_status(StatusPost {
                person_id: id.clone(),
                text: format!("update {k}"),
                timestamp: ts,
            })
            .expect("monotone feed");
            ts += rng.random_range(0..50);
        }
        if rng.random_bool(0.3) {
            s.add_event(EventItem {
                person_id: id.clone(),
                title: "meetup".into(),
                timestamp: rng.random_range(0..5_000),
            })
            .expect("valid event");
        }
    }
    for p in 0..rng.random_range(0..persons) {
        let dets: Vec<FaceRect> = (0..rng.random_range(0..4))
            .map(|k| {
                let pose = if rng.random_bool(0.3) {
                    Pose::Profile
                } else {
                    Pose::Frontal
                };
                FaceRect::new(k * 40, 10, 30, 30, pose)
            })
            .collect();
        let tags = (0..rng.random_range(0..4))
            .map(|_| PhotoTag {
                person_id: ids[rng.random_range(0..persons)].clone(),
                cx: rng.random_range(0.0..160.0),
                cy: rng.random_range(0.0..60.0),
                outcome: None,
            })
            .collect();
        s.upsert_photo(Photo {
            photo_id: format!("ph{p}"),
            owner: rng
                .random_bool(0.7)
                .then(|| ids[rng.random_range(0..persons)].clone()),
            timestamp: rng.random_range(0..5_000),
            detections: dets,
            tags,
        })
        .expect("valid photo");
    }
    for sess in 0..rng.random_range(0..persons) {
        let user = ids[rng.random_range(0..persons)].clone();
        let mut ts = rng.random_range(0..10_000);
        for _ in 0..rng.random_range(1..6) {
            let kind = KINDS[rng.random_range(0..KINDS.len())];
            s.record_interaction(
                InteractionRecord::new(ts, format!("s{sess}"), kind, "event", user.clone())
                    .with_flag("confirmed", rng.random_bool(0.5)),
            )
            .expect("increasing timestamps");
            ts += rng.random_range(1..30);
        }
    }
    for k in 0..rng.random_range(0..4) {
        s.append_outbox(OutboxMessage {
            to: ids[rng.random_range(0..persons)].clone(),
            text: format!("note {k}"),
            timestamp: k,
            channel: if rng.random_bool(0.5) {
                OutboxChannel::Chat
            } else {
                OutboxChannel::Message
            },
        })
        .expect("known recipient");
    }
    s
}
