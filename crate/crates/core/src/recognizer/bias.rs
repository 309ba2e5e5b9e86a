use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{RecognizerError, ScoreVector};
use crate::socialstore::{FriendGraph, PersonId, Photo, SocialStore};

/// Additive score offsets by friendship class relative to the anchors
/// (people already identified in the same photo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasLevels {
    pub mutual: f64,
    pub friend: f64,
    pub none: f64,
}

impl BiasLevels {
    pub fn new(mutual: f64, friend: f64) -> Result<Self, RecognizerError> {
        let levels = Self {
            mutual,
            friend,
            none: 0.0,
        };
        levels.validate()?;
        Ok(levels)
    }

    pub fn zero() -> Self {
        Self {
            mutual: 0.0,
            friend: 0.0,
            none: 0.0,
        }
    }

    /// `friend = delta`, `mutual = 2·delta`, where `delta` is a typical
    /// spread of scores on the corpus at hand.
    pub fn from_spread(delta: f64) -> Result<Self, RecognizerError> {
        Self::new(2.0 * delta, delta)
    }

    pub fn validate(&self) -> Result<(), RecognizerError> {
        let ok = self.none == 0.0
            && self.friend >= self.none
            && self.mutual >= self.friend
            && self.mutual.is_finite();
        if ok {
            Ok(())
        } else {
            Err(RecognizerError::InvalidBias(format!(
                "need mutual >= friend >= none = 0, got {}/{}/{}",
                self.mutual, self.friend, self.none
            )))
        }
    }
}

/// Adds the friendship-class offset to every candidate score. Candidates
/// that are friends with two or more anchors get `mutual`, with exactly one
/// get `friend`, otherwise `none`. Anchors are removed from the result.
pub fn apply_bias<G: FriendGraph>(
    sv: &ScoreVector,
    anchors: &BTreeSet<PersonId>,
    graph: &G,
    levels: &BiasLevels,
) -> Result<ScoreVector, RecognizerError> {
    levels.validate()?;
    let mut anchor_friends = Vec::with_capacity(anchors.len());
    for a in anchors {
        if !graph.contains_person(a) {
            return Err(RecognizerError::UnknownAnchor(a.clone()));
        }
        anchor_friends.push(graph.friends_of(a)?);
    }
    let mut out = sv.map_values(|candidate, score| {
        let links = anchor_friends
            .iter()
            .filter(|f| f.contains(candidate))
            .count();
        score
            + match links {
                0 => levels.none,
                1 => levels.friend,
                _ => levels.mutual,
            }
    });
    out.retain(|id, _| !anchors.contains(id));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub a: PersonId,
    pub b: PersonId,
    pub count: usize,
}

/// Pairs of people tagged together in at least `min_count` photos who are
/// not yet friends, most frequent first, then by pair id.
pub fn co_occurrence_hypotheses(store: &SocialStore, min_count: usize) -> Vec<CoOccurrence> {
    let mut out: Vec<CoOccurrence> = count_pairs(&store.photos())
        .into_iter()
        .filter(|((a, b), n)| *n >= min_count && !store.are_friends(a, b))
        .map(|((a, b), count)| CoOccurrence { a, b, count })
        .collect();
    // pairs arrive in (a, b) order; the stable sort keeps it within a count
    out.sort_by_key(|c| std::cmp::Reverse(c.count));
    out
}

fn count_pairs(photos: &[Photo]) -> BTreeMap<(PersonId, PersonId), usize> {
    let mut counts = BTreeMap::new();
    for photo in photos {
        let people: BTreeSet<&PersonId> = photo.tags.iter().map(|t| &t.person_id).collect();
        let people: Vec<&PersonId> = people.into_iter().collect();
        for (i, a) in people.iter().enumerate() {
            for b in &people[i + 1..] {
                *counts.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}
