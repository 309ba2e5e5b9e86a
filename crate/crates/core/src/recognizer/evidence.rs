use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::RecognizerError;
use crate::socialstore::PersonId;

/// Frames accumulated before a hard decision.
pub const DEFAULT_WINDOW: usize = 25;

/// Unknown-rejection threshold on the population std-dev of the accumulated
/// score vector. Calibrated by the threshold sweep for the nearest-template
/// scorer on the default synthetic corpus; recalibrate for any other scorer
/// or data.
pub const DEFAULT_THETA: f64 = 0.40;

/// Per-person scores for one frame (or an average of frames).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(BTreeMap<PersonId, f64>);

impl ScoreVector {
    pub fn new(scores: BTreeMap<PersonId, f64>) -> Result<Self, RecognizerError> {
        if let Some((id, _)) = scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RecognizerError::NonFinite(id.clone()));
        }
        Ok(Self(scores))
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self, RecognizerError>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<PersonId>,
    {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, id: &PersonId) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PersonId, f64)> {
        self.0.iter().map(|(k, &v)| (k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &PersonId> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.values().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<PersonId, f64> {
        &self.0
    }

    pub fn into_map(self) -> BTreeMap<PersonId, f64> {
        self.0
    }

    fn same_keys(&self, other: &ScoreVector) -> bool {
        self.0.len() == other.0.len() && self.0.keys().zip(other.0.keys()).all(|(a, b)| a == b)
    }

    /// Best and runner-up; ties go to the lowest person id.
    pub fn top2(&self) -> Option<(&PersonId, Option<&PersonId>)> {
        let mut best: Option<(&PersonId, f64)> = None;
        let mut second: Option<(&PersonId, f64)> = None;
        // ascending id order, so strict `>` keeps the lowest id on ties
        for (id, &v) in &self.0 {
            match best {
                Some((_, bv)) if v <= bv => {
                    if second.is_none_or(|(_, sv)| v > sv) {
                        second = Some((id, v));
                    }
                }
                _ => {
                    second = best;
                    best = Some((id, v));
                }
            }
        }
        best.map(|(b, _)| (b, second.map(|(s, _)| s)))
    }

    pub fn argmax(&self) -> Option<&PersonId> {
        self.top2().map(|(b, _)| b)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.0.values().copied().reduce(f64::max)
    }

    /// Rank (0 = best) of `id` under the same tie-break as [`Self::top2`].
    pub fn rank_of(&self, id: &PersonId) -> Option<usize> {
        let target = self.get(id)?;
        Some(
            self.0
                .iter()
                .filter(|(k, &v)| v > target || (v == target && *k < id))
                .count(),
        )
    }

    pub fn spread(&self) -> f64 {
        population_std(self.0.values().copied())
    }

    pub fn map_values(&self, mut f: impl FnMut(&PersonId, f64) -> f64) -> Self {
        Self(self.0.iter().map(|(k, &v)| (k.clone(), f(k, v))).collect())
    }

    pub(crate) fn retain(&mut self, f: impl FnMut(&PersonId, &mut f64) -> bool) {
        self.0.retain(f);
    }
}

pub fn population_std(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Fixed-size, equal-weight moving window of score vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceWindow {
    capacity: usize,
    buffer: VecDeque<ScoreVector>,
    mean: Option<ScoreVector>,
}

impl EvidenceWindow {
    pub fn new(capacity: usize) -> Result<Self, RecognizerError> {
        if capacity == 0 {
            return Err(RecognizerError::InvalidPolicy(
                "window size must be at least 1".into(),
            ));
        }
        Ok(Self {
            capacity,
            buffer: VecDeque::with_capacity(capacity),
            mean: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn buffer(&self) -> impl Iterator<Item = &ScoreVector> {
        self.buffer.iter()
    }

    pub fn mean(&self) -> Option<&ScoreVector> {
        self.mean.as_ref()
    }

    /// Drops all accumulated evidence (e.g. when the tracked face is lost).
    pub fn reset(&mut self) {
        self.buffer.clear();
        self.mean = None;
    }

    /// Appends `sv`, evicting the oldest entry when full.
    pub fn push(&mut self, sv: ScoreVector) -> Result<(), RecognizerError> {
        if let Some(front) = self.buffer.front() {
            if !front.same_keys(&sv) {
                return Err(RecognizerError::KeyMismatch);
            }
        }
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(sv);
        self.mean = Some(self.compute_mean());
        Ok(())
    }

    fn compute_mean(&self) -> ScoreVector {
        let n = self.buffer.len() as f64;
        let mut sums: BTreeMap<PersonId, f64> = BTreeMap::new();
        for sv in &self.buffer {
            for (k, v) in sv.iter() {
                *sums.entry(k.clone()).or_insert(0.0) += v;
            }
        }
        ScoreVector(sums.into_iter().map(|(k, s)| (k, s / n)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionPolicy {
    pub theta: f64,
    /// Minimum acceptable winning score; `None` disables the check.
    #[serde(default)]
    pub min_win: Option<f64>,
    pub window: usize,
}

impl Default for DecisionPolicy {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            min_win: None,
            window: DEFAULT_WINDOW,
        }
    }
}

impl DecisionPolicy {
    pub fn new(theta: f64, min_win: Option<f64>, window: usize) -> Result<Self, RecognizerError> {
        let p = Self {
            theta,
            min_win,
            window,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RecognizerError> {
        if self.theta.is_nan() || self.theta <= 0.0 || !self.theta.is_finite() {
            return Err(RecognizerError::InvalidPolicy(format!(
                "theta must be positive and finite, got {}",
                self.theta
            )));
        }
        if self.window == 0 {
            return Err(RecognizerError::InvalidPolicy(
                "window size must be at least 1".into(),
            ));
        }
        if self.min_win.is_some_and(f64::is_nan) {
            return Err(RecognizerError::InvalidPolicy("min_win is NaN".into()));
        }
        Ok(())
    }

    pub fn new_window(&self) -> EvidenceWindow {
        EvidenceWindow::new(self.window).expect("validated window size")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Decision {
    Identified {
        best: PersonId,
        second: Option<PersonId>,
    },
    Unknown,
    Provisional {
        best: PersonId,
    },
}

impl Decision {
    pub fn is_provisional(&self) -> bool {
        matches!(self, Decision::Provisional { .. })
    }

    pub fn identified(&self) -> Option<&PersonId> {
        match self {
            Decision::Identified { best, .. } => Some(best),
            _ => None,
        }
    }
}

/// Open-set decision on one (possibly accumulated) score vector: Unknown
/// when the spread is below `theta` or the winner is below `min_win`.
pub fn decide_vector(
    sv: &ScoreVector,
    theta: f64,
    min_win: Option<f64>,
) -> Result<Decision, RecognizerError> {
    let (best, second) = sv.top2().ok_or(RecognizerError::EmptyWindow)?;
    if sv.spread() < theta {
        return Ok(Decision::Unknown);
    }
    if let Some(m) = min_win {
        if sv.get(best).is_some_and(|v| v < m) {
            return Ok(Decision::Unknown);
        }
    }
    Ok(Decision::Identified {
        best: best.clone(),
        second: second.cloned(),
    })
}

/// Provisional until the window is full, then [`decide_vector`] on the mean.
pub fn decide(win: &EvidenceWindow, policy: &DecisionPolicy) -> Result<Decision, RecognizerError> {
    let mean = win.mean().ok_or(RecognizerError::EmptyWindow)?;
    if win.len() < policy.window.min(win.capacity()) {
        let best = mean.argmax().ok_or(RecognizerError::EmptyWindow)?;
        return Ok(Decision::Provisional { best: best.clone() });
    }
    decide_vector(mean, policy.theta, policy.min_win)
}
