use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use super::{RecognizerError, ScoreVector, TrainMode, TrainingSet};
use crate::facekit::PreprocessedFace;
use crate::socialstore::PersonId;

/// Immutable snapshot of one person's training faces.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonClassifier {
    person_id: PersonId,
    templates: Arc<[Vec<f64>]>,
    dim: usize,
    trained_at: i64,
}

impl PersonClassifier {
    pub fn person_id(&self) -> &PersonId {
        &self.person_id
    }

    pub fn templates(&self) -> &[Vec<f64>] {
        &self.templates
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trained_at(&self) -> i64 {
        self.trained_at
    }
}

/// Snapshots a training set into a classifier. When the set is larger than
/// the mode's cap, only the most recent entries are kept.
pub fn train(
    set: &TrainingSet,
    mode: TrainMode,
    trained_at: i64,
) -> Result<PersonClassifier, RecognizerError> {
    if set.is_empty() {
        return Err(RecognizerError::EmptyTrainingSet(set.person_id().clone()));
    }
    let entries = set.entries();
    let dim = entries[0].face.len();
    let picked: Vec<usize> = if set.len() > mode.cap() {
        set.newest_indices(mode.cap())
    } else {
        (0..set.len()).collect()
    };
    let mut templates = Vec::with_capacity(picked.len());
    for i in picked {
        let face = &entries[i].face;
        if face.len() != dim {
            return Err(RecognizerError::DimensionMismatch {
                expected: dim,
                found: face.len(),
            });
        }
        templates.push(face.values().to_vec());
    }
    Ok(PersonClassifier {
        person_id: set.person_id().clone(),
        templates: templates.into(),
        dim,
        trained_at,
    })
}

/// Maps a probe face to a match score for one person: higher is better and
/// scores are comparable across persons.
pub trait FaceScorer: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn score(
        &self,
        classifier: &PersonClassifier,
        probe: &PreprocessedFace,
    ) -> Result<f64, RecognizerError>;
}

/// Negative mean squared error to the closest template, over the probe's
/// in-mask entries. A perfect match scores 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestTemplate;

impl FaceScorer for NearestTemplate {
    fn name(&self) -> &'static str {
        "nearest_template"
    }

    fn score(
        &self,
        classifier: &PersonClassifier,
        probe: &PreprocessedFace,
    ) -> Result<f64, RecognizerError> {
        if probe.len() != classifier.dim {
            return Err(RecognizerError::DimensionMismatch {
                expected: classifier.dim,
                found: probe.len(),
            });
        }
        let n_mask = probe.mask_count();
        if n_mask == 0 {
            return Err(RecognizerError::EmptyMask);
        }
        let values = probe.values();
        let mask = probe.mask();
        let best = classifier
            .templates
            .iter()
            .map(|t| {
                values
                    .iter()
                    .zip(t)
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|((p, q), _)| (p - q) * (p - q))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        Ok(-best / n_mask as f64)
    }
}

/// The array of per-person classifiers.
///
/// Retraining builds the new snapshot outside the lock and swaps it in, so
/// concurrent scoring sees either the old or the new classifier.
#[derive(Debug)]
pub struct Registry {
    scorer: Arc<dyn FaceScorer>,
    classifiers: RwLock<BTreeMap<PersonId, Arc<PersonClassifier>>>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new(Arc::new(NearestTemplate))
    }
}

impl Registry {
    pub fn new(scorer: Arc<dyn FaceScorer>) -> Self {
        Self {
            scorer,
            classifiers: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn scorer(&self) -> &dyn FaceScorer {
        self.scorer.as_ref()
    }

    pub fn install(&self, classifier: PersonClassifier) -> Arc<PersonClassifier> {
        let c = Arc::new(classifier);
        self.classifiers
            .write()
            .expect("registry lock poisoned")
            .insert(c.person_id.clone(), c.clone());
        c
    }

    pub fn retrain(
        &self,
        set: &TrainingSet,
        mode: TrainMode,
        trained_at: i64,
    ) -> Result<Arc<PersonClassifier>, RecognizerError> {
        let c = train(set, mode, trained_at)?;
        Ok(self.install(c))
    }

    pub fn remove(&self, id: &PersonId) -> bool {
        self.classifiers
            .write()
            .expect("registry lock poisoned")
            .remove(id)
            .is_some()
    }

    pub fn get(&self, id: &PersonId) -> Option<Arc<PersonClassifier>> {
        self.classifiers
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .cloned()
    }

    pub fn ids(&self) -> Vec<PersonId> {
        self.classifiers
            .read()
            .expect("registry lock poisoned")
            .keys()
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.classifiers
            .read()
            .expect("registry lock poisoned")
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<Arc<PersonClassifier>> {
        self.classifiers
            .read()
            .expect("registry lock poisoned")
            .values()
            .cloned()
            .collect()
    }

    /// Scores `face` against every trained classifier.
    pub fn score_all(&self, face: &PreprocessedFace) -> Result<ScoreVector, RecognizerError> {
        let snapshot = self.snapshot();
        if snapshot.is_empty() {
            return Err(RecognizerError::NoClassifiers);
        }
        let mut scores = BTreeMap::new();
        for c in snapshot {
            let s = self.scorer.score(&c, face)?;
            scores.insert(c.person_id.clone(), s);
        }
        ScoreVector::new(scores)
    }
}
