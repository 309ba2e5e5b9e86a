use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RecognizerError;
use crate::facekit::PreprocessedFace;
use crate::socialstore::PersonId;

/// Largest set retrained online, between frames.
pub const ONLINE_CAP: usize = 30;
/// Largest set retrained offline, during idle periods.
pub const OFFLINE_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Camera,
    Facebook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Online,
    Offline,
}

impl TrainMode {
    pub fn cap(self) -> usize {
        match self {
            TrainMode::Online => ONLINE_CAP,
            TrainMode::Offline => OFFLINE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingEntry {
    pub face: PreprocessedFace,
    pub source: Source,
    pub session_id: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    person_id: PersonId,
    cap: usize,
    entries: Vec<TrainingEntry>,
}

impl TrainingSet {
    pub fn new(person_id: PersonId) -> Self {
        Self::with_cap(person_id, OFFLINE_CAP)
    }

    pub fn with_cap(person_id: PersonId, cap: usize) -> Self {
        Self {
            person_id,
            cap,
            entries: Vec::new(),
        }
    }

    /// Builds a set directly, checking the cap and vector lengths.
    pub fn from_entries(
        person_id: PersonId,
        cap: usize,
        entries: Vec<TrainingEntry>,
    ) -> Result<Self, RecognizerError> {
        let mut set = Self::with_cap(person_id, cap);
        for e in entries {
            set.push(e)?;
        }
        Ok(set)
    }

    pub fn person_id(&self) -> &PersonId {
        &self.person_id
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn entries(&self) -> &[TrainingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, entry: TrainingEntry) -> Result<(), RecognizerError> {
        if self.entries.len() >= self.cap {
            return Err(RecognizerError::CapExceeded {
                person: self.person_id.clone(),
                cap: self.cap,
            });
        }
        if let Some(first) = self.entries.first() {
            if first.face.len() != entry.face.len() {
                return Err(RecognizerError::DimensionMismatch {
                    expected: first.face.len(),
                    found: entry.face.len(),
                });
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Indices of the `n` most recent entries, in their original order.
    /// Equal timestamps favour the later-inserted entry.
    pub(crate) fn newest_indices(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| {
            self.entries[b]
                .timestamp
                .cmp(&self.entries[a].timestamp)
                .then(b.cmp(&a))
        });
        idx.truncate(n);
        idx.sort_unstable();
        idx
    }
}

#[derive(Debug, Clone)]
pub enum TrainingAction {
    Add(TrainingEntry),
    Remove(usize),
    /// Keep only the `n` most recent entries by timestamp.
    PruneOldest(usize),
}

pub fn manage_training_set(
    mut set: TrainingSet,
    action: TrainingAction,
) -> Result<TrainingSet, RecognizerError> {
    match action {
        TrainingAction::Add(entry) => set.push(entry)?,
        TrainingAction::Remove(index) => {
            if index >= set.entries.len() {
                return Err(RecognizerError::BadIndex {
                    index,
                    len: set.entries.len(),
                });
            }
            set.entries.remove(index);
        }
        TrainingAction::PruneOldest(n) => {
            if set.entries.len() > n {
                let keep = set.newest_indices(n);
                let old = std::mem::take(&mut set.entries);
                set.entries = old
                    .into_iter()
                    .enumerate()
                    .filter(|(i, _)| keep.binary_search(i).is_ok())
                    .map(|(_, e)| e)
                    .collect();
            }
        }
    }
    Ok(set)
}

// ----- import / export -----------------------------------------------------

const FVEC_MAGIC: &[u8; 4] = b"FVEC";
const FVEC_VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    person_id: PersonId,
    source: Source,
    session_id: String,
    timestamp: i64,
    file: String,
}

fn encode_fvec(face: &PreprocessedFace) -> Vec<u8> {
    let n = face.len();
    let mut out = Vec::with_capacity(9 + n * 9);
    out.extend_from_slice(FVEC_MAGIC);
    out.push(FVEC_VERSION);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in face.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(face.mask().iter().map(|&m| m as u8));
    out
}

fn decode_fvec(bytes: &[u8]) -> Result<PreprocessedFace, RecognizerError> {
    let bad = |m: &str| RecognizerError::Format(m.to_string());
    if bytes.len() < 9 || &bytes[..4] != FVEC_MAGIC {
        return Err(bad("missing FVEC header"));
    }
    if bytes[4] != FVEC_VERSION {
        return Err(bad("unsupported FVEC version"));
    }
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    if bytes.len() != 9 + n * 9 {
        return Err(bad("FVEC length mismatch"));
    }
    let values = bytes[9..9 + n * 8]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mask = bytes[9 + n * 8..].iter().map(|&b| b != 0).collect();
    PreprocessedFace::from_parts(values, mask).map_err(|e| RecognizerError::Format(e.to_string()))
}

/// Writes `manifest.json` plus one `.fvec` file per entry into `dir`.
pub fn export_training_sets(dir: &Path, sets: &[TrainingSet]) -> Result<(), RecognizerError> {
    std::fs::create_dir_all(dir.join("faces"))?;
    let mut manifest = Manifest {
        version: 1,
        entries: Vec::new(),
    };
    for set in sets {
        for (i, e) in set.entries.iter().enumerate() {
            let file = format!("faces/{}_{i:04}.fvec", set.person_id);
            std::fs::write(dir.join(&file), encode_fvec(&e.face))?;
            manifest.entries.push(ManifestEntry {
                person_id: set.person_id.clone(),
                source: e.source,
                session_id: e.session_id.clone(),
                timestamp: e.timestamp,
                file,
            });
        }
    }
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| RecognizerError::Format(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Reads a directory written by [`export_training_sets`]. Sets come back in
/// order of first appearance, each with the offline cap.
pub fn import_training_sets(dir: &Path) -> Result<Vec<TrainingSet>, RecognizerError> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| RecognizerError::Format(e.to_string()))?;
    if manifest.version != 1 {
        return Err(RecognizerError::Format(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    let mut sets: Vec<TrainingSet> = Vec::new();
    for m in manifest.entries {
        let face = decode_fvec(&std::fs::read(dir.join(&m.file))?)?;
        let entry = TrainingEntry {
            face,
            source: m.source,
            session_id: m.session_id,
            timestamp: m.timestamp,
        };
        match sets.iter_mut().find(|s| s.person_id == m.person_id) {
            Some(s) => s.push(entry)?,
            None => {
                let mut s = TrainingSet::new(m.person_id);
                s.push(entry)?;
                sets.push(s);
            }
        }
    }
    Ok(sets)
}
