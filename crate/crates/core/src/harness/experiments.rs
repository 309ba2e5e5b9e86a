//! Threshold sweep, window sweep, training-cost curve and cross-source
//! transfer matrices.
//!
//! Camera sessions are split by index: sessions 0-4 train, 5 is the
//! in-distribution test session and its frames re-rendered with the
//! out-of-lab offset form the hard split. Sessions 5-9 are the held-out
//! camera pool for transfer.
//! Facebook photos 0-29 train and 30-59 test.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{identity_id, Corpus, SampleRef};
use super::report::{fmt_f, ExperimentReport};
use super::HarnessError;
use crate::facekit::PreprocessedFace;
use crate::recognizer::{
    decide_vector, train, Decision, EvidenceWindow, Registry, ScoreVector, Source, TrainMode,
    TrainingEntry, TrainingSet, OFFLINE_CAP, ONLINE_CAP,
};
use crate::socialstore::PersonId;

pub const EXPERIMENT_NAMES: [&str; 4] = ["threshold", "window", "cost", "transfer"];

const TRAIN_SESSIONS: usize = 5;
const FRAMES_PER_TRAIN_SESSION: usize = 20;
const TEST_SESSION: usize = 5;

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig(msg.into())
}

fn entries(faces: Vec<PreprocessedFace>, source: Source) -> Vec<TrainingEntry> {
    faces
        .into_iter()
        .enumerate()
        .map(|(i, face)| TrainingEntry {
            face,
            source,
            session_id: String::new(),
            timestamp: i as i64,
        })
        .collect()
}

/// Trains one classifier per known identity from the samples `plan` picks.
fn enroll(
    corpus: &Corpus,
    plan: impl Fn(usize) -> Vec<SampleRef>,
) -> Result<Registry, HarnessError> {
    let registry = Registry::default();
    for i in 0..corpus.spec().n_identities {
        let refs = plan(i);
        let faces = corpus.faces(&refs)?;
        let set = TrainingSet::from_entries(
            identity_id(i),
            refs.len().max(OFFLINE_CAP),
            entries(faces, Source::Camera),
        )?;
        registry.install(train(&set, TrainMode::Offline, 0)?);
    }
    Ok(registry)
}

fn score_faces(
    registry: &Registry,
    faces: &[PreprocessedFace],
) -> Result<Vec<ScoreVector>, HarnessError> {
    faces
        .par_iter()
        .map(|f| registry.score_all(f).map_err(HarnessError::from))
        .collect()
}

/// Accumulated mean after every push once the window is full.
fn full_window_means(
    scores: &[ScoreVector],
    window: usize,
) -> Result<Vec<ScoreVector>, HarnessError> {
    let mut win = EvidenceWindow::new(window)?;
    let mut out = Vec::new();
    for sv in scores {
        win.push(sv.clone())?;
        if win.is_full() {
            out.push(win.mean().expect("non-empty window").clone());
        }
    }
    Ok(out)
}

fn camera_track(identity: usize, session: usize, frames: usize, hard: bool) -> Vec<SampleRef> {
    (0..frames)
        .map(|f| {
            let r = SampleRef::camera(identity, session, f);
            if hard {
                r.hardened()
            } else {
                r
            }
        })
        .collect()
}

/// Enrolls every known identity from sessions 0..5, frames 0..20, the
/// training split shared by the threshold and window experiments.
pub fn default_enrollment(corpus: &Corpus) -> Result<Registry, HarnessError> {
    enroll(corpus, |i| {
        (0..TRAIN_SESSIONS)
            .flat_map(|s| (0..FRAMES_PER_TRAIN_SESSION).map(move |f| SampleRef::camera(i, s, f)))
            .collect()
    })
}

fn check_default_split(corpus: &Corpus, test_session: usize) -> Result<(), HarnessError> {
    let spec = corpus.spec();
    if spec.sessions_per_identity <= test_session {
        return Err(invalid(format!(
            "need at least {} sessions per identity",
            test_session + 1
        )));
    }
    if spec.frames_per_session < FRAMES_PER_TRAIN_SESSION {
        return Err(invalid(format!(
            "need at least {FRAMES_PER_TRAIN_SESSION} frames per session"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- threshold

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub thetas: Vec<f64>,
    pub window: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            thetas: (0..=50).map(|i| f64::from(i) * 0.02).collect(),
            window: crate::recognizer::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub theta: f64,
    /// Known-identity decisions that are Identified with the right person.
    pub accuracy: f64,
    /// Stranger decisions that are Identified as anyone.
    pub false_accept: f64,
    pub known_unknown: f64,
    pub stranger_unknown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub rows: Vec<ThresholdRow>,
    pub window: usize,
    /// First theta maximising `accuracy - false_accept`.
    pub recommended_theta: f64,
    pub known_decisions: usize,
    pub stranger_decisions: usize,
}

/// One decision per full window position (stride 1) on the test session of
/// every known identity and every stranger.
pub fn run_threshold_sweep(
    corpus: &Corpus,
    cfg: &ThresholdConfig,
) -> Result<ThresholdSweep, HarnessError> {
    if corpus.spec().n_strangers == 0 {
        return Err(invalid("threshold sweep needs stranger identities"));
    }
    if cfg.thetas.is_empty() || cfg.thetas.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("thetas must be non-empty, finite and non-negative"));
    }
    if cfg.window == 0 || cfg.window > corpus.spec().frames_per_session {
        return Err(invalid("window must be in 1..=frames_per_session"));
    }
    check_default_split(corpus, TEST_SESSION)?;
    let registry = default_enrollment(corpus)?;
    let frames = corpus.spec().frames_per_session;

    let track_means = |identity: usize| -> Result<Vec<ScoreVector>, HarnessError> {
        let faces = corpus.faces(&camera_track(identity, TEST_SESSION, frames, false))?;
        full_window_means(&score_faces(&registry, &faces)?, cfg.window)
    };
    let mut known: Vec<(PersonId, ScoreVector)> = Vec::new();
    for i in 0..corpus.spec().n_identities {
        known.extend(track_means(i)?.into_iter().map(|m| (identity_id(i), m)));
    }
    let mut strangers: Vec<ScoreVector> = Vec::new();
    for i in corpus.stranger_indices() {
        strangers.extend(track_means(i)?);
    }

    let rate = |n: usize, d: usize| n as f64 / d as f64;
    let mut rows = Vec::with_capacity(cfg.thetas.len());
    for &theta in &cfg.thetas {
        let (mut correct, mut known_unknown) = (0, 0);
        for (truth, m) in &known {
            match decide_vector(m, theta, None)? {
                Decision::Identified { best, .. } if &best == truth => correct += 1,
                Decision::Unknown => known_unknown += 1,
                _ => {}
            }
        }
        let mut accepted = 0;
        for m in &strangers {
            if decide_vector(m, theta, None)?.identified().is_some() {
                accepted += 1;
            }
        }
        rows.push(ThresholdRow {
            theta,
            accuracy: rate(correct, known.len()),
            false_accept: rate(accepted, strangers.len()),
            known_unknown: rate(known_unknown, known.len()),
            stranger_unknown: rate(strangers.len() - accepted, strangers.len()),
        });
    }
    let recommended_theta = rows
        .iter()
        .fold(None::<&ThresholdRow>, |best, r| match best {
            Some(b) if b.accuracy - b.false_accept >= r.accuracy - r.false_accept => Some(b),
            _ => Some(r),
        })
        .map(|r| r.theta)
        .expect("non-empty grid");
    Ok(ThresholdSweep {
        rows,
        window: cfg.window,
        recommended_theta,
        known_decisions: known.len(),
        stranger_decisions: strangers.len(),
    })
}

impl ThresholdSweep {
    pub fn report(&self, seed: u64) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "threshold",
            seed,
            &[
                "theta",
                "accuracy",
                "false_accept",
                "known_unknown",
                "stranger_unknown",
            ],
        );
        for row in &self.rows {
            r.push_row(vec![
                fmt_f(row.theta),
                fmt_f(row.accuracy),
                fmt_f(row.false_accept),
                fmt_f(row.known_unknown),
                fmt_f(row.stranger_unknown),
            ]);
        }
        r.summary.insert("window".into(), self.window.to_string());
        r.summary
            .insert("recommended_theta".into(), fmt_f(self.recommended_theta));
        r.summary
            .insert("known_decisions".into(), self.known_decisions.to_string());
        r.summary.insert(
            "stranger_decisions".into(),
            self.stranger_decisions.to_string(),
        );
        r
    }
}

// ------------------------------------------------------------------- window

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub windows: Vec<usize>,
    /// Rejection threshold applied at each window; 0 measures closed-set
    /// accuracy.
    pub theta: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            windows: vec![1, 5, 10, 15, 20, 25, 30, 35, 40],
            theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window: usize,
    pub easy_accuracy: f64,
    pub hard_accuracy: f64,
    pub easy_decisions: usize,
    pub hard_decisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweep {
    pub theta: f64,
    pub rows: Vec<WindowRow>,
}

impl WindowSweep {
    pub fn row(&self, window: usize) -> Option<&WindowRow> {
        self.rows.iter().find(|r| r.window == window)
    }

    pub fn report(&self, seed: u64) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "window",
            seed,
            &[
                "window",
                "easy_accuracy",
                "hard_accuracy",
                "easy_decisions",
                "hard_decisions",
            ],
        );
        for row in &self.rows {
            r.push_row(vec![
                row.window.to_string(),
                fmt_f(row.easy_accuracy),
                fmt_f(row.hard_accuracy),
                row.easy_decisions.to_string(),
                row.hard_decisions.to_string(),
            ]);
        }
        r.summary.insert("theta".into(), fmt_f(self.theta));
        r
    }
}

/// Accuracy of full-window decisions (stride 1) on the in-lab test session
/// and on the same frames with the out-of-lab offset, per window size.
pub fn run_window_sweep(corpus: &Corpus, cfg: &WindowConfig) -> Result<WindowSweep, HarnessError> {
    let frames = corpus.spec().frames_per_session;
    if cfg.windows.is_empty() {
        return Err(invalid("window list is empty"));
    }
    if let Some(w) = cfg.windows.iter().find(|&&w| w == 0 || w > frames) {
        return Err(invalid(format!(
            "window {w} outside 1..={frames} available frames"
        )));
    }
    if !cfg.theta.is_finite() || cfg.theta < 0.0 {
        return Err(invalid("theta must be finite and non-negative"));
    }
    check_default_split(corpus, TEST_SESSION)?;
    let registry = default_enrollment(corpus)?;

    let mut easy = Vec::new();
    let mut hard = Vec::new();
    for i in 0..corpus.spec().n_identities {
        let e = corpus.faces(&camera_track(i, TEST_SESSION, frames, false))?;
        let h = corpus.faces(&camera_track(i, TEST_SESSION, frames, true))?;
        easy.push((identity_id(i), score_faces(&registry, &e)?));
        hard.push((identity_id(i), score_faces(&registry, &h)?));
    }

    let accuracy =
        |tracks: &[(PersonId, Vec<ScoreVector>)], w: usize| -> Result<(f64, usize), HarnessError> {
            let (mut correct, mut total) = (0usize, 0usize);
            for (truth, scores) in tracks {
                for m in full_window_means(scores, w)? {
                    total += 1;
                    if decide_vector(&m, cfg.theta, None)?.identified() == Some(truth) {
                        correct += 1;
                    }
                }
            }
            Ok((correct as f64 / total as f64, total))
        };

    let rows = cfg
        .windows
        .par_iter()
        .map(|&w| {
            let (ea, en) = accuracy(&easy, w)?;
            let (ha, hn) = accuracy(&hard, w)?;
            Ok(WindowRow {
                window: w,
                easy_accuracy: ea,
                hard_accuracy: ha,
                easy_decisions: en,
                hard_decisions: hn,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(WindowSweep {
        theta: cfg.theta,
        rows,
    })
}

// --------------------------------------------------------------------- cost

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1, 10, 30, 100, 400],
            repeats: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCost {
    pub repeats: usize,
    /// `(size, median seconds per retrain)`, ascending by size.
    pub rows: Vec<(usize, f64)>,
}

impl TrainingCost {
    pub fn report(&self, seed: u64) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "cost",
            seed,
            &[
                "size",
                "median_seconds",
                "repeats",
                "online_cap",
                "offline_cap",
            ],
        );
        for &(size, secs) in &self.rows {
            r.push_row(vec![
                size.to_string(),
                format!("{secs:.9}"),
                self.repeats.to_string(),
                ONLINE_CAP.to_string(),
                OFFLINE_CAP.to_string(),
            ]);
        }
        r
    }
}

/// Wall time of an offline retrain at each training-set size. Each repeat
/// times a batch of retrains sized to keep timer resolution out of the
/// median. Runs serially.
pub fn run_training_cost(corpus: &Corpus, cfg: &CostConfig) -> Result<TrainingCost, HarnessError> {
    if cfg.sizes.is_empty() || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sizes must be non-empty and strictly ascending"));
    }
    if cfg.repeats == 0 {
        return Err(invalid("repeats must be at least 1"));
    }
    let spec = corpus.spec();
    let largest = *cfg.sizes.last().expect("non-empty");
    if largest == 0 || largest > spec.sessions_per_identity * spec.frames_per_session {
        return Err(invalid(format!(
            "size {largest} exceeds the camera frames of one identity"
        )));
    }
    let refs: Vec<SampleRef> = (0..spec.sessions_per_identity)
        .flat_map(|s| (0..spec.frames_per_session).map(move |f| SampleRef::camera(0, s, f)))
        .take(largest)
        .collect();
    let all = entries(corpus.faces(&refs)?, Source::Camera);

    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &size in &cfg.sizes {
        let set =
            TrainingSet::from_entries(identity_id(0), size.max(OFFLINE_CAP), all[..size].to_vec())?;
        let batch = (4000 / size).max(1);
        let mut samples = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            let start = Instant::now();
            for _ in 0..batch {
                std::hint::black_box(train(std::hint::black_box(&set), TrainMode::Offline, 0)?);
            }
            samples.push(start.elapsed().as_secs_f64() / batch as f64);
        }
        samples.sort_by(f64::total_cmp);
        rows.push((size, samples[samples.len() / 2]));
    }
    Ok(TrainingCost {
        repeats: cfg.repeats,
        rows,
    })
}

// ----------------------------------------------------------------- transfer

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraTraining {
    /// Camera training frames drawn evenly from five sessions.
    Spread,
    /// All camera training frames from a single session.
    SingleSession,
}

impl CameraTraining {
    pub fn as_str(self) -> &'static str {
        match self {
            CameraTraining::Spread => "spread",
            CameraTraining::SingleSession => "single_session",
        }
    }
}

pub const TRAIN_ROWS: [&str; 4] = ["cam30", "fb30", "cam_fb30", "cam_fb60"];
pub const TEST_COLUMNS: [&str; 3] = ["cam30", "fb30", "both60"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCell {
    pub train: String,
    pub test: String,
    pub top1: f64,
    pub top2: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub variant: CameraTraining,
    /// Row-major over [`TRAIN_ROWS`] x [`TEST_COLUMNS`].
    pub cells: Vec<TransferCell>,
}

impl TransferMatrix {
    pub fn cell(&self, train: &str, test: &str) -> &TransferCell {
        self.cells
            .iter()
            .find(|c| c.train == train && c.test == test)
            .unwrap_or_else(|| panic!("no cell {train}->{test}"))
    }

    pub fn top1(&self, train: &str, test: &str) -> f64 {
        self.cell(train, test).top1
    }

    pub fn report(matrices: &[TransferMatrix], seed: u64) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "transfer",
            seed,
            &["variant", "train", "test", "top1", "top2", "n"],
        );
        for m in matrices {
            for c in &m.cells {
                r.push_row(vec![
                    m.variant.as_str().to_string(),
                    c.train.clone(),
                    c.test.clone(),
                    fmt_f(c.top1),
                    fmt_f(c.top2),
                    c.n.to_string(),
                ]);
            }
        }
        r
    }
}

const TRANSFER_TRAIN: usize = 30;
const TRANSFER_SESSIONS: usize = 5;

fn camera_training(variant: CameraTraining, identity: usize, n: usize) -> Vec<SampleRef> {
    match variant {
        CameraTraining::Spread => {
            let per = n / TRANSFER_SESSIONS;
            (0..TRANSFER_SESSIONS)
                .flat_map(|s| (0..per).map(move |f| SampleRef::camera(identity, s, f)))
                .collect()
        }
        CameraTraining::SingleSession => {
            (0..n).map(|f| SampleRef::camera(identity, 0, f)).collect()
        }
    }
}

fn facebook_range(identity: usize, from: usize, n: usize) -> Vec<SampleRef> {
    (from..from + n)
        .map(|p| SampleRef::facebook(identity, p))
        .collect()
}

/// Accuracy of single-frame nearest-template classification for each
/// training-source row and test-source column. Every identity contributes
/// 30 camera and 30 Facebook training faces and a disjoint 30 + 30 test set.
pub fn run_transfer_matrix(
    corpus: &Corpus,
    variant: CameraTraining,
) -> Result<TransferMatrix, HarnessError> {
    let spec = corpus.spec();
    if spec.sessions_per_identity < 2 * TRANSFER_SESSIONS {
        return Err(invalid(format!(
            "need {} camera sessions per identity",
            2 * TRANSFER_SESSIONS
        )));
    }
    if spec.frames_per_session < TRANSFER_TRAIN {
        return Err(invalid(format!("need {TRANSFER_TRAIN} frames per session")));
    }
    if spec.facebook_photos < 2 * TRANSFER_TRAIN {
        return Err(invalid(format!(
            "need {} facebook photos per identity",
            2 * TRANSFER_TRAIN
        )));
    }
    let n = spec.n_identities;
    let per_session = TRANSFER_TRAIN / TRANSFER_SESSIONS;

    let cam_test: Vec<SampleRef> = (0..n)
        .flat_map(|i| {
            (TRANSFER_SESSIONS..2 * TRANSFER_SESSIONS)
                .flat_map(move |s| (0..per_session).map(move |f| SampleRef::camera(i, s, f)))
        })
        .collect();
    let fb_test: Vec<SampleRef> = (0..n)
        .flat_map(|i| facebook_range(i, TRANSFER_TRAIN, TRANSFER_TRAIN))
        .collect();
    let cam_test_faces = corpus.faces(&cam_test)?;
    let fb_test_faces = corpus.faces(&fb_test)?;

    type Plan<'a> = (&'a str, Box<dyn Fn(usize) -> Vec<SampleRef> + Sync>);
    let plans: [Plan; 4] = [
        (
            "cam30",
            Box::new(move |i| camera_training(variant, i, TRANSFER_TRAIN)),
        ),
        ("fb30", Box::new(|i| facebook_range(i, 0, TRANSFER_TRAIN))),
        (
            "cam_fb30",
            Box::new(move |i| {
                let mut v = camera_training(variant, i, TRANSFER_TRAIN / 2);
                v.extend(facebook_range(i, 0, TRANSFER_TRAIN / 2));
                v
            }),
        ),
        (
            "cam_fb60",
            Box::new(move |i| {
                let mut v = camera_training(variant, i, TRANSFER_TRAIN);
                v.extend(facebook_range(i, 0, TRANSFER_TRAIN));
                v
            }),
        ),
    ];

    let mut cells = Vec::with_capacity(12);
    for (row, plan) in &plans {
        let registry = enroll(corpus, plan)?;
        let cam = rank_hits(&registry, &cam_test, &cam_test_faces)?;
        let fb = rank_hits(&registry, &fb_test, &fb_test_faces)?;
        let both = [cam.as_slice(), fb.as_slice()].concat();
        for (col, hits) in TEST_COLUMNS.iter().zip([cam, fb, both]) {
            let total = hits.len() as f64;
            cells.push(TransferCell {
                train: row.to_string(),
                test: col.to_string(),
                top1: hits.iter().filter(|&&r| r == 0).count() as f64 / total,
                top2: hits.iter().filter(|&&r| r <= 1).count() as f64 / total,
                n: hits.len(),
            });
        }
    }
    Ok(TransferMatrix { variant, cells })
}

/// Rank of the true identity in each probe's score vector.
fn rank_hits(
    registry: &Registry,
    refs: &[SampleRef],
    faces: &[PreprocessedFace],
) -> Result<Vec<usize>, HarnessError> {
    let scores = score_faces(registry, faces)?;
    Ok(refs
        .iter()
        .zip(&scores)
        .map(|(r, sv)| {
            sv.rank_of(&identity_id(r.identity))
                .expect("known identity")
        })
        .collect())
}

// ---------------------------------------------------------------- dispatch

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub threshold: ThresholdConfig,
    pub window: WindowConfig,
    pub cost: CostConfig,
}

/// Runs the experiment called `name` (one of [`EXPERIMENT_NAMES`]).
pub fn run_named(
    name: &str,
    corpus: &Corpus,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, HarnessError> {
    let seed = corpus.spec().seed;
    match name {
        "threshold" => Ok(run_threshold_sweep(corpus, &cfg.threshold)?.report(seed)),
        "window" => Ok(run_window_sweep(corpus, &cfg.window)?.report(seed)),
        "cost" => Ok(run_training_cost(corpus, &cfg.cost)?.report(seed)),
        "transfer" => {
            let m = [
                run_transfer_matrix(corpus, CameraTraining::Spread)?,
                run_transfer_matrix(corpus, CameraTraining::SingleSession)?,
            ];
            Ok(TransferMatrix::report(&m, seed))
        }
        other => Err(HarnessError::UnknownExperiment(other.to_string())),
    }
}
