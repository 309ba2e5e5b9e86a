//! Seeded synthetic face corpus.
//!
//! An image is rendered from coefficients over two smooth pattern bases:
//! an identity basis (blobs inside the face ellipse) and a small condition
//! basis (lighting gradients, centre brightness), each pattern scaled to
//! unit RMS. Coefficients are the sum of the identity's base vector, a
//! per-session shift (lighting plus drift within a low-dimensional,
//! identity-specific appearance subspace), per-frame noise and
//! source-specific variation. The raster is turned into a
//! skin-toned RGB crop and passed through [`preprocess`], so corpus faces
//! take the same path as real detections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::facekit::{preprocess, FaceRect, ImageBuffer, Pose, PreprocessedFace, RASTER};
use crate::recognizer::Source;
use crate::socialstore::PersonId;

const IDENTITY_BASIS: usize = 16;
const CONDITION_BASIS: usize = 3;
/// Dimension of each identity's session-to-session appearance drift.
const DRIFT_DIMS: usize = 2;
/// Intensity units (RMS over the raster) per unit coefficient.
const AMPLITUDE: f64 = 4.0;
/// Pixel noise std, in intensity units, per unit of `sigma_frame`.
const PIXEL_NOISE_PER_FRAME_SIGMA: f64 = 4.0;
const BASE_INTENSITY: f64 = 170.0;
/// Minimum coefficient-space distance between two people; the typical
/// distance is about 5.6.
const MIN_IDENTITY_SEPARATION: f64 = 5.0;
const MAX_IDENTITY_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraProfile {
    /// Per-frame appearance variation specific to the robot camera.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacebookProfile {
    /// Per-photo appearance variation.
    pub sigma: f64,
    /// Maximum crop offset in pixels, drawn uniformly per photo.
    pub crop_jitter: u32,
    /// Scale of the per-identity systematic difference between a person's
    /// online photos and how the robot camera sees them.
    pub domain_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_identities: usize,
    /// Extra identities never enrolled, used as open-set probes.
    #[serde(default)]
    pub n_strangers: usize,
    pub sessions_per_identity: usize,
    pub frames_per_session: usize,
    pub facebook_photos: usize,
    pub sigma_session: f64,
    pub sigma_frame: f64,
    pub camera: CameraProfile,
    pub facebook: FacebookProfile,
    /// Norm (intensity units, RMS over the raster) of the out-of-lab offset.
    pub hard_shift: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_identities: 5,
            n_strangers: 3,
            sessions_per_identity: 10,
            frames_per_session: 100,
            facebook_photos: 60,
            sigma_session: 1.0,
            sigma_frame: 0.3,
            camera: CameraProfile { sigma: 0.1 },
            facebook: FacebookProfile {
                sigma: 0.8,
                crop_jitter: 2,
                domain_shift: 1.6,
            },
            hard_shift: 6.0,
            seed: 42,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.n_identities == 0 {
            return bad("n_identities must be at least 1");
        }
        if self.sessions_per_identity == 0 || self.frames_per_session == 0 {
            return bad("sessions_per_identity and frames_per_session must be at least 1");
        }
        let sigmas = [
            self.sigma_session,
            self.sigma_frame,
            self.camera.sigma,
            self.facebook.sigma,
            self.facebook.domain_shift,
            self.hard_shift,
        ];
        if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("all sigmas must be finite and non-negative");
        }
        if self.facebook.sigma <= self.camera.sigma {
            return bad("facebook.sigma must exceed camera.sigma");
        }
        if self.facebook.crop_jitter > 8 {
            return bad("facebook.crop_jitter must be at most 8 pixels");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Identifies one image in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleRef {
    pub identity: usize,
    pub source: Source,
    /// Camera session index; the photo index for Facebook.
    pub session: usize,
    /// Frame index within a camera session; always 0 for Facebook.
    pub frame: usize,
    /// Rendered with the out-of-lab offset.
    #[serde(default)]
    pub hard: bool,
}

impl SampleRef {
    pub fn camera(identity: usize, session: usize, frame: usize) -> Self {
        Self {
            identity,
            source: Source::Camera,
            session,
            frame,
            hard: false,
        }
    }

    pub fn facebook(identity: usize, photo: usize) -> Self {
        Self {
            identity,
            source: Source::Facebook,
            session: photo,
            frame: 0,
            hard: false,
        }
    }

    pub fn hardened(mut self) -> Self {
        self.hard = true;
        self
    }
}

/// Generated corpus. Faces are rendered on demand and are a pure function
/// of the spec and the [`SampleRef`].
#[derive(Debug, Clone)]
pub struct Corpus {
    spec: CorpusSpec,
    pad: usize,
    identity_basis: Vec<Vec<f64>>,
    condition_basis: Vec<Vec<f64>>,
    mean_face: Vec<f64>,
    identities: Vec<Vec<f64>>,
    facebook_offsets: Vec<Vec<f64>>,
    drift_dirs: Vec<Vec<Vec<f64>>>,
    session_shifts: Vec<Vec<SessionShift>>,
    hard_offset: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SessionShift {
    condition: [f64; CONDITION_BASIS],
    drift: Vec<f64>,
}

impl SessionShift {
    /// Lighting ~ N(0, sigma) per condition pattern; drift ~ N(0, sigma)
    /// along each of the identity's drift directions.
    fn draw(rng: &mut ChaCha8Rng, sigma: f64, dirs: &[Vec<f64>]) -> Self {
        let c = gaussian_vec(rng, CONDITION_BASIS, sigma);
        let a = gaussian_vec(rng, dirs.len(), sigma);
        let mut drift = vec![0.0; IDENTITY_BASIS];
        for (ak, dir) in a.iter().zip(dirs) {
            drift.iter_mut().zip(dir).for_each(|(d, v)| *d += ak * v);
        }
        Self {
            condition: [c[0], c[1], c[2]],
            drift,
        }
    }
}

fn unit_directions(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut v = gaussian_vec(rng, dim, 1.0);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect()
}

mod stream_tag {
    pub const BASIS: u64 = 1;
    pub const IDENTITY: u64 = 2;
    pub const SESSION: u64 = 3;
    pub const CAMERA_FRAME: u64 = 4;
    pub const FACEBOOK_PHOTO: u64 = 5;
    pub const FACEBOOK_OFFSET: u64 = 6;
    pub const HARD: u64 = 7;
    pub const DRIFT: u64 = 8;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for a tuple of indices.
fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &p in parts {
        h = splitmix(h ^ p);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| normal.sample(rng)).collect()
}

impl Corpus {
    pub fn generate(spec: &CorpusSpec) -> Result<Self, HarnessError> {
        spec.validate()?;
        let pad = spec.facebook.crop_jitter as usize;
        let side = RASTER + 2 * pad;
        let c = RASTER as f64 / 2.0;
        let coord = |i: usize| i as f64 + 0.5 - pad as f64 - c;

        let mut rng = stream(spec.seed, &[stream_tag::BASIS]);
        let mut identity_basis = Vec::with_capacity(IDENTITY_BASIS);
        for _ in 0..IDENTITY_BASIS {
            // blob centre inside the inner part of the face ellipse
            let (bx, by) = loop {
                let x: f64 = rng.random_range(-0.32..0.32);
                let y: f64 = rng.random_range(-0.40..0.40);
                if (x / 0.32).powi(2) + (y / 0.40).powi(2) <= 1.0 {
                    break (x * RASTER as f64, y * RASTER as f64);
                }
            };
            let width: f64 = rng.random_range(3.5..9.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut b = Vec::with_capacity(side * side);
            for y in 0..side {
                for x in 0..side {
                    let d2 = (coord(x) - bx).powi(2) + (coord(y) - by).powi(2);
                    b.push(sign * (-d2 / (2.0 * width * width)).exp());
                }
            }
            identity_basis.push(b);
        }

        let mut condition_basis: Vec<Vec<f64>> = (0..CONDITION_BASIS)
            .map(|_| Vec::with_capacity(side * side))
            .collect();
        let mut mean_face = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                let (dx, dy) = (coord(x) / c, coord(y) / c);
                condition_basis[0].push(dx);
                condition_basis[1].push(dy);
                condition_basis[2].push(1.0 - 2.0 * (dx * dx + dy * dy));
                mean_face.push(mean_face_at(coord(x), coord(y)));
            }
        }

        for b in identity_basis.iter_mut().chain(condition_basis.iter_mut()) {
            normalize_rms(b);
        }

        let total = spec.n_identities + spec.n_strangers;
        let mut identities: Vec<Vec<f64>> = Vec::with_capacity(total);
        for i in 0..total {
            let mut r = stream(spec.seed, &[stream_tag::IDENTITY, i as u64]);
            // redraw near-duplicates so every pair of people is distinguishable
            let mut u = gaussian_vec(&mut r, IDENTITY_BASIS, 1.0);
            for _ in 0..MAX_IDENTITY_REDRAWS {
                if identities
                    .iter()
                    .all(|v| dist(v, &u) >= MIN_IDENTITY_SEPARATION)
                {
                    break;
                }
                u = gaussian_vec(&mut r, IDENTITY_BASIS, 1.0);
            }
            identities.push(u);
        }
        let facebook_offsets = (0..total)
            .map(|i| {
                let mut r = stream(spec.seed, &[stream_tag::FACEBOOK_OFFSET, i as u64]);
                gaussian_vec(&mut r, IDENTITY_BASIS, spec.facebook.domain_shift)
            })
            .collect();
        let drift_dirs: Vec<Vec<Vec<f64>>> = (0..total)
            .map(|i| {
                let mut r = stream(spec.seed, &[stream_tag::DRIFT, i as u64]);
                unit_directions(&mut r, DRIFT_DIMS, IDENTITY_BASIS)
            })
            .collect();
        let session_shifts = (0..total)
            .map(|i| {
                (0..spec.sessions_per_identity)
                    .map(|s| {
                        let mut r = stream(spec.seed, &[stream_tag::SESSION, i as u64, s as u64]);
                        SessionShift::draw(&mut r, spec.sigma_session, &drift_dirs[i])
                    })
                    .collect()
            })
            .collect();

        // out-of-lab offset: side lighting plus a random smooth pattern,
        // scaled to the requested RMS over the raster
        let mut r = stream(spec.seed, &[stream_tag::HARD]);
        let mix = gaussian_vec(&mut r, IDENTITY_BASIS, 0.5);
        let mut hard_offset: Vec<f64> = (0..side * side)
            .map(|p| {
                condition_basis[0][p] * 1.5 - condition_basis[1][p] * 0.5
                    + mix
                        .iter()
                        .zip(&identity_basis)
                        .map(|(m, b)| m * b[p])
                        .sum::<f64>()
            })
            .collect();
        let rms =
            (hard_offset.iter().map(|v| v * v).sum::<f64>() / hard_offset.len() as f64).sqrt();
        if rms > 0.0 {
            let k = spec.hard_shift / rms;
            hard_offset.iter_mut().for_each(|v| *v *= k);
        }

        Ok(Self {
            spec: spec.clone(),
            pad,
            identity_basis,
            condition_basis,
            mean_face,
            identities,
            facebook_offsets,
            drift_dirs,
            session_shifts,
            hard_offset,
        })
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn known_ids(&self) -> Vec<PersonId> {
        (0..self.spec.n_identities).map(identity_id).collect()
    }

    pub fn stranger_indices(&self) -> std::ops::Range<usize> {
        self.spec.n_identities..self.spec.n_identities + self.spec.n_strangers
    }

    pub fn total_identities(&self) -> usize {
        self.spec.n_identities + self.spec.n_strangers
    }

    fn check(&self, r: &SampleRef) -> Result<(), HarnessError> {
        let out = |m: String| Err(HarnessError::OutOfRange(m));
        if r.identity >= self.total_identities() {
            return out(format!("identity {}", r.identity));
        }
        match r.source {
            Source::Camera => {
                if r.session >= self.spec.sessions_per_identity {
                    return out(format!("camera session {}", r.session));
                }
                if r.frame >= self.spec.frames_per_session {
                    return out(format!("frame {}", r.frame));
                }
            }
            Source::Facebook => {
                if r.session >= self.spec.facebook_photos || r.frame != 0 {
                    return out(format!("facebook photo {}", r.session));
                }
            }
        }
        Ok(())
    }

    /// The skin-toned crop and its full-frame rect, before preprocessing.
    pub fn render(&self, r: &SampleRef) -> Result<(ImageBuffer, FaceRect), HarnessError> {
        self.check(r)?;
        let spec = &self.spec;
        let i = r.identity;
        let mut coeffs = self.identities[i].clone();
        let shift: SessionShift;
        let (mut rng, jitter) = match r.source {
            Source::Camera => {
                shift = self.session_shifts[i][r.session].clone();
                let mut rng = stream(
                    spec.seed,
                    &[
                        stream_tag::CAMERA_FRAME,
                        i as u64,
                        r.session as u64,
                        r.frame as u64,
                    ],
                );
                let noise = gaussian_vec(
                    &mut rng,
                    IDENTITY_BASIS,
                    (spec.sigma_frame.powi(2) + spec.camera.sigma.powi(2)).sqrt(),
                );
                coeffs.iter_mut().zip(noise).for_each(|(c, n)| *c += n);
                (rng, (0i64, 0i64))
            }
            Source::Facebook => {
                let mut rng = stream(
                    spec.seed,
                    &[stream_tag::FACEBOOK_PHOTO, i as u64, r.session as u64],
                );
                shift = SessionShift::draw(&mut rng, spec.sigma_session, &self.drift_dirs[i]);
                let noise = gaussian_vec(
                    &mut rng,
                    IDENTITY_BASIS,
                    (spec.sigma_frame.powi(2) + spec.facebook.sigma.powi(2)).sqrt(),
                );
                for ((c, n), o) in coeffs.iter_mut().zip(noise).zip(&self.facebook_offsets[i]) {
                    *c += n + o;
                }
                let j = spec.facebook.crop_jitter as i64;
                let jitter = if j > 0 {
                    (rng.random_range(-j..=j), rng.random_range(-j..=j))
                } else {
                    (0, 0)
                };
                (rng, jitter)
            }
        };

        coeffs
            .iter_mut()
            .zip(&shift.drift)
            .for_each(|(c, d)| *c += d);
        let condition = shift.condition;
        let side = RASTER + 2 * self.pad;
        let pixel_sigma = spec.sigma_frame * PIXEL_NOISE_PER_FRAME_SIGMA;
        let pixel_noise = (pixel_sigma > 0.0).then(|| Normal::new(0.0, pixel_sigma).unwrap());
        let mut img = ImageBuffer::filled(RASTER as u32, RASTER as u32, [0, 0, 0])?;
        for y in 0..RASTER {
            for x in 0..RASTER {
                let sx = (x as i64 + self.pad as i64 + jitter.0) as usize;
                let sy = (y as i64 + self.pad as i64 + jitter.1) as usize;
                let p = sy * side + sx;
                let mut v = self.mean_face[p];
                for (c, b) in coeffs.iter().zip(&self.identity_basis) {
                    v += c * b[p] * AMPLITUDE;
                }
                for (c, b) in condition.iter().zip(&self.condition_basis) {
                    v += c * b[p] * AMPLITUDE;
                }
                if r.hard {
                    v += self.hard_offset[p];
                }
                if let Some(n) = &pixel_noise {
                    v += n.sample(&mut rng);
                }
                img.set(x as u32, y as u32, skin_tone(v));
            }
        }
        let rect = FaceRect::new(0, 0, RASTER as u32, RASTER as u32, Pose::Frontal);
        Ok((img, rect))
    }

    pub fn face(&self, r: &SampleRef) -> Result<PreprocessedFace, HarnessError> {
        let (img, rect) = self.render(r)?;
        preprocess(&img, &rect)?
            .face()
            .ok_or(HarnessError::Rejected(*r))
    }

    /// Renders many samples in parallel, preserving order.
    pub fn faces(&self, refs: &[SampleRef]) -> Result<Vec<PreprocessedFace>, HarnessError> {
        use rayon::prelude::*;
        refs.par_iter().map(|r| self.face(r)).collect()
    }

    /// Every sample in the corpus with its label, camera sessions first.
    pub fn samples(&self) -> Vec<SampleRef> {
        let mut out = Vec::new();
        for i in 0..self.total_identities() {
            for s in 0..self.spec.sessions_per_identity {
                for f in 0..self.spec.frames_per_session {
                    out.push(SampleRef::camera(i, s, f));
                }
            }
            for p in 0..self.spec.facebook_photos {
                out.push(SampleRef::facebook(i, p));
            }
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn normalize_rms(v: &mut [f64]) {
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    if rms > 0.0 {
        v.iter_mut().for_each(|x| *x /= rms);
    }
}

pub fn identity_id(index: usize) -> PersonId {
    PersonId::new(format!("p{index}"))
}

/// Grey-level face layout: darker eyes and mouth, lighter nose bridge.
fn mean_face_at(x: f64, y: f64) -> f64 {
    let blob = |cx: f64, cy: f64, sx: f64, sy: f64| {
        (-((x - cx).powi(2) / (2.0 * sx * sx) + (y - cy).powi(2) / (2.0 * sy * sy))).exp()
    };
    BASE_INTENSITY - 45.0 * blob(-10.0, -7.0, 3.5, 2.5) - 45.0 * blob(10.0, -7.0, 3.5, 2.5)
        + 15.0 * blob(0.0, 1.0, 2.5, 6.0)
        - 35.0 * blob(0.0, 14.0, 7.0, 2.5)
}

/// Maps an intensity to an RGB triple that always passes the skin test.
fn skin_tone(v: f64) -> [u8; 3] {
    let r = v.clamp(100.0, 250.0);
    [
        r.round() as u8,
        (r * 0.62).round() as u8,
        (r * 0.45).round() as u8,
    ]
}
