use serde::{Deserialize, Serialize};

use super::{skin_ratio, FaceRect, FacekitError, ImageBuffer};

/// Side of the canonical square raster.
pub const RASTER: usize = 64;

/// Minimum skin fraction for a candidate to be kept (inclusive).
pub const SKIN_THRESHOLD: f64 = 0.20;

const ELLIPSE_SEMI_X: f64 = 0.40;
const ELLIPSE_SEMI_Y: f64 = 0.48;

/// Masked, brightness-normalized face raster.
///
/// In-mask entries have zero mean and unit population standard deviation
/// (unless all in-mask values were equal, in which case they are all zero).
/// Out-of-mask entries are exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessedFace {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl PreprocessedFace {
    /// Wraps already-prepared values. Out-of-mask entries are forced to zero;
    /// no renormalization is applied.
    pub fn from_parts(mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self, FacekitError> {
        if values.len() != mask.len() {
            return Err(FacekitError::MaskLength {
                values: values.len(),
                mask: mask.len(),
            });
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(Self { values, mask })
    }

    /// Masks and normalizes a raw raster.
    pub fn normalized(mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self, FacekitError> {
        if values.len() != mask.len() {
            return Err(FacekitError::MaskLength {
                values: values.len(),
                mask: mask.len(),
            });
        }
        normalize_masked(&mut values, &mask);
        Ok(Self { values, mask })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// In-mask values in raster order.
    pub fn masked_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    LowSkin { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessOutcome {
    Face(PreprocessedFace),
    Rejected(Rejection),
}

impl PreprocessOutcome {
    pub fn face(self) -> Option<PreprocessedFace> {
        match self {
            PreprocessOutcome::Face(f) => Some(f),
            PreprocessOutcome::Rejected(_) => None,
        }
    }
}

/// Skin gate, grayscale resample to [`RASTER`]², histogram equalization,
/// elliptical mask, then per-face normalization over in-mask pixels.
pub fn preprocess(img: &ImageBuffer, rect: &FaceRect) -> Result<PreprocessOutcome, FacekitError> {
    let ratio = skin_ratio(img, rect)?;
    if ratio < SKIN_THRESHOLD {
        return Ok(PreprocessOutcome::Rejected(Rejection::LowSkin { ratio }));
    }
    let gray = resample_gray(img, rect);
    let equalized = equalize_histogram(&gray);
    let values = equalized.into_iter().map(f64::from).collect();
    let face = PreprocessedFace::normalized(values, ellipse_mask(RASTER))?;
    Ok(PreprocessOutcome::Face(face))
}

fn luma([r, g, b]: [u8; 3]) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Bilinear resample of the rect's luma to a RASTER×RASTER grid, using
/// pixel-center alignment, quantized to 8 bits.
fn resample_gray(img: &ImageBuffer, rect: &FaceRect) -> Vec<u8> {
    let sx = rect.w as f64 / RASTER as f64;
    let sy = rect.h as f64 / RASTER as f64;
    let max_x = (rect.w - 1) as f64;
    let max_y = (rect.h - 1) as f64;
    let sample = |px: u32, py: u32| luma(img.get(rect.x + px, rect.y + py));

    let mut out = Vec::with_capacity(RASTER * RASTER);
    for ty in 0..RASTER {
        let fy = ((ty as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as u32;
        let y1 = (y0 + 1).min(rect.h - 1);
        let wy = fy - y0 as f64;
        for tx in 0..RASTER {
            let fx = ((tx as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as u32;
            let x1 = (x0 + 1).min(rect.w - 1);
            let wx = fx - x0 as f64;
            let top = sample(x0, y0) * (1.0 - wx) + sample(x1, y0) * wx;
            let bottom = sample(x0, y1) * (1.0 - wx) + sample(x1, y1) * wx;
            let v = top * (1.0 - wy) + bottom * wy;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// Classic CDF remapping to the full 0..=255 range. A constant input maps
/// to all zeros.
pub fn equalize_histogram(gray: &[u8]) -> Vec<u8> {
    let mut hist = [0u64; 256];
    for &g in gray {
        hist[g as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let n = gray.len() as u64;
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return vec![0; gray.len()];
    }
    let span = (n - cdf_min) as f64;
    gray.iter()
        .map(|&g| (((cdf[g as usize] - cdf_min) as f64 / span) * 255.0).round() as u8)
        .collect()
}

/// Ellipse centered on the raster with semi-axes 0.40·side (horizontal)
/// and 0.48·side (vertical), evaluated at pixel centers.
pub fn ellipse_mask(side: usize) -> Vec<bool> {
    let c = side as f64 / 2.0;
    let ax = ELLIPSE_SEMI_X * side as f64;
    let ay = ELLIPSE_SEMI_Y * side as f64;
    let mut mask = Vec::with_capacity(side * side);
    for y in 0..side {
        let dy = (y as f64 + 0.5 - c) / ay;
        for x in 0..side {
            let dx = (x as f64 + 0.5 - c) / ax;
            mask.push(dx * dx + dy * dy <= 1.0);
        }
    }
    mask
}

/// Shifts and scales in-mask entries to mean 0 / population std 1 and zeroes
/// everything outside the mask. With fewer than two distinct in-mask values
/// the in-mask entries become 0.
pub fn normalize_masked(values: &mut [f64], mask: &[bool]) {
    debug_assert_eq!(values.len(), mask.len());
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let in_mask = || values.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v);
    let mean = in_mask().sum::<f64>() / n as f64;
    let var = in_mask().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    for (v, &m) in values.iter_mut().zip(mask) {
        *v = if !m {
            0.0
        } else if std > 0.0 {
            (*v - mean) / std
        } else {
            0.0
        };
    }
}
