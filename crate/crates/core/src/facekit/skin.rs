use super::{FaceRect, FacekitError, ImageBuffer};

/// Fixed RGB inequality chain for skin pixels.
#[inline]
pub fn is_skin([r, g, b]: [u8; 3]) -> bool {
    let (r, g, b) = (r as i32, g as i32, b as i32);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    r > 95 && g > 40 && b > 20 && (max - min) > 15 && (r - g).abs() > 15 && r > g && r > b
}

/// Fraction of pixels inside `rect` that pass [`is_skin`].
pub fn skin_ratio(img: &ImageBuffer, rect: &FaceRect) -> Result<f64, FacekitError> {
    rect.check_within(img)?;
    let mut skin = 0u64;
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            if is_skin(img.get(x, y)) {
                skin += 1;
            }
        }
    }
    Ok(skin as f64 / rect.area() as f64)
}
