//! Face candidate handling: skin gating, canonical preprocessing and
//! binding of rough photo tags to detected rectangles.
//!
//! Detection itself is not performed here. Rectangles arrive from photo
//! fixtures or from the synthetic corpus, already labelled with a pose.

mod fixture;
mod image_buffer;
mod preprocess;
mod skin;
mod tagmatch;

pub use fixture::{load_photo_dir, PhotoFixture, PhotoSidecar, SidecarTag};
pub use image_buffer::{FaceRect, ImageBuffer, Pose};
pub use preprocess::{
    ellipse_mask, equalize_histogram, normalize_masked, preprocess, PreprocessOutcome,
    PreprocessedFace, Rejection, RASTER, SKIN_THRESHOLD,
};
pub use skin::{is_skin, skin_ratio};
pub use tagmatch::{match_tag, TagCenter, TagMatchResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FacekitError {
    #[error("rect ({x},{y},{w}x{h}) exceeds image bounds {width}x{height}")]
    OutOfBounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
    #[error("rect {w}x{h} is smaller than the 8x8 minimum")]
    TooSmall { w: u32, h: u32 },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("face vector and mask lengths differ ({values} vs {mask})")]
    MaskLength { values: usize, mask: usize },
    #[error("fixture: {0}")]
    Fixture(String),
}
