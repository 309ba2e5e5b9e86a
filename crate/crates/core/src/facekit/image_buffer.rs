use serde::{Deserialize, Serialize};

use super::FacekitError;

/// Row-major 8-bit RGB frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self, FacekitError> {
        if width == 0 || height == 0 {
            return Err(FacekitError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(FacekitError::InvalidImage(format!(
                "expected {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, FacekitError> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    /// Builds an image from a flat `[r, g, b, r, g, b, ...]` byte slice.
    pub fn from_rgb_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self, FacekitError> {
        if !bytes.len().is_multiple_of(3) {
            return Err(FacekitError::InvalidImage(
                "byte length is not a multiple of 3".into(),
            ));
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn load_png(path: &std::path::Path) -> Result<Self, FacekitError> {
        let img = image::open(path)
            .map_err(|e| FacekitError::InvalidImage(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Self::from_rgb_bytes(w, h, img.as_raw())
    }

    pub fn save_png(&self, path: &std::path::Path) -> Result<(), FacekitError> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::RgbImage::from_raw(self.width, self.height, raw)
            .expect("dimensions checked at construction")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| FacekitError::InvalidImage(format!("{}: {e}", path.display())))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = rgb;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pose {
    Frontal,
    Profile,
}

/// Candidate face region in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub pose: Pose,
}

impl FaceRect {
    pub const MIN_SIDE: u32 = 8;

    pub fn new(x: u32, y: u32, w: u32, h: u32, pose: Pose) -> Self {
        Self { x, y, w, h, pose }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Checks the size minimum and that the rect lies fully inside `img`.
    pub fn check_within(&self, img: &ImageBuffer) -> Result<(), FacekitError> {
        if self.w < Self::MIN_SIDE || self.h < Self::MIN_SIDE {
            return Err(FacekitError::TooSmall {
                w: self.w,
                h: self.h,
            });
        }
        let fits_x = (self.x as u64 + self.w as u64) <= img.width() as u64;
        let fits_y = (self.y as u64 + self.h as u64) <= img.height() as u64;
        if !fits_x || !fits_y {
            return Err(FacekitError::OutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width: img.width(),
                height: img.height(),
            });
        }
        Ok(())
    }
}
