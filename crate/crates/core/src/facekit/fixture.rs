//! Photo fixture directories: `<stem>.png` plus a `<stem>.json` sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{match_tag, FaceRect, FacekitError, ImageBuffer, TagCenter, TagMatchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarTag {
    pub person_id: String,
    pub cx: f64,
    pub cy: f64,
}

impl SidecarTag {
    pub fn center(&self) -> TagCenter {
        TagCenter::new(self.cx, self.cy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoSidecar {
    pub photo_id: String,
    #[serde(default)]
    pub owner: Option<String>,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default)]
    pub detections: Vec<FaceRect>,
    #[serde(default)]
    pub tags: Vec<SidecarTag>,
}

impl PhotoSidecar {
    pub fn match_tags(&self) -> Vec<(SidecarTag, TagMatchResult)> {
        self.tags
            .iter()
            .map(|t| (t.clone(), match_tag(t.center(), &self.detections)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PhotoFixture {
    pub sidecar: PhotoSidecar,
    pub image_path: Option<PathBuf>,
    pub image: Option<ImageBuffer>,
}

impl PhotoFixture {
    /// Rejects detections that do not fit inside the decoded image.
    pub fn validate(&self) -> Result<(), FacekitError> {
        if let Some(img) = &self.image {
            for d in &self.sidecar.detections {
                d.check_within(img)?;
            }
        }
        Ok(())
    }
}

/// Reads every `*.json` sidecar in `dir` (sorted by file name) together with
/// its sibling PNG when one exists.
pub fn load_photo_dir(dir: &Path) -> Result<Vec<PhotoFixture>, FacekitError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| FacekitError::Fixture(format!("{}: {e}", dir.display())))?;
    let mut sidecars: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    sidecars.sort();

    let mut out = Vec::with_capacity(sidecars.len());
    for path in sidecars {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| FacekitError::Fixture(format!("{}: {e}", path.display())))?;
        let sidecar: PhotoSidecar = serde_json::from_str(&text)
            .map_err(|e| FacekitError::Fixture(format!("{}: {e}", path.display())))?;
        let png = path.with_extension("png");
        let (image_path, image) = if png.exists() {
            let img = ImageBuffer::load_png(&png)?;
            (Some(png), Some(img))
        } else {
            (None, None)
        };
        let fixture = PhotoFixture {
            sidecar,
            image_path,
            image,
        };
        fixture.validate()?;
        out.push(fixture);
    }
    Ok(out)
}
