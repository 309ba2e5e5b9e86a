use serde::{Deserialize, Serialize};

use super::{FaceRect, Pose};

/// User-supplied rough face center, in the photo's pixel space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagCenter {
    pub x: f64,
    pub y: f64,
}

impl TagCenter {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TagMatchResult {
    /// `index` is the position of `rect` in the detection list.
    Matched {
        index: usize,
        rect: FaceRect,
    },
    DiscardedProfile {
        index: usize,
    },
    NoDetections,
}

impl TagMatchResult {
    pub fn matched_rect(&self) -> Option<&FaceRect> {
        match self {
            TagMatchResult::Matched { rect, .. } => Some(rect),
            _ => None,
        }
    }
}

/// Binds a tag to the detection whose center is nearest. A profile-pose
/// nearest detection discards the tag outright, even when a frontal face
/// sits just behind it.
///
/// Ties on distance prefer frontal detections, then the lowest list index.
pub fn match_tag(tag: TagCenter, detections: &[FaceRect]) -> TagMatchResult {
    let nearest = detections
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (cx, cy) = r.center();
            let d2 = (cx - tag.x).powi(2) + (cy - tag.y).powi(2);
            (d2, pose_rank(r.pose), i)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    match nearest {
        None => TagMatchResult::NoDetections,
        Some((_, _, i)) => match detections[i].pose {
            Pose::Frontal => TagMatchResult::Matched {
                index: i,
                rect: detections[i],
            },
            Pose::Profile => TagMatchResult::DiscardedProfile { index: i },
        },
    }
}

fn pose_rank(p: Pose) -> u8 {
    match p {
        Pose::Frontal => 0,
        Pose::Profile => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centered(cx: u32, cy: u32, pose: Pose) -> FaceRect {
        FaceRect::new(cx - 4, cy - 4, 8, 8, pose)
    }

    #[test]
    fn single_frontal_at_tag() {
        let r = centered(50, 50, Pose::Frontal);
        assert_eq!(
            match_tag(TagCenter::new(50.0, 50.0), &[r]),
            TagMatchResult::Matched { index: 0, rect: r }
        );
    }

    #[test]
    fn nearest_profile_is_discarded() {
        let dets = [
            centered(10, 10, Pose::Frontal),
            centered(12, 12, Pose::Profile),
        ];
        assert_eq!(
            match_tag(TagCenter::new(13.0, 13.0), &dets),
            TagMatchResult::DiscardedProfile { index: 1 }
        );
    }

    #[test]
    fn empty_list() {
        assert_eq!(
            match_tag(TagCenter::new(1.0, 2.0), &[]),
            TagMatchResult::NoDetections
        );
    }

    #[test]
    fn ties_prefer_frontal_then_index() {
        let dets = [
            centered(10, 20, Pose::Profile),
            centered(30, 20, Pose::Frontal),
            centered(20, 30, Pose::Frontal),
        ];
        // tag at (20,20): all three at distance 10
        assert_eq!(
            match_tag(TagCenter::new(20.0, 20.0), &dets),
            TagMatchResult::Matched {
                index: 1,
                rect: dets[1]
            }
        );
    }
}
