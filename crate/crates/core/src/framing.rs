//! Framing classification of person-containing photographs (close-up /
//! medium shot / overall shot) by the largest person box's area fraction.

use serde::{Deserialize, Serialize};

use crate::analytics::PhotoRecord;
use crate::error::{Error, Result};
use crate::fusion::{FusedDetection, PERSON_CLASS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FramingClass {
    CloseUp,
    MediumShot,
    OverallShot,
}

impl FramingClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            FramingClass::CloseUp => "close_up",
            FramingClass::MediumShot => "medium_shot",
            FramingClass::OverallShot => "overall_shot",
        }
    }
}

/// Area-fraction thresholds separating the three framing classes.
///
/// A photo is a close-up when the largest person box covers strictly more
/// than `closeup_min_fraction` of the image, an overall shot when it covers
/// strictly less than `overall_max_fraction`, and a medium shot otherwise
/// (boundary values inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramingConfig {
    pub closeup_min_fraction: f64,
    pub overall_max_fraction: f64,
}

impl Default for FramingConfig {
    fn default() -> Self {
        Self {
            closeup_min_fraction: 0.65,
            overall_max_fraction: 0.10,
        }
    }
}

impl FramingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.overall_max_fraction
            && self.overall_max_fraction < self.closeup_min_fraction
            && self.closeup_min_fraction < 1.0)
        {
            return Err(Error::invalid(format!(
                "framing thresholds must satisfy 0 < overall < closeup < 1, got overall={} closeup={}",
                self.overall_max_fraction, self.closeup_min_fraction
            )));
        }
        Ok(())
    }
}

/// Classifies one photo, or returns `None` when it contains no person.
///
/// The deciding box is the largest-area person detection, clipped to image
/// bounds before the area computation.
pub fn classify_framing(
    detections: &[FusedDetection],
    image_width: u32,
    image_height: u32,
    config: &FramingConfig,
) -> Result<Option<FramingClass>> {
    config.validate()?;
    if image_width == 0 || image_height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {image_width}x{image_height}"
        )));
    }

    let largest_fraction = detections
        .iter()
        .filter(|d| d.class_label == PERSON_CLASS)
        .map(|d| {
            d.bbox
                .clip_to_image(image_width, image_height)
                .area()
        })
        .fold(None, |acc: Option<f64>, area| {
            Some(acc.map_or(area, |a| a.max(area)))
        })
        .map(|area| area / (f64::from(image_width) * f64::from(image_height)));

    let Some(fraction) = largest_fraction else {
        return Ok(None);
    };
    let class = if fraction > config.closeup_min_fraction {
        FramingClass::CloseUp
    } else if fraction < config.overall_max_fraction {
        FramingClass::OverallShot
    } else {
        FramingClass::MediumShot
    };
    Ok(Some(class))
}

/// Per-photographer framing breakdown over person-containing photos.
///
/// `fractions` is `None` for photographers with no person photos; when
/// present the three fractions sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingBreakdown {
    pub photographer_id: String,
    pub person_photo_count: usize,
    pub fractions: Option<FramingFractions>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramingFractions {
    pub close_up: f64,
    pub medium_shot: f64,
    pub overall_shot: f64,
}

/// Framing category shares per photographer, ordered by photographer id.
pub fn framing_distribution(
    photos: &[PhotoRecord],
    config: &FramingConfig,
) -> Result<Vec<FramingBreakdown>> {
    config.validate()?;
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for photo in photos {
        let tally = counts.entry(&photo.photographer_id).or_insert([0; 3]);
        match classify_framing(
            &photo.fused_detections,
            photo.image_width,
            photo.image_height,
            config,
        )? {
            Some(FramingClass::CloseUp) => tally[0] += 1,
            Some(FramingClass::MediumShot) => tally[1] += 1,
            Some(FramingClass::OverallShot) => tally[2] += 1,
            None => {}
        }
    }

    Ok(counts
        .into_iter()
        .map(|(photographer_id, [close, medium, overall])| {
            let total = close + medium + overall;
            let fractions = (total > 0).then(|| FramingFractions {
                close_up: close as f64 / total as f64,
                medium_shot: medium as f64 / total as f64,
                overall_shot: overall as f64 / total as f64,
            });
            FramingBreakdown {
                photographer_id: photographer_id.to_string(),
                person_photo_count: total,
                fractions,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{merge_group, Detection, MergeStrategy};
    use crate::geometry::BoundingBox;

    fn person_box(x0: f64, y0: f64, x1: f64, y1: f64) -> FusedDetection {
        let d = Detection::new(
            BoundingBox::new(x0, y0, x1, y1).unwrap(),
            PERSON_CLASS,
            0.9,
            "ssd",
        )
        .unwrap();
        merge_group(&[d], MergeStrategy::MeanCoordinates).unwrap()
    }

    fn fused(class: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> FusedDetection {
        let d = Detection::new(
            BoundingBox::new(x0, y0, x1, y1).unwrap(),
            class,
            0.9,
            "ssd",
        )
        .unwrap();
        merge_group(&[d], MergeStrategy::MeanCoordinates).unwrap()
    }

    #[test]
    fn closeup_above_threshold() {
        // 70% of a 100x100 frame
        let dets = vec![person_box(0.0, 0.0, 100.0, 70.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::CloseUp));
    }

    #[test]
    fn overall_below_threshold() {
        // 5%
        let dets = vec![person_box(0.0, 0.0, 10.0, 50.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::OverallShot));
    }

    #[test]
    fn no_person_is_excluded() {
        let dets = vec![fused("horse", 0.0, 0.0, 100.0, 100.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, None);
        assert_eq!(
            classify_framing(&[], 100, 100, &FramingConfig::default()).unwrap(),
            None
        );
    }

    #[test]
    fn largest_person_box_decides() {
        // 8% and 40%: the 40% box wins, medium shot
        let dets = vec![
            person_box(0.0, 0.0, 10.0, 80.0),
            person_box(20.0, 20.0, 60.0, 120.0),
        ];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::MediumShot));
    }

    #[test]
    fn boundary_values_are_medium() {
        let dets = vec![person_box(0.0, 0.0, 100.0, 65.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::MediumShot), "exactly 65%");
        let dets = vec![person_box(0.0, 0.0, 100.0, 10.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::MediumShot), "exactly 10%");
    }

    #[test]
    fn scale_invariance() {
        let config = FramingConfig::default();
        for scale in [1.0, 3.0, 7.5] {
            let dets = vec![person_box(0.0, 0.0, 30.0 * scale, 60.0 * scale)];
            let class = classify_framing(
                &dets,
                (100.0 * scale) as u32,
                (100.0 * scale) as u32,
                &config,
            )
            .unwrap();
            assert_eq!(class, Some(FramingClass::MediumShot));
        }
    }

    #[test]
    fn oversized_boxes_are_clipped() {
        // Box spills past the frame; clipped it covers the whole image.
        let dets = vec![person_box(-10.0, -10.0, 110.0, 110.0)];
        let class = classify_framing(&dets, 100, 100, &FramingConfig::default()).unwrap();
        assert_eq!(class, Some(FramingClass::CloseUp));
    }

    #[test]
    fn invalid_dimensions_rejected() {
        let dets = vec![person_box(0.0, 0.0, 10.0, 10.0)];
        assert!(classify_framing(&dets, 0, 100, &FramingConfig::default()).is_err());
    }

    #[test]
    fn config_ordering_enforced() {
        let bad = FramingConfig {
            closeup_min_fraction: 0.1,
            overall_max_fraction: 0.65,
        };
        assert!(bad.validate().is_err());
    }

    fn photo_with_person_fraction(id: &str, photographer: &str, percent: f64) -> PhotoRecord {
        let detections = if percent > 0.0 {
            vec![person_box(0.0, 0.0, 100.0, percent)]
        } else {
            Vec::new()
        };
        PhotoRecord {
            photo_id: id.to_string(),
            photographer_id: photographer.to_string(),
            capture_date: None,
            image_width: 100,
            image_height: 100,
            fused_detections: detections,
        }
    }

    #[test]
    fn distribution_counts_by_hand() {
        // close-up, close-up, overall, medium -> (0.5, 0.25, 0.25)
        let photos = vec![
            photo_with_person_fraction("p1", "a", 80.0),
            photo_with_person_fraction("p2", "a", 70.0),
            photo_with_person_fraction("p3", "a", 5.0),
            photo_with_person_fraction("p4", "a", 40.0),
        ];
        let dist = framing_distribution(&photos, &FramingConfig::default()).unwrap();
        assert_eq!(dist.len(), 1);
        let f = dist[0].fractions.unwrap();
        assert_eq!(f.close_up, 0.5);
        assert_eq!(f.medium_shot, 0.25);
        assert_eq!(f.overall_shot, 0.25);
        assert_eq!(dist[0].person_photo_count, 4);
    }

    #[test]
    fn distribution_empty_marker_for_no_person_photos() {
        let photos = vec![photo_with_person_fraction("p1", "a", 0.0)];
        let dist = framing_distribution(&photos, &FramingConfig::default()).unwrap();
        assert_eq!(dist[0].fractions, None);
        assert_eq!(dist[0].person_photo_count, 0);
    }

    #[test]
    fn distribution_single_closeup() {
        let photos = vec![photo_with_person_fraction("p1", "a", 90.0)];
        let dist = framing_distribution(&photos, &FramingConfig::default()).unwrap();
        let f = dist[0].fractions.unwrap();
        assert_eq!((f.close_up, f.medium_shot, f.overall_shot), (1.0, 0.0, 0.0));
    }

    #[test]
    fn enlarging_the_person_box_never_moves_toward_overall() {
        let config = FramingConfig::default();
        let rank = |class: FramingClass| match class {
            FramingClass::OverallShot => 0,
            FramingClass::MediumShot => 1,
            FramingClass::CloseUp => 2,
        };
        let mut previous = 0;
        for size in (5..=100).step_by(5) {
            let dets = vec![person_box(0.0, 0.0, f64::from(size), 100.0)];
            let class = classify_framing(&dets, 100, 100, &config).unwrap().unwrap();
            assert!(rank(class) >= previous, "class regressed at size {size}");
            previous = rank(class);
        }
    }

    #[test]
    fn distribution_fractions_sum_to_one() {
        let photos: Vec<PhotoRecord> = (0..37)
            .map(|i| {
                photo_with_person_fraction(
                    &format!("p{i}"),
                    &format!("ph{}", i % 3),
                    (i * 7 % 100) as f64,
                )
            })
            .collect();
        for breakdown in framing_distribution(&photos, &FramingConfig::default()).unwrap() {
            if let Some(f) = breakdown.fractions {
                assert!((f.close_up + f.medium_shot + f.overall_shot - 1.0).abs() <= 1e-12);
            }
        }
    }
}
