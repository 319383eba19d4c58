//! Consensus detections from multiple detectors: per-detector confidence
//! thresholding, greedy IoU grouping per class, and group merging.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};

/// Class label used by the framing and statistics pipelines.
pub const PERSON_CLASS: &str = "person";

/// One class-labeled, confidence-scored box from a single detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub class_label: String,
    pub confidence: f64,
    pub detector_id: String,
}

impl Detection {
    pub fn new(
        bbox: BoundingBox,
        class_label: impl Into<String>,
        confidence: f64,
        detector_id: impl Into<String>,
    ) -> Result<Self> {
        let class_label = class_label.into();
        if class_label.is_empty() {
            return Err(Error::invalid("detection class label must be non-empty"));
        }
        if !(0.0..=1.0).contains(&confidence) || confidence.is_nan() {
            return Err(Error::invalid(format!(
                "confidence must lie in [0, 1], got {confidence}"
            )));
        }
        Ok(Self {
            bbox,
            class_label,
            confidence,
            detector_id: detector_id.into(),
        })
    }
}

/// How a group of same-object detections is collapsed into one box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeStrategy {
    /// Arithmetic mean of each of the four coordinates over group members.
    MeanCoordinates,
    /// The max-confidence member's box verbatim.
    HighestConfidence,
}

/// Thresholds and grouping parameters for detector fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Minimum confidence per detector id; detections at exactly the
    /// threshold are kept.
    pub per_detector_thresholds: BTreeMap<String, f64>,
    /// Two boxes of one class belong to the same object when their IoU
    /// strictly exceeds this value.
    pub grouping_iou_threshold: f64,
    pub merge_strategy: MergeStrategy,
}

impl Default for FusionConfig {
    fn default() -> Self {
        let per_detector_thresholds = [
            ("mask_rcnn", 0.7),
            ("retinanet", 0.3),
            ("ssd", 0.5),
            ("yolov3", 0.6),
        ]
        .into_iter()
        .map(|(id, t)| (id.to_string(), t))
        .collect();
        Self {
            per_detector_thresholds,
            grouping_iou_threshold: 0.1,
            merge_strategy: MergeStrategy::MeanCoordinates,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let theta = self.grouping_iou_threshold;
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!(
                "grouping IoU threshold must lie in (0, 1], got {theta}"
            )));
        }
        for (id, t) in &self.per_detector_thresholds {
            if !(0.0..=1.0).contains(t) || t.is_nan() {
                return Err(Error::invalid(format!(
                    "confidence threshold for detector `{id}` must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// The merged consensus detection for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedDetection {
    pub bbox: BoundingBox,
    pub class_label: String,
    pub confidence: f64,
    pub members: Vec<Detection>,
    pub source_detectors: BTreeSet<String>,
}

/// Drops detections scoring below their detector's threshold, preserving order.
///
/// Every detection's `detector_id` must have a configured threshold.
pub fn apply_confidence_thresholds(
    detections: &[Detection],
    config: &FusionConfig,
) -> Result<Vec<Detection>> {
    let mut kept = Vec::with_capacity(detections.len());
    for d in detections {
        let threshold = config
            .per_detector_thresholds
            .get(&d.detector_id)
            .ok_or_else(|| Error::UnknownDetector(d.detector_id.clone()))?;
        if d.confidence >= *threshold {
            kept.push(d.clone());
        }
    }
    Ok(kept)
}

/// Total order: confidence descending, then detector id and coordinates so
/// that permuting the input never changes downstream results.
fn canonical_cmp(a: &Detection, b: &Detection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.detector_id.cmp(&b.detector_id))
        .then_with(|| a.bbox.x_min.total_cmp(&b.bbox.x_min))
        .then_with(|| a.bbox.y_min.total_cmp(&b.bbox.y_min))
        .then_with(|| a.bbox.x_max.total_cmp(&b.bbox.x_max))
        .then_with(|| a.bbox.y_max.total_cmp(&b.bbox.y_max))
        .then_with(|| a.class_label.cmp(&b.class_label))
}

/// Greedy same-object grouping over detections of a single class.
///
/// Detections are sorted by descending confidence; the most confident box
/// seeds a group, every remaining box with IoU strictly above `theta` joins
/// it, the group is removed, and the process repeats. Each detection lands in
/// exactly one group.
pub fn group_by_iou(detections: &[Detection], theta: f64) -> Vec<Vec<Detection>> {
    debug_assert!(
        detections
            .windows(2)
            .all(|w| w[0].class_label == w[1].class_label),
        "group_by_iou expects single-class input"
    );
    let mut sorted: Vec<Detection> = detections.to_vec();
    sorted.sort_by(canonical_cmp);

    type Indexed = Vec<(usize, Detection)>;
    let mut groups = Vec::new();
    let mut remaining = sorted;
    while let Some(seed) = remaining.first().cloned() {
        let (members, rest): (Indexed, Indexed) = remaining
            .into_iter()
            .enumerate()
            .partition(|(i, d)| *i == 0 || iou(&seed.bbox, &d.bbox) > theta);
        groups.push(members.into_iter().map(|(_, d)| d).collect());
        remaining = rest.into_iter().map(|(_, d)| d).collect();
    }
    groups
}

/// Collapses one group into a [`FusedDetection`].
///
/// Fused confidence is the max over members, sidestepping cross-detector
/// score calibration while preserving ranking.
pub fn merge_group(group: &[Detection], strategy: MergeStrategy) -> Result<FusedDetection> {
    let Some(first) = group.first() else {
        return Err(Error::invalid("cannot merge an empty detection group"));
    };
    let mut members: Vec<Detection> = group.to_vec();
    members.sort_by(canonical_cmp);

    let n = members.len() as f64;
    let bbox = match strategy {
        MergeStrategy::MeanCoordinates => BoundingBox {
            x_min: members.iter().map(|d| d.bbox.x_min).sum::<f64>() / n,
            y_min: members.iter().map(|d| d.bbox.y_min).sum::<f64>() / n,
            x_max: members.iter().map(|d| d.bbox.x_max).sum::<f64>() / n,
            y_max: members.iter().map(|d| d.bbox.y_max).sum::<f64>() / n,
        },
        // members are in canonical order: the first is the max-confidence one
        MergeStrategy::HighestConfidence => members[0].bbox,
    };
    let confidence = members
        .iter()
        .map(|d| d.confidence)
        .fold(f64::NEG_INFINITY, f64::max);
    let source_detectors = members.iter().map(|d| d.detector_id.clone()).collect();

    Ok(FusedDetection {
        bbox,
        class_label: first.class_label.clone(),
        confidence,
        members,
        source_detectors,
    })
}

/// Full per-image fusion: threshold, partition by class, group by IoU, merge.
///
/// Output is sorted by descending fused confidence with ties broken by
/// (class, x_min, y_min), so the result is independent of input order.
pub fn fuse_image(detections: &[Detection], config: &FusionConfig) -> Result<Vec<FusedDetection>> {
    config.validate()?;
    let kept = apply_confidence_thresholds(detections, config)?;

    let mut by_class: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for d in kept {
        by_class.entry(d.class_label.clone()).or_default().push(d);
    }

    let mut fused = Vec::new();
    for class_detections in by_class.values() {
        for group in group_by_iou(class_detections, config.grouping_iou_threshold) {
            fused.push(merge_group(&group, config.merge_strategy)?);
        }
    }
    fused.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.class_label.cmp(&b.class_label))
            .then_with(|| a.bbox.x_min.total_cmp(&b.bbox.x_min))
            .then_with(|| a.bbox.y_min.total_cmp(&b.bbox.y_min))
            .then_with(|| a.bbox.x_max.total_cmp(&b.bbox.x_max))
            .then_with(|| a.bbox.y_max.total_cmp(&b.bbox.y_max))
    });
    Ok(fused)
}

/// Fuses many images in one call, index-aligned with the input. Images are
/// processed on the rayon pool when the `parallel` feature is enabled; the
/// result is the same either way.
pub fn fuse_images(
    per_image: &[Vec<Detection>],
    config: &FusionConfig,
) -> Result<Vec<Vec<FusedDetection>>> {
    crate::par::map_items(per_image, |detections| fuse_image(detections, config))
        .into_iter()
        .collect()
}

/// Sequential twin of [`fuse_images`] for benchmarking.
pub fn fuse_images_seq(
    per_image: &[Vec<Detection>],
    config: &FusionConfig,
) -> Result<Vec<Vec<FusedDetection>>> {
    crate::par::map_items_seq(per_image, |detections| fuse_image(detections, config))
        .into_iter()
        .collect()
}
