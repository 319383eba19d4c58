//! Canonical on-disk formats. Every writer here is deterministic: stable
//! column order, sorted rows, LF line endings, `.` decimal separator, and
//! floats at 9 significant digits, so re-running a pipeline with identical
//! inputs is byte-identical.

use serde::{Deserialize, Serialize};

use crate::analytics::{PhotoRecord, PhotographerStats, SplitAssignment};
use crate::error::Result;
use crate::framing::FramingBreakdown;
use crate::fusion::{Detection, FusedDetection};
use crate::geometry::BoundingBox;
use crate::ingest::ManifestEntry;
use crate::similarity::{DistanceMatrix, FeatureVector, TsneEmbedding};

/// Formats with 9 significant digits, plain decimal notation.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

// --- fused.json -----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedArchive {
    pub photos: Vec<FusedPhoto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedPhoto {
    pub photo_id: String,
    pub photographer_id: String,
    pub capture_date: Option<String>,
    pub image_width: u32,
    pub image_height: u32,
    pub detections: Vec<FusedDetectionDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedDetectionDto {
    pub class: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub members: Vec<MemberDto>,
    pub source_detectors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDto {
    pub detector_id: String,
    pub class: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

impl From<&FusedDetection> for FusedDetectionDto {
    fn from(f: &FusedDetection) -> Self {
        Self {
            class: f.class_label.clone(),
            confidence: f.confidence,
            bbox: [f.bbox.x_min, f.bbox.y_min, f.bbox.x_max, f.bbox.y_max],
            members: f
                .members
                .iter()
                .map(|m| MemberDto {
                    detector_id: m.detector_id.clone(),
                    class: m.class_label.clone(),
                    confidence: m.confidence,
                    bbox: [m.bbox.x_min, m.bbox.y_min, m.bbox.x_max, m.bbox.y_max],
                })
                .collect(),
            source_detectors: f.source_detectors.iter().cloned().collect(),
        }
    }
}

impl FusedDetectionDto {
    pub fn to_fused_detection(&self) -> Result<FusedDetection> {
        let members = self
            .members
            .iter()
            .map(|m| {
                Detection::new(
                    BoundingBox::new(m.bbox[0], m.bbox[1], m.bbox[2], m.bbox[3])?,
                    m.class.clone(),
                    m.confidence,
                    m.detector_id.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FusedDetection {
            bbox: BoundingBox::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])?,
            class_label: self.class.clone(),
            confidence: self.confidence,
            members,
            source_detectors: self.source_detectors.iter().cloned().collect(),
        })
    }
}

/// Assembles the fused archive document; photos sorted by id.
pub fn fused_archive(
    entries: &[(&ManifestEntry, Vec<FusedDetection>)],
) -> FusedArchive {
    let mut photos: Vec<FusedPhoto> = entries
        .iter()
        .map(|(entry, fused)| FusedPhoto {
            photo_id: entry.photo_id.clone(),
            photographer_id: entry.photographer_id.clone(),
            capture_date: entry.capture_date.map(|d| d.to_string()),
            image_width: entry.image_width,
            image_height: entry.image_height,
            detections: fused.iter().map(FusedDetectionDto::from).collect(),
        })
        .collect();
    photos.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
    FusedArchive { photos }
}

pub fn fused_json(archive: &FusedArchive) -> Result<String> {
    let mut out = serde_json::to_string_pretty(archive)?;
    out.push('\n');
    Ok(out)
}

pub fn read_fused_json(text: &str) -> Result<Vec<PhotoRecord>> {
    let archive: FusedArchive = serde_json::from_str(text)?;
    archive
        .photos
        .iter()
        .map(|photo| {
            let fused_detections = photo
                .detections
                .iter()
                .map(|d| d.to_fused_detection())
                .collect::<Result<Vec<_>>>()?;
            Ok(PhotoRecord {
                photo_id: photo.photo_id.clone(),
                photographer_id: photo.photographer_id.clone(),
                capture_date: photo
                    .capture_date
                    .as_deref()
                    .and_then(|d| d.parse().ok()),
                image_width: photo.image_width,
                image_height: photo.image_height,
                fused_detections,
            })
        })
        .collect()
}

// --- CSV outputs ----------------------------------------------------------

pub fn framing_csv(breakdowns: &[FramingBreakdown]) -> String {
    let mut out = String::from(
        "photographer_id,person_photos,close_up_fraction,medium_shot_fraction,overall_shot_fraction\n",
    );
    for b in breakdowns {
        match &b.fractions {
            Some(f) => out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.photographer_id,
                b.person_photo_count,
                fmt_float(f.close_up),
                fmt_float(f.medium_shot),
                fmt_float(f.overall_shot)
            )),
            None => out.push_str(&format!("{},0,,,\n", b.photographer_id)),
        }
    }
    out
}

/// One row per photographer; per-class columns follow the given class order.
pub fn stats_csv(stats: &[PhotographerStats], class_order: &[String]) -> String {
    let mut out = String::from(
        "photographer_id,photos,objects_per_image,person_image_ratio,persons_per_person_image",
    );
    for class in class_order {
        out.push_str(&format!(",{class}_per_100"));
    }
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{}",
            s.photographer_id,
            s.photo_count,
            fmt_float(s.objects_per_image),
            fmt_float(s.person_image_ratio),
            s.persons_per_person_image
                .map(fmt_float)
                .unwrap_or_default(),
        ));
        for class in class_order {
            let rate = s.per_class_per_100_images.get(class).copied().unwrap_or(0.0);
            out.push_str(&format!(",{}", fmt_float(rate)));
        }
        out.push('\n');
    }
    out
}

pub fn split_csv(assignment: &SplitAssignment) -> String {
    let mut out = String::from("photo_id,split\n");
    for (photo_id, split) in assignment.iter() {
        out.push_str(&format!("{photo_id},{}\n", split.as_str()));
    }
    out
}

pub fn weights_csv(weights: &crate::analytics::ClassWeights) -> String {
    let mut out = String::from("class,count,weight\n");
    for ((class, count), weight) in weights
        .classes()
        .iter()
        .zip(weights.counts())
        .zip(weights.weights())
    {
        out.push_str(&format!("{class},{count},{}\n", fmt_float(*weight)));
    }
    out
}

/// Square matrix with a leading header row and column of photographer ids.
pub fn distance_matrix_csv(matrix: &DistanceMatrix) -> String {
    let mut out = String::from("photographer_id");
    for id in matrix.ids() {
        out.push_str(&format!(",{id}"));
    }
    out.push('\n');
    for (i, id) in matrix.ids().iter().enumerate() {
        out.push_str(id);
        for j in 0..matrix.size() {
            out.push_str(&format!(",{}", fmt_float(matrix.get(i, j))));
        }
        out.push('\n');
    }
    out
}

pub fn embedding_csv(features: &[FeatureVector], embedding: &TsneEmbedding) -> String {
    let mut out = String::from("photo_id,photographer_id,x,y\n");
    for (f, point) in features.iter().zip(&embedding.coords) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            f.photo_id,
            f.photographer_id,
            fmt_float(point[0]),
            fmt_float(point[1])
        ));
    }
    out
}
