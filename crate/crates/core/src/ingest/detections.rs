use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchiveManifest, RowError};
use crate::error::Result;
use crate::fusion::Detection;
use crate::geometry::BoundingBox;

/// Boxes may spill past the frame by up to this fraction of each dimension
/// and still be clipped in; anything beyond is a rejected row.
const OVERFLOW_TOLERANCE: f64 = 0.02;

/// On-disk schema of one detector's export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFile {
    pub detector_id: String,
    pub detections: Vec<DetectionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub photo_id: String,
    pub class: String,
    pub confidence: f64,
    /// `[x_min, y_min, x_max, y_max]` in original-image pixel coordinates.
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

/// Detections grouped by photo id.
pub type DetectionsByPhoto = BTreeMap<String, Vec<Detection>>;

/// Reads one detector's JSON export, validates each row against the
/// manifest, and clips boxes to image bounds.
///
/// Returns detections grouped by photo id plus the row-level error report.
pub fn parse_detections(
    path: &Path,
    manifest: &ArchiveManifest,
) -> Result<(DetectionsByPhoto, Vec<RowError>)> {
    let text = std::fs::read_to_string(path)?;
    let file: DetectionFile = serde_json::from_str(&text)?;
    let mut grouped: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    let mut row_errors = Vec::new();

    for (i, row) in file.detections.iter().enumerate() {
        let report = |message: String| RowError {
            row: i + 1,
            message,
        };

        let Some(entry) = manifest.get(&row.photo_id) else {
            row_errors.push(report(format!(
                "unknown photo id `{}` (not in manifest)",
                row.photo_id
            )));
            continue;
        };
        if !(0.0..=1.0).contains(&row.confidence) || row.confidence.is_nan() {
            row_errors.push(report(format!(
                "photo `{}`: confidence {} outside [0, 1]",
                row.photo_id, row.confidence
            )));
            continue;
        }
        let [x_min, y_min, x_max, y_max] = row.bbox;
        if !row.bbox.iter().all(|c| c.is_finite()) || x_min > x_max || y_min > y_max {
            row_errors.push(report(format!(
                "photo `{}`: malformed box {:?}",
                row.photo_id, row.bbox
            )));
            continue;
        }
        let (w, h) = (
            f64::from(entry.image_width),
            f64::from(entry.image_height),
        );
        let (x_slack, y_slack) = (w * OVERFLOW_TOLERANCE, h * OVERFLOW_TOLERANCE);
        if x_min < -x_slack || y_min < -y_slack || x_max > w + x_slack || y_max > h + y_slack {
            row_errors.push(report(format!(
                "photo `{}`: box {:?} overflows the {}x{} frame beyond the {}% tolerance",
                row.photo_id,
                row.bbox,
                entry.image_width,
                entry.image_height,
                OVERFLOW_TOLERANCE * 100.0
            )));
            continue;
        }

        let bbox = BoundingBox::new(x_min, y_min, x_max, y_max)
            .expect("extent checked above")
            .clip_to_image(entry.image_width, entry.image_height);
        match Detection::new(bbox, row.class.clone(), row.confidence, &file.detector_id) {
            Ok(detection) => grouped
                .entry(row.photo_id.clone())
                .or_default()
                .push(detection),
            Err(e) => row_errors.push(report(format!("photo `{}`: {e}", row.photo_id))),
        }
    }

    Ok((grouped, row_errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ManifestEntry;
    use std::io::Write;

    fn manifest() -> ArchiveManifest {
        ArchiveManifest::new(vec![ManifestEntry {
            photo_id: "p1".into(),
            photographer_id: "a".into(),
            capture_date: None,
            image_path: None,
            image_width: 100,
            image_height: 200,
        }])
        .unwrap()
    }

    fn parse(json: &str) -> (BTreeMap<String, Vec<Detection>>, Vec<RowError>) {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(json.as_bytes()).unwrap();
        parse_detections(file.path(), &manifest()).unwrap()
    }

    #[test]
    fn well_formed_rows_parse() {
        let (grouped, errors) = parse(
            r#"{"detector_id":"ssd","detections":[
                {"photo_id":"p1","class":"person","confidence":0.9,"box":[0,0,50,60]},
                {"photo_id":"p1","class":"horse","confidence":0.8,"box":[10,10,20,30]},
                {"photo_id":"p1","class":"person","confidence":0.7,"box":[5,5,6,6]}
            ]}"#,
        );
        assert!(errors.is_empty());
        assert_eq!(grouped["p1"].len(), 3);
        assert_eq!(grouped["p1"][0].detector_id, "ssd");
    }

    #[test]
    fn small_overflow_is_clipped() {
        let (grouped, errors) = parse(
            r#"{"detector_id":"ssd","detections":[
                {"photo_id":"p1","class":"person","confidence":0.9,"box":[0,0,101,60]}
            ]}"#,
        );
        assert!(errors.is_empty());
        assert_eq!(grouped["p1"][0].bbox.x_max, 100.0);
    }

    #[test]
    fn large_overflow_is_rejected() {
        let (grouped, errors) = parse(
            r#"{"detector_id":"ssd","detections":[
                {"photo_id":"p1","class":"person","confidence":0.9,"box":[0,0,103,60]}
            ]}"#,
        );
        assert!(grouped.is_empty());
        assert_eq!(errors.len(), 1);
    }

    #[test]
    fn bad_confidence_and_extent_rejected() {
        let (grouped, errors) = parse(
            r#"{"detector_id":"ssd","detections":[
                {"photo_id":"p1","class":"person","confidence":1.3,"box":[0,0,10,10]},
                {"photo_id":"p1","class":"person","confidence":0.9,"box":[20,0,10,10]},
                {"photo_id":"nope","class":"person","confidence":0.9,"box":[0,0,10,10]}
            ]}"#,
        );
        assert!(grouped.is_empty());
        assert_eq!(errors.len(), 3);
        assert!(errors[2].message.contains("nope"));
    }
}
