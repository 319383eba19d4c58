//! Input parsing: archive manifests, per-detector detection exports, and
//! feature/label files. Row-level problems are collected into reports
//! instead of aborting the parse; structural problems (duplicate ids,
//! unreadable files) are hard errors.

mod detections;
mod features;
mod manifest;

pub use detections::{parse_detections, DetectionFile, DetectionRow, DetectionsByPhoto};
pub use features::{parse_features, parse_labels};
pub use manifest::{parse_manifest, ArchiveManifest, ManifestEntry};

/// One skipped input row and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based data row (or array index for JSON inputs).
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}
