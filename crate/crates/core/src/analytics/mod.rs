//! Per-photographer content statistics, grouped dataset splitting,
//! class-weighted loss utilities, and confusion-matrix summaries.

mod confusion;
mod loss;
mod split;
mod stats;

pub use confusion::{confusion_stats, ConfusionMatrix, ConfusionStats};
pub use loss::{class_weights, weighted_cross_entropy, ClassWeights};
pub use split::{split_dataset, Split, SplitAssignment, SplitFractions};
pub use stats::{content_stats, PhotographerStats};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::fusion::FusedDetection;

/// One archive photograph with its fused detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoRecord {
    pub photo_id: String,
    pub photographer_id: String,
    pub capture_date: Option<NaiveDate>,
    pub image_width: u32,
    pub image_height: u32,
    pub fused_detections: Vec<FusedDetection>,
}
