//! Shared TOML config file: fusion thresholds and framing boundaries.
//! Command-line flags override whatever the file provides.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use archive_lens_core::framing::FramingConfig;
use archive_lens_core::fusion::{FusionConfig, MergeStrategy};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub framing: FramingSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    pub grouping_iou_threshold: Option<f64>,
    pub merge_strategy: Option<String>,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramingSection {
    pub closeup_min_fraction: Option<f64>,
    pub overall_max_fraction: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Paper-default fusion config, overridden by the file, overridden by flags.
    pub fn fusion_config(
        &self,
        theta_flag: Option<f64>,
        strategy_flag: Option<MergeStrategy>,
    ) -> anyhow::Result<FusionConfig> {
        let mut config = FusionConfig::default();
        for (detector, threshold) in &self.fusion.thresholds {
            config
                .per_detector_thresholds
                .insert(detector.clone(), *threshold);
        }
        if let Some(theta) = self.fusion.grouping_iou_threshold {
            config.grouping_iou_threshold = theta;
        }
        if let Some(name) = &self.fusion.merge_strategy {
            config.merge_strategy = parse_strategy(name)?;
        }
        if let Some(theta) = theta_flag {
            config.grouping_iou_threshold = theta;
        }
        if let Some(strategy) = strategy_flag {
            config.merge_strategy = strategy;
        }
        Ok(config)
    }

    pub fn framing_config(
        &self,
        closeup_flag: Option<f64>,
        overall_flag: Option<f64>,
    ) -> FramingConfig {
        let mut config = FramingConfig::default();
        if let Some(v) = self.framing.closeup_min_fraction {
            config.closeup_min_fraction = v;
        }
        if let Some(v) = self.framing.overall_max_fraction {
            config.overall_max_fraction = v;
        }
        if let Some(v) = closeup_flag {
            config.closeup_min_fraction = v;
        }
        if let Some(v) = overall_flag {
            config.overall_max_fraction = v;
        }
        config
    }
}

pub fn parse_strategy(name: &str) -> anyhow::Result<MergeStrategy> {
    match name {
        "mean_coordinates" | "mean" => Ok(MergeStrategy::MeanCoordinates),
        "highest_confidence" | "max" => Ok(MergeStrategy::HighestConfidence),
        other => anyhow::bail!(
            "unknown merge strategy `{other}` (expected mean_coordinates or highest_confidence)"
        ),
    }
}
