use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::RowError;
use crate::error::{Error, Result};

/// One photo's metadata as recorded in the archive manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub photo_id: String,
    pub photographer_id: String,
    pub capture_date: Option<NaiveDate>,
    pub image_path: Option<String>,
    pub image_width: u32,
    pub image_height: u32,
}

/// Parsed archive manifest with id-based lookup.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArchiveManifest {
    entries: Vec<ManifestEntry>,
    index: BTreeMap<String, usize>,
}

impl ArchiveManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut duplicates = Vec::new();
        for (i, entry) in entries.iter().enumerate() {
            if index.insert(entry.photo_id.clone(), i).is_some() {
                duplicates.push(entry.photo_id.clone());
            }
        }
        if !duplicates.is_empty() {
            duplicates.sort_unstable();
            duplicates.dedup();
            return Err(Error::invalid(format!(
                "duplicate photo ids in manifest: {}",
                duplicates.join(", ")
            )));
        }
        Ok(Self { entries, index })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn get(&self, photo_id: &str) -> Option<&ManifestEntry> {
        self.index.get(photo_id).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Accepts ISO-8601 (`1941-06-25`) and the archive's `25 Jun 1941` style.
pub(crate) fn parse_date(raw: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(raw, "%d %b %Y"))
        .ok()
}

/// Reads a manifest CSV with header
/// `photo_id,photographer_id,capture_date,image_path,width,height`.
///
/// Rows with missing mandatory fields, bad dimensions, or malformed dates are
/// reported, not silently dropped; duplicate photo ids are a hard error.
pub fn parse_manifest(path: &Path) -> Result<(ArchiveManifest, Vec<RowError>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = ["photo_id", "photographer_id", "width", "height"];
    for name in required {
        if column(name).is_none() {
            return Err(Error::invalid(format!(
                "manifest is missing required column `{name}`"
            )));
        }
    }
    let idx_id = column("photo_id").unwrap();
    let idx_photographer = column("photographer_id").unwrap();
    let idx_date = column("capture_date");
    let idx_path = column("image_path");
    let idx_width = column("width").unwrap();
    let idx_height = column("height").unwrap();

    let mut entries = Vec::new();
    let mut row_errors = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                row_errors.push(RowError {
                    row,
                    message: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        let field = |i: usize| record.get(i).unwrap_or("").trim();

        let photo_id = field(idx_id);
        let photographer_id = field(idx_photographer);
        if photo_id.is_empty() || photographer_id.is_empty() {
            row_errors.push(RowError {
                row,
                message: "missing photo_id or photographer_id".into(),
            });
            continue;
        }

        let capture_date = match idx_date.map(field) {
            None | Some("") => None,
            Some(raw) => match parse_date(raw) {
                Some(date) => Some(date),
                None => {
                    row_errors.push(RowError {
                        row,
                        message: format!("malformed capture date `{raw}`"),
                    });
                    continue;
                }
            },
        };

        let dimension = |raw: &str, what: &str| -> std::result::Result<u32, String> {
            match raw.parse::<u32>() {
                Ok(v) if v > 0 => Ok(v),
                Ok(_) => Err(format!("{what} must be positive")),
                Err(_) => Err(format!("malformed {what} `{raw}`")),
            }
        };
        let image_width = match dimension(field(idx_width), "width") {
            Ok(v) => v,
            Err(message) => {
                row_errors.push(RowError { row, message });
                continue;
            }
        };
        let image_height = match dimension(field(idx_height), "height") {
            Ok(v) => v,
            Err(message) => {
                row_errors.push(RowError { row, message });
                continue;
            }
        };

        let image_path = idx_path
            .map(field)
            .filter(|p| !p.is_empty())
            .map(str::to_string);

        entries.push(ManifestEntry {
            photo_id: photo_id.to_string(),
            photographer_id: photographer_id.to_string(),
            capture_date,
            image_path,
            image_width,
            image_height,
        });
    }

    Ok((ArchiveManifest::new(entries)?, row_errors))
}
