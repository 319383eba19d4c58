use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analytics::PhotoRecord;
use crate::error::{Error, Result};
use crate::fusion::PERSON_CLASS;

/// Content statistics for one photographer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotographerStats {
    pub photographer_id: String,
    pub photo_count: usize,
    /// Mean number of detections of the selected classes per photo.
    pub objects_per_image: f64,
    /// Share of photos containing at least one person.
    pub person_image_ratio: f64,
    /// Mean person count over person-containing photos; `None` when the
    /// photographer has no person photos.
    pub persons_per_person_image: Option<f64>,
    /// Detections of each selected class per 100 photos.
    pub per_class_per_100_images: BTreeMap<String, f64>,
}

/// Per-photographer content statistics over the selected classes, ordered by
/// photographer id. Photographers with zero photos never appear.
pub fn content_stats(
    photos: &[PhotoRecord],
    classes_of_interest: &BTreeSet<String>,
) -> Result<Vec<PhotographerStats>> {
    if classes_of_interest.is_empty() {
        return Err(Error::invalid("classes of interest must be non-empty"));
    }

    struct Tally {
        photos: usize,
        person_photos: usize,
        persons_in_person_photos: u64,
        class_totals: BTreeMap<String, u64>,
        objects: u64,
    }

    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for photo in photos {
        let tally = tallies
            .entry(&photo.photographer_id)
            .or_insert_with(|| Tally {
                photos: 0,
                person_photos: 0,
                persons_in_person_photos: 0,
                class_totals: BTreeMap::new(),
                objects: 0,
            });
        tally.photos += 1;
        let persons = photo
            .fused_detections
            .iter()
            .filter(|d| d.class_label == PERSON_CLASS)
            .count() as u64;
        if persons > 0 {
            tally.person_photos += 1;
            tally.persons_in_person_photos += persons;
        }
        for d in &photo.fused_detections {
            if classes_of_interest.contains(&d.class_label) {
                *tally.class_totals.entry(d.class_label.clone()).or_insert(0) += 1;
                tally.objects += 1;
            }
        }
    }

    Ok(tallies
        .into_iter()
        .map(|(photographer_id, tally)| {
            let n = tally.photos as f64;
            let per_class_per_100_images = classes_of_interest
                .iter()
                .map(|class| {
                    let total = tally.class_totals.get(class).copied().unwrap_or(0);
                    (class.clone(), 100.0 * total as f64 / n)
                })
                .collect();
            PhotographerStats {
                photographer_id: photographer_id.to_string(),
                photo_count: tally.photos,
                objects_per_image: tally.objects as f64 / n,
                person_image_ratio: tally.person_photos as f64 / n,
                persons_per_person_image: (tally.person_photos > 0).then(|| {
                    tally.persons_in_person_photos as f64 / tally.person_photos as f64
                }),
                per_class_per_100_images,
            }
        })
        .collect())
}
