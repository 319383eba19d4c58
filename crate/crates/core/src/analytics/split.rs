use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::PhotoRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Target photo-count fractions for train/validation/test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::invalid(format!(
                "split fractions must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn get(&self, split: Split) -> f64 {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }
}

/// Total assignment of photos to splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    assignments: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, photo_id: &str) -> Option<Split> {
        self.assignments.get(photo_id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Photo ids and their splits, ordered by photo id.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignments.iter().map(|(id, s)| (id.as_str(), *s))
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|s| **s == split).count()
    }
}

/// Splits an archive into train/validation/test without dividing any
/// (photographer, capture date) group across splits.
///
/// Photos with no capture date form singleton groups. Within each
/// photographer the groups are shuffled with `seed`, then assigned largest
/// first to the split whose photo-count target is most underfilled, so the
/// realized fractions track the targets as closely as atomic groups allow.
pub fn split_dataset(
    photos: &[PhotoRecord],
    fractions: SplitFractions,
    seed: u64,
) -> Result<SplitAssignment> {
    fractions.validate()?;

    // photographer -> date -> photo ids; undated photos become singletons
    let mut by_photographer: BTreeMap<&str, BTreeMap<Option<NaiveDate>, Vec<&str>>> =
        BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for photo in photos {
        if !seen.insert(photo.photo_id.as_str()) {
            return Err(Error::invalid(format!(
                "duplicate photo id `{}`",
                photo.photo_id
            )));
        }
        by_photographer
            .entry(&photo.photographer_id)
            .or_default()
            .entry(photo.capture_date)
            .or_default()
            .push(&photo.photo_id);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();

    for groups_by_date in by_photographer.values() {
        let mut groups: Vec<Vec<&str>> = Vec::new();
        for (date, ids) in groups_by_date {
            let mut ids = ids.clone();
            ids.sort_unstable();
            if date.is_some() {
                groups.push(ids);
            } else {
                groups.extend(ids.into_iter().map(|id| vec![id]));
            }
        }
        let total: usize = groups.iter().map(Vec::len).sum();

        groups.shuffle(&mut rng);
        // stable sort keeps the shuffled order among equal-sized groups
        groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

        let mut assigned = [0usize; 3];
        for group in groups {
            let target = Split::ALL
                .iter()
                .enumerate()
                .map(|(i, split)| {
                    (i, fractions.get(*split) * total as f64 - assigned[i] as f64)
                })
                .max_by(|(ia, da), (ib, db)| {
                    da.partial_cmp(db)
                        .unwrap()
                        .then_with(|| ib.cmp(ia)) // ties favor the earlier split
                })
                .map(|(i, _)| i)
                .expect("three splits");
            assigned[target] += group.len();
            for id in group {
                assignments.insert(id.to_string(), Split::ALL[target]);
            }
        }
    }

    Ok(SplitAssignment { assignments })
}
