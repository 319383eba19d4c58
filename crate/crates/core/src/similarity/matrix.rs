use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{emd, FeatureVector, Signature};
use crate::error::{Error, Result};
use crate::par;

/// Symmetric pairwise photographer distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Pairwise Earth Mover's Distance between photographer signatures.
///
/// Each photographer's signature holds at most `signature_cap` uniformly
/// weighted feature points, subsampled with `seed` when the photographer has
/// more. Each pair is solved once (in parallel when enabled) and mirrored,
/// so the matrix is symmetric by construction.
pub fn photographer_distance_matrix(
    features: &[FeatureVector],
    signature_cap: usize,
    seed: u64,
) -> Result<DistanceMatrix> {
    let (ids, signatures) = build_signatures(features, signature_cap, seed)?;
    assemble(ids, &signatures, true)
}

/// Sequential twin of [`photographer_distance_matrix`] for benchmarking the
/// rayon path against a single thread. Produces identical values.
pub fn photographer_distance_matrix_seq(
    features: &[FeatureVector],
    signature_cap: usize,
    seed: u64,
) -> Result<DistanceMatrix> {
    let (ids, signatures) = build_signatures(features, signature_cap, seed)?;
    assemble(ids, &signatures, false)
}

fn assemble(ids: Vec<String>, signatures: &[Signature], parallel: bool) -> Result<DistanceMatrix> {
    let p = ids.len();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let solve_pair =
        |&(i, j): &(usize, usize)| emd(&signatures[i], &signatures[j]).map(|(d, _)| (i, j, d));
    let results = if parallel {
        par::map_items(&pairs, solve_pair)
    } else {
        par::map_items_seq(&pairs, solve_pair)
    };

    let mut values = vec![vec![0.0; p]; p];
    for result in results {
        let (i, j, d) = result?;
        values[i][j] = d;
        values[j][i] = d;
    }
    Ok(DistanceMatrix { ids, values })
}

fn build_signatures(
    features: &[FeatureVector],
    signature_cap: usize,
    seed: u64,
) -> Result<(Vec<String>, Vec<Signature>)> {
    if signature_cap == 0 {
        return Err(Error::invalid("signature cap must be at least 1"));
    }
    if features.is_empty() {
        return Err(Error::invalid("need at least one feature vector"));
    }
    let dim = features[0].values.len();
    if features.iter().any(|f| f.values.len() != dim) {
        return Err(Error::invalid("feature vectors must share one dimension"));
    }
    let mut by_photographer: BTreeMap<&str, Vec<&FeatureVector>> = BTreeMap::new();
    for f in features {
        by_photographer
            .entry(&f.photographer_id)
            .or_default()
            .push(f);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::new();
    let mut signatures = Vec::new();
    for (id, mut feats) in by_photographer {
        feats.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
        let points: Vec<Vec<f64>> = if feats.len() > signature_cap {
            let mut picked = sample(&mut rng, feats.len(), signature_cap).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| feats[i].values.clone()).collect()
        } else {
            feats.iter().map(|f| f.values.clone()).collect()
        };
        ids.push(id.to_string());
        signatures.push(Signature::uniform(points)?);
    }
    Ok((ids, signatures))
}
