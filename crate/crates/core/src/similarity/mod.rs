//! Photographer similarity: exact Earth Mover's Distance between feature
//! signatures, pairwise distance matrices, and t-SNE embedding.

mod emd;
mod matrix;
mod tsne;

pub use emd::{emd, ground_distances, FlowSolution};
pub use matrix::{photographer_distance_matrix, photographer_distance_matrix_seq, DistanceMatrix};
pub use tsne::{tsne_embed, EmbeddingConfig, TsneEmbedding};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One photo's feature representation with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub photo_id: String,
    pub photographer_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(
        photo_id: impl Into<String>,
        photographer_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("feature vector must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature vector has non-finite values"));
        }
        Ok(Self {
            photo_id: photo_id.into(),
            photographer_id: photographer_id.into(),
            values,
        })
    }
}

/// A weighted finite point set standing in for a probability distribution.
///
/// Weights are strictly positive and sum to 1 (within 1e-12); all points
/// share one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Signature {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("signature needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid(
                "signature points must share one positive dimension",
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signature points must be finite"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid("signature weights must be positive"));
        }
        // Compensated summation keeps the check meaningful for large m.
        let sum = compensated_sum(&weights);
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "signature weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Uniformly weighted signature over `points`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::invalid("signature needs at least one point"));
        }
        let weights = vec![1.0 / m as f64; m];
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}
