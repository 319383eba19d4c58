//! Exact t-SNE: Gaussian conditional similarities with per-point bandwidth
//! matched to a target perplexity, Student-t low-dimensional kernel, and
//! momentum gradient descent on the KL divergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

const PROB_FLOOR: f64 = 1e-12;
const ENTROPY_TOLERANCE: f64 = 1e-4;
const MOMENTUM_SWITCH_ITER: usize = 250;
const EARLY_MOMENTUM: f64 = 0.5;
const LATE_MOMENTUM: f64 = 0.8;
const KL_RECORD_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Factor applied to the pairwise similarities for the first
    /// `exaggeration_iterations` steps.
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    fn validate(&self, n_points: usize) -> Result<()> {
        if n_points < 4 {
            return Err(Error::invalid(format!(
                "t-SNE needs at least 4 points, got {n_points}"
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.perplexity) {
            return Err(Error::invalid("perplexity must be positive"));
        }
        let limit = (n_points as f64 - 1.0) / 3.0;
        if self.perplexity >= limit {
            return Err(Error::invalid(format!(
                "perplexity {} too large for {n_points} points (must be < {limit})",
                self.perplexity
            )));
        }
        if self.iterations == 0 || !positive(self.learning_rate) || !positive(self.early_exaggeration)
        {
            return Err(Error::invalid(
                "iterations, learning rate, and exaggeration must be positive",
            ));
        }
        Ok(())
    }
}

/// Two-dimensional embedding plus the KL divergence trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneEmbedding {
    /// One (x, y) row per input feature, in input order.
    pub coords: Vec<[f64; 2]>,
    /// `(iteration, KL(P || Q))` recorded every 50 iterations, always
    /// against the unexaggerated P.
    pub kl_history: Vec<(usize, f64)>,
}

/// Embeds feature vectors into 2-D. Deterministic given `config.seed`.
pub fn tsne_embed(features: &[FeatureVector], config: &EmbeddingConfig) -> Result<TsneEmbedding> {
    let n = features.len();
    config.validate(n)?;
    let dim = features[0].values.len();
    if features.iter().any(|f| f.values.len() != dim) {
        return Err(Error::invalid("feature vectors must share one dimension"));
    }

    let squared = squared_distances(features);
    let p = joint_probabilities(&squared, n, config.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid sigma");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [init.sample(&mut rng), init.sample(&mut rng)])
        .collect();

    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut q_num = vec![0.0f64; n * n];
    let mut kl_history = Vec::new();

    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iterations {
            config.early_exaggeration
        } else {
            1.0
        };

        // Student-t kernel numerators and their total
        let mut z = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let num = 1.0 / (1.0 + dx * dx + dy * dy);
                q_num[i * n + j] = num;
                q_num[j * n + i] = num;
                z += 2.0 * num;
            }
        }

        let momentum = if iter < MOMENTUM_SWITCH_ITER {
            EARLY_MOMENTUM
        } else {
            LATE_MOMENTUM
        };

        // full gradient against fixed positions, then one batch update
        let mut gradient = vec![[0.0f64; 2]; n];
        for i in 0..n {
            let mut grad = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let num = q_num[i * n + j];
                let q = (num / z).max(PROB_FLOOR);
                let factor = 4.0 * (exaggeration * p[i * n + j] - q) * num;
                grad[0] += factor * (y[i][0] - y[j][0]);
                grad[1] += factor * (y[i][1] - y[j][1]);
            }
            gradient[i] = grad;
        }
        for i in 0..n {
            for d in 0..2 {
                let grad = gradient[i][d];
                gains[i][d] = if grad.is_sign_positive() != velocity[i][d].is_sign_positive() {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(0.01)
                };
                velocity[i][d] =
                    momentum * velocity[i][d] - config.learning_rate * gains[i][d] * grad;
                y[i][d] += velocity[i][d];
            }
        }

        // keep the embedding centered
        let mean = y.iter().fold([0.0f64; 2], |acc, p| {
            [acc[0] + p[0] / n as f64, acc[1] + p[1] / n as f64]
        });
        for point in &mut y {
            point[0] -= mean[0];
            point[1] -= mean[1];
        }

        if (iter + 1) % KL_RECORD_EVERY == 0 {
            kl_history.push((iter + 1, kl_divergence(&p, &y, n)));
        }
    }

    Ok(TsneEmbedding {
        coords: y,
        kl_history,
    })
}

fn squared_distances(features: &[FeatureVector]) -> Vec<f64> {
    let n = features.len();
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = features[i]
                .values
                .iter()
                .zip(&features[j].values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[i * n + j] = d2;
            out[j * n + i] = d2;
        }
    }
    out
}

/// Conditional Gaussians with per-point precision found by binary search to
/// match `ln(perplexity)` in entropy, then symmetrized to `p_ij`.
fn joint_probabilities(squared: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target_entropy = perplexity.ln();
    let mut conditional = vec![0.0f64; n * n];

    for i in 0..n {
        let mut beta = 1.0f64;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;

        // shifting by the nearest neighbor keeps exp() in range at any beta
        let shift = (0..n)
            .filter(|&j| j != i)
            .map(|j| squared[i * n + j])
            .fold(f64::INFINITY, f64::min);

        for _ in 0..100 {
            let mut sum = 0.0f64;
            let mut weighted = 0.0f64;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d2 = squared[i * n + j] - shift;
                let w = (-beta * d2).exp();
                sum += w;
                weighted += w * d2;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            let diff = entropy - target_entropy;
            if diff.abs() <= ENTROPY_TOLERANCE {
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_finite() {
                    (beta + beta_max) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_finite() {
                    (beta + beta_min) / 2.0
                } else {
                    beta / 2.0
                };
            }
        }

        let mut sum = 0.0f64;
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = (-beta * (squared[i * n + j] - shift)).exp();
            conditional[i * n + j] = w;
            sum += w;
        }
        for j in 0..n {
            conditional[i * n + j] /= sum;
        }
    }

    let mut joint = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            joint[i * n + j] =
                ((conditional[i * n + j] + conditional[j * n + i]) / (2.0 * n as f64))
                    .max(PROB_FLOOR);
        }
    }
    joint
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]], n: usize) -> f64 {
    let mut z = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            z += 2.0 / (1.0 + dx * dx + dy * dy);
        }
    }
    let mut kl = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let q = (1.0 / ((1.0 + dx * dx + dy * dy) * z)).max(PROB_FLOOR);
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cluster_features(n: usize, separation: f64, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|i| {
                let offset = if i % 2 == 0 { 0.0 } else { separation };
                let values: Vec<f64> = (0..10)
                    .map(|d| normal.sample(&mut rng) + if d == 0 { offset } else { 0.0 })
                    .collect();
                FeatureVector::new(
                    format!("p{i:03}"),
                    if i % 2 == 0 { "a" } else { "b" },
                    values,
                )
                .unwrap()
            })
            .collect()
    }

    fn quick_config(seed: u64) -> EmbeddingConfig {
        EmbeddingConfig {
            perplexity: 10.0,
            iterations: 400,
            exaggeration_iterations: 100,
            seed,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn output_shape_matches_input() {
        let features = cluster_features(40, 10.0, 1);
        let embedding = tsne_embed(&features, &quick_config(0)).unwrap();
        assert_eq!(embedding.coords.len(), 40);
        assert_eq!(embedding.kl_history.len(), 400 / 50);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let features = cluster_features(40, 10.0, 2);
        let a = tsne_embed(&features, &quick_config(7)).unwrap();
        let b = tsne_embed(&features, &quick_config(7)).unwrap();
        for (pa, pb) in a.coords.iter().zip(&b.coords) {
            assert_eq!(pa[0].to_bits(), pb[0].to_bits());
            assert_eq!(pa[1].to_bits(), pb[1].to_bits());
        }
    }

    #[test]
    fn separated_clusters_stay_separable() {
        let features = cluster_features(100, 100.0, 3);
        let embedding = tsne_embed(&features, &EmbeddingConfig::default()).unwrap();
        let (mut max_intra, mut min_inter) = (0.0f64, f64::INFINITY);
        for i in 0..features.len() {
            for j in (i + 1)..features.len() {
                let d = ((embedding.coords[i][0] - embedding.coords[j][0]).powi(2)
                    + (embedding.coords[i][1] - embedding.coords[j][1]).powi(2))
                .sqrt();
                if features[i].photographer_id == features[j].photographer_id {
                    max_intra = max_intra.max(d);
                } else {
                    min_inter = min_inter.min(d);
                }
            }
        }
        assert!(
            min_inter > max_intra,
            "clusters overlap: inter {min_inter} vs intra {max_intra}"
        );
    }

    #[test]
    fn perplexity_constraint_enforced() {
        let features = cluster_features(10, 10.0, 4);
        let config = EmbeddingConfig {
            perplexity: 3.0,
            ..EmbeddingConfig::default()
        };
        assert!(tsne_embed(&features, &config).is_err());
        let too_few = cluster_features(3, 10.0, 5);
        assert!(tsne_embed(&too_few, &quick_config(0)).is_err());
    }

    #[test]
    fn random_data_kl_settles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let features: Vec<FeatureVector> = (0..50)
            .map(|i| {
                let values: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                FeatureVector::new(format!("p{i}"), "x", values).unwrap()
            })
            .collect();
        let config = EmbeddingConfig {
            perplexity: 12.0,
            iterations: 600,
            exaggeration_iterations: 150,
            seed: 0,
            ..EmbeddingConfig::default()
        };
        let embedding = tsne_embed(&features, &config).unwrap();
        let late: Vec<f64> = embedding
            .kl_history
            .iter()
            .filter(|(it, _)| *it >= 300)
            .map(|(_, kl)| *kl)
            .collect();
        for pair in late.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-6,
                "KL increased late in optimization: {pair:?}"
            );
        }
    }
}
