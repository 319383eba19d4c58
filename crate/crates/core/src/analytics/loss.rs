use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse-frequency class weights `w_c = N / (N_c * C)`.
///
/// Classes are ordered by label; per-class weights are index-aligned with
/// [`ClassWeights::classes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    classes: Vec<String>,
    counts: Vec<u64>,
    weights: Vec<f64>,
    total_samples: u64,
}

impl ClassWeights {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn weight_of(&self, label: &str) -> Option<f64> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
            .map(|i| self.weights[i])
    }
}

/// Weights from per-class sample counts. Every count must be positive.
pub fn class_weights(counts: &BTreeMap<String, u64>) -> Result<ClassWeights> {
    if counts.is_empty() {
        return Err(Error::invalid("class counts must be non-empty"));
    }
    if let Some((class, _)) = counts.iter().find(|(_, n)| **n == 0) {
        return Err(Error::invalid(format!(
            "class `{class}` has zero samples; its weight is undefined"
        )));
    }
    let total: u64 = counts.values().sum();
    let c = counts.len() as f64;
    let classes: Vec<String> = counts.keys().cloned().collect();
    let count_vec: Vec<u64> = counts.values().copied().collect();
    let weights = count_vec
        .iter()
        .map(|&n_c| total as f64 / (n_c as f64 * c))
        .collect();
    Ok(ClassWeights {
        classes,
        counts: count_vec,
        weights,
        total_samples: total,
    })
}

const PROB_FLOOR: f64 = 1e-12;

/// Class-weighted cross-entropy: the mean over samples of
/// `-w(y_i) * ln p_i(y_i)`, with probabilities clamped to `[1e-12, 1]`.
pub fn weighted_cross_entropy(
    predicted_probs: &[Vec<f64>],
    true_labels: &[usize],
    weights: &ClassWeights,
) -> Result<f64> {
    if predicted_probs.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    if predicted_probs.len() != true_labels.len() {
        return Err(Error::invalid(format!(
            "{} probability vectors but {} labels",
            predicted_probs.len(),
            true_labels.len()
        )));
    }
    let c = weights.class_count();
    let mut sum = 0.0;
    for (i, (probs, &label)) in predicted_probs.iter().zip(true_labels).enumerate() {
        if probs.len() != c {
            return Err(Error::invalid(format!(
                "sample {i}: probability vector has {} entries, expected {c}",
                probs.len()
            )));
        }
        if label >= c {
            return Err(Error::invalid(format!(
                "sample {i}: label {label} out of range for {c} classes"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "sample {i}: probabilities sum to {total}, expected 1"
            )));
        }
        let p = probs[label].clamp(PROB_FLOOR, 1.0);
        sum += weights.weights()[label] * (-p.ln());
    }
    Ok(sum / predicted_probs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn balanced_counts_give_unit_weights() {
        let classes: Vec<(String, u64)> =
            (0..12).map(|i| (format!("c{i:02}"), 10)).collect();
        let weights = class_weights(&classes.into_iter().collect()).unwrap();
        assert!(weights.weights().iter().all(|w| *w == 1.0));
        assert_eq!(weights.total_samples(), 120);
    }

    #[test]
    fn two_class_example() {
        let weights = class_weights(&counts(&[("a", 75), ("b", 25)])).unwrap();
        assert_eq!(weights.weight_of("a"), Some(100.0 / 150.0));
        assert_eq!(weights.weight_of("b"), Some(2.0));
    }

    #[test]
    fn four_class_example() {
        let weights = class_weights(&counts(&[("a", 50), ("b", 25), ("c", 15), ("d", 10)]))
            .unwrap();
        assert_eq!(weights.weight_of("a"), Some(0.5));
    }

    #[test]
    fn zero_count_rejected() {
        assert!(class_weights(&counts(&[("a", 5), ("b", 0)])).is_err());
        assert!(class_weights(&BTreeMap::new()).is_err());
    }

    #[test]
    fn weighted_count_identity() {
        // N_c * w_c = N / C for every class, so the weighted counts sum to N.
        let weights = class_weights(&counts(&[("a", 7), ("b", 13), ("c", 29)])).unwrap();
        let sum: f64 = weights
            .counts()
            .iter()
            .zip(weights.weights())
            .map(|(n, w)| *n as f64 * w)
            .sum();
        assert!((sum - weights.total_samples() as f64).abs() < 1e-9);
    }

    #[test]
    fn perfect_predictions_give_zero_loss() {
        let weights = class_weights(&counts(&[("a", 1), ("b", 1)])).unwrap();
        let probs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let loss = weighted_cross_entropy(&probs, &[0, 1], &weights).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn balanced_weights_hand_arithmetic() {
        let weights = class_weights(&counts(&[("a", 5), ("b", 5)])).unwrap();
        let probs = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let loss = weighted_cross_entropy(&probs, &[0, 0], &weights).unwrap();
        let expected = -(0.5f64.ln() + 0.25f64.ln()) / 2.0;
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn single_sample_with_weight_two() {
        let weights = class_weights(&counts(&[("a", 25), ("b", 75)])).unwrap();
        assert_eq!(weights.weight_of("a"), Some(2.0));
        let p = std::f64::consts::E.recip();
        let loss = weighted_cross_entropy(&[vec![p, 1.0 - p]], &[0], &weights).unwrap();
        assert!((loss - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_match_unweighted_cross_entropy() {
        let weights = class_weights(&counts(&[("a", 10), ("b", 10), ("c", 10)])).unwrap();
        let probs = vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
        ];
        let labels = [0, 1, 2];
        let weighted = weighted_cross_entropy(&probs, &labels, &weights).unwrap();
        let unweighted: f64 = probs
            .iter()
            .zip(&labels)
            .map(|(p, &l)| -p[l].ln())
            .sum::<f64>()
            / probs.len() as f64;
        assert!((weighted - unweighted).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let weights = class_weights(&counts(&[("a", 1), ("b", 1)])).unwrap();
        assert!(weighted_cross_entropy(&[], &[], &weights).is_err());
        assert!(weighted_cross_entropy(&[vec![0.5, 0.5]], &[2], &weights).is_err());
        assert!(weighted_cross_entropy(&[vec![0.9, 0.3]], &[0], &weights).is_err());
        assert!(weighted_cross_entropy(&[vec![0.5, 0.5]], &[0, 1], &weights).is_err());
    }
}
