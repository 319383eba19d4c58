//! Bounding-box primitives: validity, areas, Intersection-over-Union, and
//! IoU-distance k-means over box shapes.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in original-image pixel coordinates, origin top-left.
///
/// Zero-area boxes are valid; negative extents and non-finite coordinates are
/// rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let coords = [x_min, y_min, x_max, y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "bounding box has non-finite coordinates: ({x_min}, {y_min}, {x_max}, {y_max})"
            )));
        }
        if x_min > x_max || y_min > y_max {
            return Err(Error::invalid(format!(
                "bounding box has negative extent: ({x_min}, {y_min}, {x_max}, {y_max})"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection of `self` with the image rectangle `[0, w] x [0, h]`.
    pub fn clip_to_image(&self, image_width: u32, image_height: u32) -> BoundingBox {
        let w = f64::from(image_width);
        let h = f64::from(image_height);
        let x_min = self.x_min.clamp(0.0, w);
        let y_min = self.y_min.clamp(0.0, h);
        let x_max = self.x_max.clamp(0.0, w);
        let y_max = self.y_max.clamp(0.0, h);
        BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }
}

/// Intersection-over-Union of two boxes.
///
/// Returns 0 when the union has zero area (two degenerate boxes).
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let intersection = ix * iy;
    let union = a.area() + b.area() - intersection;
    if union == 0.0 {
        return 0.0;
    }
    intersection / union
}

/// Fraction of the image covered by `bbox`, after clipping to image bounds.
pub fn area_fraction(bbox: &BoundingBox, image_width: u32, image_height: u32) -> Result<f64> {
    if image_width == 0 || image_height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {image_width}x{image_height}"
        )));
    }
    let clipped = bbox.clip_to_image(image_width, image_height);
    Ok(clipped.area() / (f64::from(image_width) * f64::from(image_height)))
}

/// Width/height of a box, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    pub width: f64,
    pub height: f64,
}

impl BoxShape {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::invalid(format!(
                "box shape must have strictly positive finite dimensions, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// `1 - IoU` of two shapes treated as boxes centered on the same point.
pub fn shape_distance(a: &BoxShape, b: &BoxShape) -> f64 {
    let intersection = a.width.min(b.width) * a.height.min(b.height);
    let union = a.area() + b.area() - intersection;
    1.0 - intersection / union
}

/// Result of clustering box shapes: one centroid per anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    centroids: Vec<BoxShape>,
}

impl AnchorSet {
    pub fn centroids(&self) -> &[BoxShape] {
        &self.centroids
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// K-means over box shapes under [`shape_distance`].
///
/// Initial centroids are k distinct shapes sampled uniformly with `seed`;
/// assignment/update iterates until assignments stabilize or `max_iters` is
/// reached. Centroid update is the component-wise mean of member shapes, and
/// an update that would increase total cost is discarded, so the total cost
/// is non-increasing across iterations.
pub fn anchor_kmeans(
    shapes: &[BoxShape],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<AnchorSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if shapes.len() < k {
        return Err(Error::invalid(format!(
            "need at least k = {k} shapes, got {}",
            shapes.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(shapes, k, &mut rng);
    let mut assignment = assign(shapes, &centroids);
    reseed_empty_clusters(shapes, &mut centroids, &mut assignment);
    let mut cost = total_cost(shapes, &centroids, &assignment);

    for _ in 0..max_iters {
        let mut next_centroids = update_centroids(shapes, &centroids, &assignment, k);
        let mut next_assignment = assign(shapes, &next_centroids);
        reseed_empty_clusters(shapes, &mut next_centroids, &mut next_assignment);
        let next_cost = total_cost(shapes, &next_centroids, &next_assignment);

        if next_cost > cost + 1e-12 {
            break;
        }
        let converged = next_assignment == assignment;
        centroids = next_centroids;
        assignment = next_assignment;
        cost = next_cost;
        if converged {
            break;
        }
    }

    Ok(AnchorSet { centroids })
}

fn init_centroids(shapes: &[BoxShape], k: usize, rng: &mut ChaCha8Rng) -> Vec<BoxShape> {
    // Prefer k distinct shape values; fall back to distinct indices when the
    // input holds fewer than k unique values.
    let mut unique: Vec<BoxShape> = Vec::new();
    for s in shapes {
        if !unique.contains(s) {
            unique.push(*s);
        }
    }
    if unique.len() >= k {
        sample(rng, unique.len(), k)
            .into_iter()
            .map(|i| unique[i])
            .collect()
    } else {
        sample(rng, shapes.len(), k)
            .into_iter()
            .map(|i| shapes[i])
            .collect()
    }
}

fn assign(shapes: &[BoxShape], centroids: &[BoxShape]) -> Vec<usize> {
    shapes
        .iter()
        .map(|s| {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = shape_distance(s, centroid);
                if d < best_dist {
                    best_dist = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn update_centroids(
    shapes: &[BoxShape],
    previous: &[BoxShape],
    assignment: &[usize],
    k: usize,
) -> Vec<BoxShape> {
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for (s, &c) in shapes.iter().zip(assignment) {
        sums[c].0 += s.width;
        sums[c].1 += s.height;
        sums[c].2 += 1;
    }
    sums.iter()
        .enumerate()
        .map(|(c, &(w, h, n))| {
            if n == 0 {
                previous[c]
            } else {
                BoxShape {
                    width: w / n as f64,
                    height: h / n as f64,
                }
            }
        })
        .collect()
}

/// Moves the shape farthest from its centroid into each empty cluster.
/// Donors must keep at least one member. Strictly lowers total cost.
fn reseed_empty_clusters(
    shapes: &[BoxShape],
    centroids: &mut [BoxShape],
    assignment: &mut [usize],
) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut farthest: Option<(usize, f64)> = None;
        for (i, s) in shapes.iter().enumerate() {
            if counts[assignment[i]] < 2 {
                continue;
            }
            let d = shape_distance(s, &centroids[assignment[i]]);
            if farthest.is_none_or(|(_, best)| d > best) {
                farthest = Some((i, d));
            }
        }
        let Some((idx, _)) = farthest else {
            return;
        };
        centroids[empty] = shapes[idx];
        assignment[idx] = empty;
    }
}

fn total_cost(shapes: &[BoxShape], centroids: &[BoxShape], assignment: &[usize]) -> f64 {
    shapes
        .iter()
        .zip(assignment)
        .map(|(s, &c)| shape_distance(s, &centroids[c]))
        .sum()
}
