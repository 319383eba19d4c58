//! Analysis toolkit for historical photo archives driven by externally
//! produced detector and feature exports: multi-detector bounding-box
//! fusion, photo-framing classification, per-photographer content
//! statistics, grouped dataset splitting, class-weighted loss utilities,
//! Earth Mover's Distance photographer similarity, and t-SNE embedding
//! export.
//!
//! The `parallel` feature (on by default) runs the data-parallel inner
//! loops (per-image fusion, pairwise EMD) on rayon's global pool; without
//! it everything executes sequentially with identical results.

pub mod analytics;
pub mod error;
pub mod export;
pub mod framing;
pub mod fusion;
pub mod geometry;
pub mod ingest;
pub mod par;
pub mod preprocess;
pub mod similarity;

pub use error::{Error, Result};
