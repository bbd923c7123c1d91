//! Evaluation toolkit for multispectral (VIS + thermal IR) person detection.
//!
//! The crate consumes ground truth and detector output in simple text
//! formats and implements the benchmark protocol around them:
//!
//! - [`geometry`]: box overlap, non-maximum suppression, anchors, flips and scaling.
//! - [`dataset`]: the canonical annotation schema, converters from segmentation
//!   masks and visible-part boxes, frame skipping and Reasonable/All subsets.
//! - [`eval`]: matching with ignore regions, FPPI/miss-rate curves,
//!   log-average miss rate and cross-dataset generalization matrices.
//! - [`imageproc`]: IR histogram matching, plane replication and 2x upscaling.
//! - [`cli`]: the `msbench` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod imageproc;
pub mod textfmt;

pub use dataset::{Annotation, DatasetManifest, ImageRecord, SubsetSpec};
pub use eval::{DetectionSet, EvalCurve, GeneralizationMatrix, MatchResult};
pub use geometry::{BoundingBox, ScoredBox};
pub use imageproc::{GrayImage, IntensityHistogram};
