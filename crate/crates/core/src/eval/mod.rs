//! Detection evaluation: per-image matching against ground truth with ignore
//! regions, FPPI / miss-rate curves, log-average miss rate and the
//! train-by-test generalization matrix.

mod curve;
mod detections;
mod matching;
mod matrix;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dataset::DatasetManifest;
use crate::geometry::{GeometryError, ScoredBox};
use crate::textfmt::FormatError;

pub use curve::{log_average_mr, sample_miss_rates, sweep_curve, CurvePoint, EvalCurve, FppiSampling};
pub use detections::{format_detections, parse_detections, parse_detections_str, write_detections, DET_HEADER};
pub use matching::{match_image, DetectionOutcome, MatchResult, DEFAULT_MATCH_IOU};
pub use matrix::{build_matrix, GeneralizationMatrix, MatrixCell};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("manifest contains no images")]
    NoImages,
    #[error("no evaluable ground truth")]
    NoGroundTruth,
    #[error("detections reference images missing from the ground truth: {}", .0.join(", "))]
    UnknownImages(Vec<String>),
    #[error("curve has no points")]
    EmptyCurve,
    #[error("invalid FPPI sampling: {0}")]
    InvalidSampling(String),
    #[error("matrix cell (train `{train}`, test `{test}`) is missing")]
    MissingCell { train: String, test: String },
    #[error("matrix cell (train `{train}`, test `{test}`) is given more than once")]
    DuplicateCell { train: String, test: String },
    #[error("matrix cell (train `{train}`, test `{test}`) is not on the requested axes")]
    UnexpectedCell { train: String, test: String },
    #[error("matrix has no cells")]
    EmptyMatrix,
}

/// Detector output for one dataset, keyed by image id. Within an image the
/// input order is kept; it breaks score ties during matching.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    pub dataset_name: String,
    detections: BTreeMap<String, Vec<ScoredBox>>,
}

impl DetectionSet {
    pub fn new(dataset_name: impl Into<String>) -> Self {
        Self {
            dataset_name: dataset_name.into(),
            detections: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, image_id: impl Into<String>, det: ScoredBox) {
        self.detections.entry(image_id.into()).or_default().push(det);
    }

    pub fn set(&mut self, image_id: impl Into<String>, dets: Vec<ScoredBox>) {
        self.detections.insert(image_id.into(), dets);
    }

    pub fn get(&self, image_id: &str) -> &[ScoredBox] {
        self.detections.get(image_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredBox])> {
        self.detections.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.detections.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails with every image id that the manifest does not know.
    pub fn check_images(&self, manifest: &DatasetManifest) -> Result<(), EvalError> {
        let known = manifest.image_ids();
        let unknown: Vec<String> = self
            .detections
            .keys()
            .filter(|id| !known.contains(id.as_str()))
            .cloned()
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(EvalError::UnknownImages(unknown))
        }
    }
}
