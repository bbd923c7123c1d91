use rayon::prelude::*;

use super::matching::{match_image, DetectionOutcome};
use super::{DetectionSet, EvalError};
use crate::dataset::DatasetManifest;
use crate::geometry::check_threshold;

/// Floor applied to miss rates before taking logarithms.
pub const MISS_RATE_FLOOR: f64 = 1e-10;

/// Log-spaced FPPI reference points used to average the miss rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FppiSampling {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for FppiSampling {
    fn default() -> Self {
        Self {
            lo: 1e-2,
            hi: 1.0,
            samples: 9,
        }
    }
}

impl FppiSampling {
    pub fn new(lo: f64, hi: f64, samples: usize) -> Result<Self, EvalError> {
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(EvalError::InvalidSampling(format!(
                "range bounds must be positive and finite, got {lo}:{hi}"
            )));
        }
        if samples == 0 {
            return Err(EvalError::InvalidSampling("need at least one sample".into()));
        }
        if hi < lo || (hi == lo && samples > 1) {
            return Err(EvalError::InvalidSampling(format!(
                "range {lo}:{hi} is empty"
            )));
        }
        Ok(Self { lo, hi, samples })
    }

    /// `samples` FPPI values equally spaced in log10 between `lo` and `hi`.
    pub fn reference_points(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.log10(), self.hi.log10());
        let step = (b - a) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| 10f64.powf(a + step * i as f64))
            .collect()
    }
}

/// One operating point of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Detections scoring at or above this value are kept.
    pub threshold: f64,
    pub fppi: f64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurve {
    /// Ordered by descending threshold: FPPI rises, miss rate falls.
    pub points: Vec<CurvePoint>,
    pub log_avg_mr: f64,
    pub sampling: FppiSampling,
    pub images: usize,
    pub ground_truth: usize,
}

impl EvalCurve {
    pub fn from_points(
        points: Vec<CurvePoint>,
        sampling: FppiSampling,
        images: usize,
        ground_truth: usize,
    ) -> Result<Self, EvalError> {
        let log_avg_mr = log_average_mr(&points, &sampling)?;
        Ok(Self {
            points,
            log_avg_mr,
            sampling,
            images,
            ground_truth,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fppi,miss_rate\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fppi, p.miss_rate));
        }
        out
    }
}

/// Miss rate read off the curve at each reference FPPI: the value of the
/// last point whose FPPI does not exceed the reference, or 1 if none does.
pub fn sample_miss_rates(points: &[CurvePoint], sampling: &FppiSampling) -> Vec<(f64, f64)> {
    sampling
        .reference_points()
        .into_iter()
        .map(|reference| {
            let mr = points
                .iter()
                .rev()
                .find(|p| p.fppi <= reference)
                .map_or(1.0, |p| p.miss_rate);
            (reference, mr)
        })
        .collect()
}

/// Geometric mean of the sampled miss rates.
pub fn log_average_mr(points: &[CurvePoint], sampling: &FppiSampling) -> Result<f64, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    let rates: Vec<f64> = sample_miss_rates(points, sampling)
        .into_iter()
        .map(|(_, mr)| mr.max(MISS_RATE_FLOOR))
        .collect();
    let mean_log = rates.iter().map(|mr| mr.ln()).sum::<f64>() / rates.len() as f64;
    // exp(ln(x)) can land an ulp outside the sampled range
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(0.0, f64::max);
    Ok(mean_log.exp().clamp(lo, hi))
}

/// Sweeps the score threshold over every distinct detection score.
///
/// Matching is greedy in score order, so the matches made among detections
/// above any threshold do not depend on lower-scored detections. One matching
/// pass per image is therefore enough for the whole sweep. FPPI divides by
/// every image in the manifest, including images without annotations.
pub fn sweep_curve(
    dets: &DetectionSet,
    manifest: &DatasetManifest,
    iou_threshold: f64,
    sampling: &FppiSampling,
) -> Result<EvalCurve, EvalError> {
    check_threshold(iou_threshold)?;
    if manifest.image_records.is_empty() {
        return Err(EvalError::NoImages);
    }
    let ground_truth = manifest.evaluable_count();
    if ground_truth == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    dets.check_images(manifest)?;

    // (score, is_true_positive) for every detection that counts.
    let per_image: Vec<Vec<(f64, bool)>> = manifest
        .image_records
        .par_iter()
        .map(|record| {
            let boxes = dets.get(&record.image_id);
            let result = match_image(boxes, &record.annotations, iou_threshold);
            boxes
                .iter()
                .zip(&result.outcomes)
                .filter_map(|(b, o)| match o {
                    DetectionOutcome::TruePositive { .. } => Some((b.score(), true)),
                    DetectionOutcome::FalsePositive => Some((b.score(), false)),
                    DetectionOutcome::Ignored => None,
                })
                .collect()
        })
        .collect();

    let mut scores: Vec<f64> = manifest
        .image_records
        .iter()
        .flat_map(|r| dets.get(&r.image_id).iter().map(|d| d.score()))
        .collect();
    let mut events: Vec<(f64, bool)> = per_image.into_iter().flatten().collect();
    events.sort_by(|a, b| b.0.total_cmp(&a.0));
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();

    let images = manifest.image_count();
    let ground = ground_truth as f64;
    let mut points = Vec::with_capacity(scores.len().max(1));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut next = 0;
    for threshold in scores {
        while next < events.len() && events[next].0 >= threshold {
            if events[next].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            next += 1;
        }
        points.push(CurvePoint {
            threshold,
            fppi: fp as f64 / images as f64,
            miss_rate: (ground_truth - tp) as f64 / ground,
        });
    }
    if points.is_empty() {
        points.push(CurvePoint {
            threshold: f64::INFINITY,
            fppi: 0.0,
            miss_rate: 1.0,
        });
    }
    EvalCurve::from_points(points, *sampling, images, ground_truth)
}
