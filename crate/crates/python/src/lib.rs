//! Python bindings for the msbench core library.

use std::collections::BTreeMap;
use std::path::PathBuf;

use msbench_core::dataset::{self, DatasetManifest, SegmentationMask, SubsetSpec};
use msbench_core::eval::{self, CurvePoint, DetectionSet, EvalCurve, FppiSampling, GeneralizationMatrix, MatrixCell};
use msbench_core::geometry::{self, BoundingBox, ScoredBox};
use msbench_core::imageproc::{self, GrayImage, IntensityHistogram};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_or_value(e: impl std::error::Error) -> PyErr {
    let mut source = e.source();
    while let Some(s) = source {
        if s.is::<std::io::Error>() {
            return PyOSError::new_err(e.to_string());
        }
        source = s.source();
    }
    value_err(e)
}

#[pyclass(name = "BoundingBox", module = "msbench", frozen, eq, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyBoundingBox(BoundingBox);

#[pymethods]
impl PyBoundingBox {
    #[new]
    fn new(x: f64, y: f64, w: f64, h: f64) -> PyResult<Self> {
        BoundingBox::new(x, y, w, h).map(Self).map_err(value_err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x()
    }
    #[getter]
    fn y(&self) -> f64 {
        self.0.y()
    }
    #[getter]
    fn w(&self) -> f64 {
        self.0.w()
    }
    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn aspect_ratio(&self) -> f64 {
        self.0.aspect_ratio()
    }

    fn iou(&self, other: PyRef<'_, Self>) -> f64 {
        geometry::iou(&self.0, &other.0)
    }

    fn flip(&self, image_width: f64) -> PyResult<Self> {
        geometry::flip_box(&self.0, image_width).map(Self).map_err(value_err)
    }

    fn scale(&self, factor: f64) -> PyResult<Self> {
        geometry::scale_box(&self.0, factor).map(Self).map_err(value_err)
    }

    fn as_tuple(&self) -> (f64, f64, f64, f64) {
        (self.0.x(), self.0.y(), self.0.w(), self.0.h())
    }

    fn __repr__(&self) -> String {
        format!("BoundingBox({}, {}, {}, {})", self.0.x(), self.0.y(), self.0.w(), self.0.h())
    }
}

type Tuple4 = (f64, f64, f64, f64);
type Scored = (f64, f64, f64, f64, f64);
type Region = (f64, f64, f64, f64, bool);
type LabeledRegion = (f64, f64, f64, f64, f64, bool);
type MatchCounts = (usize, usize, usize, Vec<(usize, usize)>);

fn to_box((x, y, w, h): Tuple4) -> PyResult<BoundingBox> {
    BoundingBox::new(x, y, w, h).map_err(value_err)
}

fn to_scored((x, y, w, h, s): Scored) -> PyResult<ScoredBox> {
    ScoredBox::new(to_box((x, y, w, h))?, s).map_err(value_err)
}

fn from_scored(b: &ScoredBox) -> Scored {
    (b.bbox.x(), b.bbox.y(), b.bbox.w(), b.bbox.h(), b.score())
}

#[pyfunction]
fn iou(a: Tuple4, b: Tuple4) -> PyResult<f64> {
    Ok(geometry::iou(&to_box(a)?, &to_box(b)?))
}

#[pyfunction]
fn ioa(detection: Tuple4, region: Tuple4) -> PyResult<f64> {
    Ok(geometry::ioa(&to_box(detection)?, &to_box(region)?))
}

/// Greedy NMS over `(x, y, w, h, score)` tuples.
#[pyfunction]
#[pyo3(signature = (boxes, threshold = geometry::DEFAULT_NMS_IOU))]
fn nms(boxes: Vec<Scored>, threshold: f64) -> PyResult<Vec<Scored>> {
    let boxes = boxes.into_iter().map(to_scored).collect::<PyResult<Vec<_>>>()?;
    let kept = geometry::nms(&boxes, threshold).map_err(value_err)?;
    Ok(kept.iter().map(from_scored).collect())
}

#[pyfunction]
fn anchor_boxes(cx: f64, cy: f64, heights: Vec<f64>) -> PyResult<Vec<PyBoundingBox>> {
    let boxes = geometry::anchor_boxes(cx, cy, &heights).map_err(value_err)?;
    Ok(boxes.into_iter().map(PyBoundingBox).collect())
}

/// Connected person regions of a row-major label raster, as
/// `(x, y, w, h, ignore)` tuples.
#[pyfunction]
#[pyo3(signature = (width, height, labels, person_label, ratio_low = dataset::DEFAULT_RATIO_LOW, ratio_high = dataset::DEFAULT_RATIO_HIGH))]
fn seg_to_boxes(
    width: u32,
    height: u32,
    labels: &[u8],
    person_label: u8,
    ratio_low: f64,
    ratio_high: f64,
) -> PyResult<Vec<Region>> {
    let mask = SegmentationMask::from_labels(width, height, labels, person_label).map_err(value_err)?;
    let anns = dataset::seg_to_boxes(&mask, ratio_low, ratio_high).map_err(value_err)?;
    Ok(anns
        .iter()
        .map(|a| (a.bbox.x(), a.bbox.y(), a.bbox.w(), a.bbox.h(), a.ignore))
        .collect())
}

#[pyfunction]
fn occlusion_from_visible(full: Tuple4, visible: Tuple4) -> PyResult<f64> {
    Ok(dataset::occlusion_from_visible(&to_box(full)?, &to_box(visible)?))
}

fn subset_spec(subset: &str, min_height: Option<f64>, max_occlusion: Option<f64>) -> PyResult<SubsetSpec> {
    let base = match subset {
        "reasonable" => SubsetSpec::REASONABLE,
        "all" => SubsetSpec::ALL,
        "custom" => SubsetSpec::REASONABLE,
        other => return Err(PyValueError::new_err(format!("unknown subset `{other}`"))),
    };
    if subset != "custom" && (min_height.is_some() || max_occlusion.is_some()) {
        return Err(PyValueError::new_err("min_height/max_occlusion need subset=\"custom\""));
    }
    SubsetSpec::new(
        min_height.unwrap_or(base.min_height),
        max_occlusion.unwrap_or(base.max_occlusion),
    )
    .map_err(value_err)
}

/// A parsed ground-truth set.
#[pyclass(name = "Manifest", module = "msbench", skip_from_py_object)]
#[derive(Clone)]
struct PyManifest(DatasetManifest);

#[pymethods]
impl PyManifest {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        dataset::parse_canonical(&path).map(Self).map_err(io_or_value)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataset::write_canonical(&self.0, &path).map_err(io_or_value)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn skip(&self) -> u64 {
        self.0.skip
    }

    #[getter]
    fn scale_factor(&self) -> f64 {
        self.0.scale_factor
    }

    fn image_ids(&self) -> Vec<String> {
        self.0.image_records.iter().map(|r| r.image_id.clone()).collect()
    }

    fn image_count(&self) -> usize {
        self.0.image_count()
    }

    fn region_count(&self) -> usize {
        self.0.region_count()
    }

    fn evaluable_count(&self) -> usize {
        self.0.evaluable_count()
    }

    fn ignore_count(&self) -> usize {
        self.0.ignore_count()
    }

    /// `(x, y, w, h, occlusion, ignore)` for every region of one image.
    fn regions(&self, image_id: &str) -> PyResult<Vec<LabeledRegion>> {
        let record = self
            .0
            .image(image_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown image `{image_id}`")))?;
        Ok(record
            .annotations
            .iter()
            .map(|a| (a.bbox.x(), a.bbox.y(), a.bbox.w(), a.bbox.h(), a.occlusion, a.ignore))
            .collect())
    }

    #[pyo3(signature = (subset = "reasonable", min_height = None, max_occlusion = None))]
    fn filter_subset(&self, subset: &str, min_height: Option<f64>, max_occlusion: Option<f64>) -> PyResult<Self> {
        let spec = subset_spec(subset, min_height, max_occlusion)?;
        Ok(Self(dataset::filter_subset(&self.0, spec)))
    }

    fn skip_sample(&self, skip: u64) -> PyResult<Self> {
        dataset::skip_sample(&self.0, skip).map(Self).map_err(value_err)
    }

    fn flip_augment(&self) -> PyResult<Self> {
        dataset::flip_augment(&self.0).map(Self).map_err(value_err)
    }

    fn scale(&self, factor: f64) -> PyResult<Self> {
        dataset::scale_manifest(&self.0, factor).map(Self).map_err(value_err)
    }

    #[pyo3(signature = (bin_width = 10))]
    fn height_histogram(&self, bin_width: u32) -> PyResult<BTreeMap<u64, usize>> {
        dataset::height_histogram(&self.0, bin_width).map_err(value_err)
    }
}

/// Detector output keyed by image id.
#[pyclass(name = "Detections", module = "msbench", skip_from_py_object)]
#[derive(Clone)]
struct PyDetections(DetectionSet);

#[pymethods]
impl PyDetections {
    #[new]
    #[pyo3(signature = (name = "detections"))]
    fn new(name: &str) -> Self {
        Self(DetectionSet::new(name))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        eval::parse_detections(&path).map(Self).map_err(io_or_value)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        eval::write_detections(&self.0, &path).map_err(io_or_value)
    }

    fn add(&mut self, image_id: String, x: f64, y: f64, w: f64, h: f64, score: f64) -> PyResult<()> {
        self.0.push(image_id, to_scored((x, y, w, h, score))?);
        Ok(())
    }

    fn get(&self, image_id: &str) -> Vec<Scored> {
        self.0.get(image_id).iter().map(from_scored).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Curve", module = "msbench", frozen, skip_from_py_object)]
struct PyCurve(EvalCurve);

#[pymethods]
impl PyCurve {
    #[getter]
    fn log_avg_mr(&self) -> f64 {
        self.0.log_avg_mr
    }

    /// `(threshold, fppi, miss_rate)` in descending threshold order.
    #[getter]
    fn points(&self) -> Vec<(f64, f64, f64)> {
        self.0.points.iter().map(|p| (p.threshold, p.fppi, p.miss_rate)).collect()
    }

    #[getter]
    fn images(&self) -> usize {
        self.0.images
    }

    #[getter]
    fn ground_truth(&self) -> usize {
        self.0.ground_truth
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }
}

/// Per-image greedy matching; returns `(tp, fp, fn, matches)`.
#[pyfunction]
#[pyo3(signature = (manifest, detections, image_id, iou_threshold = eval::DEFAULT_MATCH_IOU))]
fn match_image(
    manifest: PyRef<'_, PyManifest>,
    detections: PyRef<'_, PyDetections>,
    image_id: &str,
    iou_threshold: f64,
) -> PyResult<MatchCounts> {
    let record = manifest
        .0
        .image(image_id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown image `{image_id}`")))?;
    let r = eval::match_image(detections.0.get(image_id), &record.annotations, iou_threshold);
    Ok((r.true_positives, r.false_positives, r.false_negatives, r.matches))
}

#[pyfunction]
#[pyo3(signature = (manifest, detections, iou_threshold = eval::DEFAULT_MATCH_IOU, fppi_lo = 0.01, fppi_hi = 1.0, samples = 9))]
fn evaluate(
    manifest: PyRef<'_, PyManifest>,
    detections: PyRef<'_, PyDetections>,
    iou_threshold: f64,
    fppi_lo: f64,
    fppi_hi: f64,
    samples: usize,
) -> PyResult<PyCurve> {
    let sampling = FppiSampling::new(fppi_lo, fppi_hi, samples).map_err(value_err)?;
    eval::sweep_curve(&detections.0, &manifest.0, iou_threshold, &sampling)
        .map(PyCurve)
        .map_err(value_err)
}

/// Log-average miss rate of `(fppi, miss_rate)` points.
#[pyfunction]
#[pyo3(signature = (points, fppi_lo = 0.01, fppi_hi = 1.0, samples = 9))]
fn log_average_mr(points: Vec<(f64, f64)>, fppi_lo: f64, fppi_hi: f64, samples: usize) -> PyResult<f64> {
    let sampling = FppiSampling::new(fppi_lo, fppi_hi, samples).map_err(value_err)?;
    let points: Vec<CurvePoint> = points
        .into_iter()
        .map(|(fppi, miss_rate)| CurvePoint {
            threshold: f64::NAN,
            fppi,
            miss_rate,
        })
        .collect();
    eval::log_average_mr(&points, &sampling).map_err(value_err)
}

#[pyclass(name = "Matrix", module = "msbench", frozen, skip_from_py_object)]
struct PyMatrix(GeneralizationMatrix);

#[pymethods]
impl PyMatrix {
    #[getter]
    fn train_models(&self) -> Vec<String> {
        self.0.train_models.clone()
    }

    #[getter]
    fn test_sets(&self) -> Vec<String> {
        self.0.test_sets.clone()
    }

    #[getter]
    fn column_averages(&self) -> BTreeMap<String, f64> {
        self.0.column_averages.clone()
    }

    #[getter]
    fn best(&self) -> String {
        self.0.best.clone()
    }

    fn cell(&self, train: &str, test: &str) -> Option<f64> {
        self.0.cell(train, test)
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }
}

/// Builds the train x test grid from `(train, test, mr_percent)` cells.
#[pyfunction]
#[pyo3(signature = (cells, train_models = None, test_sets = None))]
fn generalization_matrix(
    cells: Vec<(String, String, f64)>,
    train_models: Option<Vec<String>>,
    test_sets: Option<Vec<String>>,
) -> PyResult<PyMatrix> {
    let cells: Vec<MatrixCell> = cells.into_iter().map(|(a, b, v)| MatrixCell::new(a, b, v)).collect();
    let axes = match (train_models, test_sets) {
        (Some(t), Some(s)) => Some((t, s)),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("give both train_models and test_sets, or neither")),
    };
    GeneralizationMatrix::from_cells(&cells, axes).map(PyMatrix).map_err(value_err)
}

fn gray(width: u32, height: u32, data: &[u8]) -> PyResult<GrayImage> {
    GrayImage::new(width, height, data.to_vec()).map_err(value_err)
}

fn reference_hist(weights: Vec<f64>) -> PyResult<IntensityHistogram> {
    let bins: [f64; 256] = weights
        .try_into()
        .map_err(|w: Vec<f64>| PyValueError::new_err(format!("expected 256 bins, got {}", w.len())))?;
    IntensityHistogram::from_bins(bins).map_err(value_err)
}

#[pyfunction]
fn compute_histogram(width: u32, height: u32, data: &[u8]) -> PyResult<Vec<f64>> {
    Ok(imageproc::compute_histogram(&gray(width, height, data)?).bins().to_vec())
}

#[pyfunction]
fn average_reference(histograms: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let hists = histograms.into_iter().map(reference_hist).collect::<PyResult<Vec<_>>>()?;
    Ok(imageproc::average_reference(&hists).map_err(value_err)?.bins().to_vec())
}

#[pyfunction]
fn histogram_match<'py>(
    py: Python<'py>,
    width: u32,
    height: u32,
    data: &[u8],
    reference: Vec<f64>,
) -> PyResult<Bound<'py, PyBytes>> {
    let out = imageproc::histogram_match(&gray(width, height, data)?, &reference_hist(reference)?).map_err(value_err)?;
    Ok(PyBytes::new(py, out.data()))
}

/// Bilinear 2x upscaling; returns `(width, height, data)`.
#[pyfunction]
fn upscale2x<'py>(py: Python<'py>, width: u32, height: u32, data: &[u8]) -> PyResult<(u32, u32, Bound<'py, PyBytes>)> {
    let up = imageproc::upscale2x(&gray(width, height, data)?);
    Ok((up.width(), up.height(), PyBytes::new(py, up.data())))
}

#[pymodule]
fn msbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ANCHOR_ASPECT_RATIO", geometry::ANCHOR_ASPECT_RATIO)?;
    m.add_class::<PyBoundingBox>()?;
    m.add_class::<PyManifest>()?;
    m.add_class::<PyDetections>()?;
    m.add_class::<PyCurve>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(ioa, m)?)?;
    m.add_function(wrap_pyfunction!(nms, m)?)?;
    m.add_function(wrap_pyfunction!(anchor_boxes, m)?)?;
    m.add_function(wrap_pyfunction!(seg_to_boxes, m)?)?;
    m.add_function(wrap_pyfunction!(occlusion_from_visible, m)?)?;
    m.add_function(wrap_pyfunction!(match_image, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(log_average_mr, m)?)?;
    m.add_function(wrap_pyfunction!(generalization_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(compute_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(average_reference, m)?)?;
    m.add_function(wrap_pyfunction!(histogram_match, m)?)?;
    m.add_function(wrap_pyfunction!(upscale2x, m)?)?;
    Ok(())
}
