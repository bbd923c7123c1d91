//! Ground-truth datasets: the canonical annotation schema, format converters,
//! frame sampling, subset rules and height statistics.

mod canonical;
mod segmentation;
mod visible;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{self, BoundingBox, GeometryError};
use crate::textfmt::FormatError;

pub use canonical::{
    format_ground_truth, format_images, images_path, parse_canonical, parse_canonical_str,
    write_canonical, GT_HEADER, IMAGES_HEADER,
};
pub use segmentation::{seg_to_boxes, SegmentationMask, DEFAULT_RATIO_HIGH, DEFAULT_RATIO_LOW};
pub use visible::{occlusion_from_visible, parse_visible_pairs, parse_visible_pairs_str, VBOX_HEADER};

pub const PERSON_LABEL: &str = "person";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("skip must be at least 1, got {0}")]
    InvalidSkip(u64),
    #[error("scale factor must be positive, got {0}")]
    InvalidScale(f64),
    #[error("histogram bin width must be at least 1")]
    InvalidBinWidth,
    #[error("invalid subset spec: {0}")]
    InvalidSubset(String),
    #[error("segmentation mask has {found} pixels, expected {width}x{height}")]
    MaskSize { width: u32, height: u32, found: usize },
    #[error("ratio bounds must satisfy 0 <= low < high, got {low} and {high}")]
    InvalidRatios { low: f64, high: f64 },
}

/// Which spectra an image record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spectra {
    Vis,
    Ir,
    VisIr,
}

impl Spectra {
    pub fn code(self) -> &'static str {
        match self {
            Spectra::Vis => "V",
            Spectra::Ir => "I",
            Spectra::VisIr => "VI",
        }
    }

    pub fn has_vis(self) -> bool {
        matches!(self, Spectra::Vis | Spectra::VisIr)
    }

    pub fn has_ir(self) -> bool {
        matches!(self, Spectra::Ir | Spectra::VisIr)
    }
}

impl fmt::Display for Spectra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Spectra {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "V" => Ok(Spectra::Vis),
            "I" => Ok(Spectra::Ir),
            "VI" => Ok(Spectra::VisIr),
            other => Err(format!("unknown spectra `{other}` (expected V, I or VI)")),
        }
    }
}

/// A ground-truth region: either an evaluable person or an ignore region.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub bbox: BoundingBox,
    /// Occluded fraction of the full box. Meaningless when `ignore` is set.
    pub occlusion: f64,
    pub ignore: bool,
    pub visible: Option<BoundingBox>,
    pub label: String,
}

impl Annotation {
    pub fn person(bbox: BoundingBox, occlusion: f64) -> Self {
        Self {
            bbox,
            occlusion,
            ignore: false,
            visible: None,
            label: PERSON_LABEL.to_string(),
        }
    }

    pub fn ignore_region(bbox: BoundingBox) -> Self {
        Self {
            ignore: true,
            ..Self::person(bbox, 0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub sequence_id: String,
    pub frame_index: u64,
    pub spectra: Spectra,
    pub width: u32,
    pub height: u32,
    pub annotations: Vec<Annotation>,
}

impl ImageRecord {
    pub fn evaluable(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.iter().filter(|a| !a.ignore)
    }
}

/// Height and occlusion limits defining an evaluation subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetSpec {
    pub min_height: f64,
    pub max_occlusion: f64,
}

impl SubsetSpec {
    pub const REASONABLE: SubsetSpec = SubsetSpec {
        min_height: 50.0,
        max_occlusion: 0.35,
    };
    pub const ALL: SubsetSpec = SubsetSpec {
        min_height: 20.0,
        max_occlusion: 0.35,
    };

    pub fn new(min_height: f64, max_occlusion: f64) -> Result<Self, DatasetError> {
        if !(min_height >= 0.0 && min_height.is_finite()) {
            return Err(DatasetError::InvalidSubset(format!(
                "min_height must be non-negative, got {min_height}"
            )));
        }
        if !(0.0..=1.0).contains(&max_occlusion) {
            return Err(DatasetError::InvalidSubset(format!(
                "max_occlusion must lie in [0, 1], got {max_occlusion}"
            )));
        }
        Ok(Self {
            min_height,
            max_occlusion,
        })
    }

    /// Both bounds are inclusive.
    pub fn admits(&self, annotation: &Annotation) -> bool {
        annotation.bbox.h() >= self.min_height && annotation.occlusion <= self.max_occlusion
    }
}

impl Default for SubsetSpec {
    fn default() -> Self {
        SubsetSpec::REASONABLE
    }
}

/// One dataset split with all of its image records.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub root: PathBuf,
    pub split: String,
    pub skip: u64,
    pub scale_factor: f64,
    pub subset_rules: SubsetSpec,
    pub image_records: Vec<ImageRecord>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, image_records: Vec<ImageRecord>) -> Self {
        Self {
            name: name.into(),
            root: PathBuf::new(),
            split: "test".to_string(),
            skip: 1,
            scale_factor: 1.0,
            subset_rules: SubsetSpec::default(),
            image_records,
        }
    }

    pub fn image_count(&self) -> usize {
        self.image_records.len()
    }

    pub fn region_count(&self) -> usize {
        self.image_records.iter().map(|r| r.annotations.len()).sum()
    }

    pub fn evaluable_count(&self) -> usize {
        self.image_records.iter().map(|r| r.evaluable().count()).sum()
    }

    pub fn ignore_count(&self) -> usize {
        self.region_count() - self.evaluable_count()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.image_records.iter().find(|r| r.image_id == image_id)
    }

    pub fn image_ids(&self) -> HashSet<&str> {
        self.image_records.iter().map(|r| r.image_id.as_str()).collect()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Keeps the frames whose original index is a multiple of `skip`.
///
/// Frame indices are preserved, so sampling twice with `a` and `b` keeps the
/// multiples of `lcm(a, b)`. The manifest's `skip` records that effective stride.
pub fn skip_sample(manifest: &DatasetManifest, skip: u64) -> Result<DatasetManifest, DatasetError> {
    if skip == 0 {
        return Err(DatasetError::InvalidSkip(skip));
    }
    let mut out = manifest.clone();
    out.image_records.retain(|r| r.frame_index % skip == 0);
    out.skip = manifest.skip / gcd(manifest.skip, skip) * skip;
    Ok(out)
}

/// Turns every evaluable annotation outside `spec` into an ignore region.
/// Regions are never removed.
pub fn filter_subset(manifest: &DatasetManifest, spec: SubsetSpec) -> DatasetManifest {
    let mut out = manifest.clone();
    for annotation in out
        .image_records
        .iter_mut()
        .flat_map(|r| r.annotations.iter_mut())
    {
        if !annotation.ignore && !spec.admits(annotation) {
            annotation.ignore = true;
        }
    }
    out.subset_rules = spec;
    out
}

/// Counts evaluable annotation heights in half-open bins keyed by lower edge.
pub fn height_histogram(
    manifest: &DatasetManifest,
    bin_width: u32,
) -> Result<BTreeMap<u64, usize>, DatasetError> {
    if bin_width == 0 {
        return Err(DatasetError::InvalidBinWidth);
    }
    let width = u64::from(bin_width);
    let mut bins = BTreeMap::new();
    for annotation in manifest.image_records.iter().flat_map(|r| r.evaluable()) {
        let bin = (annotation.bbox.h() / width as f64).floor() as u64 * width;
        *bins.entry(bin).or_insert(0) += 1;
    }
    Ok(bins)
}

pub const FLIP_SUFFIX: &str = "_flip";

fn mirror_record(record: &ImageRecord) -> Result<ImageRecord, GeometryError> {
    let width = f64::from(record.width);
    let annotations = record
        .annotations
        .iter()
        .map(|a| {
            Ok(Annotation {
                bbox: geometry::flip_box(&a.bbox, width)?,
                visible: a
                    .visible
                    .as_ref()
                    .map(|v| geometry::flip_box(v, width))
                    .transpose()?,
                ..a.clone()
            })
        })
        .collect::<Result<_, GeometryError>>()?;
    Ok(ImageRecord {
        image_id: format!("{}{FLIP_SUFFIX}", record.image_id),
        sequence_id: format!("{}{FLIP_SUFFIX}", record.sequence_id),
        annotations,
        ..record.clone()
    })
}

/// Appends a horizontally mirrored copy of every record. The mirrored half
/// follows the originals in the same order.
pub fn flip_augment(manifest: &DatasetManifest) -> Result<DatasetManifest, DatasetError> {
    let mirrored = manifest
        .image_records
        .iter()
        .map(mirror_record)
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = manifest.clone();
    out.image_records.extend(mirrored);
    Ok(out)
}

/// Rescales image dimensions and every box, e.g. factor 2 for 320x240 imagery
/// brought up to 640x480.
pub fn scale_manifest(manifest: &DatasetManifest, factor: f64) -> Result<DatasetManifest, DatasetError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(DatasetError::InvalidScale(factor));
    }
    let mut out = manifest.clone();
    for record in &mut out.image_records {
        let width = (f64::from(record.width) * factor).round().max(1.0);
        let height = (f64::from(record.height) * factor).round().max(1.0);
        record.width = width as u32;
        record.height = height as u32;
        for annotation in &mut record.annotations {
            let scaled = geometry::scale_box(&annotation.bbox, factor)?;
            annotation.bbox = scaled.clip(width, height).unwrap_or(scaled);
            if let Some(v) = annotation.visible {
                annotation.visible = Some(geometry::scale_box(&v, factor)?);
            }
        }
    }
    out.scale_factor *= factor;
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn record(id: &str, seq: &str, frame: u64, annotations: Vec<Annotation>) -> ImageRecord {
        ImageRecord {
            image_id: id.to_string(),
            sequence_id: seq.to_string(),
            frame_index: frame,
            spectra: Spectra::VisIr,
            width: 640,
            height: 512,
            annotations,
        }
    }

    pub fn person(x: f64, y: f64, w: f64, h: f64, occlusion: f64) -> Annotation {
        Annotation::person(BoundingBox::new(x, y, w, h).unwrap(), occlusion)
    }
}
