//! Canonical ground-truth storage.
//!
//! A split is stored as two files sharing a stem:
//!
//! ```text
//! kaist-test.gt                       kaist-test.images
//! msbench-gt v1                       msbench-images v1
//! set06_00019 19 10 20 30 72 0 0      set06_00019 640 512 set06 VI 19
//! ```
//!
//! Region lines are `image_id frame_index x y w h occlusion ignore`. Image
//! lines are `image_id width height sequence_id spectra [frame_index]`; the
//! trailing frame index lets images without any region keep their position in
//! the sequence. When omitted it is taken from the image's region lines.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{Annotation, DatasetError, DatasetManifest, ImageRecord, Spectra, PERSON_LABEL};
use crate::geometry::BoundingBox;
use crate::textfmt::{self, push_line, FormatError, Record};

pub const GT_HEADER: &str = "msbench-gt v1";
pub const IMAGES_HEADER: &str = "msbench-images v1";

/// The image table that accompanies a ground-truth file.
pub fn images_path(gt_path: &Path) -> PathBuf {
    gt_path.with_extension("images")
}

pub fn parse_canonical(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let gt = textfmt::read_file(path)?;
    let sidecar = images_path(path);
    let images = textfmt::read_file(&sidecar)?;
    let mut manifest = parse_canonical_str(
        &gt,
        &path.display().to_string(),
        &images,
        &sidecar.display().to_string(),
    )?;
    manifest.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(manifest)
}

struct PendingImage {
    record: ImageRecord,
    frame: Option<u64>,
    line: usize,
}

fn parse_image_line(rec: &Record<'_>) -> Result<PendingImage, FormatError> {
    if rec.fields.len() != 5 && rec.fields.len() != 6 {
        return Err(rec.error(format!(
            "expected 5 or 6 fields (image_id width height sequence_id spectra [frame_index]), found {}",
            rec.fields.len()
        )));
    }
    let width = parse_dimension(rec, 1, "width")?;
    let height = parse_dimension(rec, 2, "height")?;
    let spectra: Spectra = rec.fields[4]
        .parse()
        .map_err(|e: String| rec.error(format!("field `spectra`: {e}")))?;
    let frame = if rec.fields.len() == 6 {
        Some(rec.parse(5, "frame_index")?)
    } else {
        None
    };
    Ok(PendingImage {
        record: ImageRecord {
            image_id: rec.fields[0].to_string(),
            sequence_id: rec.fields[3].to_string(),
            frame_index: frame.unwrap_or(0),
            spectra,
            width,
            height,
            annotations: Vec::new(),
        },
        frame,
        line: rec.line,
    })
}

fn parse_dimension(rec: &Record<'_>, index: usize, name: &str) -> Result<u32, FormatError> {
    let value: i64 = rec.parse(index, name)?;
    if value <= 0 || value > i64::from(u32::MAX) {
        return Err(rec.error(format!("field `{name}` must be a positive integer, got {value}")));
    }
    Ok(value as u32)
}

const GT_FIELDS: [&str; 8] = ["image_id", "frame_index", "x", "y", "w", "h", "occlusion", "ignore"];

fn parse_region(rec: &Record<'_>, image: &ImageRecord) -> Result<Annotation, FormatError> {
    let x = rec.real(2, "x")?;
    let y = rec.real(3, "y")?;
    let w = rec.real(4, "w")?;
    let h = rec.real(5, "h")?;
    if w <= 0.0 {
        return Err(rec.error(format!("field `w` must be positive, got {w}")));
    }
    if h <= 0.0 {
        return Err(rec.error(format!("field `h` must be positive, got {h}")));
    }
    let occlusion = rec.real(6, "occlusion")?;
    if !(0.0..=1.0).contains(&occlusion) {
        return Err(rec.error(format!("occlusion out of range [0, 1]: {occlusion}")));
    }
    let ignore = rec.flag(7, "ignore")?;
    let bbox = BoundingBox::new(x, y, w, h)
        .map_err(|e| rec.error(e.to_string()))?
        .clip(f64::from(image.width), f64::from(image.height))
        .ok_or_else(|| {
            rec.error(format!(
                "box lies outside the {}x{} image `{}`",
                image.width, image.height, image.image_id
            ))
        })?;
    Ok(Annotation {
        bbox,
        occlusion,
        ignore,
        visible: None,
        label: PERSON_LABEL.to_string(),
    })
}

/// Parses a ground-truth file and its image table from memory. `gt_origin`
/// and `images_origin` only label error messages.
pub fn parse_canonical_str(
    gt: &str,
    gt_origin: &str,
    images: &str,
    images_origin: &str,
) -> Result<DatasetManifest, DatasetError> {
    let mut pending = Vec::new();
    let mut index_of = HashMap::new();
    for rec in textfmt::records(images, images_origin, IMAGES_HEADER)? {
        let image = parse_image_line(&rec)?;
        if index_of
            .insert(image.record.image_id.clone(), pending.len())
            .is_some()
        {
            return Err(rec.error(format!("duplicate image_id `{}`", image.record.image_id)).into());
        }
        pending.push(image);
    }

    for rec in textfmt::records(gt, gt_origin, GT_HEADER)? {
        rec.expect_len(&GT_FIELDS)?;
        let id = rec.fields[0];
        let slot = *index_of
            .get(id)
            .ok_or_else(|| rec.error(format!("image_id `{id}` is not listed in {images_origin}")))?;
        let frame: u64 = rec.parse(1, "frame_index")?;
        let image = &mut pending[slot];
        match image.frame {
            Some(known) if known != frame => {
                return Err(rec
                    .error(format!(
                        "frame_index {frame} disagrees with {known} for image `{id}`"
                    ))
                    .into())
            }
            Some(_) => {}
            None => {
                image.frame = Some(frame);
                image.record.frame_index = frame;
            }
        }
        let annotation = parse_region(&rec, &image.record)?;
        image.record.annotations.push(annotation);
    }

    let mut seen = HashMap::new();
    let mut records = Vec::with_capacity(pending.len());
    for image in pending {
        let record = image.record;
        if image.frame.is_none() {
            return Err(FormatError::Line {
                origin: images_origin.to_string(),
                line: image.line,
                message: format!(
                    "image `{}` has no frame_index and no regions to take it from",
                    record.image_id
                ),
            }
            .into());
        }
        let key = (record.sequence_id.clone(), record.frame_index);
        if let Some(other) = seen.insert(key, record.image_id.clone()) {
            return Err(FormatError::Line {
                origin: images_origin.to_string(),
                line: image.line,
                message: format!(
                    "frame {} of sequence `{}` is used by both `{other}` and `{}`",
                    record.frame_index, record.sequence_id, record.image_id
                ),
            }
            .into());
        }
        records.push(record);
    }
    Ok(DatasetManifest::new("", records))
}

pub fn format_ground_truth(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    out.push_str(GT_HEADER);
    out.push('\n');
    for record in &manifest.image_records {
        for a in &record.annotations {
            push_line(
                &mut out,
                &[
                    &record.image_id,
                    &record.frame_index,
                    &a.bbox.x(),
                    &a.bbox.y(),
                    &a.bbox.w(),
                    &a.bbox.h(),
                    &a.occlusion,
                    &u8::from(a.ignore),
                ],
            );
        }
    }
    out
}

pub fn format_images(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    out.push_str(IMAGES_HEADER);
    out.push('\n');
    for r in &manifest.image_records {
        push_line(
            &mut out,
            &[&r.image_id, &r.width, &r.height, &r.sequence_id, &r.spectra, &r.frame_index],
        );
    }
    out
}

/// Writes `<stem>.gt` and its `<stem>.images` table.
pub fn write_canonical(manifest: &DatasetManifest, gt_path: &Path) -> Result<(), DatasetError> {
    textfmt::write_file(gt_path, &format_ground_truth(manifest))?;
    textfmt::write_file(&images_path(gt_path), &format_images(manifest))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const IMAGES: &str = "msbench-images v1\n\
        a 640 512 s0 VI 0\n\
        b 640 512 s0 VI 1\n\
        c 640 512 s1 I\n";

    fn parse(gt: &str) -> Result<DatasetManifest, DatasetError> {
        parse_canonical_str(gt, "t.gt", IMAGES, "t.images")
    }

    #[test]
    fn header_only_gives_empty_images() {
        let gt = "msbench-gt v1\nc 4 1 1 10 10 0 0\n";
        let m = parse(gt).unwrap();
        assert_eq!(m.image_count(), 3);
        assert_eq!(m.region_count(), 1);
        assert_eq!(m.image("c").unwrap().frame_index, 4);

        let images = "msbench-images v1\na 640 512 s0 VI 0\n";
        let m = parse_canonical_str("msbench-gt v1\n", "t.gt", images, "t.images").unwrap();
        assert_eq!(m.region_count(), 0);
    }

    #[test]
    fn fixture_with_ignore_region() {
        let gt = "msbench-gt v1\n\
            # three regions\n\
            a 0 10 20 30 72 0 0\n\
            a 0 100 20 30 80 0.2 0\n\
            b 1 300 0 200 100 0 1\n\
            c 7 1 1 10 10 0 0\n";
        let m = parse(gt).unwrap();
        assert_eq!(m.evaluable_count(), 3);
        assert_eq!(m.ignore_count(), 1);
        assert_eq!(m.image("a").unwrap().annotations[1].occlusion, 0.2);
    }

    #[test]
    fn rejects_bad_values() {
        let err = parse("msbench-gt v1\na 0 0 0 10 10 1.2 0\n").unwrap_err();
        assert!(err.to_string().contains("occlusion out of range"), "{err}");
        assert!(err.to_string().starts_with("t.gt:2:"), "{err}");

        let err = parse("msbench-gt v1\na 0 0 0 -3 10 0 0\n").unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");

        let err = parse("msbench-gt v1\nzz 0 0 0 3 10 0 0\n").unwrap_err();
        assert!(err.to_string().contains("`zz`"), "{err}");

        let err = parse("msbench-gt v1\na 5 0 0 3 10 0 0\n").unwrap_err();
        assert!(err.to_string().contains("disagrees"), "{err}");

        let err = parse("msbench-gt v1\na 0 0 0 3 10 0 2\n").unwrap_err();
        assert!(err.to_string().contains("`ignore`"), "{err}");

        let err = parse("msbench-gt v1\na 0 700 0 3 10 0 0\n").unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");

        let images = "msbench-images v1\na -640 512 s0 VI 0\n";
        let err = parse_canonical_str("msbench-gt v1\n", "t.gt", images, "t.images").unwrap_err();
        assert!(err.to_string().contains("`width`"), "{err}");
    }

    #[test]
    fn missing_frame_index_is_reported() {
        let err = parse("msbench-gt v1\n").unwrap_err();
        assert!(err.to_string().contains("no frame_index"), "{err}");
    }

    #[test]
    fn duplicate_frames_rejected() {
        let images = "msbench-images v1\na 640 512 s0 VI 3\nb 640 512 s0 VI 3\n";
        assert!(parse_canonical_str("msbench-gt v1\n", "t.gt", images, "t.images").is_err());
    }

    #[test]
    fn boxes_are_clipped_at_parse_time() {
        let m = parse("msbench-gt v1\na 0 -5 500 20 30 0 0\nc 2 0 0 5 5 0 0\n").unwrap();
        let b = m.image("a").unwrap().annotations[0].bbox;
        assert_eq!((b.x(), b.y(), b.w(), b.h()), (0.0, 500.0, 15.0, 12.0));
    }

    #[test]
    fn writes_back_identically() {
        let gt = "msbench-gt v1\na 0 10.5 20 30 72 0.25 0\nc 9 1 1 10 10 0 1\n";
        let m = parse(gt).unwrap();
        assert_eq!(format_ground_truth(&m), gt);
        let again = parse_canonical_str(&format_ground_truth(&m), "x", &format_images(&m), "y").unwrap();
        assert_eq!(again, m);
    }
}
