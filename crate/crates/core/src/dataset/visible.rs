//! Annotations that pair a full-body box with a box around the visible part.
//!
//! Input lines are `image_id frame_index x y w h vx vy vw vh ignore` under the
//! header `msbench-vbox v1`, with the usual `.images` table next to the file.

use std::path::Path;

use super::canonical::{images_path, parse_canonical_str, GT_HEADER};
use super::{DatasetError, DatasetManifest};
use crate::geometry::BoundingBox;
use crate::textfmt::{self, push_line};

pub const VBOX_HEADER: &str = "msbench-vbox v1";

/// Occluded fraction of `full`, judged by how much of it `visible` covers.
pub fn occlusion_from_visible(full: &BoundingBox, visible: &BoundingBox) -> f64 {
    (1.0 - full.intersection_area(visible) / full.area()).clamp(0.0, 1.0)
}

pub fn parse_visible_pairs(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let text = textfmt::read_file(path)?;
    let sidecar = images_path(path);
    let images = textfmt::read_file(&sidecar)?;
    let mut manifest = parse_visible_pairs_str(
        &text,
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

const FIELDS: [&str; 11] = [
    "image_id", "frame_index", "x", "y", "w", "h", "vx", "vy", "vw", "vh", "ignore",
];

/// Converts the pairs to canonical regions, then parses those so that the
/// canonical validation and clipping rules apply unchanged.
pub fn parse_visible_pairs_str(
    text: &str,
    origin: &str,
    images: &str,
    images_origin: &str,
) -> Result<DatasetManifest, DatasetError> {
    let mut canonical = String::from(GT_HEADER);
    canonical.push('\n');
    let mut visible_boxes = Vec::new();
    for rec in textfmt::records(text, origin, VBOX_HEADER)? {
        rec.expect_len(&FIELDS)?;
        let mut reals = [0.0; 8];
        for (i, slot) in reals.iter_mut().enumerate() {
            *slot = rec.real(i + 2, FIELDS[i + 2])?;
        }
        let [x, y, w, h, vx, vy, vw, vh] = reals;
        let full = BoundingBox::new(x, y, w, h).map_err(|e| rec.error(e.to_string()))?;
        let visible = BoundingBox::new(vx, vy, vw, vh).map_err(|e| rec.error(format!("visible box: {e}")))?;
        let ignore = rec.flag(10, "ignore")?;
        let occlusion = if ignore {
            0.0
        } else {
            occlusion_from_visible(&full, &visible)
        };
        let frame: u64 = rec.parse(1, "frame_index")?;
        push_line(
            &mut canonical,
            &[&rec.fields[0], &frame, &x, &y, &w, &h, &occlusion, &u8::from(ignore)],
        );
        visible_boxes.push(full.intersection(&visible));
    }
    let mut manifest = parse_canonical_str(&canonical, origin, images, images_origin)?;
    // Regions come back grouped per image in file order; re-walk the input
    // order to attach the clipped visible boxes.
    let mut cursor: Vec<usize> = vec![0; manifest.image_records.len()];
    let ids: Vec<&str> = textfmt::records(text, origin, VBOX_HEADER)?
        .into_iter()
        .map(|r| r.fields[0])
        .collect();
    for (id, visible) in ids.into_iter().zip(visible_boxes) {
        let slot = manifest
            .image_records
            .iter()
            .position(|r| r.image_id == id)
            .expect("canonical parse accepted this image id");
        let annotation = &mut manifest.image_records[slot].annotations[cursor[slot]];
        cursor[slot] += 1;
        annotation.visible = visible.and_then(|v| v.intersection(&annotation.bbox));
    }
    Ok(manifest)
}
