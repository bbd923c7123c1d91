//! Detection result files: header `msbench-det v1`, then one
//! `image_id x y w h score` line per detection.

use std::path::Path;

use super::{DetectionSet, EvalError};
use crate::geometry::{BoundingBox, ScoredBox};
use crate::textfmt::{self, push_line};

pub const DET_HEADER: &str = "msbench-det v1";

const FIELDS: [&str; 6] = ["image_id", "x", "y", "w", "h", "score"];

pub fn parse_detections_str(text: &str, origin: &str) -> Result<DetectionSet, EvalError> {
    let mut set = DetectionSet::new("");
    for rec in textfmt::records(text, origin, DET_HEADER)? {
        rec.expect_len(&FIELDS)?;
        let x = rec.real(1, "x")?;
        let y = rec.real(2, "y")?;
        let w = rec.real(3, "w")?;
        let h = rec.real(4, "h")?;
        let score = rec.real(5, "score")?;
        let bbox = BoundingBox::new(x, y, w, h).map_err(|e| rec.error(e.to_string()))?;
        let det = ScoredBox::new(bbox, score).map_err(|e| rec.error(e.to_string()))?;
        set.push(rec.fields[0], det);
    }
    Ok(set)
}

pub fn parse_detections(path: &Path) -> Result<DetectionSet, EvalError> {
    let text = textfmt::read_file(path)?;
    let mut set = parse_detections_str(&text, &path.display().to_string())?;
    set.dataset_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(set)
}

/// Images in lexicographic order, detections in stored order.
pub fn format_detections(set: &DetectionSet) -> String {
    let mut out = String::from(DET_HEADER);
    out.push('\n');
    for (id, dets) in set.iter() {
        for d in dets {
            let b = &d.bbox;
            push_line(&mut out, &[&id, &b.x(), &b.y(), &b.w(), &b.h(), &d.score()]);
        }
    }
    out
}

pub fn write_detections(set: &DetectionSet, path: &Path) -> Result<(), EvalError> {
    textfmt::write_file(path, &format_detections(set))?;
    Ok(())
}
