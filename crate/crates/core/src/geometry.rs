//! Axis-aligned box arithmetic.
//!
//! Boxes are continuous `(x, y, w, h)` rectangles in pixel units. Nothing here
//! snaps to integers, so flips and scales compose without drift.

use std::cmp::Ordering;

use thiserror::Error;

/// Width-to-height ratio of every generated anchor.
pub const ANCHOR_ASPECT_RATIO: f64 = 0.41;

/// Default overlap at which NMS suppresses a lower-scored box.
pub const DEFAULT_NMS_IOU: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box {field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("box {field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("score must be finite, got {0}")]
    NonFiniteScore(f64),
    #[error("iou threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("box [{x}, {right}] does not fit horizontally in an image of width {width}")]
    OutsideImage { x: f64, right: f64, width: f64 },
}

/// Axis-aligned rectangle with positive extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        for (field, value) in [("x", x), ("y", y), ("w", w), ("h", h)] {
            if !value.is_finite() {
                return Err(GeometryError::NonFinite { field, value });
            }
        }
        if w <= 0.0 {
            return Err(GeometryError::NonPositive { field: "w", value: w });
        }
        if h <= 0.0 {
            return Err(GeometryError::NonPositive { field: "h", value: h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Builds a box from its corner coordinates.
    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.w / self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    /// Area of the overlap with `other`; zero when the boxes only touch.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// The overlapping rectangle, if it has positive area.
    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let x1 = self.x.max(other.x);
        let y1 = self.y.max(other.y);
        let x2 = self.right().min(other.right());
        let y2 = self.bottom().min(other.bottom());
        BoundingBox::from_corners(x1, y1, x2, y2).ok()
    }

    /// Clips the box to `[0, width] x [0, height]`. `None` if nothing remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<BoundingBox> {
        let x1 = self.x.max(0.0);
        let y1 = self.y.max(0.0);
        let x2 = self.right().min(width);
        let y2 = self.bottom().min(height);
        BoundingBox::from_corners(x1, y1, x2, y2).ok()
    }
}

/// A detector output: a box plus its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub bbox: BoundingBox,
    score: f64,
}

impl ScoredBox {
    pub fn new(bbox: BoundingBox, score: f64) -> Result<Self, GeometryError> {
        if !score.is_finite() {
            return Err(GeometryError::NonFiniteScore(score));
        }
        Ok(Self { bbox, score })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Intersection over union.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Intersection over the area of `det`. Used for ignore-region tests, where
/// the region is often much larger than the detection.
pub fn ioa(det: &BoundingBox, region: &BoundingBox) -> f64 {
    (det.intersection_area(region) / det.area()).clamp(0.0, 1.0)
}

pub(crate) fn check_threshold(threshold: f64) -> Result<(), GeometryError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidThreshold(threshold))
    }
}

/// Indices of `scores` ordered by descending score; equal scores keep input order.
pub(crate) fn descending_order<T>(items: &[T], score: impl Fn(&T) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| {
        score(&items[j])
            .partial_cmp(&score(&items[i]))
            .unwrap_or(Ordering::Equal)
    });
    order
}

/// Greedy non-maximum suppression.
///
/// Boxes are visited by descending score (ties in input order). A box is kept
/// unless it overlaps an already kept box with IoU at or above `iou_threshold`.
/// The result is in visiting order.
pub fn nms(boxes: &[ScoredBox], iou_threshold: f64) -> Result<Vec<ScoredBox>, GeometryError> {
    check_threshold(iou_threshold)?;
    let mut kept: Vec<ScoredBox> = Vec::new();
    for idx in descending_order(boxes, ScoredBox::score) {
        let candidate = boxes[idx];
        if kept
            .iter()
            .all(|k| iou(&k.bbox, &candidate.bbox) < iou_threshold)
        {
            kept.push(candidate);
        }
    }
    Ok(kept)
}

/// One anchor per height, centered on `(center_x, center_y)`, with the fixed
/// pedestrian aspect ratio.
pub fn anchor_boxes(
    center_x: f64,
    center_y: f64,
    heights: &[f64],
) -> Result<Vec<BoundingBox>, GeometryError> {
    heights
        .iter()
        .map(|&h| {
            if !(h > 0.0) {
                return Err(GeometryError::NonPositive { field: "h", value: h });
            }
            let w = ANCHOR_ASPECT_RATIO * h;
            BoundingBox::new(center_x - 0.5 * w, center_y - 0.5 * h, w, h)
        })
        .collect()
}

/// Horizontal mirror inside an image of the given width.
pub fn flip_box(bbox: &BoundingBox, image_width: f64) -> Result<BoundingBox, GeometryError> {
    if bbox.x < 0.0 || bbox.right() > image_width {
        return Err(GeometryError::OutsideImage {
            x: bbox.x,
            right: bbox.right(),
            width: image_width,
        });
    }
    BoundingBox::new(image_width - bbox.x - bbox.w, bbox.y, bbox.w, bbox.h)
}

pub fn scale_box(bbox: &BoundingBox, factor: f64) -> Result<BoundingBox, GeometryError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(GeometryError::InvalidScale(factor));
    }
    BoundingBox::new(
        bbox.x * factor,
        bbox.y * factor,
        bbox.w * factor,
        bbox.h * factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn sb(x: f64, y: f64, w: f64, h: f64, s: f64) -> ScoredBox {
        ScoredBox::new(bb(x, y, w, h), s).unwrap()
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(ScoredBox::new(bb(0.0, 0.0, 1.0, 1.0), f64::INFINITY).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(100.0, 100.0, 5.0, 5.0)), 0.0);
        // inter 100, union 200
        assert_eq!(iou(&a, &bb(0.0, 0.0, 10.0, 20.0)), 0.5);
        // shared edge only
        assert_eq!(iou(&a, &bb(10.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn ioa_examples() {
        let det = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(ioa(&det, &bb(-5.0, -5.0, 30.0, 30.0)), 1.0);
        assert_eq!(ioa(&det, &bb(50.0, 50.0, 3.0, 3.0)), 0.0);
        assert_eq!(ioa(&det, &bb(5.0, 0.0, 10.0, 10.0)), 0.5);
    }

    #[test]
    fn nms_small_cases() {
        assert!(nms(&[], 0.7).unwrap().is_empty());
        let one = [sb(0.0, 0.0, 5.0, 5.0, 0.3)];
        assert_eq!(nms(&one, 0.7).unwrap(), one.to_vec());
        let dup = [sb(0.0, 0.0, 5.0, 5.0, 0.7), sb(0.0, 0.0, 5.0, 5.0, 0.9)];
        assert_eq!(nms(&dup, 0.7).unwrap(), vec![dup[1]]);
        assert!(nms(&dup, 0.0).is_err());
        assert!(nms(&dup, 1.5).is_err());
    }

    #[test]
    fn nms_three_box_chain() {
        // a-b: 9/11, b-c: 9/11, a-c: 8/12
        let a = sb(0.0, 0.0, 10.0, 1.0, 0.9);
        let b = sb(1.0, 0.0, 10.0, 1.0, 0.8);
        let c = sb(2.0, 0.0, 10.0, 1.0, 0.7);
        assert!(iou(&a.bbox, &b.bbox) >= 0.7);
        assert!(iou(&b.bbox, &c.bbox) >= 0.7);
        assert!(iou(&a.bbox, &c.bbox) < 0.7);
        // b is suppressed by a, so c survives even though it overlaps b.
        assert_eq!(nms(&[c, b, a], 0.7).unwrap(), vec![a, c]);
    }

    #[test]
    fn nms_ties_keep_input_order() {
        let first = sb(0.0, 0.0, 10.0, 10.0, 0.5);
        let second = sb(0.5, 0.0, 10.0, 10.0, 0.5);
        assert_eq!(nms(&[first, second], 0.7).unwrap(), vec![first]);
        assert_eq!(nms(&[second, first], 0.7).unwrap(), vec![second]);
    }

    #[test]
    fn anchors_use_fixed_ratio() {
        let anchors = anchor_boxes(100.0, 100.0, &[100.0]).unwrap();
        assert_eq!(anchors.len(), 1);
        let a = anchors[0];
        assert!((a.w() - 41.0).abs() < 1e-12);
        assert_eq!(a.h(), 100.0);
        let (cx, cy) = a.center();
        assert!((cx - 100.0).abs() < 1e-12 && (cy - 100.0).abs() < 1e-12);

        assert!(anchor_boxes(0.0, 0.0, &[]).unwrap().is_empty());
        let many = anchor_boxes(0.0, 0.0, &[50.0, 100.0, 200.0]).unwrap();
        assert_eq!(many.len(), 3);
        assert!(many.iter().all(|b| (b.aspect_ratio() - 0.41).abs() < 1e-9));
        assert!(anchor_boxes(0.0, 0.0, &[10.0, 0.0]).is_err());
    }

    #[test]
    fn flip_examples() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(flip_box(&b, 640.0).unwrap(), bb(630.0, 0.0, 10.0, 10.0));
        let centered = bb(315.0, 0.0, 10.0, 10.0);
        assert_eq!(flip_box(&centered, 640.0).unwrap(), centered);
        assert!(flip_box(&bb(635.0, 0.0, 10.0, 10.0), 640.0).is_err());
    }

    #[test]
    fn scale_examples() {
        let b = bb(10.0, 20.0, 30.0, 40.0);
        assert_eq!(scale_box(&b, 2.0).unwrap(), bb(20.0, 40.0, 60.0, 80.0));
        assert_eq!(scale_box(&b, 1.0).unwrap(), b);
        let back = scale_box(&scale_box(&b, 2.0).unwrap(), 0.5).unwrap();
        assert_eq!(back, b);
        assert!(scale_box(&b, 0.0).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.1..60.0f64, 0.1..60.0f64)
            .prop_map(|(x, y, w, h)| bb(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a), 1.0);
            if a != b {
                prop_assert!(ab < 1.0);
            }
        }

        #[test]
        fn flip_is_involution(x in 0.0..100.0f64, w in 0.5..50.0f64, extra in 0.0..100.0f64) {
            let b = bb(x, 3.0, w, 7.0);
            let width = x + w + extra;
            let twice = flip_box(&flip_box(&b, width).unwrap(), width).unwrap();
            prop_assert!((twice.x() - b.x()).abs() < 1e-9);
            prop_assert_eq!(twice.w(), b.w());
        }

        #[test]
        fn scale_multiplies_area(b in arb_box(), f in 0.05..20.0f64) {
            let s = scale_box(&b, f).unwrap();
            let expected = f * f * b.area();
            prop_assert!(((s.area() - expected) / expected).abs() < 1e-9);
        }
    }
}
