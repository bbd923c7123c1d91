//! Bounding boxes from pixelwise person labels.

use super::{Annotation, DatasetError};
use crate::geometry::BoundingBox;

pub const DEFAULT_RATIO_LOW: f64 = 0.2;
pub const DEFAULT_RATIO_HIGH: f64 = 0.6;

/// Binary raster marking person pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    width: u32,
    height: u32,
    pixels: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(width: u32, height: u32, pixels: Vec<bool>) -> Result<Self, DatasetError> {
        if pixels.len() != width as usize * height as usize {
            return Err(DatasetError::MaskSize {
                width,
                height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Marks every pixel equal to `person_label`.
    pub fn from_labels(width: u32, height: u32, labels: &[u8], person_label: u8) -> Result<Self, DatasetError> {
        Self::new(width, height, labels.iter().map(|&v| v == person_label).collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let grand = parent[parent[i as usize] as usize];
        parent[i as usize] = grand;
        i = grand;
    }
    i
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        // Keep the older label as root so roots follow raster order.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

struct Extent {
    min_x: u32,
    min_y: u32,
    max_x: u32,
    max_y: u32,
}

/// One annotation per 8-connected component of person pixels.
///
/// The box is the tight pixel rectangle of the component. Components whose
/// width/height ratio falls below `ratio_low` or above `ratio_high` become
/// ignore regions. Output follows the raster order of each component's first
/// pixel.
pub fn seg_to_boxes(
    mask: &SegmentationMask,
    ratio_low: f64,
    ratio_high: f64,
) -> Result<Vec<Annotation>, DatasetError> {
    if !(ratio_low >= 0.0 && ratio_low < ratio_high) {
        return Err(DatasetError::InvalidRatios {
            low: ratio_low,
            high: ratio_high,
        });
    }
    let (w, h) = (mask.width as usize, mask.height as usize);
    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; w * h];
    let mut parent: Vec<u32> = Vec::new();

    // First pass: provisional labels from the already visited neighbours
    // (west, north-west, north, north-east).
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !mask.pixels[idx] {
                continue;
            }
            let mut neighbours = [NONE; 4];
            if x > 0 {
                neighbours[0] = labels[idx - 1];
            }
            if y > 0 {
                let up = idx - w;
                if x > 0 {
                    neighbours[1] = labels[up - 1];
                }
                neighbours[2] = labels[up];
                if x + 1 < w {
                    neighbours[3] = labels[up + 1];
                }
            }
            let label = match neighbours.iter().copied().filter(|&l| l != NONE).min() {
                Some(min) => {
                    for &n in neighbours.iter().filter(|&&l| l != NONE) {
                        union(&mut parent, min, n);
                    }
                    min
                }
                None => {
                    let fresh = parent.len() as u32;
                    parent.push(fresh);
                    fresh
                }
            };
            labels[idx] = label;
        }
    }

    // Second pass: resolve roots and accumulate extents. Roots are the
    // smallest provisional label of their component, so sorting by root
    // reproduces first-pixel raster order.
    let mut extents: Vec<Option<Extent>> = (0..parent.len()).map(|_| None).collect();
    for y in 0..h {
        for x in 0..w {
            let label = labels[y * w + x];
            if label == NONE {
                continue;
            }
            let root = find(&mut parent, label) as usize;
            let (x, y) = (x as u32, y as u32);
            match &mut extents[root] {
                Some(e) => {
                    e.min_x = e.min_x.min(x);
                    e.max_x = e.max_x.max(x);
                    e.min_y = e.min_y.min(y);
                    e.max_y = e.max_y.max(y);
                }
                slot @ None => {
                    *slot = Some(Extent {
                        min_x: x,
                        min_y: y,
                        max_x: x,
                        max_y: y,
                    })
                }
            }
        }
    }

    extents
        .into_iter()
        .flatten()
        .map(|e| {
            let bw = f64::from(e.max_x - e.min_x + 1);
            let bh = f64::from(e.max_y - e.min_y + 1);
            let bbox = BoundingBox::new(f64::from(e.min_x), f64::from(e.min_y), bw, bh)?;
            let ratio = bw / bh;
            let mut annotation = Annotation::person(bbox, 0.0);
            annotation.ignore = ratio < ratio_low || ratio > ratio_high;
            Ok(annotation)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> SegmentationMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        let pixels = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        SegmentationMask::new(w, h, pixels).unwrap()
    }

    #[test]
    fn empty_mask() {
        let m = SegmentationMask::new(4, 4, vec![false; 16]).unwrap();
        assert!(seg_to_boxes(&m, 0.2, 0.6).unwrap().is_empty());
        assert!(SegmentationMask::new(4, 4, vec![false; 15]).is_err());
    }

    #[test]
    fn solid_blob_within_ratio() {
        let mut pixels = vec![false; 10 * 10];
        for y in 1..8 {
            for x in 2..5 {
                pixels[y * 10 + x] = true;
            }
        }
        let m = SegmentationMask::new(10, 10, pixels).unwrap();
        let boxes = seg_to_boxes(&m, 0.2, 0.6).unwrap();
        assert_eq!(boxes.len(), 1);
        let b = boxes[0].bbox;
        assert_eq!((b.x(), b.y(), b.w(), b.h()), (2.0, 1.0, 3.0, 7.0));
        assert!(!boxes[0].ignore);
        assert_eq!(boxes[0].occlusion, 0.0);
    }

    #[test]
    fn thin_blob_is_ignored() {
        let mut pixels = vec![false; 12 * 12];
        for y in 0..10 {
            pixels[y * 12 + 5] = true;
        }
        let m = SegmentationMask::new(12, 12, pixels).unwrap();
        let boxes = seg_to_boxes(&m, 0.2, 0.6).unwrap();
        assert_eq!(boxes.len(), 1);
        assert!(boxes[0].ignore);
    }

    #[test]
    fn diagonal_pixels_join() {
        let m = mask_from(&["#...", ".#..", "..#.", "...#"]);
        let boxes = seg_to_boxes(&m, 0.0, 10.0).unwrap();
        assert_eq!(boxes.len(), 1);
        assert_eq!(boxes[0].bbox.w(), 4.0);
    }

    #[test]
    fn u_shape_merges_late() {
        // Two arms only meet on the last row.
        let m = mask_from(&["#..#", "#..#", "####", "...."]);
        let boxes = seg_to_boxes(&m, 0.0, 10.0).unwrap();
        assert_eq!(boxes.len(), 1);
    }

    #[test]
    fn ratio_bounds_are_inclusive() {
        // 1x5 → 0.2, 3x5 → 0.6, both kept
        let m = mask_from(&[
            "#...###", "#...###", "#...###", "#...###", "#...###",
        ]);
        let boxes = seg_to_boxes(&m, 0.2, 0.6).unwrap();
        assert_eq!(boxes.len(), 2);
        assert!(boxes.iter().all(|b| !b.ignore));
        assert!(seg_to_boxes(&m, 0.6, 0.2).is_err());
    }

    #[test]
    fn from_labels_selects_value() {
        let m = SegmentationMask::from_labels(3, 1, &[0, 7, 7], 7).unwrap();
        assert!(!m.get(0, 0) && m.get(1, 0) && m.get(2, 0));
    }
}
