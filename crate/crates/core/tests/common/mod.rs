//! Brute-force reference implementations used to cross-check the library.
//! Nothing here calls into the code paths it checks beyond plain data types.

#![allow(dead_code)]

use std::collections::VecDeque;

use msbench_core::dataset::{Annotation, DatasetManifest, ImageRecord, Spectra};
use msbench_core::eval::DetectionSet;
use msbench_core::geometry::{BoundingBox, ScoredBox};
use rand::rngs::StdRng;
use rand::Rng;

/// IoU from corner coordinates.
pub fn oracle_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax2, ay2, bx2, by2) = (a.x() + a.w(), a.y() + a.h(), b.x() + b.w(), b.y() + b.h());
    let iw = ax2.min(bx2) - a.x().max(b.x());
    let ih = ay2.min(by2) - a.y().max(b.y());
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.w() * a.h() + b.w() * b.h() - inter)
}

pub fn oracle_ioa(det: &BoundingBox, region: &BoundingBox) -> f64 {
    let iw = (det.x() + det.w()).min(region.x() + region.w()) - det.x().max(region.x());
    let ih = (det.y() + det.h()).min(region.y() + region.h()) - det.y().max(region.y());
    if iw <= 0.0 || ih <= 0.0 {
        0.0
    } else {
        iw * ih / (det.w() * det.h())
    }
}

/// Index of the highest-scoring remaining item, lowest index on ties.
fn argmax(items: &[(usize, f64)]) -> usize {
    let mut best = 0;
    for i in 1..items.len() {
        if items[i].1 > items[best].1 || (items[i].1 == items[best].1 && items[i].0 < items[best].0) {
            best = i;
        }
    }
    best
}

/// Repeatedly takes the best remaining box and deletes everything it
/// overlaps at or above the threshold.
pub fn oracle_nms(boxes: &[ScoredBox], threshold: f64) -> Vec<ScoredBox> {
    let mut remaining: Vec<(usize, f64)> = boxes.iter().enumerate().map(|(i, b)| (i, b.score())).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let (winner, _) = remaining[argmax(&remaining)];
        kept.push(boxes[winner]);
        remaining.retain(|&(i, _)| i != winner && oracle_iou(&boxes[i].bbox, &boxes[winner].bbox) < threshold);
    }
    kept
}

/// `(x, y, w, h, ignore)` per 8-connected component, in discovery order of
/// a raster scan with breadth-first flood fill.
pub fn oracle_components(width: usize, height: usize, mask: &[bool], low: f64, high: f64) -> Vec<(u32, u32, u32, u32, bool)> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % width, p / width);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let q = ny as usize * width + nx as usize;
                    if mask[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        let (w, h) = ((x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32);
        let ratio = f64::from(w) / f64::from(h);
        out.push((x0 as u32, y0 as u32, w, h, ratio < low || ratio > high));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Matches the detections scoring at least `min_score` from scratch.
pub fn oracle_match(dets: &[ScoredBox], anns: &[Annotation], iou_thr: f64, min_score: f64) -> Counts {
    let mut pending: Vec<(usize, f64)> = dets
        .iter()
        .enumerate()
        .filter(|(_, d)| d.score() >= min_score)
        .map(|(i, d)| (i, d.score()))
        .collect();
    let mut used = vec![false; anns.len()];
    let mut counts = Counts::default();
    while !pending.is_empty() {
        let pick = argmax(&pending);
        let (d, _) = pending.remove(pick);
        let det = &dets[d].bbox;
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for (a, ann) in anns.iter().enumerate() {
            if ann.ignore || used[a] {
                continue;
            }
            let o = oracle_iou(det, &ann.bbox);
            if o >= iou_thr && o > best_iou {
                best = Some(a);
                best_iou = o;
            }
        }
        if let Some(a) = best {
            used[a] = true;
            counts.tp += 1;
        } else if !anns.iter().any(|a| a.ignore && oracle_ioa(det, &a.bbox) >= iou_thr) {
            counts.fp += 1;
        }
    }
    counts.fn_ = anns.iter().filter(|a| !a.ignore).count() - counts.tp;
    counts
}

/// `(threshold, fppi, miss_rate)` recounted independently at every distinct score.
pub fn oracle_curve(dets: &DetectionSet, manifest: &DatasetManifest, iou_thr: f64) -> Vec<(f64, f64, f64)> {
    let mut scores: Vec<f64> = dets.iter().flat_map(|(_, d)| d.iter().map(|b| b.score())).collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
    scores.dedup();
    let images = manifest.image_records.len() as f64;
    let gt: usize = manifest
        .image_records
        .iter()
        .map(|r| r.annotations.iter().filter(|a| !a.ignore).count())
        .sum();
    let mut out = Vec::new();
    for t in scores {
        let mut total = Counts::default();
        for r in &manifest.image_records {
            let c = oracle_match(dets.get(&r.image_id), &r.annotations, iou_thr, t);
            total.tp += c.tp;
            total.fp += c.fp;
            total.fn_ += c.fn_;
        }
        assert_eq!(total.tp + total.fn_, gt);
        out.push((t, total.fp as f64 / images, total.fn_ as f64 / gt as f64));
    }
    if out.is_empty() {
        out.push((f64::INFINITY, 0.0, 1.0));
    }
    out
}

/// Integer-aligned box so that every area is exact.
pub fn random_box(rng: &mut StdRng, extent: i32) -> BoundingBox {
    let x = rng.gen_range(0..extent) as f64;
    let y = rng.gen_range(0..extent) as f64;
    let w = rng.gen_range(1..=extent / 2) as f64;
    let h = rng.gen_range(1..=extent / 2) as f64;
    BoundingBox::new(x, y, w, h).unwrap()
}

/// A box near `base`, so that matches actually happen.
pub fn jitter(rng: &mut StdRng, base: &BoundingBox) -> BoundingBox {
    let dx = rng.gen_range(-3..=3) as f64;
    let dy = rng.gen_range(-3..=3) as f64;
    let dw = rng.gen_range(-2..=2) as f64;
    let dh = rng.gen_range(-2..=2) as f64;
    BoundingBox::new(base.x() + dx, base.y() + dy, (base.w() + dw).max(1.0), (base.h() + dh).max(1.0)).unwrap()
}

pub fn random_score(rng: &mut StdRng, discrete: bool) -> f64 {
    if discrete {
        rng.gen_range(0..8) as f64 / 8.0
    } else {
        rng.gen::<f64>()
    }
}

/// Random manifest plus detections: at most `max_images` images and
/// `max_boxes` regions / detections per image.
pub fn random_instance(rng: &mut StdRng, max_images: usize, max_boxes: usize) -> (DatasetManifest, DetectionSet) {
    let n_images = rng.gen_range(1..=max_images);
    let discrete = rng.gen_bool(0.5);
    let mut records = Vec::new();
    let mut dets = DetectionSet::new("rand");
    for i in 0..n_images {
        let n_ann = rng.gen_range(0..=max_boxes);
        let anns: Vec<Annotation> = (0..n_ann)
            .map(|_| {
                let b = random_box(rng, 40);
                if rng.gen_bool(0.2) {
                    Annotation::ignore_region(b)
                } else {
                    Annotation::person(b, 0.0)
                }
            })
            .collect();
        let n_det = rng.gen_range(0..=max_boxes);
        let id = format!("img{i:03}");
        for _ in 0..n_det {
            let b = if !anns.is_empty() && rng.gen_bool(0.7) {
                let pick = rng.gen_range(0..anns.len());
                jitter(rng, &anns[pick].bbox)
            } else {
                random_box(rng, 40)
            };
            dets.push(id.clone(), ScoredBox::new(b, random_score(rng, discrete)).unwrap());
        }
        records.push(ImageRecord {
            image_id: id,
            sequence_id: "s".into(),
            frame_index: i as u64,
            spectra: Spectra::VisIr,
            width: 100,
            height: 100,
            annotations: anns,
        });
    }
    // guarantee at least one evaluable person
    if !records.iter().any(|r| r.annotations.iter().any(|a| !a.ignore)) {
        records[0]
            .annotations
            .push(Annotation::person(BoundingBox::new(1.0, 1.0, 10.0, 20.0).unwrap(), 0.0));
    }
    (DatasetManifest::new("rand", records), dets)
}

/// Log-average miss rate over `samples` log-spaced references in `[lo, hi]`,
/// evaluated straight from curve triples.
pub fn oracle_log_avg(points: &[(f64, f64, f64)], lo: f64, hi: f64, samples: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..samples {
        let t = if samples == 1 { 0.0 } else { i as f64 / (samples - 1) as f64 };
        let reference = 10f64.powf(lo.log10() + t * (hi.log10() - lo.log10()));
        let mut mr = 1.0;
        for p in points {
            if p.1 <= reference {
                mr = p.2;
            }
        }
        sum += f64::max(mr, 1e-10).ln();
    }
    (sum / samples as f64).exp()
}
