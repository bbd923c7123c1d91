mod common;

use common::*;
use msbench_core::dataset::{Annotation, DatasetManifest};
use msbench_core::eval::{log_average_mr, match_image, sweep_curve, DetectionSet, FppiSampling, DEFAULT_MATCH_IOU};
use msbench_core::geometry::{anchor_boxes, nms, BoundingBox, ScoredBox, ANCHOR_ASPECT_RATIO};
use msbench_core::imageproc::{average_reference, compute_histogram, histogram_match, matching_lut, upscale2x, GrayImage};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn instance(seed: u64) -> (DatasetManifest, DetectionSet) {
    random_instance(&mut StdRng::seed_from_u64(seed), 12, 10)
}

fn arb_int_box() -> impl Strategy<Value = BoundingBox> {
    (0..30i32, 0..30i32, 1..15i32, 1..15i32)
        .prop_map(|(x, y, w, h)| BoundingBox::new(x as f64, y as f64, w as f64, h as f64).unwrap())
}

fn arb_gray() -> impl Strategy<Value = GrayImage> {
    (1u32..24, 1u32..24, 0u8..=255, 1u8..=255).prop_flat_map(|(w, h, lo, span)| {
        let hi = lo.saturating_add(span);
        proptest::collection::vec(lo..=hi, (w * h) as usize).prop_map(move |d| GrayImage::new(w, h, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn anchors_keep_aspect_ratio(cx in -100.0..500.0f64, cy in -100.0..500.0f64,
                                 heights in proptest::collection::vec(1.0..400.0f64, 1..8)) {
        for b in anchor_boxes(cx, cy, &heights).unwrap() {
            prop_assert!((b.aspect_ratio() - ANCHOR_ASPECT_RATIO).abs() < 1e-9);
        }
    }

    #[test]
    fn nms_matches_reference(boxes in proptest::collection::vec((arb_int_box(), 0u8..6), 0..=20)) {
        let boxes: Vec<ScoredBox> = boxes
            .into_iter()
            .map(|(b, s)| ScoredBox::new(b, s as f64 / 5.0).unwrap())
            .collect();
        prop_assert_eq!(nms(&boxes, 0.7).unwrap(), oracle_nms(&boxes, 0.7));
    }

    #[test]
    fn match_counts_are_consistent(seed in any::<u64>()) {
        let (m, dets) = instance(seed);
        for r in &m.image_records {
            let d = dets.get(&r.image_id);
            let res = match_image(d, &r.annotations, DEFAULT_MATCH_IOU);
            let persons = r.annotations.iter().filter(|a| !a.ignore).count();
            prop_assert_eq!(res.true_positives + res.false_negatives, persons);
            prop_assert_eq!(res.matches.len(), res.true_positives);
            let mut dets_used: Vec<usize> = res.matches.iter().map(|m| m.0).collect();
            let mut anns_used: Vec<usize> = res.matches.iter().map(|m| m.1).collect();
            dets_used.sort();
            dets_used.dedup();
            anns_used.sort();
            anns_used.dedup();
            prop_assert_eq!(dets_used.len(), res.matches.len());
            prop_assert_eq!(anns_used.len(), res.matches.len());
            prop_assert!(anns_used.iter().all(|&a| !r.annotations[a].ignore));
        }
    }

    #[test]
    fn curve_is_monotone_and_reproducible(seed in any::<u64>()) {
        let (m, dets) = instance(seed);
        let sampling = FppiSampling::default();
        let curve = sweep_curve(&dets, &m, DEFAULT_MATCH_IOU, &sampling).unwrap();
        for w in curve.points.windows(2) {
            prop_assert!(w[0].threshold > w[1].threshold);
            prop_assert!(w[0].fppi <= w[1].fppi);
            prop_assert!(w[0].miss_rate >= w[1].miss_rate);
        }
        prop_assert!((0.0..=1.0).contains(&curve.log_avg_mr));
        prop_assert_eq!(curve.log_avg_mr, log_average_mr(&curve.points, &sampling).unwrap());
    }

    #[test]
    fn adding_a_detection_never_lowers_tp(seed in any::<u64>(), extra in arb_int_box(), score in 0.0..1.0f64) {
        let (m, dets) = instance(seed);
        let r = &m.image_records[0];
        let before = dets.get(&r.image_id).to_vec();
        let mut after = before.clone();
        after.push(ScoredBox::new(extra, score).unwrap());
        // at every sweep position, i.e. for every kept score prefix
        for t in after.iter().map(|d| d.score()) {
            let keep = |v: &[ScoredBox]| -> Vec<ScoredBox> { v.iter().filter(|d| d.score() >= t).copied().collect() };
            let a = match_image(&keep(&before), &r.annotations, DEFAULT_MATCH_IOU).true_positives;
            let b = match_image(&keep(&after), &r.annotations, DEFAULT_MATCH_IOU).true_positives;
            prop_assert!(b >= a, "tp dropped from {} to {} at threshold {}", a, b, t);
        }
    }

    #[test]
    fn removing_ignore_regions_never_lowers_fp(seed in any::<u64>()) {
        let (m, dets) = instance(seed);
        for r in &m.image_records {
            let d = dets.get(&r.image_id);
            let stripped: Vec<Annotation> = r.annotations.iter().filter(|a| !a.ignore).cloned().collect();
            let with = match_image(d, &r.annotations, DEFAULT_MATCH_IOU).false_positives;
            let without = match_image(d, &stripped, DEFAULT_MATCH_IOU).false_positives;
            prop_assert!(without >= with);
        }
    }

    #[test]
    fn matching_lut_is_monotone(a in arb_gray(), b in arb_gray()) {
        let lut = matching_lut(&compute_histogram(&a), &compute_histogram(&b)).unwrap();
        prop_assert!(lut.windows(2).all(|w| w[0] <= w[1]));
        let out = histogram_match(&a, &compute_histogram(&b)).unwrap();
        prop_assert_eq!(compute_histogram(&out).total(), compute_histogram(&a).total());
    }

    #[test]
    fn histogram_total_is_pixel_count(img in arb_gray()) {
        prop_assert_eq!(compute_histogram(&img).total(), img.pixel_count() as f64);
    }

    #[test]
    fn average_reference_ignores_order(imgs in proptest::collection::vec(arb_gray(), 1..6), rot in 0usize..6) {
        let hists: Vec<_> = imgs.iter().map(compute_histogram).collect();
        let mut rotated = hists.clone();
        rotated.rotate_left(rot % hists.len());
        rotated.reverse();
        let a = average_reference(&hists).unwrap();
        let b = average_reference(&rotated).unwrap();
        for (x, y) in a.bins().iter().zip(b.bins()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upscale_keeps_mean(img in arb_gray()) {
        let up = upscale2x(&img);
        prop_assert_eq!((up.width(), up.height()), (2 * img.width(), 2 * img.height()));
        let mean = |g: &GrayImage| g.data().iter().map(|&v| v as f64).sum::<f64>() / g.pixel_count() as f64;
        prop_assert!((mean(&up) - mean(&img)).abs() <= 1.0);
    }
}
