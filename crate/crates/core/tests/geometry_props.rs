use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tricube::geometry::{min_area_rect, nms, polygon_iou, Detection, OrientedBox, Point};

fn oriented_box() -> impl Strategy<Value = OrientedBox> {
    (0.0..100.0f64, 0.0..100.0f64, 0.5..40.0f64, 0.5..40.0f64, 0.0..PI)
        .prop_map(|(cx, cy, w, h, t)| OrientedBox::new(cx, cy, w, h, t).unwrap())
}

fn inside(b: &OrientedBox, x: f64, y: f64) -> bool {
    let (s, c) = b.theta.sin_cos();
    let (dx, dy) = (x - b.cx, y - b.cy);
    (dx * c + dy * s).abs() <= b.w / 2.0 && (-dx * s + dy * c).abs() <= b.h / 2.0
}

/// IoU by uniform sampling of the bounding square of both boxes.
fn monte_carlo_iou(a: &OrientedBox, b: &OrientedBox, samples: usize, seed: u64) -> f64 {
    let r = |o: &OrientedBox| (o.w.hypot(o.h)) / 2.0;
    let (x0, x1) = ((a.cx - r(a)).min(b.cx - r(b)), (a.cx + r(a)).max(b.cx + r(b)));
    let (y0, y1) = ((a.cy - r(a)).min(b.cy - r(b)), (a.cy + r(a)).max(b.cy + r(b)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inter, mut union) = (0usize, 0usize);
    for _ in 0..samples {
        let x = rng.random_range(x0..x1);
        let y = rng.random_range(y0..y1);
        let (ia, ib) = (inside(a, x, y), inside(b, x, y));
        inter += usize::from(ia && ib);
        union += usize::from(ia || ib);
    }
    if union == 0 { 0.0 } else { inter as f64 / union as f64 }
}

fn angle_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iou_is_symmetric_and_bounded(a in oriented_box(), b in oriented_box()) {
        let (qa, qb) = (a.to_corners(), b.to_corners());
        let ab = polygon_iou(&qa, &qb);
        prop_assert_eq!(ab.to_bits(), polygon_iou(&qb, &qa).to_bits());
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn self_iou_is_one(a in oriented_box()) {
        prop_assert!((a.iou(&a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iou_is_translation_invariant(a in oriented_box(), b in oriented_box(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let shift = |o: &OrientedBox| OrientedBox { cx: o.cx + dx, cy: o.cy + dy, ..*o };
        prop_assert!((a.iou(&b) - shift(&a).iou(&shift(&b))).abs() < 1e-9);
    }

    #[test]
    fn iou_agrees_with_sampling(a in oriented_box(), dx in -20.0..20.0f64, dy in -20.0..20.0f64, b in oriented_box()) {
        let b = OrientedBox { cx: a.cx + dx, cy: a.cy + dy, ..b };
        let mc = monte_carlo_iou(&a, &b, 20_000, 11);
        prop_assert!((a.iou(&b) - mc).abs() < 0.03, "exact {} mc {}", a.iou(&b), mc);
    }

    #[test]
    fn canonicalize_keeps_the_corner_set(a in oriented_box(), turns in -3i32..3) {
        let raw = OrientedBox { theta: a.theta + f64::from(turns) * FRAC_PI_2, ..a };
        let c = raw.canonicalize();
        prop_assert!((0.0..FRAC_PI_2).contains(&c.theta));
        prop_assert!((raw.iou(&c) - 1.0).abs() < 1e-9);
        prop_assert_eq!(c.canonicalize(), c);
    }

    #[test]
    fn min_rect_of_corners_is_the_box(a in oriented_box()) {
        let r = min_area_rect(a.to_corners().vertices()).unwrap();
        let c = a.canonicalize();
        prop_assert!((r.cx - c.cx).abs() < 1e-6 && (r.cy - c.cy).abs() < 1e-6);
        prop_assert!((r.area() - c.area()).abs() < 1e-6 * c.area().max(1.0));
        prop_assert!((r.iou(&c) - 1.0).abs() < 1e-6);
        if (c.w - c.h).abs() > 1e-3 {
            prop_assert!(angle_gap(r.theta, c.theta, PI) < 1e-6 || angle_gap(r.theta, c.theta + FRAC_PI_2, PI) < 1e-6);
        }
    }

    #[test]
    fn min_rect_contains_all_points(pts in prop::collection::vec((0.0..50.0f64, 0.0..50.0f64), 3..40)) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let r = min_area_rect(&pts).unwrap();
        let grown = OrientedBox { w: r.w + 1e-6, h: r.h + 1e-6, ..r };
        for p in &pts {
            prop_assert!(inside(&grown, p.x, p.y));
        }
    }

    #[test]
    fn nms_keeps_a_non_overlapping_subset(boxes in prop::collection::vec((oriented_box(), 0.0..1.0f64, 0..2usize), 0..20), thr in 0.1..0.9f64) {
        let dets: Vec<Detection> = boxes.iter().map(|&(b, s, c)| Detection::new(b, s, c).unwrap()).collect();
        let kept = nms(&dets, thr);
        for (i, a) in kept.iter().enumerate() {
            prop_assert!(dets.contains(a));
            for b in &kept[i + 1..] {
                prop_assert!(a.class_id != b.class_id || a.bbox.iou(&b.bbox) < thr);
                prop_assert!(a.score >= b.score);
            }
        }
        // every dropped detection overlaps a kept one of its class with a higher or equal score
        for d in &dets {
            if !kept.contains(d) {
                prop_assert!(kept.iter().any(|k| k.class_id == d.class_id && k.score >= d.score && k.bbox.iou(&d.bbox) >= thr));
            }
        }
    }
}
