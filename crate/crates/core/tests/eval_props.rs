use proptest::prelude::*;
use tricube::eval::{coco_summary, match_detections, voc_summary, GroundTruth, ImageEval, Interpolation};
use tricube::geometry::{Detection, OrientedBox};

fn gt_box() -> impl Strategy<Value = OrientedBox> {
    (10.0..90.0f64, 10.0..90.0f64, 4.0..30.0f64, 4.0..30.0f64, 0.0..1.5f64)
        .prop_map(|(cx, cy, w, h, t)| OrientedBox::new(cx, cy, w, h, t).unwrap())
}

/// Ground truth plus detections that are jittered copies or random boxes.
fn image() -> impl Strategy<Value = ImageEval> {
    prop::collection::vec((gt_box(), 0..2usize, prop::bool::weighted(0.1)), 0..6).prop_flat_map(|gts| {
        let n = gts.len();
        let dets = prop::collection::vec(
            (0..n.max(1), -3.0..3.0f64, -3.0..3.0f64, 0.8..1.2f64, 0.0..1.0f64, gt_box(), any::<bool>()),
            0..8,
        );
        (Just(gts), dets).prop_map(|(gts, raw)| {
            let dets = raw
                .into_iter()
                .map(|(i, dx, dy, sc, score, random, use_random)| match gts.get(i) {
                    Some(&(g, c, _)) if !use_random => Detection::new(
                        OrientedBox::new(g.cx + dx, g.cy + dy, g.w * sc, g.h, g.theta).unwrap(),
                        score,
                        c,
                    )
                    .unwrap(),
                    _ => Detection::new(random, score, 0).unwrap(),
                })
                .collect();
            ImageEval {
                dets,
                gts: gts.into_iter().map(|(b, c, d)| GroundTruth { bbox: b, class_id: c, difficult: d }).collect(),
            }
        })
    })
}

fn corpus() -> impl Strategy<Value = Vec<ImageEval>> {
    prop::collection::vec(image(), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ap_is_a_probability(c in corpus()) {
        let r = voc_summary(&c, 2, 0.5, Interpolation::AllPoints);
        for ap in r.per_class_ap.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(ap));
        }
    }

    #[test]
    fn halving_scores_changes_nothing(c in corpus()) {
        let halved: Vec<ImageEval> = c
            .iter()
            .map(|im| ImageEval {
                dets: im.dets.iter().map(|d| Detection { score: d.score * 0.5, ..*d }).collect(),
                gts: im.gts.clone(),
            })
            .collect();
        let a = coco_summary(&c, 2, 300);
        let b = coco_summary(&halved, 2, 300);
        prop_assert_eq!(a.map, b.map);
        prop_assert_eq!(a.ar, b.ar);
    }

    #[test]
    fn stricter_iou_never_helps(c in corpus()) {
        let r = coco_summary(&c, 2, 300);
        if let (Some(a50), Some(a75)) = (r.ap50, r.ap75) {
            prop_assert!(a50 >= a75 - 1e-12);
        }
        let loose = voc_summary(&c, 2, 0.3, Interpolation::AllPoints).map;
        let strict = voc_summary(&c, 2, 0.7, Interpolation::AllPoints).map;
        if let (Some(l), Some(s)) = (loose, strict) {
            prop_assert!(l >= s - 1e-12);
        }
    }

    #[test]
    fn dropping_a_false_positive_never_lowers_ap(c in corpus(), pick in any::<prop::sample::Index>()) {
        let fps: Vec<(usize, usize)> = c
            .iter()
            .enumerate()
            .flat_map(|(i, im)| {
                match_detections(&im.dets, &im.gts, 0.5)
                    .into_iter()
                    .filter(|m| matches!(m.kind, tricube::eval::MatchKind::FalsePositive))
                    .map(move |m| (i, m.det_index))
            })
            .collect();
        prop_assume!(!fps.is_empty());
        let (img, det) = fps[pick.index(fps.len())];
        let mut fewer = c.clone();
        fewer[img].dets.remove(det);
        let before = voc_summary(&c, 2, 0.5, Interpolation::AllPoints);
        let after = voc_summary(&fewer, 2, 0.5, Interpolation::AllPoints);
        for (a, b) in before.per_class_ap.iter().zip(&after.per_class_ap) {
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!(*b >= *a - 1e-12, "{} -> {}", a, b);
            }
        }
    }

    #[test]
    fn ar_never_grows_when_the_budget_shrinks(c in corpus(), budget in 1usize..5) {
        let full = coco_summary(&c, 2, 300).ar;
        let cut = coco_summary(&c, 2, budget).ar;
        if let (Some(f), Some(k)) = (full, cut) {
            prop_assert!(k <= f + 1e-12);
        }
    }
}
