//! Hard and soft non-maximum suppression for oriented detections.

use super::{polygon_iou, Detection, QuadBox};

/// Gaussian Soft-NMS decay parameter used when none is given.
pub const SOFT_NMS_SIGMA: f64 = 0.5;
/// Soft-NMS drops detections whose decayed score falls below this.
pub const SOFT_NMS_SCORE_FLOOR: f64 = 0.001;

/// Indices sorted by descending score; equal scores keep input order.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Greedy NMS within each class: a detection is dropped when its polygon IoU
/// with an already kept detection of the same class is `>= iou_threshold`.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let quads: Vec<QuadBox> = dets.iter().map(|d| d.bbox.to_corners()).collect();
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(dets) {
        let suppressed = kept.iter().any(|&k| {
            dets[k].class_id == dets[i].class_id && polygon_iou(&quads[k], &quads[i]) >= iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i]).collect()
}

/// Gaussian Soft-NMS: each time the highest-scoring remaining detection is
/// emitted, every other same-class detection has its score multiplied by
/// `exp(-iou^2 / sigma)`. Detections scoring below `score_floor` are dropped.
/// Output is in emission order.
pub fn soft_nms(dets: &[Detection], sigma: f64, score_floor: f64) -> Vec<Detection> {
    let quads: Vec<QuadBox> = dets.iter().map(|d| d.bbox.to_corners()).collect();
    let mut pool: Vec<(usize, f64)> = dets
        .iter()
        .enumerate()
        .map(|(i, d)| (i, d.score))
        .filter(|&(_, s)| s >= score_floor)
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        // Pool stays in input order, so the first maximum wins ties.
        let mut best = 0;
        for (pos, &(_, s)) in pool.iter().enumerate() {
            if s > pool[best].1 {
                best = pos;
            }
        }
        let (top, top_score) = pool.remove(best);
        out.push(Detection {
            score: top_score,
            ..dets[top]
        });
        for (i, score) in pool.iter_mut() {
            if dets[*i].class_id != dets[top].class_id {
                continue;
            }
            let iou = polygon_iou(&quads[top], &quads[*i]);
            *score *= (-(iou * iou) / sigma).exp();
        }
        pool.retain(|&(_, s)| s >= score_floor);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::OrientedBox;

    fn det(cx: f64, w: f64, score: f64, class_id: usize) -> Detection {
        Detection::new(OrientedBox::new(cx, 0.0, w, 10.0, 0.0).unwrap(), score, class_id).unwrap()
    }

    #[test]
    fn duplicate_is_suppressed() {
        let out = nms(&[det(0.0, 10.0, 0.8, 0), det(0.0, 10.0, 0.9, 0)], 0.5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.9);
    }

    #[test]
    fn disjoint_boxes_all_kept() {
        let dets = [det(0.0, 10.0, 0.5, 0), det(100.0, 10.0, 0.9, 0), det(200.0, 10.0, 0.7, 0)];
        assert_eq!(nms(&dets, 0.3).len(), 3);
    }

    #[test]
    fn other_class_is_not_suppressed() {
        let out = nms(&[det(0.0, 10.0, 0.9, 0), det(0.0, 10.0, 0.8, 1)], 0.5);
        assert_eq!(out.len(), 2);
    }

    /// Reference: repeatedly take the best remaining box, then delete
    /// everything it suppresses.
    fn greedy_oracle(dets: &[Detection], thr: f64) -> Vec<Detection> {
        let mut rest: Vec<Detection> = dets.to_vec();
        let mut keep = Vec::new();
        while !rest.is_empty() {
            let mut best = 0;
            for i in 1..rest.len() {
                if rest[i].score > rest[best].score {
                    best = i;
                }
            }
            let top = rest.remove(best);
            rest.retain(|d| d.class_id != top.class_id || top.bbox.iou(&d.bbox) < thr);
            keep.push(top);
        }
        keep
    }

    #[test]
    fn chain_matches_greedy_oracle() {
        // IoU(a,b) = 7/13 ~ 0.538 and IoU(b,c) = 4/16 = 0.25 on the 0.4
        // threshold: a suppresses b, which then cannot suppress c.
        let a = det(0.0, 10.0, 0.9, 0);
        let b = det(3.0, 10.0, 0.8, 0);
        let c = det(9.0, 10.0, 0.7, 0);
        let out = nms(&[c, a, b], 0.4);
        assert_eq!(out, greedy_oracle(&[c, a, b], 0.4));
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].score, 0.7);
    }

    #[test]
    fn soft_nms_examples() {
        let disjoint = [det(0.0, 10.0, 0.9, 0), det(100.0, 10.0, 0.6, 0)];
        let out = soft_nms(&disjoint, SOFT_NMS_SIGMA, SOFT_NMS_SCORE_FLOOR);
        assert_eq!(out.iter().map(|d| d.score).collect::<Vec<_>>(), vec![0.9, 0.6]);

        let same = [det(0.0, 10.0, 0.9, 0), det(0.0, 10.0, 0.8, 0)];
        let out = soft_nms(&same, 0.5, SOFT_NMS_SCORE_FLOOR);
        assert_eq!(out.len(), 2);
        assert!((out[1].score - 0.8 * (-1.0f64 / 0.5).exp()).abs() < 1e-12);

        let single = [det(0.0, 10.0, 0.4, 2)];
        assert_eq!(soft_nms(&single, 0.5, SOFT_NMS_SCORE_FLOOR), single.to_vec());
    }

    #[test]
    fn soft_nms_drops_below_floor_and_breaks_ties_by_input_order() {
        let same = [det(0.0, 10.0, 0.9, 0), det(0.0, 10.0, 0.5, 0)];
        // 0.5 * e^-2 ~ 0.068 < 0.1
        assert_eq!(soft_nms(&same, 0.5, 0.1).len(), 1);

        let tie = [det(0.0, 10.0, 0.5, 0), det(100.0, 10.0, 0.5, 0)];
        let out = soft_nms(&tie, 0.5, 0.001);
        assert_eq!(out[0].bbox.cx, 0.0);
    }
}
