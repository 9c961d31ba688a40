//! Rotated-box detection metrics.
//!
//! Matching is greedy in descending score order (ties keep input order): a
//! detection claims the unmatched same-class ground truth with the highest
//! polygon IoU at or above the threshold. Ground truths flagged `difficult`
//! (or outside the area range being evaluated) never count as misses; a
//! detection that only overlaps such a box is ignored rather than counted as
//! a false positive.

use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_iou, Detection, OrientedBox, QuadBox};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

pub const DEFAULT_BUDGET: usize = 300;
/// Area bucket edges (px^2 on `w * h`): small < 32^2 <= medium < 96^2 <= large.
pub const SMALL_AREA: f64 = 32.0 * 32.0;
pub const LARGE_AREA: f64 = 96.0 * 96.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "box")]
    pub bbox: OrientedBox,
    pub class_id: usize,
    pub difficult: bool,
}

impl GroundTruth {
    pub fn new(bbox: OrientedBox, class_id: usize) -> Self {
        Self {
            bbox,
            class_id,
            difficult: false,
        }
    }
}

/// Detections and ground truth of one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub dets: Vec<Detection>,
    pub gts: Vec<GroundTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    /// Matched the ground truth at this index.
    TruePositive(usize),
    FalsePositive,
    /// Overlaps only a difficult / out-of-range ground truth.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub det_index: usize,
    pub score: f64,
    pub class_id: usize,
    pub kind: MatchKind,
}

impl MatchRecord {
    pub fn is_tp(&self) -> bool {
        matches!(self.kind, MatchKind::TruePositive(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Area under the monotone precision envelope.
    AllPoints,
    /// Mean of the envelope at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

/// Descending score order, stable.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Same-class IoUs between every detection and ground truth of one image.
struct IouTable {
    gts: usize,
    values: Vec<f64>,
}

impl IouTable {
    fn new(dets: &[Detection], gts: &[GroundTruth]) -> Self {
        let gq: Vec<QuadBox> = gts.iter().map(|g| g.bbox.to_corners()).collect();
        let mut values = vec![0.0; dets.len() * gts.len()];
        for (i, d) in dets.iter().enumerate() {
            let dq = d.bbox.to_corners();
            for (j, g) in gts.iter().enumerate() {
                if g.class_id == d.class_id {
                    values[i * gts.len() + j] = polygon_iou(&dq, &gq[j]);
                }
            }
        }
        Self { gts: gts.len(), values }
    }

    #[inline]
    fn get(&self, det: usize, gt: usize) -> f64 {
        self.values[det * self.gts + gt]
    }
}

/// Which boxes an evaluation pass disregards.
struct Filter {
    gt_ignored: Vec<bool>,
    /// Unmatched detections flagged here are ignored instead of counted as FP.
    det_ignored: Vec<bool>,
}

impl Filter {
    fn new(dets: &[Detection], gts: &[GroundTruth], area: Option<(f64, f64)>) -> Self {
        let outside = |b: &OrientedBox| area.is_some_and(|(lo, hi)| b.area() < lo || b.area() >= hi);
        Self {
            gt_ignored: gts.iter().map(|g| g.difficult || outside(&g.bbox)).collect(),
            det_ignored: dets.iter().map(|d| outside(&d.bbox)).collect(),
        }
    }
}

fn greedy_match(dets: &[Detection], gts: &[GroundTruth], ious: &IouTable, thr: f64, filter: &Filter, order: &[usize]) -> Vec<MatchRecord> {
    let mut taken = vec![false; gts.len()];
    order
        .iter()
        .map(|&i| {
            let d = &dets[i];
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if taken[j] || filter.gt_ignored[j] || g.class_id != d.class_id {
                    continue;
                }
                let iou = ious.get(i, j);
                if iou >= thr && best.map_or(true, |(_, b)| iou > b) {
                    best = Some((j, iou));
                }
            }
            let kind = if let Some((j, _)) = best {
                taken[j] = true;
                MatchKind::TruePositive(j)
            } else if gts
                .iter()
                .enumerate()
                .any(|(j, g)| filter.gt_ignored[j] && g.class_id == d.class_id && ious.get(i, j) >= thr)
                || filter.det_ignored[i]
            {
                MatchKind::Ignored
            } else {
                MatchKind::FalsePositive
            };
            MatchRecord {
                det_index: i,
                score: d.score,
                class_id: d.class_id,
                kind,
            }
        })
        .collect()
}

/// Labels each detection of one image TP / FP / ignored, in match order.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], iou_thr: f64) -> Vec<MatchRecord> {
    let ious = IouTable::new(dets, gts);
    let filter = Filter::new(dets, gts, None);
    greedy_match(dets, gts, &ious, iou_thr, &filter, &score_order(dets))
}

/// Precision/recall after each non-ignored detection, in score order.
pub fn pr_curve(matches: &[MatchRecord], gt_count: usize) -> PrCurve {
    let mut ranked: Vec<&MatchRecord> = matches.iter().filter(|m| m.kind != MatchKind::Ignored).collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut tp = 0usize;
    let mut recall = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    for (k, m) in ranked.iter().enumerate() {
        if m.is_tp() {
            tp += 1;
        }
        recall.push(if gt_count == 0 { 0.0 } else { tp as f64 / gt_count as f64 });
        precision.push(tp as f64 / (k + 1) as f64);
    }
    PrCurve { recall, precision }
}

/// AP from a match table; `None` when there is no ground truth to recall.
pub fn average_precision(matches: &[MatchRecord], gt_count: usize, interpolation: Interpolation) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    let curve = pr_curve(matches, gt_count);
    Some(ap_from_curve(&curve, interpolation))
}

fn ap_from_curve(curve: &PrCurve, interpolation: Interpolation) -> f64 {
    match interpolation {
        Interpolation::AllPoints => {
            let n = curve.recall.len();
            let mut mrec = Vec::with_capacity(n + 2);
            let mut mpre = Vec::with_capacity(n + 2);
            mrec.push(0.0);
            mpre.push(0.0);
            mrec.extend_from_slice(&curve.recall);
            mpre.extend_from_slice(&curve.precision);
            mrec.push(1.0);
            mpre.push(0.0);
            for i in (0..mpre.len() - 1).rev() {
                mpre[i] = mpre[i].max(mpre[i + 1]);
            }
            (0..mrec.len() - 1)
                .filter(|&i| mrec[i + 1] != mrec[i])
                .map(|i| (mrec[i + 1] - mrec[i]) * mpre[i + 1])
                .sum()
        }
        Interpolation::ElevenPoint => {
            let total: f64 = (0..=10)
                .map(|t| {
                    let r = t as f64 / 10.0;
                    curve
                        .recall
                        .iter()
                        .zip(&curve.precision)
                        .filter(|(rec, _)| **rec >= r)
                        .map(|(_, p)| *p)
                        .fold(0.0, f64::max)
                })
                .sum();
            total / 11.0
        }
    }
}

/// Per-image precomputation shared by every threshold of a summary.
struct Prepared<'a> {
    image: &'a ImageEval,
    ious: IouTable,
    order: Vec<usize>,
}

fn prepare(images: &[ImageEval]) -> Vec<Prepared<'_>> {
    images
        .iter()
        .map(|image| Prepared {
            image,
            ious: IouTable::new(&image.dets, &image.gts),
            order: score_order(&image.dets),
        })
        .collect()
}

/// Match records of all images for one class, plus its GT count.
fn class_matches(prepared: &[Prepared<'_>], thr: f64, area: Option<(f64, f64)>, budget: Option<usize>, num_classes: usize) -> (Vec<Vec<MatchRecord>>, Vec<usize>) {
    let mut per_class = vec![Vec::new(); num_classes];
    let mut gt_counts = vec![0usize; num_classes];
    for p in prepared {
        let (dets, gts) = (&p.image.dets, &p.image.gts);
        let filter = Filter::new(dets, gts, area);
        for (g, ignored) in gts.iter().zip(&filter.gt_ignored) {
            if !ignored && g.class_id < num_classes {
                gt_counts[g.class_id] += 1;
            }
        }
        let order = match budget {
            Some(b) => &p.order[..p.order.len().min(b)],
            None => &p.order[..],
        };
        for m in greedy_match(dets, gts, &p.ious, thr, &filter, order) {
            if m.class_id < num_classes {
                per_class[m.class_id].push(m);
            }
        }
    }
    (per_class, gt_counts)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocResult {
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    /// `None` for classes without ground truth.
    pub per_class_ap: Vec<Option<f64>>,
    pub gt_counts: Vec<usize>,
    /// Mean over classes with ground truth; `None` when there is none at all.
    pub map: Option<f64>,
    pub pr_curves: Vec<PrCurve>,
}

/// Single-threshold mAP over a corpus.
pub fn voc_summary(images: &[ImageEval], num_classes: usize, iou_thr: f64, interpolation: Interpolation) -> VocResult {
    let prepared = prepare(images);
    let (matches, gt_counts) = class_matches(&prepared, iou_thr, None, None, num_classes);
    let per_class_ap: Vec<Option<f64>> = matches
        .iter()
        .zip(&gt_counts)
        .map(|(m, &n)| average_precision(m, n, interpolation))
        .collect();
    let pr_curves = matches.iter().zip(&gt_counts).map(|(m, &n)| pr_curve(m, n)).collect();
    VocResult {
        iou_threshold: iou_thr,
        interpolation,
        map: mean(per_class_ap.iter().flatten().copied()),
        per_class_ap,
        gt_counts,
        pr_curves,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Per class, all-points AP averaged over IoU 0.50:0.05:0.95.
    pub per_class_ap: Vec<Option<f64>>,
    pub gt_counts: Vec<usize>,
    /// Mean of `per_class_ap` over classes with ground truth.
    pub map: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    /// Recall averaged over IoU 0.50:0.05:0.95 and classes, keeping only the
    /// `budget` best-scoring detections of each image.
    pub ar: Option<f64>,
    pub budget: usize,
    /// PR samples per class at IoU 0.5.
    pub pr_curves: Vec<PrCurve>,
}

/// Per-class APs at every COCO threshold (`[threshold][class]`).
fn ap_grid(prepared: &[Prepared<'_>], area: Option<(f64, f64)>, num_classes: usize) -> (Vec<Vec<Option<f64>>>, Vec<usize>) {
    let mut gts = vec![0; num_classes];
    let grid = coco_thresholds()
        .iter()
        .map(|&thr| {
            let (matches, counts) = class_matches(prepared, thr, area, None, num_classes);
            gts = counts.clone();
            matches
                .iter()
                .zip(&counts)
                .map(|(m, &n)| average_precision(m, n, Interpolation::AllPoints))
                .collect()
        })
        .collect();
    (grid, gts)
}

fn grid_mean(grid: &[Vec<Option<f64>>]) -> Option<f64> {
    let per_class: Vec<Option<f64>> = (0..grid[0].len())
        .map(|c| mean(grid.iter().filter_map(|row| row[c])))
        .collect();
    mean(per_class.into_iter().flatten())
}

/// COCO-style summary over a corpus of images.
pub fn coco_summary(images: &[ImageEval], num_classes: usize, budget: usize) -> EvalResult {
    let prepared = prepare(images);
    let (grid, gt_counts) = ap_grid(&prepared, None, num_classes);
    let per_class_ap: Vec<Option<f64>> = (0..num_classes)
        .map(|c| mean(grid.iter().filter_map(|row| row[c])))
        .collect();
    let row_mean = |row: &Vec<Option<f64>>| mean(row.iter().flatten().copied());

    let recalls: Vec<Vec<Option<f64>>> = coco_thresholds()
        .iter()
        .map(|&thr| {
            let (matches, counts) = class_matches(&prepared, thr, None, Some(budget.max(1)), num_classes);
            matches
                .iter()
                .zip(&counts)
                .map(|(m, &n)| (n > 0).then(|| m.iter().filter(|r| r.is_tp()).count() as f64 / n as f64))
                .collect()
        })
        .collect();

    let bucket = |lo: f64, hi: f64| grid_mean(&ap_grid(&prepared, Some((lo, hi)), num_classes).0);
    let (m50, _) = class_matches(&prepared, 0.5, None, None, num_classes);
    EvalResult {
        map: mean(per_class_ap.iter().flatten().copied()),
        ap50: row_mean(&grid[0]),
        ap75: row_mean(&grid[5]),
        ap_small: bucket(0.0, SMALL_AREA),
        ap_medium: bucket(SMALL_AREA, LARGE_AREA),
        ap_large: bucket(LARGE_AREA, f64::INFINITY),
        ar: grid_mean(&recalls),
        budget,
        pr_curves: m50.iter().zip(&gt_counts).map(|(m, &n)| pr_curve(m, n)).collect(),
        per_class_ap,
        gt_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(cx: f64, cy: f64, w: f64, h: f64) -> OrientedBox {
        OrientedBox::new(cx, cy, w, h, 0.0).unwrap()
    }

    fn det(bbox: OrientedBox, score: f64) -> Detection {
        Detection::new(bbox, score, 0).unwrap()
    }

    #[test]
    fn exact_det_is_tp() {
        let g = GroundTruth::new(b(10.0, 10.0, 8.0, 4.0), 0);
        let m = match_detections(&[det(g.bbox, 0.9)], &[g], 0.5);
        assert_eq!(m[0].kind, MatchKind::TruePositive(0));
    }

    #[test]
    fn second_det_on_same_gt_is_fp() {
        let g = GroundTruth::new(b(10.0, 10.0, 8.0, 4.0), 0);
        let m = match_detections(&[det(g.bbox, 0.7), det(g.bbox, 0.9)], &[g], 0.5);
        assert_eq!(m[0].det_index, 1);
        assert!(m[0].is_tp());
        assert_eq!(m[1].kind, MatchKind::FalsePositive);
    }

    #[test]
    fn difficult_gt_is_neither_hit_nor_miss() {
        let mut g = GroundTruth::new(b(10.0, 10.0, 8.0, 4.0), 0);
        g.difficult = true;
        let m = match_detections(&[det(g.bbox, 0.9)], &[g], 0.5);
        assert_eq!(m[0].kind, MatchKind::Ignored);
        let r = voc_summary(&[ImageEval { dets: vec![det(g.bbox, 0.9)], gts: vec![g] }], 1, 0.5, Interpolation::AllPoints);
        assert_eq!(r.gt_counts, vec![0]);
        assert_eq!(r.map, None);
    }

    #[test]
    fn ap_examples() {
        let rec = |kind| MatchRecord { det_index: 0, score: 0.5, class_id: 0, kind };
        let all_tp = [rec(MatchKind::TruePositive(0)), rec(MatchKind::TruePositive(1))];
        assert_eq!(average_precision(&all_tp, 2, Interpolation::AllPoints), Some(1.0));
        assert_eq!(average_precision(&all_tp, 2, Interpolation::ElevenPoint), Some(1.0));
        assert_eq!(average_precision(&[], 2, Interpolation::AllPoints), Some(0.0));
        assert_eq!(average_precision(&[], 0, Interpolation::AllPoints), None);

        let mut tp_fp = [rec(MatchKind::TruePositive(0)), rec(MatchKind::FalsePositive)];
        tp_fp[0].score = 0.9;
        assert_eq!(average_precision(&tp_fp, 2, Interpolation::AllPoints), Some(0.5));
        // Recall 0.5 reached at precision 1: six of eleven points.
        assert_eq!(average_precision(&tp_fp, 2, Interpolation::ElevenPoint), Some(6.0 / 11.0));
    }

    #[test]
    fn coco_perfect_and_empty() {
        let gts = vec![GroundTruth::new(b(10.0, 10.0, 8.0, 4.0), 0), GroundTruth::new(b(40.0, 10.0, 50.0, 40.0), 1)];
        let dets = gts.iter().map(|g| Detection::new(g.bbox, 0.8, g.class_id).unwrap()).collect();
        let r = coco_summary(&[ImageEval { dets, gts: gts.clone() }], 2, 300);
        assert_eq!((r.map, r.ar, r.ap50, r.ap75), (Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
        assert_eq!(r.ap_small, Some(1.0));
        assert_eq!(r.ap_medium, Some(1.0));
        assert_eq!(r.ap_large, None);

        let r = coco_summary(&[ImageEval { dets: vec![], gts }], 2, 300);
        assert_eq!((r.map, r.ar, r.ap50), (Some(0.0), Some(0.0), Some(0.0)));
    }
}
