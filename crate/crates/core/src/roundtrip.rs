//! Encode-then-decode over synthetic scenes, scored against the source boxes.

use serde::Serialize;

use crate::decoder::{decode, DEFAULT_MIN_AREA_PX, DEFAULT_TAU};
use crate::encoder::{encode, GroundTruthScene};
use crate::error::Result;
use crate::eval::{match_detections, voc_summary, GroundTruth, ImageEval, Interpolation};
use crate::geometry::{polygon_iou, Detection};
use crate::io::{synth_scene, SynthConfig};
use crate::kernel::KernelSpec;

/// IoU a decoded box needs to count its source as recovered.
pub const RECOVERY_IOU: f64 = 0.9;

/// Upper edges of the per-box IoU histogram bins; the last bin is `[0.95, 1]`.
pub const HISTOGRAM_EDGES: [f64; 6] = [0.5, 0.7, 0.8, 0.9, 0.95, f64::INFINITY];

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripConfig {
    pub seed: u64,
    pub scenes: usize,
    pub synth: SynthConfig,
    pub kernel: KernelSpec,
    pub tau: f64,
    pub min_area_px: usize,
}

impl Default for RoundtripConfig {
    /// 1–50 boxes with sides of 8–128 px on a 1024 x 1024 grid, pairwise IoU at most 0.05.
    fn default() -> Self {
        Self {
            seed: 0,
            scenes: 200,
            synth: SynthConfig {
                image_width: 1024,
                image_height: 1024,
                downsample: 1,
                num_classes: 1,
                box_count: (1, 50),
                side_range: (8.0, 128.0),
                max_pair_iou: 0.05,
                max_pair_cover: None,
                attempts_per_box: 2000,
            },
            kernel: KernelSpec::default(),
            tau: DEFAULT_TAU,
            min_area_px: DEFAULT_MIN_AREA_PX,
        }
    }
}

impl RoundtripConfig {
    /// Seed of scene `index`.
    pub fn scene_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Result of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutcome {
    pub scene: GroundTruthScene,
    /// Decoded detections in image coordinates.
    pub detections: Vec<Detection>,
    /// For every source box, the best IoU with a same-class detection.
    pub best_ious: Vec<f64>,
    /// Source boxes matched one-to-one at [`RECOVERY_IOU`].
    pub recovered: usize,
}

pub fn roundtrip_scene(scene: GroundTruthScene, cfg: &RoundtripConfig) -> Result<SceneOutcome> {
    let heatmap = encode(&scene, &cfg.kernel)?;
    let r = scene.downsample as f64;
    let detections: Vec<Detection> = decode(&heatmap, cfg.tau, cfg.kernel.gamma, cfg.min_area_px)?
        .into_iter()
        .map(|d| Detection { bbox: d.bbox.scaled(r), ..d })
        .collect();
    let quads: Vec<_> = detections.iter().map(|d| d.bbox.to_corners()).collect();
    let best_ious = scene
        .boxes
        .iter()
        .map(|b| {
            let q = b.bbox.to_corners();
            detections
                .iter()
                .zip(&quads)
                .filter(|(d, _)| d.class_id == b.class_id)
                .map(|(_, dq)| polygon_iou(&q, dq))
                .fold(0.0, f64::max)
        })
        .collect();
    let recovered = match_detections(&detections, &ground_truth(&scene), RECOVERY_IOU)
        .iter()
        .filter(|m| m.is_tp())
        .count();
    Ok(SceneOutcome {
        scene,
        detections,
        best_ious,
        recovered,
    })
}

fn ground_truth(scene: &GroundTruthScene) -> Vec<GroundTruth> {
    scene.boxes.iter().map(|b| GroundTruth::new(b.bbox, b.class_id)).collect()
}

pub fn run_scene(index: usize, cfg: &RoundtripConfig) -> Result<SceneOutcome> {
    roundtrip_scene(synth_scene(cfg.scene_seed(index), &cfg.synth)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub scenes: usize,
    pub boxes: usize,
    pub detections: usize,
    pub recovered: usize,
    /// `recovered / boxes`; `None` when there are no boxes.
    pub recovery_rate: Option<f64>,
    /// Counts per bin of [`HISTOGRAM_EDGES`].
    pub histogram: Vec<usize>,
    pub min_iou: Option<f64>,
    pub median_iou: Option<f64>,
    /// All-points mAP at IoU 0.5; `None` when no class has ground truth.
    pub map50: Option<f64>,
}

/// Aggregates outcomes, in the order given.
pub fn summarize(outcomes: &[SceneOutcome]) -> RoundtripReport {
    let mut ious: Vec<f64> = outcomes.iter().flat_map(|o| o.best_ious.iter().copied()).collect();
    let mut histogram = vec![0; HISTOGRAM_EDGES.len()];
    for &v in &ious {
        let bin = HISTOGRAM_EDGES.iter().position(|&e| v < e).unwrap_or(HISTOGRAM_EDGES.len() - 1);
        histogram[bin] += 1;
    }
    ious.sort_by(f64::total_cmp);
    let boxes = ious.len();
    let recovered = outcomes.iter().map(|o| o.recovered).sum();
    let num_classes = outcomes.iter().map(|o| o.scene.num_classes).max().unwrap_or(1);
    let images: Vec<ImageEval> = outcomes
        .iter()
        .map(|o| ImageEval {
            dets: o.detections.clone(),
            gts: ground_truth(&o.scene),
        })
        .collect();
    let map50 = voc_summary(&images, num_classes, 0.5, Interpolation::AllPoints).map;
    RoundtripReport {
        scenes: outcomes.len(),
        boxes,
        detections: outcomes.iter().map(|o| o.detections.len()).sum(),
        recovered,
        recovery_rate: (boxes > 0).then(|| recovered as f64 / boxes as f64),
        histogram,
        min_iou: ious.first().copied(),
        median_iou: (boxes > 0).then(|| ious[boxes / 2]),
        map50,
    }
}

/// Runs every scene in order on the current thread.
pub fn run_roundtrip(cfg: &RoundtripConfig) -> Result<RoundtripReport> {
    let outcomes = (0..cfg.scenes).map(|i| run_scene(i, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(&outcomes))
}
