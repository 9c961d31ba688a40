//! Seeded synthetic scenes.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so scenes are identical across platforms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{GroundTruthScene, SceneBox};
use crate::error::{Error, Result};
use crate::geometry::{intersection_area, polygon_iou, OrientedBox, QuadBox};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub image_width: usize,
    pub image_height: usize,
    pub downsample: usize,
    pub num_classes: usize,
    /// Inclusive range of the number of boxes.
    pub box_count: (usize, usize),
    /// Inclusive range of box side lengths, image pixels.
    pub side_range: (f64, f64),
    /// Upper bound on the polygon IoU of any two boxes.
    pub max_pair_iou: f64,
    /// Optional upper bound on intersection area over the smaller box area.
    /// Stricter than the IoU bound; keeps small boxes from sitting inside big ones.
    pub max_pair_cover: Option<f64>,
    /// Placement attempts per box before giving up.
    pub attempts_per_box: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            image_width: 512,
            image_height: 512,
            downsample: 1,
            num_classes: 1,
            box_count: (1, 10),
            side_range: (8.0, 64.0),
            max_pair_iou: 0.05,
            max_pair_cover: None,
            attempts_per_box: 1000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.image_width == 0 || self.image_height == 0 || self.downsample == 0 || self.num_classes == 0 {
            return bad("image dims, downsample and class count must be >= 1");
        }
        if self.box_count.0 > self.box_count.1 {
            return bad("box count range is reversed");
        }
        let (lo, hi) = self.side_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad("side range must satisfy 0 < min <= max");
        }
        if !(0.0..=1.0).contains(&self.max_pair_iou) {
            return bad("max_pair_iou must lie in [0, 1]");
        }
        if self.max_pair_cover.is_some_and(|c| !(0.0..=1.0).contains(&c)) {
            return bad("max_pair_cover must lie in [0, 1]");
        }
        Ok(())
    }
}

fn sample_box(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Option<OrientedBox> {
    let (lo, hi) = cfg.side_range;
    let w = rng.random_range(lo..=hi);
    let h = rng.random_range(lo..=hi);
    let theta = rng.random_range(0.0..PI);
    let (s, c) = theta.sin_cos();
    let ex = (w * c.abs() + h * s.abs()) / 2.0;
    let ey = (w * s.abs() + h * c.abs()) / 2.0;
    let (iw, ih) = (cfg.image_width as f64, cfg.image_height as f64);
    if 2.0 * ex > iw || 2.0 * ey > ih {
        return None;
    }
    let cx = rng.random_range(ex..=iw - ex);
    let cy = rng.random_range(ey..=ih - ey);
    OrientedBox::new(cx, cy, w, h, theta).ok().map(|b| b.canonicalize())
}

fn compatible(q: &QuadBox, placed: &[QuadBox], cfg: &SynthConfig) -> bool {
    placed.iter().all(|p| {
        if polygon_iou(q, p) > cfg.max_pair_iou {
            return false;
        }
        match cfg.max_pair_cover {
            Some(limit) => intersection_area(q, p) <= limit * q.area().min(p.area()),
            None => true,
        }
    })
}

/// A scene of boxes lying fully inside the image with bounded pairwise overlap.
pub fn synth_scene(seed: u64, cfg: &SynthConfig) -> Result<GroundTruthScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(cfg.box_count.0..=cfg.box_count.1);
    let mut scene = GroundTruthScene::new(cfg.image_width, cfg.image_height, cfg.downsample, cfg.num_classes);
    let mut quads = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = false;
        for _ in 0..cfg.attempts_per_box {
            let Some(b) = sample_box(&mut rng, cfg) else { continue };
            let q = b.to_corners();
            if compatible(&q, &quads, cfg) {
                let class_id = rng.random_range(0..cfg.num_classes);
                scene.boxes.push(SceneBox { bbox: b, class_id });
                quads.push(q);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::RejectionBudget {
                placed: scene.boxes.len(),
                requested: n,
            });
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_range_gives_empty_scene() {
        let cfg = SynthConfig { box_count: (0, 0), ..Default::default() };
        assert!(synth_scene(3, &cfg).unwrap().boxes.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_scene(9, &cfg).unwrap(), synth_scene(9, &cfg).unwrap());
        assert_ne!(synth_scene(9, &cfg).unwrap(), synth_scene(10, &cfg).unwrap());
    }

    #[test]
    fn fifty_boxes_respect_the_iou_bound() {
        let cfg = SynthConfig {
            image_width: 1024,
            image_height: 1024,
            box_count: (50, 50),
            ..Default::default()
        };
        let s = synth_scene(1, &cfg).unwrap();
        assert_eq!(s.boxes.len(), 50);
        for (i, a) in s.boxes.iter().enumerate() {
            let qa = a.bbox.to_corners();
            assert!(qa.vertices().iter().all(|p| p.x >= -1e-9 && p.x <= 1024.0 + 1e-9 && p.y >= -1e-9 && p.y <= 1024.0 + 1e-9));
            for b in &s.boxes[i + 1..] {
                assert!(polygon_iou(&qa, &b.bbox.to_corners()) <= 0.05);
            }
        }
    }

    #[test]
    fn overfull_scene_exhausts_the_budget() {
        let cfg = SynthConfig {
            image_width: 40,
            image_height: 40,
            box_count: (30, 30),
            side_range: (20.0, 30.0),
            attempts_per_box: 50,
            ..Default::default()
        };
        let err = synth_scene(0, &cfg).unwrap_err();
        assert!(matches!(err, Error::RejectionBudget { requested: 30, .. }), "{err}");
    }
}
