//! False-positive example mining and the size-weighted, sampled MSE.
//!
//! Positives are ground-truth pixels with a nonzero target. False positives
//! are background pixels where the prediction is nonzero; only the hardest
//! `ratio * |positives|` of them (largest squared error) enter the loss.

use std::cmp::Ordering;

use crate::encoder::{Heatmap, SizeWeightMask};
use crate::error::{Error, Result};
use crate::raster::Raster;

pub const DEFAULT_FP_RATIO: usize = 3;
/// False positives sampled when the ground truth has no positive pixel.
pub const EMPTY_SCENE_FP_BUDGET: usize = 256;

/// Pixel address. Orders row-major over the plane, then by channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelIndex {
    pub x: usize,
    pub y: usize,
    pub channel: usize,
}

impl Ord for PixelIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x, self.channel).cmp(&(other.y, other.x, other.channel))
    }
}

impl PartialOrd for PixelIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSample {
    /// All positive pixels, in [`PixelIndex`] order.
    pub positives: Vec<PixelIndex>,
    /// Sampled false positives, hardest first.
    pub sampled_false_positives: Vec<PixelIndex>,
    /// Size of the full false-positive set before sampling.
    pub false_positive_total: usize,
    pub ratio: usize,
}

impl PixelSample {
    pub fn len(&self) -> usize {
        self.positives.len() + self.sampled_false_positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &PixelIndex> {
        self.positives.iter().chain(&self.sampled_false_positives)
    }
}

fn pixel_of(r: &Raster, flat: usize) -> PixelIndex {
    let plane = r.plane_len();
    let channel = flat / plane;
    let rem = flat % plane;
    PixelIndex {
        x: rem % r.width(),
        y: rem / r.width(),
        channel,
    }
}

/// Selects positives and the top-k false positives by squared error.
///
/// `k = ratio * |positives|`, or [`EMPTY_SCENE_FP_BUDGET`] when there are no
/// positives, clamped to the number of false positives available. Ties in
/// error are broken by pixel order.
pub fn fpem_sample(pred: &Heatmap, gt: &Heatmap, ratio: usize) -> Result<PixelSample> {
    pred.ensure_same_shape(gt, "fpem_sample")?;
    if ratio == 0 {
        return Err(Error::InvalidParameter("fp ratio must be >= 1".into()));
    }
    let mut positives = Vec::new();
    let mut fps: Vec<(f64, PixelIndex)> = Vec::new();
    for (i, (&h, &t)) in pred.data().iter().zip(gt.data()).enumerate() {
        if t > 0.0 {
            positives.push(pixel_of(gt, i));
        } else if h > 0.0 {
            let e = f64::from(h) - f64::from(t);
            fps.push((e * e, pixel_of(gt, i)));
        }
    }
    positives.sort_unstable();
    let total = fps.len();
    let budget = if positives.is_empty() {
        EMPTY_SCENE_FP_BUDGET
    } else {
        ratio.saturating_mul(positives.len())
    };
    let k = budget.min(total);
    let hardest_first = |a: &(f64, PixelIndex), b: &(f64, PixelIndex)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k < fps.len() && k > 0 {
        fps.select_nth_unstable_by(k - 1, hardest_first);
    }
    fps.truncate(k);
    fps.sort_unstable_by(hardest_first);
    Ok(PixelSample {
        positives,
        sampled_false_positives: fps.into_iter().map(|(_, p)| p).collect(),
        false_positive_total: total,
        ratio,
    })
}

/// `L = (1/S) * sum over sampled p of M(p) * (H(p) - Ĥ(p))^2`.
///
/// `S` is the mask's total object size. Scenes without objects have `S = 0`;
/// the sum is then normalized by the number of sampled pixels instead (and is
/// 0 when nothing was sampled).
pub fn masked_mse(pred: &Heatmap, gt: &Heatmap, mask: &SizeWeightMask, sample: &PixelSample) -> Result<f64> {
    pred.ensure_same_shape(gt, "masked_mse pred/gt")?;
    pred.ensure_same_shape(mask.raster(), "masked_mse pred/mask")?;
    let (w, h, c) = pred.shape();
    let mut sum = 0.0f64;
    for p in sample.iter() {
        if p.x >= w || p.y >= h || p.channel >= c {
            return Err(Error::ShapeMismatch(format!("sampled pixel {p:?} outside {w}x{h}x{c}")));
        }
        let i = pred.index(p.x, p.y, p.channel);
        let e = f64::from(pred.data()[i]) - f64::from(gt.data()[i]);
        sum += f64::from(mask.raster().data()[i]) * e * e;
    }
    let norm = if mask.object_count() == 0 || mask.total_size() == 0.0 {
        sample.len() as f64
    } else {
        mask.total_size()
    };
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(sum / norm)
}
