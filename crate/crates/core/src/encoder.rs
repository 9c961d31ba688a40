//! Ground-truth rendering: oriented boxes to a per-class kernel heatmap and
//! the matching size-weight mask.
//!
//! Rendering is analytic. Each heatmap pixel center `(x + 0.5, y + 0.5)` is
//! mapped into the normalized frame of every box that could cover it, and
//! the kernel is evaluated there. Overlapping kernels are merged with an
//! element-wise max. Box coordinates in a [`GroundTruthScene`] are image
//! pixels; they are divided by the downsample rate before rendering.

use std::ops::{Deref, Range};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, Point};
use crate::kernel::KernelSpec;
use crate::raster::Raster;

/// A per-class raster of kernel responses, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap(Raster);

impl Heatmap {
    pub fn new(raster: Raster) -> Result<Self> {
        if let Some(i) = raster.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "heatmap value {} at index {i} outside [0, 1]",
                raster.data()[i]
            )));
        }
        Ok(Self(raster))
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Ok(Self(Raster::zeros(width, height, channels)?))
    }

    /// Clamps every value into `[0, 1]`.
    pub fn from_raster_clamped(mut raster: Raster) -> Self {
        for v in raster.data_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Self(raster)
    }

    pub fn as_raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }
}

impl Deref for Heatmap {
    type Target = Raster;

    fn deref(&self) -> &Raster {
        &self.0
    }
}

/// Per-pixel loss weights. Background pixels weigh 1; pixels of object `i`
/// weigh `S / (S_i * N)` where `S_i` is the object's area, `S` the summed
/// area of all objects and `N` the object count.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeWeightMask {
    raster: Raster,
    total_size: f64,
    object_count: usize,
}

impl SizeWeightMask {
    pub fn from_parts(raster: Raster, total_size: f64, object_count: usize) -> Result<Self> {
        if raster.data().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("negative mask weight".into()));
        }
        if !(total_size >= 0.0 && total_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad total size {total_size}")));
        }
        Ok(Self {
            raster,
            total_size,
            object_count,
        })
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    /// `S`, in heatmap px^2.
    pub fn total_size(&self) -> f64 {
        self.total_size
    }

    /// `N`.
    pub fn object_count(&self) -> usize {
        self.object_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    #[serde(rename = "box")]
    pub bbox: OrientedBox,
    pub class_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthScene {
    pub image_width: usize,
    pub image_height: usize,
    /// Image pixels per heatmap pixel.
    pub downsample: usize,
    pub num_classes: usize,
    pub boxes: Vec<SceneBox>,
}

impl GroundTruthScene {
    pub fn new(image_width: usize, image_height: usize, downsample: usize, num_classes: usize) -> Self {
        Self {
            image_width,
            image_height,
            downsample,
            num_classes,
            boxes: Vec::new(),
        }
    }

    pub fn with_boxes(mut self, boxes: impl IntoIterator<Item = SceneBox>) -> Self {
        self.boxes.extend(boxes);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidParameter("image dims must be >= 1".into()));
        }
        if self.downsample == 0 {
            return Err(Error::InvalidParameter("downsample rate must be >= 1".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::InvalidParameter("need at least one class".into()));
        }
        for b in &self.boxes {
            b.bbox.validate()?;
            if b.class_id >= self.num_classes {
                return Err(Error::ChannelOutOfRange {
                    class_id: b.class_id,
                    channels: self.num_classes,
                });
            }
        }
        Ok(())
    }

    /// Heatmap grid size: image dims divided by the downsample rate, rounded up.
    pub fn heatmap_dims(&self) -> (usize, usize) {
        (
            self.image_width.div_ceil(self.downsample),
            self.image_height.div_ceil(self.downsample),
        )
    }

    /// Boxes in heatmap coordinates, with boxes entirely off the raster removed.
    pub fn heatmap_boxes(&self) -> Vec<SceneBox> {
        let (w, h) = self.heatmap_dims();
        let inv = 1.0 / self.downsample as f64;
        self.boxes
            .iter()
            .map(|b| SceneBox {
                bbox: b.bbox.scaled(inv),
                class_id: b.class_id,
            })
            .filter(|b| BoxFrame::new(&b.bbox).pixel_bounds(w, h).is_some())
            .collect()
    }

    /// Number of boxes dropped because they lie entirely off the raster.
    pub fn dropped_boxes(&self) -> usize {
        self.boxes.len() - self.heatmap_boxes().len()
    }
}

/// The normalized frame of one box: maps points to `(u, v)` with the box
/// occupying `[-1, 1]^2`.
#[derive(Debug, Clone, Copy)]
pub struct BoxFrame {
    center: Point,
    ex: Point,
    ey: Point,
    inv_half_w: f64,
    inv_half_h: f64,
    corners: [Point; 4],
}

impl BoxFrame {
    pub fn new(b: &OrientedBox) -> Self {
        let (ex, ey) = b.axes();
        Self {
            center: b.center(),
            ex,
            ey,
            inv_half_w: 2.0 / b.w,
            inv_half_h: 2.0 / b.h,
            corners: *b.to_corners().vertices(),
        }
    }

    #[inline]
    pub fn uv(&self, px: f64, py: f64) -> (f64, f64) {
        let d = Point::new(px - self.center.x, py - self.center.y);
        (d.dot(self.ex) * self.inv_half_w, d.dot(self.ey) * self.inv_half_h)
    }

    /// Normalized coordinates of the center of pixel `(x, y)`.
    #[inline]
    pub fn pixel_uv(&self, x: usize, y: usize) -> (f64, f64) {
        self.uv(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Open-support membership of a pixel center.
    #[inline]
    pub fn covers_pixel(&self, x: usize, y: usize) -> bool {
        let (u, v) = self.pixel_uv(x, y);
        u.abs() < 1.0 && v.abs() < 1.0
    }

    /// Pixel index ranges whose centers may fall inside the box, clipped to a
    /// `width x height` raster; `None` when the box misses the raster.
    pub fn pixel_bounds(&self, width: usize, height: usize) -> Option<(Range<usize>, Range<usize>)> {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for c in &self.corners {
            x0 = x0.min(c.x);
            x1 = x1.max(c.x);
            y0 = y0.min(c.y);
            y1 = y1.max(c.y);
        }
        // Pixel x has its center at x + 0.5.
        let lo = |v: f64| (v - 0.5).floor().max(0.0);
        let hi = |v: f64, n: usize| ((v - 0.5).ceil() + 1.0).min(n as f64);
        let (xs, xe) = (lo(x0), hi(x1, width));
        let (ys, ye) = (lo(y0), hi(y1, height));
        if xs >= xe || ys >= ye {
            return None;
        }
        Some((xs as usize..xe as usize, ys as usize..ye as usize))
    }

    /// Pixels of a `width x height` raster whose centers lie inside the box,
    /// in row-major order.
    pub fn footprint(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let Some((xr, yr)) = self.pixel_bounds(width, height) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for y in yr {
            for x in xr.clone() {
                if self.covers_pixel(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Renders every box of `scene` as a kernel on its class channel.
pub fn encode(scene: &GroundTruthScene, spec: &KernelSpec) -> Result<Heatmap> {
    scene.validate()?;
    spec.validate()?;
    let (width, height) = scene.heatmap_dims();
    let mut raster = Raster::zeros(width, height, scene.num_classes)?;
    for b in scene.heatmap_boxes() {
        let frame = BoxFrame::new(&b.bbox);
        let (xr, yr) = frame.pixel_bounds(width, height).expect("kept boxes hit the raster");
        let plane = raster.plane_mut(b.class_id);
        for y in yr {
            let row = &mut plane[y * width..(y + 1) * width];
            for x in xr.clone() {
                let (u, v) = frame.pixel_uv(x, y);
                if u.abs() < 1.0 && v.abs() < 1.0 {
                    let value = spec.eval(u, v) as f32;
                    if value > row[x] {
                        row[x] = value;
                    }
                }
            }
        }
    }
    Ok(Heatmap(raster))
}

/// Builds the size-weight mask for `scene`.
///
/// `S_i` is the geometric area `w * h` in heatmap px^2, clamped below at 1.
/// Pixels covered by several objects take the largest of their weights.
pub fn make_swm(scene: &GroundTruthScene) -> Result<SizeWeightMask> {
    scene.validate()?;
    let (width, height) = scene.heatmap_dims();
    let mut raster = Raster::filled(width, height, scene.num_classes, 1.0)?;
    let boxes = scene.heatmap_boxes();
    if boxes.is_empty() {
        return SizeWeightMask::from_parts(raster, 0.0, 0);
    }
    let n = boxes.len();
    let sizes: Vec<f64> = boxes.iter().map(|b| b.bbox.area().max(1.0)).collect();
    let mut sorted = sizes.clone();
    sorted.sort_by(f64::total_cmp);
    // Summed in sorted order so the mask does not depend on box order.
    let total: f64 = sorted.iter().sum();
    let mut touched = vec![false; raster.data().len()];
    for (b, &size) in boxes.iter().zip(&sizes) {
        let weight = (total / (size * n as f64)) as f32;
        let frame = BoxFrame::new(&b.bbox);
        for (x, y) in frame.footprint(width, height) {
            let i = raster.index(x, y, b.class_id);
            let slot = &mut raster.data_mut()[i];
            if !touched[i] || weight > *slot {
                *slot = weight;
            }
            touched[i] = true;
        }
    }
    SizeWeightMask::from_parts(raster, total, n)
}

/// Bilinear upsampling by an integer factor with half-pixel-center alignment
/// (edge samples are clamped, so values stay within the input range).
pub fn upsample_bilinear(h: &Heatmap, factor: usize) -> Result<Heatmap> {
    Ok(Heatmap(upsample_raster(&h.0, factor)?))
}

pub fn upsample_raster(src: &Raster, factor: usize) -> Result<Raster> {
    if factor == 0 {
        return Err(Error::InvalidParameter("upsample factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(src.clone());
    }
    let (w, h, c) = src.shape();
    let (ow, oh) = (w * factor, h * factor);
    let taps = |n_out: usize, n_in: usize| -> Vec<(usize, usize, f64)> {
        (0..n_out)
            .map(|o| {
                let s = ((o as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(ow, w);
    let yt = taps(oh, h);
    let mut out = Raster::zeros(ow, oh, c)?;
    for ch in 0..c {
        let plane = src.plane(ch);
        let dst = out.plane_mut(ch);
        for (oy, &(y0, y1, ty)) in yt.iter().enumerate() {
            for (ox, &(x0, x1, tx)) in xt.iter().enumerate() {
                let at = |x: usize, y: usize| f64::from(plane[y * w + x]);
                let top = lerp(at(x0, y0), at(x1, y0), tx);
                let bottom = lerp(at(x0, y1), at(x1, y1), tx);
                dst[oy * ow + ox] = lerp(top, bottom, ty) as f32;
            }
        }
    }
    Ok(out)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}
