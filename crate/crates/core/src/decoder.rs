//! Heatmap to oriented boxes: threshold, label connected components, fit a
//! minimum-area rectangle to each component and scale it back up to the
//! full kernel extent.

use crate::encoder::Heatmap;
use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, Detection, OrientedBox, Point};
use crate::kernel::scale_factor;

pub const DEFAULT_TAU: f64 = 0.3;
pub const DEFAULT_MIN_AREA_PX: usize = 3;
/// Added to each side length of the rectangle fitted to pixel centers.
pub const PIXEL_DILATION: f64 = 0.5;

/// Foreground mask, one plane per class, channel-major like [`Heatmap`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub bits: Vec<bool>,
}

impl BinaryMap {
    pub fn from_bits(width: usize, height: usize, channels: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} bits for {width}x{height}x{channels}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            bits,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, channel: usize) -> bool {
        self.bits[(channel * self.height + y) * self.width + x]
    }

    pub fn plane(&self, channel: usize) -> &[bool] {
        let n = self.width * self.height;
        &self.bits[channel * n..(channel + 1) * n]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Per-channel component labels: 0 is background, components are numbered
/// densely from 1 in the order their first pixel is met in a row-major scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabelMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub labels: Vec<u32>,
    pub component_counts: Vec<usize>,
}

impl ComponentLabelMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize, channel: usize) -> u32 {
        self.labels[(channel * self.height + y) * self.width + x]
    }

    pub fn plane(&self, channel: usize) -> &[u32] {
        let n = self.width * self.height;
        &self.labels[channel * n..(channel + 1) * n]
    }

    pub fn total_components(&self) -> usize {
        self.component_counts.iter().sum()
    }

    /// Pixel coordinates of each component of `channel`, indexed by `label - 1`,
    /// each list in row-major order.
    pub fn components(&self, channel: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.component_counts[channel]];
        for (i, &l) in self.plane(channel).iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].push((i % self.width, i / self.width));
            }
        }
        out
    }
}

/// `bits(p) = heatmap(p) >= tau`.
pub fn binarize(h: &Heatmap, tau: f64) -> Result<BinaryMap> {
    check_tau(tau)?;
    let bits = h.data().iter().map(|&v| f64::from(v) >= tau).collect();
    Ok(BinaryMap {
        width: h.width(),
        height: h.height(),
        channels: h.channels(),
        bits,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::TauOutOfRange(tau))
    }
}

/// Union-find over provisional labels; the smaller label becomes the root so
/// roots are always the earliest provisional label of their set.
struct Forest {
    parent: Vec<u32>,
}

impl Forest {
    fn new() -> Self {
        // Slot 0 is background and never joined.
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut a: u32) -> u32 {
        let mut root = a;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[a as usize] != root {
            let next = self.parent[a as usize];
            self.parent[a as usize] = root;
            a = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

fn label_plane(bits: &[bool], w: usize, h: usize, out: &mut [u32]) -> usize {
    let mut forest = Forest::new();
    // First pass: provisional labels from the already visited neighbours
    // W, NW, N, NE (8-connectivity).
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            let mut label = 0u32;
            let mut visit = |l: u32, forest: &mut Forest| {
                if l == 0 {
                    return;
                }
                if label == 0 {
                    label = l;
                } else if l != label {
                    forest.union(label, l);
                }
            };
            if x > 0 {
                visit(out[i - 1], &mut forest);
            }
            if y > 0 {
                let up = i - w;
                if x > 0 {
                    visit(out[up - 1], &mut forest);
                }
                visit(out[up], &mut forest);
                if x + 1 < w {
                    visit(out[up + 1], &mut forest);
                }
            }
            out[i] = if label == 0 { forest.make() } else { label };
        }
    }
    // Second pass: resolve roots and renumber densely in scan order.
    let mut dense = vec![0u32; forest.parent.len()];
    let mut count = 0u32;
    for l in out.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = forest.find(*l) as usize;
        if dense[root] == 0 {
            count += 1;
            dense[root] = count;
        }
        *l = dense[root];
    }
    count as usize
}

/// Two-pass union-find labeling with 8-connectivity, per channel.
pub fn label_components(b: &BinaryMap) -> ComponentLabelMap {
    let n = b.width * b.height;
    let mut labels = vec![0u32; b.bits.len()];
    let mut counts = Vec::with_capacity(b.channels);
    for c in 0..b.channels {
        counts.push(label_plane(b.plane(c), b.width, b.height, &mut labels[c * n..(c + 1) * n]));
    }
    ComponentLabelMap {
        width: b.width,
        height: b.height,
        channels: b.channels,
        labels,
        component_counts: counts,
    }
}

/// Fits a box to a set of pixels taken from a heatmap thresholded at `tau`.
///
/// The minimum-area rectangle over the pixel centers has
/// [`PIXEL_DILATION`] added to each side length (pixel centers sit inside the
/// footprint boundary) and then both sides are multiplied by
/// [`scale_factor`]`(tau, gamma)`. The score is the largest heatmap value in
/// the component.
pub fn pixels_to_detection(pixels: &[(usize, usize)], h: &Heatmap, channel: usize, tau: f64, gamma: f64) -> Result<Detection> {
    if pixels.is_empty() {
        return Err(Error::NoPoints);
    }
    let s = scale_factor(tau, gamma)?;
    let points: Vec<Point> = pixels
        .iter()
        .map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
        .collect();
    let rect = min_area_rect(&points)?;
    let score = pixels
        .iter()
        .map(|&(x, y)| h.get(x, y, channel))
        .fold(0.0f32, f32::max);
    let bbox = OrientedBox {
        w: (rect.w + PIXEL_DILATION) * s,
        h: (rect.h + PIXEL_DILATION) * s,
        ..rect
    }
    .canonicalize();
    Detection::new(bbox, f64::from(score), channel)
}

pub fn component_to_box(labels: &ComponentLabelMap, h: &Heatmap, component_id: u32, channel: usize, tau: f64, gamma: f64) -> Result<Detection> {
    if channel >= labels.channels || component_id == 0 || component_id as usize > labels.component_counts[channel] {
        return Err(Error::InvalidParameter(format!(
            "no component {component_id} in channel {channel}"
        )));
    }
    let w = labels.width;
    let pixels: Vec<(usize, usize)> = labels
        .plane(channel)
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l == component_id)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    pixels_to_detection(&pixels, h, channel, tau, gamma)
}

/// Full decode; detections in heatmap-grid coordinates, best score first.
/// Components with fewer than `min_area_px` pixels are discarded.
pub fn decode(h: &Heatmap, tau: f64, gamma: f64, min_area_px: usize) -> Result<Vec<Detection>> {
    let binary = binarize(h, tau)?;
    scale_factor(tau, gamma)?;
    let labels = label_components(&binary);
    let mut dets = Vec::with_capacity(labels.total_components());
    for channel in 0..labels.channels {
        for pixels in labels.components(channel) {
            if pixels.len() < min_area_px {
                continue;
            }
            dets.push(pixels_to_detection(&pixels, h, channel, tau, gamma)?);
        }
    }
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(dets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn bits(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryMap {
        let mut b = vec![false; w * h];
        for &(x, y) in on {
            b[y * w + x] = true;
        }
        BinaryMap::from_bits(w, h, 1, b).unwrap()
    }

    #[test]
    fn binarize_conventions() {
        let h = Heatmap::new(Raster::from_vec(3, 1, 1, vec![0.0, 0.3, 0.29]).unwrap()).unwrap();
        let b = binarize(&h, f64::from(0.3f32)).unwrap();
        assert_eq!(b.bits, vec![false, true, false]);
        assert!(binarize(&h, 0.0).is_err());
        assert!(binarize(&h, 1.5).is_err());
        let z = Heatmap::zeros(4, 4, 2).unwrap();
        assert_eq!(binarize(&z, 0.3).unwrap().count_ones(), 0);
    }

    #[test]
    fn empty_map_has_no_components() {
        let l = label_components(&bits(5, 5, &[]));
        assert_eq!(l.total_components(), 0);
    }

    #[test]
    fn diagonal_neighbours_connect() {
        let l = label_components(&bits(3, 3, &[(0, 0), (1, 1)]));
        assert_eq!(l.component_counts, vec![1]);
        let l = label_components(&bits(3, 3, &[(2, 0), (1, 1)]));
        assert_eq!(l.component_counts, vec![1]);
    }

    #[test]
    fn u_shape_merges_and_labels_are_dense_in_scan_order() {
        // Two arms that meet at the bottom, plus an isolated pixel that is
        // met before the merge happens.
        let on = [(0, 0), (2, 0), (4, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)];
        let l = label_components(&bits(5, 3, &on));
        assert_eq!(l.component_counts, vec![2]);
        assert_eq!(l.get(0, 0, 0), 1);
        assert_eq!(l.get(2, 0, 0), 1);
        assert_eq!(l.get(4, 0, 0), 2);
    }

    #[test]
    fn single_pixel_component() {
        let mut r = Raster::zeros(5, 5, 1).unwrap();
        r.set(2, 3, 0, 0.6);
        let h = Heatmap::new(r).unwrap();
        let d = decode(&h, 0.3, 7.0, 1).unwrap();
        assert_eq!(d.len(), 1);
        let side = PIXEL_DILATION * scale_factor(0.3, 7.0).unwrap();
        assert!((d[0].bbox.w - side).abs() < 1e-5 && (d[0].bbox.h - side).abs() < 1e-5);
        assert!((d[0].bbox.cx - 2.5).abs() < 1e-12 && (d[0].bbox.cy - 3.5).abs() < 1e-12);
        assert_eq!(d[0].score, f64::from(0.6f32));
        // min_area filter
        assert!(decode(&h, 0.3, 7.0, 3).unwrap().is_empty());
    }

    #[test]
    fn component_to_box_validates_id() {
        let h = Heatmap::zeros(3, 3, 1).unwrap();
        let l = label_components(&binarize(&h, 0.5).unwrap());
        assert!(component_to_box(&l, &h, 1, 0, 0.5, 7.0).is_err());
    }
}
