//! Forward pass of the rotation convolution, the multi-angle convolution
//! (MAC) block and the heatmap cascade, on externally supplied weights.
//!
//! Rasters use pixel-index coordinates: pixel `(x, y)` sits at `(x, y)` and
//! the rotation/scaling center is `((W - 1) / 2, (H - 1) / 2)`. Resampling is
//! bilinear; samples that fall outside the raster read as zero.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::Heatmap;
use crate::error::{Error, Result};
use crate::geometry::sin_cos_snapped;
use crate::raster::Raster;

/// `W x H x K` feature raster.
pub type FeatureMap = Raster;

/// Group angles used when none are configured.
pub const DEFAULT_ANGLES: [f64; 4] = [0.0, PI / 6.0, PI / 4.0, PI / 3.0];

/// Dense convolution weights laid out `[out][in][ky][kx]`, plus one bias per
/// output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvWeights {
    pub fn new(out_channels: usize, in_channels: usize, kernel_size: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        let c = Self {
            out_channels,
            in_channels,
            kernel_size,
            weights,
            bias,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            kernel_size,
            weights: vec![0.0; out_channels * in_channels * kernel_size * kernel_size],
            bias: vec![0.0; out_channels],
        }
    }

    /// 1x1 identity projection.
    pub fn identity(channels: usize) -> Self {
        let mut w = Self::zeros(channels, channels, 1);
        for c in 0..channels {
            w.weights[c * channels + c] = 1.0;
        }
        w
    }

    /// Uniform in `+-1/sqrt(fan_in)`; biases in `+-0.1`.
    pub fn random<R: Rng>(out_channels: usize, in_channels: usize, kernel_size: usize, rng: &mut R) -> Self {
        let fan_in = (in_channels * kernel_size * kernel_size) as f32;
        let bound = 1.0 / fan_in.sqrt();
        let mut w = Self::zeros(out_channels, in_channels, kernel_size);
        for v in &mut w.weights {
            *v = rng.random_range(-bound..bound);
        }
        for v in &mut w.bias {
            *v = rng.random_range(-0.1..0.1);
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::ShapeMismatch(format!("kernel size must be odd, got {}", self.kernel_size)));
        }
        let n = self.out_channels * self.in_channels * self.kernel_size * self.kernel_size;
        if self.weights.len() != n || self.bias.len() != self.out_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv {}x{}x{k}x{k}: {} weights, {} biases",
                self.out_channels,
                self.in_channels,
                self.weights.len(),
                self.bias.len(),
                k = self.kernel_size
            )));
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite conv weight".into()));
        }
        Ok(())
    }

    #[inline]
    fn at(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> f32 {
        let k = self.kernel_size;
        self.weights[((oc * self.in_channels + ic) * k + ky) * k + kx]
    }
}

/// Weights of one MAC block and the `1x1` head that maps it to class heatmaps.
#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    /// One rotation angle per channel group, each in `[0, pi/2)`.
    pub angles: Vec<f64>,
    /// Per group: `1x1`, `K -> K/n`.
    pub projections: Vec<ConvWeights>,
    /// Per group: `3x3`, `K/n -> K/n`.
    pub convs: Vec<ConvWeights>,
    /// `1x1`, `K -> C`.
    pub head: ConvWeights,
}

impl MacConfig {
    /// Seeded initializer (ChaCha8 stream seeded with `seed`).
    pub fn random(channels: usize, num_classes: usize, angles: &[f64], seed: u64) -> Result<Self> {
        let n = angles.len();
        if n == 0 || channels % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{channels} channels do not split into {n} groups"
            )));
        }
        let group = channels / n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let projections = (0..n).map(|_| ConvWeights::random(group, channels, 1, &mut rng)).collect();
        let convs = (0..n).map(|_| ConvWeights::random(group, group, 3, &mut rng)).collect();
        let head = ConvWeights::random(num_classes, channels, 1, &mut rng);
        let cfg = Self {
            angles: angles.to_vec(),
            projections,
            convs,
            head,
        };
        cfg.validate(channels)?;
        Ok(cfg)
    }

    pub fn groups(&self) -> usize {
        self.angles.len()
    }

    /// Channel count `K` the block consumes and produces.
    pub fn channels(&self) -> usize {
        self.head.in_channels
    }

    pub fn num_classes(&self) -> usize {
        self.head.out_channels
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        let n = self.angles.len();
        if n == 0 || channels % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{channels} channels are not divisible by {n} groups"
            )));
        }
        if let Some(a) = self.angles.iter().find(|a| !(0.0..FRAC_PI_2).contains(*a)) {
            return Err(Error::InvalidParameter(format!("group angle {a} outside [0, pi/2)")));
        }
        if self.projections.len() != n || self.convs.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} angles but {} projections and {} convs",
                self.projections.len(),
                self.convs.len()
            )));
        }
        let group = channels / n;
        for p in &self.projections {
            p.validate()?;
            if (p.out_channels, p.in_channels, p.kernel_size) != (group, channels, 1) {
                return Err(Error::ShapeMismatch(format!(
                    "projection must be {group}x{channels}x1x1, got {}x{}x{k}x{k}",
                    p.out_channels,
                    p.in_channels,
                    k = p.kernel_size
                )));
            }
        }
        for c in &self.convs {
            c.validate()?;
            if (c.out_channels, c.in_channels, c.kernel_size) != (group, group, 3) {
                return Err(Error::ShapeMismatch(format!(
                    "group conv must be {group}x{group}x3x3, got {}x{}x{k}x{k}",
                    c.out_channels,
                    c.in_channels,
                    k = c.kernel_size
                )));
            }
        }
        self.head.validate()?;
        if self.head.in_channels != channels || self.head.kernel_size != 1 {
            return Err(Error::ShapeMismatch(format!(
                "head must be Cx{channels}x1x1, got {}x{}x{k}x{k}",
                self.head.out_channels,
                self.head.in_channels,
                k = self.head.kernel_size
            )));
        }
        Ok(())
    }
}

/// Bilinear sample of one plane at fractional pixel position, zero outside.
#[inline]
fn sample_zero_fill(plane: &[f32], w: usize, h: usize, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let at = |x: f64, y: f64| -> f64 {
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            0.0
        } else {
            f64::from(plane[y as usize * w + x as usize])
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1.0, y0) * fx;
    let bottom = at(x0, y0 + 1.0) * (1.0 - fx) + at(x0 + 1.0, y0 + 1.0) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Resamples every channel; `src_of` maps an output pixel position to the
/// input position it reads from.
fn resample(f: &FeatureMap, src_of: impl Fn(f64, f64) -> (f64, f64)) -> FeatureMap {
    let (w, h, c) = f.shape();
    let mut out = Raster::zeros(w, h, c).expect("input dims are valid");
    let coords: Vec<(f64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x as f64, y as f64)))
        .map(|(x, y)| src_of(x, y))
        .collect();
    for ch in 0..c {
        let src = f.plane(ch);
        let dst = out.plane_mut(ch);
        for (d, &(sx, sy)) in dst.iter_mut().zip(&coords) {
            *d = sample_zero_fill(src, w, h, sx, sy) as f32;
        }
    }
    out
}

fn center(f: &FeatureMap) -> (f64, f64) {
    ((f.width() as f64 - 1.0) / 2.0, (f.height() as f64 - 1.0) / 2.0)
}

/// Rotates the content by `angle` about the raster center: content at input
/// offset `d` from the center lands at offset `R(angle) d`.
pub fn rotate_resample(f: &FeatureMap, angle: f64) -> FeatureMap {
    let (s, c) = sin_cos_snapped(angle);
    if s == 0.0 && c == 1.0 {
        return f.clone();
    }
    let (cx, cy) = center(f);
    resample(f, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (cx + c * dx + s * dy, cy - s * dx + c * dy)
    })
}

/// Scales the content by `factor` about the raster center on a canvas of
/// unchanged size.
pub fn rescale(f: &FeatureMap, factor: f64) -> Result<FeatureMap> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidParameter(format!("rescale factor must be > 0, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(f.clone());
    }
    let (cx, cy) = center(f);
    let inv = 1.0 / factor;
    Ok(resample(f, |x, y| (cx + (x - cx) * inv, cy + (y - cy) * inv)))
}

/// Stride-1, zero-padded cross-correlation with an odd square kernel.
///
/// Each output is accumulated in `f64` over input channel, then kernel row,
/// then kernel column, and the bias is added last.
pub fn conv2d(f: &FeatureMap, w: &ConvWeights) -> Result<FeatureMap> {
    w.validate()?;
    if f.channels() != w.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "conv expects {} input channels, got {}",
            w.in_channels,
            f.channels()
        )));
    }
    let (width, height, _) = f.shape();
    let k = w.kernel_size;
    let pad = (k / 2) as isize;
    let mut out = Raster::zeros(width, height, w.out_channels)?;
    for oc in 0..w.out_channels {
        let bias = f64::from(w.bias[oc]);
        let dst = out.plane_mut(oc);
        for y in 0..height {
            for x in 0..width {
                let mut acc = 0.0f64;
                for ic in 0..w.in_channels {
                    let src = f.plane(ic);
                    for ky in 0..k {
                        let sy = y as isize + ky as isize - pad;
                        if sy < 0 || sy >= height as isize {
                            continue;
                        }
                        let row = &src[sy as usize * width..(sy as usize + 1) * width];
                        for kx in 0..k {
                            let sx = x as isize + kx as isize - pad;
                            if sx < 0 || sx >= width as isize {
                                continue;
                            }
                            acc += f64::from(w.at(oc, ic, ky, kx)) * f64::from(row[sx as usize]);
                        }
                    }
                }
                dst[y * width + x] = (acc + bias) as f32;
            }
        }
    }
    Ok(out)
}

pub fn conv3x3(f: &FeatureMap, w: &ConvWeights) -> Result<FeatureMap> {
    if w.kernel_size != 3 {
        return Err(Error::ShapeMismatch(format!("expected a 3x3 kernel, got {0}x{0}", w.kernel_size)));
    }
    conv2d(f, w)
}

/// Rotation convolution: shrink by `1/(sin + cos)`, rotate by `angle`, 3x3
/// conv, rotate back by `-angle` (the same rotation as `2pi - angle`), and
/// grow by `sin + cos`.
pub fn rconv(f: &FeatureMap, angle: f64, w: &ConvWeights) -> Result<FeatureMap> {
    if !(0.0..FRAC_PI_2).contains(&angle) {
        return Err(Error::InvalidParameter(format!("rconv angle {angle} outside [0, pi/2)")));
    }
    let (s, c) = sin_cos_snapped(angle);
    let k = s + c;
    let x = rescale(f, 1.0 / k)?;
    let x = rotate_resample(&x, angle);
    let x = conv3x3(&x, w)?;
    let x = rotate_resample(&x, -angle);
    rescale(&x, k)
}

/// Channel-grouped rotation convolutions, concatenated in group order.
pub fn mac_forward(f: &FeatureMap, cfg: &MacConfig) -> Result<FeatureMap> {
    cfg.validate(f.channels())?;
    let (w, h, k) = f.shape();
    let mut data = Vec::with_capacity(w * h * k);
    for ((angle, proj), conv) in cfg.angles.iter().zip(&cfg.projections).zip(&cfg.convs) {
        let group = conv2d(f, proj)?;
        data.extend_from_slice(rconv(&group, *angle, conv)?.data());
    }
    Raster::from_vec(w, h, k, data)
}

/// `Y_1 = MAC(X)`, `Y_r = MAC(X + Y_{r-1})`, `H_r = clamp01(head(Y_r))`.
pub fn cascade_forward(x: &FeatureMap, cfg: &MacConfig, steps: usize) -> Result<Vec<Heatmap>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("cascade needs at least one step".into()));
    }
    let mut out = Vec::with_capacity(steps);
    let mut prev: Option<FeatureMap> = None;
    for _ in 0..steps {
        let input = match &prev {
            None => x.clone(),
            Some(y) => x.add(y)?,
        };
        let y = mac_forward(&input, cfg)?;
        out.push(Heatmap::from_raster_clamped(conv2d(&y, &cfg.head)?));
        prev = Some(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, c: usize) -> Raster {
        let data = (0..w * h * c)
            .map(|i| {
                let x = (i % w) as f32;
                let y = ((i / w) % h) as f32;
                0.1 * x + 0.05 * y + (i / (w * h)) as f32
            })
            .collect();
        Raster::from_vec(w, h, c, data).unwrap()
    }

    #[test]
    fn zero_angle_is_bit_identical() {
        let f = ramp(7, 5, 2);
        assert_eq!(rotate_resample(&f, 0.0), f);
        assert_eq!(rescale(&f, 1.0).unwrap(), f);
    }

    #[test]
    fn quarter_turn_moves_hot_pixel() {
        let mut f = Raster::zeros(5, 5, 1).unwrap();
        f.set(3, 1, 0, 1.0);
        let r = rotate_resample(&f, FRAC_PI_2);
        // Offset (1, -1) from the center (2, 2) rotates to (1, 1).
        assert_eq!(r.get(3, 3, 0), 1.0);
        assert_eq!(r.data().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn rotation_matches_independent_inverse_mapper() {
        let f = ramp(9, 7, 1);
        let angle = PI / 6.0;
        let r = rotate_resample(&f, angle);
        let (cx, cy) = (4.0, 3.0);
        for y in 0..7 {
            for x in 0..9 {
                // Inverse rotation by matrix multiplication, then explicit
                // four-neighbour weighting.
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let (sx, sy) = (cx + angle.cos() * dx + angle.sin() * dy, cy - angle.sin() * dx + angle.cos() * dy);
                let (ix, iy) = (sx.floor() as i64, sy.floor() as i64);
                let (ax, ay) = (sx - ix as f64, sy - iy as f64);
                let mut expected = 0.0;
                for (ox, oy, wgt) in [(0, 0, (1.0 - ax) * (1.0 - ay)), (1, 0, ax * (1.0 - ay)), (0, 1, (1.0 - ax) * ay), (1, 1, ax * ay)] {
                    let (px, py) = (ix + ox, iy + oy);
                    if (0..9).contains(&px) && (0..7).contains(&py) {
                        expected += wgt * f64::from(f.get(px as usize, py as usize, 0));
                    }
                }
                assert!((f64::from(r.get(x, y, 0)) - expected).abs() < 1e-6, "({x},{y})");
            }
        }
    }

    #[test]
    fn rescale_half_on_centered_block() {
        // 4x4 raster, 2x2 block of ones in the middle, center (1.5, 1.5).
        let mut f = Raster::zeros(4, 4, 1).unwrap();
        for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            f.set(x, y, 0, 1.0);
        }
        let r = rescale(&f, 0.5).unwrap();
        // Output x reads input 1.5 + 2 (x - 1.5): -1.5, 0.5, 2.5, 4.5.
        // Inner samples sit halfway between a zero and a one: 0.5 per axis.
        let expected = [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.25, 0.25, 0.0],
            [0.0, 0.25, 0.25, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(r.get(x, y, 0), expected[y][x], "({x},{y})");
            }
        }
    }

    #[test]
    fn conv_identity_and_box_sum() {
        let f = ramp(5, 4, 1);
        let mut id = ConvWeights::zeros(1, 1, 3);
        id.weights[4] = 1.0;
        assert_eq!(conv3x3(&f, &id).unwrap(), f);

        let ones = ConvWeights::new(1, 1, 3, vec![1.0; 9], vec![0.0]).unwrap();
        let c = conv3x3(&Raster::filled(5, 5, 1, 1.0).unwrap(), &ones).unwrap();
        assert_eq!(c.get(2, 2, 0), 9.0);
        assert_eq!(c.get(0, 0, 0), 4.0);
        assert_eq!(c.get(0, 2, 0), 6.0);
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let f = ramp(5, 4, 2);
        assert!(conv3x3(&f, &ConvWeights::zeros(1, 3, 3)).is_err());
    }

    #[test]
    fn rconv_null_operator() {
        let f = ramp(8, 8, 2);
        let z = ConvWeights::zeros(2, 2, 3);
        for angle in DEFAULT_ANGLES {
            assert!(rconv(&f, angle, &z).unwrap().data().iter().all(|&v| v == 0.0));
        }
        assert!(rconv(&f, FRAC_PI_2, &z).is_err());
        assert!(rconv(&f, -0.1, &z).is_err());
    }

    #[test]
    fn mac_shape_contract_and_divisibility() {
        let f = ramp(6, 6, 8);
        let cfg = MacConfig::random(8, 3, &DEFAULT_ANGLES, 1).unwrap();
        let y = mac_forward(&f, &cfg).unwrap();
        assert_eq!(y.shape(), (6, 6, 8));
        assert!(MacConfig::random(6, 3, &DEFAULT_ANGLES, 1).is_err());
        assert!(mac_forward(&ramp(6, 6, 6), &cfg).is_err());
    }

    #[test]
    fn degenerate_mac_is_conv3x3() {
        let f = ramp(6, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conv = ConvWeights::random(2, 2, 3, &mut rng);
        let cfg = MacConfig {
            angles: vec![0.0],
            projections: vec![ConvWeights::identity(2)],
            convs: vec![conv.clone()],
            head: ConvWeights::identity(2),
        };
        assert_eq!(mac_forward(&f, &cfg).unwrap(), conv3x3(&f, &conv).unwrap());
    }

    #[test]
    fn cascade_base_case_and_null_weights() {
        let x = ramp(6, 6, 4);
        let cfg = MacConfig::random(4, 2, &[0.0, PI / 4.0], 9).unwrap();
        let hs = cascade_forward(&x, &cfg, 1).unwrap();
        let expected = Heatmap::from_raster_clamped(conv2d(&mac_forward(&x, &cfg).unwrap(), &cfg.head).unwrap());
        assert_eq!(hs, vec![expected]);

        let mut null = cfg.clone();
        for w in null.projections.iter_mut().chain(null.convs.iter_mut()) {
            *w = ConvWeights::zeros(w.out_channels, w.in_channels, w.kernel_size);
        }
        null.head.bias = vec![0.25, 1.7];
        for h in cascade_forward(&x, &null, 3).unwrap() {
            assert!(h.plane(0).iter().all(|&v| v == 0.25));
            assert!(h.plane(1).iter().all(|&v| v == 1.0));
        }
        assert!(cascade_forward(&x, &cfg, 0).is_err());
    }
}
