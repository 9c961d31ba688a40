//! Box outlines drawn onto a PNG.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgba, RgbaImage};
use tricube::geometry::Detection;

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

pub fn draw(image: &Path, dets: &[Detection], out: &Path) -> Result<()> {
    let mut img = image::open(image)
        .with_context(|| format!("reading {}", image.display()))?
        .to_rgba8();
    for d in dets {
        let [r, g, b] = PALETTE[d.class_id % PALETTE.len()];
        let color = Rgba([r, g, b, 255]);
        let v = d.bbox.to_corners();
        let v = v.vertices();
        for i in 0..4 {
            let (p, q) = (v[i], v[(i + 1) % 4]);
            line(&mut img, (p.x, p.y), (q.x, q.y), color);
        }
    }
    img.save(out).with_context(|| format!("writing {}", out.display()))
}

/// Samples the segment at sub-pixel steps and paints the pixels it crosses.
fn line(img: &mut RgbaImage, a: (f64, f64), b: (f64, f64), color: Rgba<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()) * 2.0).ceil().max(1.0) as usize;
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = (a.0 + t * (b.0 - a.0)).floor() as i64;
        let y = (a.1 + t * (b.1 - a.1)).floor() as i64;
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}
