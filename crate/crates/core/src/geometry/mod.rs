//! Rotated-rectangle and convex-quad primitives.
//!
//! Angles follow one convention throughout the crate: `theta` is measured
//! counter-clockwise (in the `x`-right, `y`-up sense of the coordinate
//! values themselves) from the `+x` axis to the side of length `w`. A
//! rectangle has four equivalent `(w, h, theta)` encodings; [`canonicalize`]
//! picks the one with `theta` in `[0, pi/2)`.
//!
//! [`canonicalize`]: OrientedBox::canonicalize

mod min_rect;
mod nms;
mod polygon;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use min_rect::{convex_hull, min_area_rect, MIN_SIDE};
pub use nms::{nms, soft_nms, SOFT_NMS_SCORE_FLOOR, SOFT_NMS_SIGMA};
pub use polygon::{clip_convex, intersection_area, polygon_iou, shoelace_area, DEGENERATE_AREA};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

/// A rotated rectangle in center/size/angle form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    /// Radians.
    pub theta: f64,
}

impl OrientedBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        let b = Self {
            cx,
            cy,
            w,
            h,
            theta,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.cx, self.cy, self.w, self.h, self.theta];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "sides must be positive, got w={} h={}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Unit vectors along the `w` side and the `h` side.
    #[inline]
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = sin_cos_snapped(self.theta);
        (Point::new(c, s), Point::new(-s, c))
    }

    /// Corners in counter-clockwise order (positive shoelace area).
    pub fn to_corners(&self) -> QuadBox {
        let (ex, ey) = self.axes();
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        let ax = Point::new(ex.x * hw, ex.y * hw);
        let ay = Point::new(ey.x * hh, ey.y * hh);
        let c = self.center();
        QuadBox {
            vertices: [
                Point::new(c.x - ax.x - ay.x, c.y - ax.y - ay.y),
                Point::new(c.x + ax.x - ay.x, c.y + ax.y - ay.y),
                Point::new(c.x + ax.x + ay.x, c.y + ax.y + ay.y),
                Point::new(c.x - ax.x + ay.x, c.y - ax.y + ay.y),
            ],
        }
    }

    /// Equivalent encoding with `theta` in `[0, pi/2)`.
    pub fn canonicalize(&self) -> OrientedBox {
        let (mut w, mut h) = (self.w, self.h);
        let mut t = self.theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        while t >= FRAC_PI_2 {
            t -= FRAC_PI_2;
            std::mem::swap(&mut w, &mut h);
        }
        if t < 0.0 {
            t = 0.0;
        }
        OrientedBox {
            cx: self.cx,
            cy: self.cy,
            w,
            h,
            theta: t,
        }
    }

    /// Uniform scaling of position and size (e.g. heatmap grid <-> image pixels).
    pub fn scaled(&self, factor: f64) -> OrientedBox {
        OrientedBox {
            cx: self.cx * factor,
            cy: self.cy * factor,
            w: self.w * factor,
            h: self.h * factor,
            theta: self.theta,
        }
    }

    pub fn iou(&self, other: &OrientedBox) -> f64 {
        polygon_iou(&self.to_corners(), &other.to_corners())
    }
}

/// `sin_cos` with results below 1e-15 in magnitude flushed to zero, so
/// quarter-turn rotations map grid points onto grid points exactly.
#[inline]
pub(crate) fn sin_cos_snapped(angle: f64) -> (f64, f64) {
    let (mut s, mut c) = angle.sin_cos();
    if s.abs() < 1e-15 {
        s = 0.0;
    }
    if c.abs() < 1e-15 {
        c = 0.0;
    }
    (s, c)
}

/// A convex quadrilateral given by its four vertices, counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadBox {
    vertices: [Point; 4],
}

impl QuadBox {
    /// Builds a quad, reversing the vertex order if it was clockwise.
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidBox("non-finite quad vertex".into()));
        }
        let mut vertices = vertices;
        if shoelace_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    /// From the flat 8-offset form `x1 y1 x2 y2 x3 y3 x4 y4`.
    pub fn from_flat(c: [f64; 8]) -> Result<Self> {
        Self::new([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    #[inline]
    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn to_flat(&self) -> [f64; 8] {
        let v = &self.vertices;
        [
            v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y, v[3].x, v[3].y,
        ]
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices).abs()
    }

    pub fn centroid(&self) -> Point {
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / 4.0, sy / 4.0)
    }

    /// Smallest enclosing rotated rectangle of the four vertices.
    pub fn to_oriented(&self) -> OrientedBox {
        // Four finite points never yield the "no points" error.
        min_area_rect(&self.vertices).expect("quad has four points")
    }
}

/// A scored, classified oriented box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: OrientedBox,
    pub score: f64,
    pub class_id: usize,
}

impl Detection {
    pub fn new(bbox: OrientedBox, score: f64, class_id: usize) -> Result<Self> {
        bbox.validate()?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidParameter(format!(
                "detection score {score} outside [0, 1]"
            )));
        }
        Ok(Self {
            bbox,
            score,
            class_id,
        })
    }
}
