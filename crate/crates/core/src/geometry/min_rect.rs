//! Convex hull and the minimum-area enclosing rectangle.

use super::{OrientedBox, Point};
use crate::error::{Error, Result};

/// Lower bound for the sides of a fitted rectangle; collinear or single-point
/// inputs produce a rectangle this thin instead of an error.
pub const MIN_SIDE: f64 = 1e-6;

/// Andrew's monotone chain. Counter-clockwise, no repeated or collinear
/// vertices. Fewer than three points are returned deduplicated.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| a.sub(o).cross(b.sub(o));
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Smallest-area rotated rectangle containing every point, canonicalized.
///
/// Rotating calipers over the convex hull: one of the rectangle's sides is
/// flush with a hull edge, so each edge is tried once while three support
/// pointers (far end along the edge, far side across it, near end along it)
/// advance monotonically around the hull.
pub fn min_area_rect(points: &[Point]) -> Result<OrientedBox> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidParameter("non-finite point".into()));
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => {
            let p = hull[0];
            return Ok(OrientedBox {
                cx: p.x,
                cy: p.y,
                w: MIN_SIDE,
                h: MIN_SIDE,
                theta: 0.0,
            });
        }
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let d = b.sub(a);
            return Ok(OrientedBox {
                cx: (a.x + b.x) / 2.0,
                cy: (a.y + b.y) / 2.0,
                w: d.dot(d).sqrt().max(MIN_SIDE),
                h: MIN_SIDE,
                theta: d.y.atan2(d.x),
            }
            .canonicalize());
        }
        _ => {}
    }

    let n = hull.len();
    let at = |i: usize| hull[i % n];
    let mut best: Option<(f64, OrientedBox)> = None;
    let (mut far, mut top, mut near) = (1usize, 1usize, 1usize);
    for i in 0..n {
        let origin = at(i);
        let e = at(i + 1).sub(origin);
        let len = e.dot(e).sqrt();
        let u = Point::new(e.x / len, e.y / len);
        let v = Point::new(-u.y, u.x);
        let along = |p: Point| p.sub(origin).dot(u);
        let across = |p: Point| p.sub(origin).dot(v);

        if i == 0 {
            far = 1;
        }
        far = far.max(i + 1);
        while along(at(far + 1)) > along(at(far)) {
            far += 1;
        }
        if i == 0 {
            top = far;
        }
        top = top.max(far);
        while across(at(top + 1)) > across(at(top)) {
            top += 1;
        }
        if i == 0 {
            near = top;
        }
        near = near.max(top);
        while along(at(near + 1)) < along(at(near)) {
            near += 1;
        }

        let (lo, hi) = (along(at(near)), along(at(far)));
        let height = across(at(top));
        let area = (hi - lo) * height;
        if best.as_ref().map_or(true, |(a, _)| area < *a) {
            let mid_along = (lo + hi) / 2.0;
            let mid_across = height / 2.0;
            let rect = OrientedBox {
                cx: origin.x + u.x * mid_along + v.x * mid_across,
                cy: origin.y + u.y * mid_along + v.y * mid_across,
                w: (hi - lo).max(MIN_SIDE),
                h: height.max(MIN_SIDE),
                theta: u.y.atan2(u.x),
            };
            best = Some((area, rect));
        }
    }
    Ok(best.expect("hull has edges").1.canonicalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(h^2) reference: project every hull vertex onto every edge frame.
    fn brute_min_area(points: &[Point]) -> f64 {
        let hull = convex_hull(points);
        let n = hull.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = hull[i];
            let e = hull[(i + 1) % n].sub(a);
            let len = e.dot(e).sqrt();
            let u = Point::new(e.x / len, e.y / len);
            let v = Point::new(-u.y, u.x);
            let (mut lo, mut hi, mut top) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
            for p in &hull {
                let d = p.sub(a);
                lo = lo.min(d.dot(u));
                hi = hi.max(d.dot(u));
                top = top.max(d.dot(v));
            }
            best = best.min((hi - lo) * top);
        }
        best
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(min_area_rect(&[]), Err(Error::NoPoints)));
    }

    #[test]
    fn axis_aligned_rect_is_fixed_point() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        let r = min_area_rect(&pts).unwrap();
        assert!((r.cx - 2.0).abs() < 1e-12 && (r.cy - 1.0).abs() < 1e-12);
        assert!((r.w - 4.0).abs() < 1e-12 && (r.h - 2.0).abs() < 1e-12);
        assert_eq!(r.theta, 0.0);
    }

    #[test]
    fn collinear_points_clamp_short_side() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        let r = min_area_rect(&pts).unwrap();
        let long = 80f64.sqrt();
        let (a, b) = if r.w > r.h { (r.w, r.h) } else { (r.h, r.w) };
        assert!((a - long).abs() < 1e-12);
        assert_eq!(b, MIN_SIDE);
        assert!((r.cx - 2.0).abs() < 1e-12 && (r.cy - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_point() {
        let r = min_area_rect(&[Point::new(3.0, 4.0)]).unwrap();
        assert_eq!((r.cx, r.cy, r.w, r.h), (3.0, 4.0, MIN_SIDE, MIN_SIDE));
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 2.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(super::super::shoelace_area(&h) > 0.0);
    }

    #[test]
    fn calipers_agree_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(3..40);
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::new(rng.random_range(-50.0..50.0), rng.random_range(-20.0..20.0)))
                .collect();
            let r = min_area_rect(&pts).unwrap();
            let brute = brute_min_area(&pts);
            assert!(
                (r.area() - brute).abs() <= 1e-9 * brute.max(1.0),
                "{} vs {brute}",
                r.area()
            );
        }
    }
}
