//! Convex polygon clipping and areas.

use std::cmp::Ordering;

use super::{Point, QuadBox};

/// Quads with an area at or below this are treated as empty.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn shoelace_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p.x * q.y - q.x * p.y;
    }
    acc / 2.0
}

/// Sutherland–Hodgman: clips `subject` against the convex, counter-clockwise
/// polygon `clip`. Returns the (possibly empty) intersection polygon.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    let mut input = Vec::with_capacity(subject.len() + clip.len());
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b.sub(a);
        std::mem::swap(&mut input, &mut output);
        output.clear();
        let side = |p: Point| edge.cross(p.sub(a));
        let mut prev = *input.last().unwrap();
        let mut prev_side = side(prev);
        for &cur in &input {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(lerp_at_zero(prev, cur, prev_side, cur_side));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(lerp_at_zero(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

#[inline]
fn lerp_at_zero(p: Point, q: Point, dp: f64, dq: f64) -> Point {
    let t = dp / (dp - dq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Intersection-over-union of two convex quads.
///
/// Zero-area quads have IoU 0 with everything. The arguments are put in a
/// fixed order before clipping, so `polygon_iou(a, b) == polygon_iou(b, a)`
/// holds bit for bit.
pub fn polygon_iou(a: &QuadBox, b: &QuadBox) -> f64 {
    let (p, q) = match cmp_quads(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let area_p = p.area();
    let area_q = q.area();
    if area_p <= DEGENERATE_AREA || area_q <= DEGENERATE_AREA {
        return 0.0;
    }
    let inter = shoelace_area(&clip_convex(p.vertices(), q.vertices())).abs();
    if inter <= 0.0 {
        return 0.0;
    }
    let union = area_p + area_q - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Area of the overlap of two convex quads.
pub fn intersection_area(a: &QuadBox, b: &QuadBox) -> f64 {
    let (p, q) = match cmp_quads(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    if p.area() <= DEGENERATE_AREA || q.area() <= DEGENERATE_AREA {
        return 0.0;
    }
    shoelace_area(&clip_convex(p.vertices(), q.vertices())).abs()
}

fn cmp_quads(a: &QuadBox, b: &QuadBox) -> Ordering {
    a.to_flat()
        .iter()
        .zip(b.to_flat().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::OrientedBox;

    fn unit_square_at(x: f64, y: f64) -> QuadBox {
        OrientedBox::new(x + 0.5, y + 0.5, 1.0, 1.0, 0.0)
            .unwrap()
            .to_corners()
    }

    #[test]
    fn self_iou_is_one() {
        let q = OrientedBox::new(3.0, 4.0, 5.0, 2.0, 0.7).unwrap().to_corners();
        assert!((polygon_iou(&q, &q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_iou_is_zero() {
        assert_eq!(polygon_iou(&unit_square_at(0.0, 0.0), &unit_square_at(5.0, 0.0)), 0.0);
    }

    #[test]
    fn half_overlap_squares() {
        // Intersection 0.5, union 1.5.
        let iou = polygon_iou(&unit_square_at(0.0, 0.0), &unit_square_at(0.5, 0.0));
        assert!((iou - 1.0 / 3.0).abs() < 1e-12, "{iou}");
    }

    #[test]
    fn degenerate_quad_has_zero_iou() {
        let flat = QuadBox::from_flat([0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(polygon_iou(&flat, &flat), 0.0);
        assert_eq!(polygon_iou(&flat, &unit_square_at(0.0, 0.0)), 0.0);
    }

    #[test]
    fn contained_square() {
        let big = OrientedBox::new(0.0, 0.0, 4.0, 4.0, 0.0).unwrap().to_corners();
        let small = OrientedBox::new(0.0, 0.0, 2.0, 2.0, 0.3).unwrap().to_corners();
        assert!((polygon_iou(&big, &small) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn shoelace_of_triangle() {
        let tri = [Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(0.0, 3.0)];
        assert_eq!(shoelace_area(&tri), 6.0);
    }
}
