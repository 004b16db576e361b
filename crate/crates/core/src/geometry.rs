//! Planar geometry in the ego frame: vectors, poses, oriented boxes, polygons.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let wrapped = (a + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand normal.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Position plus heading. Heading is the direction angle measured
/// counter-clockwise from +x, so the ego's forward direction (+y) is `π/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2 {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn normalized(self) -> Self {
        Pose2::new(self.x, self.y, self.heading)
    }

    /// Expresses `self` (given in the world frame) in the frame whose origin is
    /// `frame` and whose forward direction is +y.
    pub fn to_frame(&self, frame: &Pose2) -> Pose2 {
        let rot = PI / 2.0 - frame.heading;
        let p = (self.position() - frame.position()).rotate(rot);
        Pose2::new(p.x, p.y, self.heading + rot)
    }
}

/// Expresses a world point in the frame of `frame` (origin at the pose, +y forward).
pub fn point_to_frame(p: Vec2, frame: &Pose2) -> Vec2 {
    (p - frame.position()).rotate(PI / 2.0 - frame.heading)
}

/// Rectangle with its long side along `heading`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        OrientedBox {
            center,
            heading,
            length,
            width,
        }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let f = Vec2::from_angle(self.heading) * (self.length / 2.0);
        let l = Vec2::from_angle(self.heading).perp() * (self.width / 2.0);
        let c = self.center;
        [c + f - l, c + f + l, c - f + l, c - f - l]
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let d = (p - self.center).rotate(-self.heading);
        d.x.abs() <= self.length / 2.0 && d.y.abs() <= self.width / 2.0
    }

    /// Separating-axis overlap test.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let a = self.corners();
        let b = other.corners();
        let axes = [
            Vec2::from_angle(self.heading),
            Vec2::from_angle(self.heading).perp(),
            Vec2::from_angle(other.heading),
            Vec2::from_angle(other.heading).perp(),
        ];
        axes.iter().all(|axis| {
            let (amin, amax) = project(&a, *axis);
            let (bmin, bmax) = project(&b, *axis);
            amax >= bmin && bmax >= amin
        })
    }
}

fn project(pts: &[Vec2], axis: Vec2) -> (f64, f64) {
    pts.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = p.dot(axis);
            (lo.min(d), hi.max(d))
        })
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Shoelace area, positive for counter-clockwise winding.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(p1, p2, q1, d1) || on(p1, p2, q2, d2) || on(q1, q2, p1, d3) || on(q1, q2, p2, d4)
}

/// True when no two non-adjacent edges touch and the polygon has non-zero area.
pub fn is_simple_polygon(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 || signed_area(poly).abs() < 1e-12 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Distance from `p` to the closest point of any polygon edge.
pub fn distance_to_boundary(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wraps_into_half_open_interval() {
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(7.0 * PI) - PI).abs() < 1e-9);
        assert!((normalize_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frame_transform_puts_frame_at_origin_facing_up() {
        let frame = Pose2::new(10.0, -4.0, 0.3);
        let local = frame.to_frame(&frame);
        assert!(local.x.abs() < 1e-12 && local.y.abs() < 1e-12);
        assert!((local.heading - PI / 2.0).abs() < 1e-12);
        let ahead = point_to_frame(frame.position() + Vec2::from_angle(0.3) * 5.0, &frame);
        assert!(ahead.x.abs() < 1e-12 && (ahead.y - 5.0).abs() < 1e-12);
    }

    #[test]
    fn box_overlap_and_containment() {
        let a = OrientedBox::new(Vec2::ZERO, PI / 2.0, 4.0, 2.0);
        assert!(a.contains(Vec2::new(0.9, 1.9)));
        assert!(!a.contains(Vec2::new(1.1, 0.0)));
        let b = OrientedBox::new(Vec2::new(2.5, 0.0), PI / 2.0, 4.0, 2.0);
        assert!(!a.overlaps(&b));
        let c = OrientedBox::new(Vec2::new(1.5, 0.0), PI / 4.0, 4.0, 2.0);
        assert!(a.overlaps(&c));
        assert!((signed_area(&a.corners()) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_predicates() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(is_simple_polygon(&sq));
        assert!(point_in_polygon(Vec2::new(1.0, 1.0), &sq));
        assert!(!point_in_polygon(Vec2::new(3.0, 1.0), &sq));
        assert!((distance_to_boundary(Vec2::new(1.0, 0.5), &sq) - 0.5).abs() < 1e-12);
        let bowtie = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(!is_simple_polygon(&bowtie));
    }
}
