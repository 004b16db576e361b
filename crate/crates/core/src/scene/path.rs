use crate::geometry::{Pose2, Vec2};

/// Piece of a path with constant curvature (1/m, positive turns left).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub curvature: f64,
}

impl Segment {
    pub fn straight(length: f64) -> Self {
        Segment {
            length,
            curvature: 0.0,
        }
    }

    pub fn arc(radius: f64, angle: f64) -> Self {
        Segment {
            length: radius * angle.abs(),
            curvature: angle.signum() / radius,
        }
    }
}

/// Arc-length parameterized chain of constant-curvature segments.
///
/// Queries before the start or past the end extrapolate along a straight line.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub start: Pose2,
    pub segments: Vec<Segment>,
}

fn advance(x: f64, y: f64, h: f64, len: f64, k: f64) -> (f64, f64, f64) {
    if k.abs() < 1e-12 {
        (x + len * h.cos(), y + len * h.sin(), h)
    } else {
        let h2 = h + k * len;
        (
            x + (h2.sin() - h.sin()) / k,
            y - (h2.cos() - h.cos()) / k,
            h2,
        )
    }
}

impl Path {
    pub fn new(start: Pose2, segments: Vec<Segment>) -> Self {
        Path { start, segments }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Pose and curvature at arc length `s`.
    pub fn pose_at(&self, s: f64) -> (Pose2, f64) {
        let (mut x, mut y, mut h) = (self.start.x, self.start.y, self.start.heading);
        if s <= 0.0 {
            let (x, y, h) = advance(x, y, h, s, 0.0);
            return (Pose2::new(x, y, h), 0.0);
        }
        let mut remaining = s;
        for seg in &self.segments {
            if remaining <= seg.length {
                let (x, y, h) = advance(x, y, h, remaining, seg.curvature);
                return (Pose2::new(x, y, h), seg.curvature);
            }
            (x, y, h) = advance(x, y, h, seg.length, seg.curvature);
            remaining -= seg.length;
        }
        let (x, y, h) = advance(x, y, h, remaining, 0.0);
        (Pose2::new(x, y, h), 0.0)
    }

    /// The parallel curve at signed lateral `offset` (positive = left).
    pub fn offset(&self, offset: f64) -> Path {
        let n = Vec2::from_angle(self.start.heading).perp() * offset;
        let start = Pose2::new(self.start.x + n.x, self.start.y + n.y, self.start.heading);
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let scale = 1.0 - s.curvature * offset;
                Segment {
                    length: s.length * scale,
                    curvature: s.curvature / scale,
                }
            })
            .collect();
        Path { start, segments }
    }

    /// Polyline sampling: segment endpoints plus arc points every `max_turn` radians.
    pub fn sample_points(&self, max_turn: f64) -> Vec<Pose2> {
        let mut out = vec![self.start];
        let mut s = 0.0;
        for seg in &self.segments {
            let pieces = if seg.curvature == 0.0 {
                1
            } else {
                ((seg.length * seg.curvature.abs()) / max_turn)
                    .ceil()
                    .max(1.0) as usize
            };
            for i in 1..=pieces {
                out.push(self.pose_at(s + seg.length * i as f64 / pieces as f64).0);
            }
            s += seg.length;
        }
        out
    }

    /// Simple polygon covering the band of half-width `half_width` around the path.
    pub fn strip_polygon(&self, half_width: f64) -> Vec<Vec2> {
        let samples = self.sample_points(0.05);
        let left: Vec<Vec2> = samples
            .iter()
            .map(|p| p.position() + Vec2::from_angle(p.heading).perp() * half_width)
            .collect();
        let right: Vec<Vec2> = samples
            .iter()
            .map(|p| p.position() - Vec2::from_angle(p.heading).perp() * half_width)
            .collect();
        right.into_iter().chain(left.into_iter().rev()).collect()
    }
}
