//! Imitation, social and road losses with analytic gradients w.r.t. the
//! predicted trajectory.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::distfield::{DistanceField, FieldSample};
use crate::geometry::Vec2;
use crate::scene::{Actor, ActorClass, Trajectory, HORIZON};
use crate::Real;

/// `∂loss/∂(x_t, y_t)` for each predicted point.
pub type TrajectoryGrad = [Vec2; HORIZON];

const H: f64 = HORIZON as f64;

/// Mean squared point distance and its gradient w.r.t. `yhat`.
pub fn mse(y: &Trajectory, yhat: &Trajectory) -> (f64, TrajectoryGrad) {
    let mut value = 0.0;
    let mut grad = [Vec2::ZERO; HORIZON];
    for t in 0..HORIZON {
        let d = yhat.points[t] - y.points[t];
        value += d.norm_sq();
        grad[t] = d * (2.0 / H);
    }
    (value / H, grad)
}

/// Oriented 2D Gaussian repulsive field around one actor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianActorField {
    pub x0: f64,
    pub y0: f64,
    pub theta: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Peak value at the centroid.
    pub k: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl GaussianActorField {
    pub fn new(x0: f64, y0: f64, theta: f64, sigma_x: f64, sigma_y: f64, k: f64) -> Self {
        assert!(sigma_x > 0.0 && sigma_y > 0.0, "sigmas must be positive");
        assert!(k >= 0.0, "field scale must be non-negative");
        let (s, c) = theta.sin_cos();
        let (sx2, sy2) = (sigma_x * sigma_x, sigma_y * sigma_y);
        let s2 = (2.0 * theta).sin();
        GaussianActorField {
            x0,
            y0,
            theta,
            sigma_x,
            sigma_y,
            k,
            a: c * c / (2.0 * sx2) + s * s / (2.0 * sy2),
            // major axis along a counter-clockwise heading
            b: s2 / (4.0 * sx2) - s2 / (4.0 * sy2),
            c: s * s / (2.0 * sx2) + c * c / (2.0 * sy2),
        }
    }

    /// Quadratic-form coefficients `(a, b, c)`.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    pub fn from_actor(actor: &Actor, cfg: &SocialConfig) -> Self {
        let cur = actor.current();
        GaussianActorField::new(
            cur.pose.x,
            cur.pose.y,
            cur.pose.heading,
            cfg.sigma_scale * actor.length / 2.0,
            cfg.sigma_scale * actor.width / 2.0,
            cfg.actor_k.for_class(actor.class),
        )
    }
}

/// Value of one actor's field at `p` and its gradient.
pub fn social_interaction(f: &GaussianActorField, p: Vec2) -> (f64, Vec2) {
    let (dx, dy) = (p.x - f.x0, p.y - f.y0);
    let q = f.a * dx * dx + 2.0 * f.b * dx * dy + f.c * dy * dy;
    let value = f.k * (-q).exp();
    let grad = Vec2::new(
        value * (-2.0 * f.a * dx - 2.0 * f.b * dy),
        value * (-2.0 * f.b * dx - 2.0 * f.c * dy),
    );
    (value, grad)
}

/// Superposition of all actor fields, averaged over the horizon.
pub fn social_loss(fields: &[GaussianActorField], yhat: &Trajectory) -> (f64, TrajectoryGrad) {
    let mut value = 0.0;
    let mut grad = [Vec2::ZERO; HORIZON];
    for (t, p) in yhat.points.iter().enumerate() {
        for f in fields {
            let (v, g) = social_interaction(f, *p);
            value += v;
            grad[t] = grad[t] + g * (1.0 / H);
        }
    }
    (value / H, grad)
}

/// Per-class peak values of the social field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActorK {
    pub vehicle: f64,
    pub pedestrian: f64,
    pub motorcycle: f64,
}

impl Default for ActorK {
    fn default() -> Self {
        ActorK {
            vehicle: 1.0,
            pedestrian: 2.0,
            motorcycle: 1.0,
        }
    }
}

impl ActorK {
    pub fn for_class(&self, class: ActorClass) -> f64 {
        match class {
            ActorClass::Vehicle => self.vehicle,
            ActorClass::Pedestrian => self.pedestrian,
            ActorClass::Motorcycle => self.motorcycle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialConfig {
    /// Multiplies `length/2` and `width/2` to obtain the Gaussian sigmas.
    pub sigma_scale: f64,
    pub actor_k: ActorK,
}

impl Default for SocialConfig {
    fn default() -> Self {
        SocialConfig {
            sigma_scale: 1.0,
            actor_k: ActorK::default(),
        }
    }
}

pub fn actor_fields(actors: &[Actor], cfg: &SocialConfig) -> Vec<GaussianActorField> {
    actors
        .iter()
        .map(|a| GaussianActorField::from_actor(a, cfg))
        .collect()
}

/// Outside-the-road branch of the road loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadMode {
    /// `log(d + 1)`: drops to zero at the curb.
    LogOnly,
    /// `1 + log(d + 1)`: continuous with the inside branch at the curb.
    #[default]
    Continuous,
}

/// How the distance to the curb is obtained for each predicted point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceQuery {
    /// Bilinear sample of the signed distance field.
    #[default]
    Interpolated,
    /// Brute-force nearest opposite-class pixel.
    NearestPixel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadLossParams {
    /// Decay constant of `exp(-d²/k)`, m².
    pub k: f64,
    pub mode: RoadMode,
    pub distance: DistanceQuery,
}

impl Default for RoadLossParams {
    fn default() -> Self {
        RoadLossParams {
            k: 1.0 / LN_10,
            mode: RoadMode::Continuous,
            distance: DistanceQuery::Interpolated,
        }
    }
}

/// Road loss of a point at signed curb distance `s` and `dL/ds`.
pub fn road_point_loss(s: f64, params: &RoadLossParams) -> (f64, f64) {
    if s >= 0.0 {
        let l = (-s * s / params.k).exp();
        (l, -2.0 * s / params.k * l)
    } else {
        let d = -s;
        let base = match params.mode {
            RoadMode::LogOnly => 0.0,
            RoadMode::Continuous => 1.0,
        };
        (base + (d + 1.0).ln(), -1.0 / (d + 1.0))
    }
}

/// Mean road loss over the horizon; also returns how many points fell outside
/// the raster extent.
pub fn road_loss<T: Real>(
    df: &DistanceField<T>,
    params: &RoadLossParams,
    yhat: &Trajectory,
) -> (f64, TrajectoryGrad, usize) {
    let mut value = 0.0;
    let mut grad = [Vec2::ZERO; HORIZON];
    let mut out_of_extent = 0;
    for (t, p) in yhat.points.iter().enumerate() {
        let FieldSample {
            value: s,
            grad: ds,
            in_extent,
        } = match params.distance {
            DistanceQuery::Interpolated => df.sample(*p),
            DistanceQuery::NearestPixel => df.nearest_pixel_distance(*p),
        };
        if !in_extent {
            out_of_extent += 1;
        }
        let (l, dl) = road_point_loss(s, params);
        value += l;
        grad[t] = ds * (dl / H);
    }
    (value / H, grad, out_of_extent)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    /// Social loss weight.
    #[serde(rename = "K1")]
    pub k1: f64,
    /// Road loss weight.
    #[serde(rename = "K2")]
    pub k2: f64,
}

impl LossWeights {
    pub fn new(k1: f64, k2: f64) -> Self {
        assert!(k1 >= 0.0 && k2 >= 0.0, "loss weights must be non-negative");
        LossWeights { k1, k2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub mse: f64,
    pub social: f64,
    pub road: f64,
    pub grad: TrajectoryGrad,
    pub out_of_extent: usize,
}

/// `mse + K1·social + K2·road` with the summed gradient. Every term is
/// evaluated and reported regardless of its weight.
pub fn combined_loss<T: Real>(
    y: &Trajectory,
    yhat: &Trajectory,
    actors: &[GaussianActorField],
    df: &DistanceField<T>,
    weights: &LossWeights,
    params: &RoadLossParams,
) -> LossReport {
    let (m, gm) = mse(y, yhat);
    let (s, gs) = social_loss(actors, yhat);
    let (r, gr, oob) = road_loss(df, params, yhat);
    let mut grad = [Vec2::ZERO; HORIZON];
    for t in 0..HORIZON {
        grad[t] = gm[t] + gs[t] * weights.k1 + gr[t] * weights.k2;
    }
    LossReport {
        total: m + weights.k1 * s + weights.k2 * r,
        mse: m,
        social: s,
        road: r,
        grad,
        out_of_extent: oob,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    fn traj(f: impl Fn(usize) -> Vec2) -> Trajectory {
        let mut pts = [Vec2::ZERO; HORIZON];
        for (t, p) in pts.iter_mut().enumerate() {
            *p = f(t);
        }
        Trajectory::new(pts)
    }

    #[test]
    fn mse_identity_and_unit_offset() {
        let y = traj(|t| Vec2::new(0.3 * t as f64, 2.0 * t as f64));
        let (v, g) = mse(&y, &y);
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|g| *g == Vec2::ZERO));
        let yhat = traj(|t| y.points[t] + Vec2::new(1.0, 0.0));
        let (v, g) = mse(&y, &yhat);
        assert!((v - 1.0).abs() < 1e-15);
        for gt in g {
            assert!((gt.x - 1.0 / 3.0).abs() < 1e-15 && gt.y == 0.0);
        }
    }

    #[test]
    fn gaussian_landmarks() {
        let f = GaussianActorField::new(1.0, -2.0, 0.7, 2.0, 1.0, 3.0);
        let (v, g) = social_interaction(&f, Vec2::new(1.0, -2.0));
        assert_eq!(v, 3.0);
        assert_eq!(g, Vec2::ZERO);
        let f = GaussianActorField::new(0.0, 0.0, 0.0, 2.0, 1.0, 1.0);
        let (v, _) = social_interaction(&f, Vec2::new(2.0, 0.0));
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        let (a, b, c) = GaussianActorField::new(0.0, 0.0, 1.1, 2.5, 0.8, 1.0).coefficients();
        assert!(a > 0.0 && c > 0.0 && a * c - b * b > 0.0);
        // the long axis follows the heading
        let f = GaussianActorField::new(0.0, 0.0, 0.6, 2.0, 0.5, 1.0);
        let (v, _) = social_interaction(&f, Vec2::from_angle(0.6) * 2.0);
        assert!((v - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_rotation_symmetry() {
        let r = 1.7;
        let a = GaussianActorField::new(0.5, 0.5, FRAC_PI_2, 2.0, 0.9, 1.0);
        let b = GaussianActorField::new(0.5, 0.5, 0.0, 2.0, 0.9, 1.0);
        let (va, _) = social_interaction(&a, Vec2::new(0.5, 0.5 + r));
        let (vb, _) = social_interaction(&b, Vec2::new(0.5 + r, 0.5));
        assert!((va - vb).abs() < 1e-14);
    }

    #[test]
    fn social_superposition() {
        let yhat = traj(|t| Vec2::new(0.2, t as f64));
        assert_eq!(social_loss(&[], &yhat).0, 0.0);
        let f = GaussianActorField::new(1.0, 2.0, 0.3, 2.0, 1.0, 1.0);
        let (one, g1) = social_loss(&[f], &yhat);
        let (two, g2) = social_loss(&[f, f], &yhat);
        assert!((two - 2.0 * one).abs() <= 1e-15 * one.abs());
        for t in 0..HORIZON {
            assert!((g2[t] - g1[t] * 2.0).norm() <= 1e-15 * g1[t].norm().max(1e-300));
        }
    }

    #[test]
    fn road_landmarks() {
        let p = RoadLossParams::default();
        assert!((road_point_loss(1.0, &p).0 - 0.1).abs() < 1e-12);
        let lit = RoadLossParams {
            mode: RoadMode::LogOnly,
            ..p.clone()
        };
        assert!((road_point_loss(-(E - 1.0), &lit).0 - 1.0).abs() < 1e-12);
        assert!(road_point_loss(-1e-12, &lit).0.abs() < 1e-11);
        // continuous mode meets exp(0) = 1 at the curb
        assert!((road_point_loss(-1e-12, &p).0 - 1.0).abs() < 1e-11);
        assert_eq!(road_point_loss(0.0, &p).0, 1.0);
    }
}
