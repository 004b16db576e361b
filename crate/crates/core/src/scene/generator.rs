//! Seeded synthetic traffic: road templates, constant-curvature ego motion and
//! constant-velocity actors.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::path::{Path, Segment};
use super::sequence::{ActorTrack, EgoSample, SceneSequence, WINDOW_LEN};
use super::{ActorClass, Scene, StateSample, EGO_HISTORY, SAMPLE_PERIOD};
use crate::geometry::{point_in_polygon, OrientedBox, Pose2, Vec2};
use crate::metrics::EgoFootprint;
use crate::{Error, Result};

const LANE_WIDTH: f64 = 3.5;
const HALF_ROAD: f64 = LANE_WIDTH;
const LANE_CENTER: f64 = LANE_WIDTH / 2.0;
const PARKED_OFFSET: f64 = 3.8;
const ACTOR_TRIES: usize = 40;
/// Extra clearance around the ego box when placing actors.
const PLACEMENT_CLEARANCE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoadTemplate {
    Straight,
    Curve,
    TIntersection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub templates: Vec<RoadTemplate>,
    /// Inclusive `[min, max]` actor count.
    pub actor_count: [usize; 2],
    /// Ego initial speed range, m/s.
    pub ego_speed: [f64; 2],
    /// Ego longitudinal acceleration range, m/s².
    pub ego_accel: [f64; 2],
    /// Vehicle speed range for moving actors, m/s.
    pub actor_speed: [f64; 2],
    /// Steps per generated sequence.
    pub steps: usize,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            templates: vec![
                RoadTemplate::Straight,
                RoadTemplate::Curve,
                RoadTemplate::TIntersection,
            ],
            actor_count: [0, 6],
            ego_speed: [4.0, 12.0],
            ego_accel: [-0.4, 0.4],
            actor_speed: [3.0, 12.0],
            steps: WINDOW_LEN,
            max_attempts: 50,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.templates.is_empty() {
            return bad("generator needs at least one road template");
        }
        if self.actor_count[0] > self.actor_count[1] {
            return bad("actor_count min exceeds max");
        }
        if !(self.ego_speed[0] > 0.0 && self.ego_speed[0] <= self.ego_speed[1]) {
            return bad("ego_speed must be a positive, ordered range");
        }
        if self.ego_accel[0] > self.ego_accel[1] || self.actor_speed[0] > self.actor_speed[1] {
            return bad("ranges must be ordered");
        }
        if self.steps < 1 || self.max_attempts < 1 {
            return bad("steps and max_attempts must be positive");
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.gen_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Road geometry plus the lanes actors may travel along.
struct Layout {
    polygons: Vec<Vec<Vec2>>,
    ego_path: Path,
    /// Road centerline; lanes are offsets of it.
    center: Path,
    /// Arc length on the ego path around which the interesting geometry lies.
    focus_s: f64,
}

fn straight_layout() -> Layout {
    let center = Path::new(
        Pose2::new(0.0, -200.0, FRAC_PI_2),
        vec![Segment::straight(900.0)],
    );
    Layout {
        polygons: vec![center.strip_polygon(HALF_ROAD)],
        ego_path: center.offset(-LANE_CENTER),
        center,
        focus_s: 250.0,
    }
}

fn curve_layout(rng: &mut ChaCha8Rng) -> Layout {
    let lead_in = rng.gen_range(320.0..380.0);
    let radius = rng.gen_range(20.0..60.0);
    let angle = rng.gen_range((PI / 4.0)..FRAC_PI_2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let center = Path::new(
        Pose2::new(0.0, -lead_in, FRAC_PI_2),
        vec![
            Segment::straight(lead_in),
            Segment::arc(radius, angle),
            Segment::straight(400.0),
        ],
    );
    Layout {
        polygons: vec![center.strip_polygon(HALF_ROAD)],
        ego_path: center.offset(-LANE_CENTER),
        center,
        focus_s: lead_in,
    }
}

/// Concave corner fillet between the corner point and a quarter arc.
fn fillet(corner: Vec2, center: Vec2, radius: f64, from: f64, to: f64) -> Vec<Vec2> {
    let n = 12;
    let mut poly = vec![corner];
    for i in 0..=n {
        let a = from + (to - from) * i as f64 / n as f64;
        poly.push(center + Vec2::from_angle(a) * radius);
    }
    poly
}

fn t_intersection_layout(rng: &mut ChaCha8Rng) -> Layout {
    let lead_in = 400.0;
    let center = Path::new(
        Pose2::new(0.0, -lead_in, FRAC_PI_2),
        vec![Segment::straight(1000.0)],
    );
    let yc = 0.0;
    let f = rng.gen_range(4.0..8.0);
    let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let turn = rng.gen_bool(0.5);

    let mut polygons = vec![center.strip_polygon(HALF_ROAD)];
    let x0 = side * (HALF_ROAD - 0.5);
    let x1 = side * (HALF_ROAD + 300.0);
    polygons.push(vec![
        Vec2::new(x0, yc - HALF_ROAD),
        Vec2::new(x1, yc - HALF_ROAD),
        Vec2::new(x1, yc + HALF_ROAD),
        Vec2::new(x0, yc + HALF_ROAD),
    ]);
    // corner fillets; mirrored for a left-hand side road
    let lower_corner = Vec2::new(side * HALF_ROAD, yc - HALF_ROAD);
    let lower_center = Vec2::new(side * (HALF_ROAD + f), yc - HALF_ROAD - f);
    let upper_corner = Vec2::new(side * HALF_ROAD, yc + HALF_ROAD);
    let upper_center = Vec2::new(side * (HALF_ROAD + f), yc + HALF_ROAD + f);
    if side > 0.0 {
        polygons.push(fillet(lower_corner, lower_center, f, PI, FRAC_PI_2));
        polygons.push(fillet(upper_corner, upper_center, f, -FRAC_PI_2, -PI));
    } else {
        polygons.push(fillet(lower_corner, lower_center, f, 0.0, FRAC_PI_2));
        polygons.push(fillet(upper_corner, upper_center, f, -FRAC_PI_2, 0.0));
    }

    let start = Pose2::new(LANE_CENTER, -lead_in, FRAC_PI_2);
    let (ego_path, focus_s) = if !turn {
        (center.offset(-LANE_CENTER), lead_in - HALF_ROAD)
    } else if side > 0.0 {
        // right turn, concentric with the lower fillet
        let r = f + LANE_CENTER;
        let straight = (yc - LANE_CENTER - r) + lead_in;
        (
            Path::new(
                start,
                vec![
                    Segment::straight(straight),
                    Segment::arc(r, -FRAC_PI_2),
                    Segment::straight(400.0),
                ],
            ),
            straight,
        )
    } else {
        // left turn across the oncoming lane, concentric with the lower fillet
        let r = f + HALF_ROAD + LANE_CENTER;
        let straight = (yc + LANE_CENTER - r) + lead_in;
        (
            Path::new(
                start,
                vec![
                    Segment::straight(straight),
                    Segment::arc(r, FRAC_PI_2),
                    Segment::straight(400.0),
                ],
            ),
            straight,
        )
    };
    Layout {
        polygons,
        ego_path,
        center,
        focus_s,
    }
}

/// Constant-acceleration progress with the speed clamped to `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct Kinematics {
    v0: f64,
    accel: f64,
    lo: f64,
    hi: f64,
}

impl Kinematics {
    fn clamp_time(&self) -> f64 {
        if self.accel > 0.0 {
            (self.hi - self.v0) / self.accel
        } else if self.accel < 0.0 {
            (self.lo - self.v0) / self.accel
        } else {
            f64::INFINITY
        }
    }

    fn state(&self, t: f64) -> (f64, f64, f64) {
        let tc = self.clamp_time().max(0.0);
        if t <= tc {
            (
                self.v0 * t + 0.5 * self.accel * t * t,
                self.v0 + self.accel * t,
                self.accel,
            )
        } else {
            let v = self.v0 + self.accel * tc;
            (
                self.v0 * tc + 0.5 * self.accel * tc * tc + v * (t - tc),
                v,
                0.0,
            )
        }
    }
}

fn inside_road_with_margin(p: Vec2, polygons: &[Vec<Vec2>], margin: f64) -> bool {
    let inside = |q: Vec2| polygons.iter().any(|poly| point_in_polygon(q, poly));
    inside(p) && (0..8).all(|i| inside(p + Vec2::from_angle(i as f64 * PI / 4.0) * margin))
}

/// Samples the lane an actor travels on as `(path, arc-length start, signed speed)`.
fn sample_actor(
    rng: &mut ChaCha8Rng,
    layout: &Layout,
    cfg: &GeneratorConfig,
    ego_s0: f64,
    ego_v0: f64,
    horizon_m: f64,
) -> (ActorClass, f64, f64, Path, f64, f64) {
    let (vl, vw) = (rng.gen_range(3.8..5.0), rng.gen_range(1.7..2.0));
    let roll: f64 = rng.gen();
    if roll < 0.3 {
        // leading vehicle on the ego lane
        let moto = rng.gen_bool(0.25);
        let (class, l, w) = if moto {
            let (l, w) = ActorClass::Motorcycle.default_dims();
            (ActorClass::Motorcycle, l, w)
        } else {
            (ActorClass::Vehicle, vl, vw)
        };
        let gap = rng.gen_range(7.0..30.0);
        let speed = (ego_v0 * rng.gen_range(0.85..1.2)).min(15.0);
        (class, l, w, layout.ego_path.clone(), ego_s0 + gap, speed)
    } else if roll < 0.55 {
        // oncoming traffic
        let moto = rng.gen_bool(0.2);
        let (class, l, w) = if moto {
            let (l, w) = ActorClass::Motorcycle.default_dims();
            (ActorClass::Motorcycle, l, w)
        } else {
            (ActorClass::Vehicle, vl, vw)
        };
        let speed = -uniform(rng, cfg.actor_speed);
        let s0 = ego_s0 + rng.gen_range(0.0..(horizon_m + 60.0));
        (class, l, w, layout.center.offset(LANE_CENTER), s0, speed)
    } else if roll < 0.8 {
        // parked at the curb
        let side = if rng.gen_bool(0.7) { -1.0 } else { 1.0 };
        let s0 = ego_s0 + rng.gen_range(-20.0..(horizon_m + 40.0));
        (
            ActorClass::Vehicle,
            vl,
            vw,
            layout.center.offset(side * PARKED_OFFSET),
            s0,
            0.0,
        )
    } else {
        // pedestrian on the sidewalk
        let side = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let offset = side * rng.gen_range(4.4..6.0);
        let speed = rng.gen_range(0.8..1.6) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s0 = ego_s0 + rng.gen_range(-10.0..(horizon_m + 30.0));
        let (l, w) = ActorClass::Pedestrian.default_dims();
        (
            ActorClass::Pedestrian,
            l,
            w,
            layout.center.offset(offset),
            s0,
            speed,
        )
    }
}

fn try_generate(
    rng: &mut ChaCha8Rng,
    cfg: &GeneratorConfig,
    steps: usize,
) -> std::result::Result<(Vec<Vec<Vec2>>, Vec<EgoSample>, Vec<ActorTrack>), String> {
    let template = *cfg.templates.choose(rng).expect("validated non-empty");
    let layout = match template {
        RoadTemplate::Straight => straight_layout(),
        RoadTemplate::Curve => curve_layout(rng),
        RoadTemplate::TIntersection => t_intersection_layout(rng),
    };
    let v0 = uniform(rng, cfg.ego_speed);
    let kin = Kinematics {
        v0,
        accel: uniform(rng, cfg.ego_accel),
        lo: 0.5_f64.min(v0),
        hi: 15.0_f64.max(v0),
    };
    let duration = (steps.saturating_sub(1)) as f64 * SAMPLE_PERIOD;
    let travel = kin.state(duration).0;
    // place the sequence so the focus geometry is crossed around the current step
    let t_cur = (EGO_HISTORY - 1) as f64 * SAMPLE_PERIOD;
    let s_cur = layout.focus_s + rng.gen_range(-kin.v0 * 3.0 - 5.0..5.0);
    let ego_s0 = (s_cur - kin.state(t_cur).0).max(5.0);

    let fp = EgoFootprint::default();
    let mut ego = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * SAMPLE_PERIOD;
        let (ds, v, a) = kin.state(t);
        let (pose, curvature) = layout.ego_path.pose_at(ego_s0 + ds);
        if !inside_road_with_margin(pose.position(), &layout.polygons, fp.width / 2.0) {
            return Err(format!("ego leaves the road at step {k}"));
        }
        ego.push(EgoSample {
            state: StateSample::new(pose, v),
            acceleration: a,
            heading_rate: curvature * v,
        });
    }
    let ego_boxes: Vec<OrientedBox> = ego
        .iter()
        .map(|e| {
            OrientedBox::new(
                e.state.pose.position(),
                e.state.pose.heading,
                fp.length + 2.0 * PLACEMENT_CLEARANCE,
                fp.width + 2.0 * PLACEMENT_CLEARANCE,
            )
        })
        .collect();

    let n_actors = rng.gen_range(cfg.actor_count[0]..=cfg.actor_count[1]);
    let mut actors = Vec::with_capacity(n_actors);
    for i in 0..n_actors {
        let mut placed = None;
        for _ in 0..ACTOR_TRIES {
            let (class, length, width, path, s0, speed) =
                sample_actor(rng, &layout, cfg, ego_s0, kin.v0, travel);
            let states: Vec<StateSample> = (0..steps)
                .map(|k| {
                    let t = k as f64 * SAMPLE_PERIOD;
                    let (pose, _) = path.pose_at(s0 + speed * t);
                    let heading = if speed < 0.0 {
                        pose.heading + PI
                    } else {
                        pose.heading
                    };
                    StateSample::new(Pose2::new(pose.x, pose.y, heading), speed.abs())
                })
                .collect();
            let collides = states.iter().zip(&ego_boxes).any(|(s, eb)| {
                OrientedBox::new(s.pose.position(), s.pose.heading, length, width).overlaps(eb)
            });
            if !collides {
                placed = Some(ActorTrack {
                    class,
                    length,
                    width,
                    states,
                });
                break;
            }
        }
        match placed {
            Some(a) => actors.push(a),
            None => return Err(format!("could not place actor {i} without ego overlap")),
        }
    }
    Ok((layout.polygons, ego, actors))
}

/// Deterministic world-frame sequence of `cfg.steps` samples.
pub fn generate_sequence(seed: u64, cfg: &GeneratorConfig) -> Result<SceneSequence> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..cfg.max_attempts {
        match try_generate(&mut rng, cfg, cfg.steps) {
            Ok((road_polygons, ego, actors)) => {
                return Ok(SceneSequence {
                    id: format!("gen-{seed}"),
                    road_polygons,
                    ego,
                    actors,
                })
            }
            Err(reason) => last = reason,
        }
    }
    Err(Error::Generation {
        attempts: cfg.max_attempts,
        reason: last,
    })
}

/// A single ego-frame scene: one window of a freshly generated sequence.
pub fn generate_scene(seed: u64, cfg: &GeneratorConfig) -> Result<Scene> {
    let mut c = cfg.clone();
    c.steps = WINDOW_LEN;
    let seq = generate_sequence(seed, &c)?;
    Ok(seq.snapshot(EGO_HISTORY - 1, seq.id.clone()))
}
