//! Driving-scene domain types, the scene JSON format, the synthetic generator
//! and sliding-window example extraction.

mod generator;
mod io;
mod path;
mod sequence;

use serde::{Deserialize, Serialize};

use crate::geometry::{OrientedBox, Pose2, Vec2};

pub use generator::{generate_scene, generate_sequence, GeneratorConfig, RoadTemplate};
pub use io::{load_corpus, load_scene, save_scene, scene_from_json, scene_to_json, SCENE_FORMAT};
pub use path::{Path, Segment};
pub use sequence::{
    window_examples, ActorTrack, EgoSample, SceneSequence, Windowed, WINDOW_LEN, WINDOW_STRIDE,
};

/// Prediction horizon: six future points at 2 Hz.
pub const HORIZON: usize = 6;
/// Ego history length: six past samples plus the current one.
pub const EGO_HISTORY: usize = 7;
pub const MAX_ACTOR_HISTORY: usize = 7;
/// Seconds between consecutive samples (2 Hz).
pub const SAMPLE_PERIOD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorClass {
    Vehicle,
    Pedestrian,
    Motorcycle,
}

impl ActorClass {
    /// Default `(length, width)` in meters.
    pub fn default_dims(self) -> (f64, f64) {
        match self {
            ActorClass::Vehicle => (4.5, 1.8),
            ActorClass::Pedestrian => (0.6, 0.6),
            ActorClass::Motorcycle => (2.2, 0.8),
        }
    }
}

/// One timestamped pose with its speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    #[serde(flatten)]
    pub pose: Pose2,
    pub speed: f64,
}

impl StateSample {
    pub fn new(pose: Pose2, speed: f64) -> Self {
        StateSample { pose, speed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub class: ActorClass,
    pub length: f64,
    pub width: f64,
    /// Oldest first; the last entry is the current state.
    pub history: Vec<StateSample>,
}

impl Actor {
    pub fn current(&self) -> &StateSample {
        self.history.last().expect("actor history is never empty")
    }

    /// Bounding box `j` steps in the past (0 = current).
    pub fn box_at(&self, steps_back: usize) -> Option<OrientedBox> {
        let n = self.history.len();
        if steps_back >= n {
            return None;
        }
        let s = &self.history[n - 1 - steps_back];
        Some(OrientedBox::new(
            s.pose.position(),
            s.pose.heading,
            self.length,
            self.width,
        ))
    }

    pub fn current_box(&self) -> OrientedBox {
        self.box_at(0).expect("actor history is never empty")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    /// Exactly [`EGO_HISTORY`] samples, oldest first; the last one is the frame origin.
    pub history: Vec<StateSample>,
    pub acceleration: f64,
    pub heading_rate: f64,
}

impl EgoState {
    pub fn current(&self) -> &StateSample {
        self.history.last().expect("ego history is never empty")
    }
}

/// Six future ego-frame points at `t0 + 0.5 s … t0 + 3.0 s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    pub points: [Vec2; HORIZON],
}

impl Trajectory {
    pub fn new(points: [Vec2; HORIZON]) -> Self {
        Trajectory { points }
    }

    pub fn zeros() -> Self {
        Trajectory {
            points: [Vec2::ZERO; HORIZON],
        }
    }

    /// Builds from 12 interleaved reals `x0, y0, x1, y1, …`.
    pub fn from_flat(v: &[f64]) -> Self {
        assert_eq!(
            v.len(),
            2 * HORIZON,
            "trajectory needs {} reals",
            2 * HORIZON
        );
        let mut points = [Vec2::ZERO; HORIZON];
        for (t, p) in points.iter_mut().enumerate() {
            *p = Vec2::new(v[2 * t], v[2 * t + 1]);
        }
        Trajectory { points }
    }

    pub fn to_flat(&self) -> [f64; 2 * HORIZON] {
        let mut out = [0.0; 2 * HORIZON];
        for (t, p) in self.points.iter().enumerate() {
            out[2 * t] = p.x;
            out[2 * t + 1] = p.y;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.is_finite())
    }
}

impl TryFrom<Vec<Vec2>> for Trajectory {
    type Error = crate::Error;

    fn try_from(v: Vec<Vec2>) -> crate::Result<Self> {
        let points: [Vec2; HORIZON] = v.try_into().map_err(|v: Vec<Vec2>| {
            crate::Error::Validation(format!(
                "expected {HORIZON} trajectory points, found {}",
                v.len()
            ))
        })?;
        let t = Trajectory { points };
        if !t.is_finite() {
            return Err(crate::Error::Validation(
                "trajectory contains non-finite values".into(),
            ));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: String,
    pub road_polygons: Vec<Vec<Vec2>>,
    pub actors: Vec<Actor>,
    pub ego: EgoState,
    pub expert_future: Trajectory,
}

impl Scene {
    /// True when `p` lies inside at least one road polygon.
    pub fn on_road(&self, p: Vec2) -> bool {
        self.road_polygons
            .iter()
            .any(|poly| crate::geometry::point_in_polygon(p, poly))
    }
}
