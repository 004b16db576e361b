use log::warn;

use super::{Actor, ActorClass, EgoState, Scene, StateSample, Trajectory, EGO_HISTORY, HORIZON};
use crate::geometry::{point_to_frame, Vec2};

/// Samples per example: six past, the current one, six future.
pub const WINDOW_LEN: usize = EGO_HISTORY + HORIZON;
/// Window step in samples (1 s at 2 Hz).
pub const WINDOW_STRIDE: usize = 2;

/// Actors farther than this from the ego are dropped from snapshots.
const ACTOR_RANGE: f64 = 45.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoSample {
    pub state: StateSample,
    pub acceleration: f64,
    pub heading_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActorTrack {
    pub class: ActorClass,
    pub length: f64,
    pub width: f64,
    /// One state per sequence step.
    pub states: Vec<StateSample>,
}

/// A time series of world-frame states at 2 Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSequence {
    pub id: String,
    pub road_polygons: Vec<Vec<Vec2>>,
    pub ego: Vec<EgoSample>,
    pub actors: Vec<ActorTrack>,
}

impl SceneSequence {
    pub fn len(&self) -> usize {
        self.ego.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego.is_empty()
    }

    /// Number of windows that fit.
    pub fn window_count(&self) -> usize {
        if self.len() < WINDOW_LEN {
            0
        } else {
            (self.len() - WINDOW_LEN) / WINDOW_STRIDE + 1
        }
    }

    /// Snapshot whose current step is `current`, expressed in that step's ego frame.
    ///
    /// Requires `EGO_HISTORY - 1 <= current` and `current + HORIZON < len`.
    pub fn snapshot(&self, current: usize, id: String) -> Scene {
        assert!(current + 1 >= EGO_HISTORY && current + HORIZON < self.len());
        let frame = self.ego[current].state.pose;
        let first = current + 1 - EGO_HISTORY;
        let local = |s: &StateSample| StateSample::new(s.pose.to_frame(&frame), s.speed);

        let road_polygons = self
            .road_polygons
            .iter()
            .map(|poly| poly.iter().map(|p| point_to_frame(*p, &frame)).collect())
            .collect();
        let actors = self
            .actors
            .iter()
            .filter(|a| {
                (a.states[current].pose.position() - frame.position()).norm() <= ACTOR_RANGE
            })
            .map(|a| Actor {
                class: a.class,
                length: a.length,
                width: a.width,
                history: a.states[first..=current].iter().map(local).collect(),
            })
            .collect();
        let cur = &self.ego[current];
        let ego = EgoState {
            history: self.ego[first..=current]
                .iter()
                .map(|e| local(&e.state))
                .collect(),
            acceleration: cur.acceleration,
            heading_rate: cur.heading_rate,
        };
        let mut future = [Vec2::ZERO; HORIZON];
        for (k, p) in future.iter_mut().enumerate() {
            *p = point_to_frame(self.ego[current + 1 + k].state.pose.position(), &frame);
        }
        let mut scene = Scene {
            id,
            road_polygons,
            actors,
            ego,
            expert_future: Trajectory::new(future),
        };
        // pin the frame origin exactly
        let c = scene.ego.history.last_mut().expect("non-empty");
        c.pose.x = 0.0;
        c.pose.y = 0.0;
        c.pose.heading = std::f64::consts::FRAC_PI_2;
        scene
    }
}

/// Result of sliding-window extraction.
#[derive(Clone, Debug, Default)]
pub struct Windowed {
    pub scenes: Vec<Scene>,
    /// Sequences skipped for being shorter than [`WINDOW_LEN`].
    pub skipped: usize,
}

/// One example per window of [`WINDOW_LEN`] samples, stepping [`WINDOW_STRIDE`].
pub fn window_examples(sequences: &[SceneSequence]) -> Windowed {
    let mut out = Windowed::default();
    for seq in sequences {
        let n = seq.window_count();
        if n == 0 {
            warn!(
                "sequence {} has {} steps, need {WINDOW_LEN}; skipped",
                seq.id,
                seq.len()
            );
            out.skipped += 1;
            continue;
        }
        for w in 0..n {
            let current = w * WINDOW_STRIDE + EGO_HISTORY - 1;
            out.scenes
                .push(seq.snapshot(current, format!("{}-w{:02}", seq.id, w)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;

    fn straight_sequence(steps: usize) -> SceneSequence {
        let ego = (0..steps)
            .map(|k| EgoSample {
                state: StateSample::new(Pose2::new(5.0 * k as f64, 3.0, 0.0), 10.0),
                acceleration: 0.0,
                heading_rate: 0.0,
            })
            .collect();
        SceneSequence {
            id: "seq".into(),
            road_polygons: vec![vec![
                Vec2::new(-10.0, -2.0),
                Vec2::new(500.0, -2.0),
                Vec2::new(500.0, 8.0),
                Vec2::new(-10.0, 8.0),
            ]],
            ego,
            actors: vec![],
        }
    }

    /// Counts window start positions by brute enumeration.
    fn count_windows_oracle(len: usize, width: usize, stride: usize) -> usize {
        (0..len)
            .filter(|s| s % stride == 0 && s + width <= len)
            .count()
    }

    #[test]
    fn window_counts() {
        assert_eq!(count_windows_oracle(40, 13, 2), 14);
        let w = window_examples(&[straight_sequence(40)]);
        assert_eq!(w.scenes.len(), 14);
        assert_eq!(w.skipped, 0);
        assert_eq!(window_examples(&[straight_sequence(13)]).scenes.len(), 1);
        let short = window_examples(&[straight_sequence(12)]);
        assert_eq!(short.scenes.len(), 0);
        assert_eq!(short.skipped, 1);
    }

    #[test]
    fn snapshot_rotates_into_ego_frame() {
        let w = window_examples(&[straight_sequence(13)]);
        let s = &w.scenes[0];
        assert_eq!(s.ego.history.len(), EGO_HISTORY);
        for (k, p) in s.expert_future.points.iter().enumerate() {
            assert!(p.x.abs() < 1e-9);
            assert!((p.y - 5.0 * (k + 1) as f64).abs() < 1e-9);
        }
        let oldest = s.ego.history[0].pose;
        assert!((oldest.y + 30.0).abs() < 1e-9 && oldest.x.abs() < 1e-9);
    }
}
