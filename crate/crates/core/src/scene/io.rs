use std::f64::consts::FRAC_PI_2;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{
    Actor, ActorClass, EgoState, Scene, StateSample, Trajectory, EGO_HISTORY, MAX_ACTOR_HISTORY,
};
use crate::geometry::{is_simple_polygon, normalize_angle, Vec2};
use crate::{Error, Result};

pub const SCENE_FORMAT: &str = "envloss-scene/1";

/// Tolerance on the ego current pose being the frame origin.
const ORIGIN_TOL: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    format: String,
    id: String,
    road_polygons: Vec<Vec<Vec2>>,
    #[serde(default)]
    actors: Vec<Actor>,
    ego: EgoState,
    expert_future: Vec<Vec2>,
}

pub fn scene_to_json(scene: &Scene) -> String {
    let doc = SceneDoc {
        format: SCENE_FORMAT.to_string(),
        id: scene.id.clone(),
        road_polygons: scene.road_polygons.clone(),
        actors: scene.actors.clone(),
        ego: scene.ego.clone(),
        expert_future: scene.expert_future.points.to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("scene serialization cannot fail")
}

/// Parses and validates a scene document. `origin` names the source in errors.
pub fn scene_from_json(text: &str, origin: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(doc)
}

pub fn load_scene(path: impl AsRef<FsPath>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scene_from_json(&text, &path.display().to_string())
}

pub fn save_scene(scene: &Scene, path: impl AsRef<FsPath>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_json(scene)).map_err(|e| Error::io(path, e))
}

/// Loads every `*.json` file in `dir`, sorted by file name.
pub fn load_corpus(dir: impl AsRef<FsPath>) -> Result<Vec<Scene>> {
    let dir = dir.as_ref();
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    files.iter().map(load_scene).collect()
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn normalize_samples(samples: &mut [StateSample], what: &str) -> Result<()> {
    for s in samples.iter_mut() {
        if !(s.pose.x.is_finite()
            && s.pose.y.is_finite()
            && s.pose.heading.is_finite()
            && s.speed.is_finite())
        {
            return Err(invalid(format!("{what}: non-finite state sample")));
        }
        if s.speed < 0.0 {
            return Err(invalid(format!("{what}: negative speed {}", s.speed)));
        }
        s.pose.heading = normalize_angle(s.pose.heading);
    }
    Ok(())
}

fn validate(doc: SceneDoc) -> Result<Scene> {
    if doc.format != SCENE_FORMAT {
        return Err(invalid(format!(
            "unsupported format {:?}, expected {SCENE_FORMAT:?}",
            doc.format
        )));
    }
    if doc.road_polygons.is_empty() {
        return Err(invalid("at least one road polygon is required"));
    }
    for (i, poly) in doc.road_polygons.iter().enumerate() {
        if poly.iter().any(|p| !p.is_finite()) {
            return Err(invalid(format!("road polygon {i} has non-finite vertices")));
        }
        if !is_simple_polygon(poly) {
            return Err(invalid(format!("road polygon {i} is not a simple polygon")));
        }
    }

    let mut actors = doc.actors;
    for (i, a) in actors.iter_mut().enumerate() {
        if !(a.length > 0.0 && a.width > 0.0) {
            return Err(invalid(format!("actor {i}: dimensions must be positive")));
        }
        if a.class == ActorClass::Vehicle && a.length < a.width {
            return Err(invalid(format!(
                "actor {i}: vehicle length must be >= width"
            )));
        }
        if a.history.is_empty() || a.history.len() > MAX_ACTOR_HISTORY {
            return Err(invalid(format!(
                "actor {i}: history length must be in 1..={MAX_ACTOR_HISTORY}, found {}",
                a.history.len()
            )));
        }
        normalize_samples(&mut a.history, &format!("actor {i}"))?;
    }

    let mut ego = doc.ego;
    if ego.history.len() != EGO_HISTORY {
        return Err(invalid(format!(
            "expected {EGO_HISTORY} ego history samples, found {}",
            ego.history.len()
        )));
    }
    normalize_samples(&mut ego.history, "ego")?;
    if !(ego.acceleration.is_finite() && ego.heading_rate.is_finite()) {
        return Err(invalid("ego: non-finite acceleration or heading rate"));
    }
    let cur = ego.current().pose;
    if cur.x.abs() > ORIGIN_TOL
        || cur.y.abs() > ORIGIN_TOL
        || normalize_angle(cur.heading - FRAC_PI_2).abs() > ORIGIN_TOL
    {
        return Err(invalid(
            "ego current pose must be the frame origin heading +y",
        ));
    }

    let expert_future = Trajectory::try_from(doc.expert_future)?;

    Ok(Scene {
        id: doc.id,
        road_polygons: doc.road_polygons,
        actors,
        ego,
        expert_future,
    })
}
