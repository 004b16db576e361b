//! Safety (overlap) and awareness (saliency alignment) metrics.

use std::f64::consts::FRAC_PI_2;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::{OrientedBox, Vec2};
use crate::raster::{fill_box, Grid, Mask, SemanticLayers};
use crate::scene::{Trajectory, HORIZON};

/// Ego vehicle dimensions (Renault Zoe).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoFootprint {
    pub length: f64,
    pub width: f64,
}

impl Default for EgoFootprint {
    fn default() -> Self {
        EgoFootprint {
            length: 4.17,
            width: 1.73,
        }
    }
}

impl EgoFootprint {
    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

/// Steps shorter than this inherit the previous heading.
const MIN_STEP: f64 = 1e-6;

/// Ego boxes centered on the predicted points, oriented along the step
/// direction from the previous point (the origin for the first one).
pub fn ego_boxes(yhat: &Trajectory, fp: &EgoFootprint) -> [OrientedBox; HORIZON] {
    let mut heading = FRAC_PI_2;
    let mut prev = Vec2::ZERO;
    let mut out = [OrientedBox::new(Vec2::ZERO, heading, fp.length, fp.width); HORIZON];
    for (t, p) in yhat.points.iter().enumerate() {
        let d = *p - prev;
        if d.norm() >= MIN_STEP {
            heading = d.y.atan2(d.x);
        }
        out[t] = OrientedBox::new(*p, heading, fp.length, fp.width);
        prev = *p;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    /// Mean per-step overlap with current actor boxes, m².
    pub coll_index: f64,
    /// Mean per-step overlap with non-drivable area, m².
    pub oor_index: f64,
    pub total_overlap: f64,
    pub coll_per_step: [f64; HORIZON],
    pub oor_per_step: [f64; HORIZON],
}

/// Per-step overlap area (m²) between rasterized ego boxes and `layer`.
fn overlap_per_step(
    boxes: &[OrientedBox; HORIZON],
    layers: &SemanticLayers,
    layer: &Mask,
) -> [f64; HORIZON] {
    let res2 = layers.transform.res().powi(2);
    let mut out = [0.0; HORIZON];
    for (t, b) in boxes.iter().enumerate() {
        let mut count = 0usize;
        fill_box(b, &layers.transform, |r, c| {
            if *layer.get(r, c) {
                count += 1;
            }
        });
        out[t] = count as f64 * res2;
    }
    out
}

fn mean(v: &[f64; HORIZON]) -> f64 {
    v.iter().sum::<f64>() / HORIZON as f64
}

pub fn coll_index(yhat: &Trajectory, layers: &SemanticLayers, fp: &EgoFootprint) -> f64 {
    mean(&overlap_per_step(
        &ego_boxes(yhat, fp),
        layers,
        &layers.traffic_layer,
    ))
}

pub fn oor_index(yhat: &Trajectory, layers: &SemanticLayers, fp: &EgoFootprint) -> f64 {
    mean(&overlap_per_step(
        &ego_boxes(yhat, fp),
        layers,
        &layers.road_layer,
    ))
}

pub fn safety(yhat: &Trajectory, layers: &SemanticLayers, fp: &EgoFootprint) -> SafetyReport {
    let boxes = ego_boxes(yhat, fp);
    let coll = overlap_per_step(&boxes, layers, &layers.traffic_layer);
    let oor = overlap_per_step(&boxes, layers, &layers.road_layer);
    let (c, o) = (mean(&coll), mean(&oor));
    SafetyReport {
        coll_index: c,
        oor_index: o,
        total_overlap: c + o,
        coll_per_step: coll,
        oor_per_step: oor,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwarenessReport {
    pub social_index: f64,
    pub map_index: f64,
    /// Set when the heatmap carried no mass and both indexes defaulted to 0.
    pub empty_heatmap: bool,
}

/// Fraction of heatmap mass on the traffic and road layers.
pub fn awareness(heatmap: &Grid<f64>, traffic_layer: &Mask, road_layer: &Mask) -> AwarenessReport {
    assert!(
        heatmap.same_shape(traffic_layer) && heatmap.same_shape(road_layer),
        "heatmap and layers must share dimensions"
    );
    let total: f64 = heatmap.data().iter().sum();
    if total <= 0.0 {
        warn!("heatmap has no mass; awareness indexes set to 0");
        return AwarenessReport {
            social_index: 0.0,
            map_index: 0.0,
            empty_heatmap: true,
        };
    }
    let masked = |layer: &Mask| -> f64 {
        heatmap
            .data()
            .iter()
            .zip(layer.data())
            .filter(|(_, &m)| m)
            .fold(0.0, |acc, (&h, _)| acc + h)
    };
    AwarenessReport {
        social_index: masked(traffic_layer) / total,
        map_index: masked(road_layer) / total,
        empty_heatmap: false,
    }
}
