use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Example;
use crate::config::ExperimentConfig;
use crate::losses::mse;
use crate::metrics::{awareness, safety, EgoFootprint};
use crate::raster::{rasterize_layers, RasterTransform};
use crate::scene::Trajectory;
use crate::{Model32, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleMetrics {
    pub id: String,
    pub mse: Option<f64>,
    pub coll_index: f64,
    pub oor_index: f64,
    pub total_overlap: f64,
    pub social_index: Option<f64>,
    pub map_index: Option<f64>,
}

/// Aggregate validation metrics; overlap indexes in m² per timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub n_examples: usize,
    /// `None` for the expert reference, whose predictions are the targets.
    pub mse: Option<f64>,
    pub coll_index: f64,
    pub oor_index: f64,
    pub total_overlap: f64,
    pub social_index: Option<f64>,
    pub map_index: Option<f64>,
    /// Examples whose saliency map carried no mass.
    pub empty_heatmaps: usize,
    /// Overlap indexes are mean per-step overlap areas (pixel count × res²).
    pub overlap_units: String,
    #[serde(skip)]
    pub rows: Vec<ExampleMetrics>,
}

fn safety_row(e: &Example, yhat: &Trajectory, cfg: &ExperimentConfig) -> (f64, f64) {
    let t = RasterTransform::with_size(cfg.eval.metric_size);
    let layers = rasterize_layers(&e.scene, &t);
    let s = safety(yhat, &layers, &EgoFootprint::default());
    (s.coll_index, s.oor_index)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn aggregate(rows: Vec<ExampleMetrics>, empty: usize, config_hash: &str) -> EvalReport {
    let opt_mean = |f: fn(&ExampleMetrics) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = rows.iter().map(f).collect();
        v.map(|v| mean(v.into_iter()))
    };
    let coll = mean(rows.iter().map(|r| r.coll_index));
    let oor = mean(rows.iter().map(|r| r.oor_index));
    EvalReport {
        config_hash: config_hash.to_string(),
        n_examples: rows.len(),
        mse: opt_mean(|r| r.mse),
        coll_index: coll,
        oor_index: oor,
        total_overlap: coll + oor,
        social_index: opt_mean(|r| r.social_index),
        map_index: opt_mean(|r| r.map_index),
        empty_heatmaps: empty,
        overlap_units: "m2 per timestep".into(),
        rows,
    }
}

/// Validation metrics of `model` on `examples`.
pub fn evaluate(
    model: &Model32,
    examples: &[Example],
    cfg: &ExperimentConfig,
    config_hash: &str,
) -> Result<EvalReport> {
    let rows = examples
        .par_iter()
        .map(|e| -> Result<(ExampleMetrics, bool)> {
            let yhat = model.predict(&e.input, &e.state)?;
            let (m, _) = mse(&e.target, &yhat);
            let (coll, oor) = safety_row(e, &yhat, cfg);
            let heat = model.guided_backprop(&e.input, &e.state, cfg.eval.saliency)?;
            let aw = awareness(&heat, &e.net_layers.traffic_layer, &e.net_layers.road_layer);
            Ok((
                ExampleMetrics {
                    id: e.id().to_string(),
                    mse: Some(m),
                    coll_index: coll,
                    oor_index: oor,
                    total_overlap: coll + oor,
                    social_index: Some(aw.social_index),
                    map_index: Some(aw.map_index),
                },
                aw.empty_heatmap,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let empty = rows.iter().filter(|(_, e)| *e).count();
    Ok(aggregate(
        rows.into_iter().map(|(r, _)| r).collect(),
        empty,
        config_hash,
    ))
}

/// Safety metrics of the ground-truth futures themselves.
pub fn evaluate_expert(
    examples: &[Example],
    cfg: &ExperimentConfig,
    config_hash: &str,
) -> EvalReport {
    let rows = examples
        .par_iter()
        .map(|e| {
            let (coll, oor) = safety_row(e, &e.target, cfg);
            ExampleMetrics {
                id: e.id().to_string(),
                mse: None,
                coll_index: coll,
                oor_index: oor,
                total_overlap: coll + oor,
                social_index: None,
                map_index: None,
            }
        })
        .collect();
    aggregate(rows, 0, config_hash)
}
