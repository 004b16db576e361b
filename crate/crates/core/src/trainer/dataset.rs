use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::config::{hex_digest, DataConfig, ExperimentConfig};
use crate::distfield::{build_sdf, DistanceField};
use crate::losses::{actor_fields, GaussianActorField};
use crate::netcore::{raw_state_features, rgb_to_input, StateNorm, STATE_DIM};
use crate::raster::{rasterize_layers, rasterize_scene, RasterTransform, SemanticLayers};
use crate::scene::{generate_sequence, load_corpus, window_examples, Scene, Trajectory};
use crate::{Error, Result};

/// One preprocessed training or validation example.
#[derive(Clone, Debug)]
pub struct Example {
    pub scene: Scene,
    /// Channel-major network raster.
    pub input: Vec<f32>,
    pub state_raw: [f64; STATE_DIM],
    /// Standardized with the training-split statistics.
    pub state: [f32; STATE_DIM],
    pub target: Trajectory,
    pub actors: Vec<GaussianActorField>,
    pub field: DistanceField<f32>,
    /// Semantic layers at network resolution, for the awareness indexes.
    pub net_layers: SemanticLayers,
}

impl Example {
    pub fn id(&self) -> &str {
        &self.scene.id
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub norm: StateNorm,
}

/// Split key: the sequence a window came from, so overlapping windows never
/// straddle the split.
fn split_key(id: &str) -> &str {
    match id.rfind("-w") {
        Some(i) if id[i + 2..].chars().all(|c| c.is_ascii_digit()) && i + 2 < id.len() => &id[..i],
        _ => id,
    }
}

/// Deterministic pseudo-uniform value in `[0, 1)` from the scene id.
pub fn split_fraction(id: &str) -> f64 {
    let digest = hex_digest(split_key(id).as_bytes());
    let v = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
    (v >> 11) as f64 / (1u64 << 53) as f64
}

pub fn is_validation(id: &str, val_fraction: f64) -> bool {
    split_fraction(id) < val_fraction
}

/// Scenes from the corpus directory, or windows of generated sequences.
pub fn collect_scenes(data: &DataConfig) -> Result<Vec<Scene>> {
    if let Some(dir) = &data.corpus_dir {
        return load_corpus(dir);
    }
    let seeds: Vec<u64> = (0..data.sequences as u64)
        .map(|i| data.seed_start + i)
        .collect();
    let sequences = seeds
        .par_iter()
        .map(|&s| generate_sequence(s, &data.generator))
        .collect::<Result<Vec<_>>>()?;
    Ok(window_examples(&sequences).scenes)
}

fn prepare(scene: Scene, cfg: &ExperimentConfig) -> Example {
    let net_t = RasterTransform::with_size(cfg.arch.input_size);
    let map = rasterize_scene(&scene, &cfg.raster, &net_t);
    let field_layers = rasterize_layers(&scene, &RasterTransform::with_size(cfg.eval.field_size));
    let field = build_sdf(&field_layers.road_layer, &field_layers.transform);
    Example {
        input: rgb_to_input(&map.rgb),
        state_raw: raw_state_features(&scene.ego),
        state: [0.0; STATE_DIM],
        target: scene.expert_future,
        actors: actor_fields(&scene.actors, &cfg.loss.social()),
        field,
        net_layers: map.layers,
        scene,
    }
}

impl Dataset {
    pub fn from_scenes(scenes: Vec<Scene>, cfg: &ExperimentConfig) -> Result<Self> {
        if scenes.is_empty() {
            return Err(Error::EmptyDataset("no scenes to train on".into()));
        }
        let examples: Vec<Example> = scenes.into_par_iter().map(|s| prepare(s, cfg)).collect();
        let (val, train): (Vec<_>, Vec<_>) = examples
            .into_iter()
            .partition(|e| is_validation(e.id(), cfg.data.val_fraction));
        if train.is_empty() {
            return Err(Error::EmptyDataset("training split is empty".into()));
        }
        let norm = StateNorm::fit(train.iter().map(|e| &e.state_raw))?;
        let mut ds = Dataset { train, val, norm };
        let norm = ds.norm.clone();
        for e in ds.train.iter_mut().chain(ds.val.iter_mut()) {
            e.state = norm.apply(&e.state_raw);
        }
        info!(
            "dataset: {} train / {} validation examples",
            ds.train.len(),
            ds.val.len()
        );
        Ok(ds)
    }

    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Self::from_scenes(collect_scenes(&cfg.data)?, cfg)
    }

    /// Examples from a scene directory, standardized with `norm`.
    pub fn eval_corpus(
        dir: &Path,
        norm: &StateNorm,
        cfg: &ExperimentConfig,
    ) -> Result<Vec<Example>> {
        let scenes = load_corpus(dir)?;
        if scenes.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "no scene files in {}",
                dir.display()
            )));
        }
        Ok(Self::prepare_with(scenes, norm, cfg))
    }

    pub fn prepare_with(
        scenes: Vec<Scene>,
        norm: &StateNorm,
        cfg: &ExperimentConfig,
    ) -> Vec<Example> {
        scenes
            .into_par_iter()
            .map(|s| {
                let mut e = prepare(s, cfg);
                e.state = norm.apply(&e.state_raw);
                e
            })
            .collect()
    }
}
