//! Experiment configuration (TOML or JSON) and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::losses::{ActorK, DistanceQuery, LossWeights, RoadLossParams, RoadMode, SocialConfig};
use crate::netcore::{ArchConfig, SaliencyTarget};
use crate::raster::RasterConfig;
use crate::scene::GeneratorConfig;
use crate::{Error, Result};

/// Where training and validation scenes come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of scene JSON files; when set the generator is not used.
    pub corpus_dir: Option<PathBuf>,
    /// First generator seed.
    pub seed_start: u64,
    /// Number of generated sequences; each yields several windows.
    pub sequences: usize,
    pub generator: GeneratorConfig,
    /// Fraction of scenes held out, assigned by hashing the scene id.
    pub val_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            corpus_dir: None,
            seed_start: 0,
            sequences: 100,
            generator: GeneratorConfig::default(),
            val_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    /// Road loss decay constant, m².
    pub k: f64,
    pub road_mode: RoadMode,
    pub distance: DistanceQuery,
    pub sigma_scale: f64,
    #[serde(rename = "actor_K")]
    pub actor_k: ActorK,
}

impl Default for LossConfig {
    fn default() -> Self {
        let road = RoadLossParams::default();
        let social = SocialConfig::default();
        LossConfig {
            k1: 0.0,
            k2: 0.0,
            k: road.k,
            road_mode: road.mode,
            distance: road.distance,
            sigma_scale: social.sigma_scale,
            actor_k: social.actor_k,
        }
    }
}

impl LossConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights::new(self.k1, self.k2)
    }

    pub fn road_params(&self) -> RoadLossParams {
        RoadLossParams {
            k: self.k,
            mode: self.road_mode,
            distance: self.distance,
        }
    }

    pub fn social(&self) -> SocialConfig {
        SocialConfig {
            sigma_scale: self.sigma_scale,
            actor_k: self.actor_k.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Raster size used for the overlap metrics.
    pub metric_size: usize,
    /// Raster size of the distance field used by the road loss.
    pub field_size: usize,
    pub saliency: SaliencyTarget,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            metric_size: 400,
            field_size: 200,
            saliency: SaliencyTarget::SumOfOutputs,
        }
    }
}

/// Which loss weight a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    K1,
    K2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Training seeds run at every value.
    pub seeds: Vec<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: SweepAxis::K1,
            values: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
            seeds: vec![0, 1, 2],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::Config(
                "a sweep needs at least two weight values".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("a sweep needs at least one seed".into()));
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(
                "sweep values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Loss weights of the social, road and environmental ablation rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSpec {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec { k1: 2.0, k2: 2.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model initialization and batch shuffling seed.
    pub seed: u64,
    pub data: DataConfig,
    pub raster: RasterConfig,
    pub arch: ArchConfig,
    pub train: TrainParams,
    pub loss: LossConfig,
    pub eval: EvalConfig,
    pub sweep: SweepSpec,
    pub ablation: AblationSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.data.generator.validate()?;
        self.raster.validate()?;
        self.arch.validate()?;
        if !(0.0..1.0).contains(&self.data.val_fraction) {
            return bad("val_fraction must lie in [0, 1)");
        }
        if self.train.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.train.lr > 0.0 && self.train.lr.is_finite()) {
            return bad("lr must be positive");
        }
        let l = &self.loss;
        if !(l.k1 >= 0.0 && l.k2 >= 0.0 && l.k1.is_finite() && l.k2.is_finite()) {
            return bad("loss weights K1 and K2 must be finite and non-negative");
        }
        if !(l.k > 0.0) || !(l.sigma_scale > 0.0) {
            return bad("k and sigma_scale must be positive");
        }
        if self.eval.metric_size == 0 || self.eval.field_size == 0 {
            return bad("metric_size and field_size must be positive");
        }
        Ok(())
    }

    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn from_str_with_format(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if origin.ends_with(".toml") {
            toml::from_str(text).map_err(|e| {
                let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
                Error::Parse {
                    path: origin.to_string(),
                    line,
                    column,
                    message: e.message().to_string(),
                }
            })?
        } else {
            serde_json::from_str(text).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_with_format(&text, &path.display().to_string())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

pub(crate) fn hash_json<S: Serialize>(v: &S) -> String {
    let bytes = serde_json::to_vec(v).expect("value serializes");
    hex_digest(&bytes)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
