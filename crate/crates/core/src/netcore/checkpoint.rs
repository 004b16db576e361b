//! `ENVLOSS1` magic, u32 LE header length, JSON header, LE parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ArchConfig, RegressorModel};
use super::state::StateNorm;
use crate::{Error, Real, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ENVLOSS1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub scalar: String,
    pub n_params: usize,
    pub arch: ArchConfig,
    pub norm: StateNorm,
    pub seed: u64,
    pub config_hash: String,
}

pub fn encode_checkpoint<T: Real>(
    model: &RegressorModel<T>,
    seed: u64,
    config_hash: &str,
) -> Vec<u8> {
    let header = CheckpointHeader {
        scalar: T::NAME.to_string(),
        n_params: model.param_count(),
        arch: model.arch().clone(),
        norm: model.norm().clone(),
        seed,
        config_hash: config_hash.to_string(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + model.param_count() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for &p in model.params() {
        p.write_le(&mut out);
    }
    out
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<(RegressorModel<T>, CheckpointHeader)> {
    let bad = |m: String| Error::Checkpoint(m);
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not an envloss checkpoint".into()));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() < hlen {
        return Err(bad("truncated header".into()));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&body[..hlen]).map_err(|e| bad(format!("invalid header: {e}")))?;
    if header.scalar != T::NAME {
        return Err(bad(format!(
            "checkpoint stores {} parameters, {} requested",
            header.scalar,
            T::NAME
        )));
    }
    let payload = &body[hlen..];
    if payload.len() != header.n_params * T::BYTES {
        return Err(bad(format!(
            "expected {} parameter bytes, found {}",
            header.n_params * T::BYTES,
            payload.len()
        )));
    }
    let params = payload.chunks_exact(T::BYTES).map(T::read_le).collect();
    let model = RegressorModel::from_params(header.arch.clone(), header.norm.clone(), params)
        .map_err(|e| bad(format!("architecture mismatch: {e}")))?;
    Ok((model, header))
}

pub fn save_checkpoint<T: Real>(
    model: &RegressorModel<T>,
    seed: u64,
    config_hash: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model, seed, config_hash))
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Real>(
    path: impl AsRef<Path>,
) -> Result<(RegressorModel<T>, CheckpointHeader)> {
    let path = path.as_ref();
    decode_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
