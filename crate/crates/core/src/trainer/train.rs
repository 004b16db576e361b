use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Example};
use crate::config::ExperimentConfig;
use crate::losses::{combined_loss, LossReport};
use crate::netcore::{Adam, RegressorModel};
use crate::{Error, Model32, Result};

/// Mean loss components over one batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub epoch: usize,
    pub batch: usize,
    pub total: f64,
    pub mse: f64,
    pub social: f64,
    pub road: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub total: f64,
    pub mse: f64,
    pub social: f64,
    pub road: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model32,
    pub steps: Vec<StepLog>,
    pub epochs: Vec<EpochLog>,
}

const SHUFFLE_STREAM: u64 = 0x5eed_0f_ba7c;

/// Loss and parameter gradient of one example.
fn example_grad(
    model: &Model32,
    e: &Example,
    cfg: &ExperimentConfig,
    scale: f32,
) -> Result<(LossReport, Vec<f32>)> {
    let tape = model.forward(&e.input, &e.state)?;
    let yhat = tape.trajectory();
    let report = combined_loss(
        &e.target,
        &yhat,
        &e.actors,
        &e.field,
        &cfg.loss.weights(),
        &cfg.loss.road_params(),
    );
    let mut upstream = [0.0f32; 12];
    for (t, g) in report.grad.iter().enumerate() {
        upstream[2 * t] = g.x as f32 * scale;
        upstream[2 * t + 1] = g.y as f32 * scale;
    }
    let mut grads = vec![0.0f32; model.param_count()];
    model.accumulate_grads(&tape, &upstream, &mut grads)?;
    Ok((report, grads))
}

/// Trains a fresh model on `ds.train` with the configured loss weights.
pub fn train_on(ds: &Dataset, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::EmptyDataset("training split is empty".into()));
    }
    let mut model = RegressorModel::<f32>::new(cfg.arch.clone(), ds.norm.clone(), cfg.seed)?;
    let mut opt = Adam::new(model.param_count(), cfg.train.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut steps = Vec::new();
    let mut epochs = Vec::new();
    let mut grads = vec![0.0f32; model.param_count()];

    for epoch in 0..cfg.train.epochs {
        order.shuffle(&mut rng);
        let mut sums = [0.0f64; 4];
        for (batch, idx) in order.chunks(cfg.train.batch_size).enumerate() {
            let scale = 1.0 / idx.len() as f32;
            let results = idx
                .par_iter()
                .map(|&i| example_grad(&model, &ds.train[i], cfg, scale))
                .collect::<Result<Vec<_>>>()?;
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut s = [0.0f64; 4];
            // fixed-order reduction keeps runs bit-identical
            for (r, g) in &results {
                for (a, b) in grads.iter_mut().zip(g) {
                    *a += *b;
                }
                s[0] += r.total;
                s[1] += r.mse;
                s[2] += r.social;
                s[3] += r.road;
            }
            let n = idx.len() as f64;
            let log = StepLog {
                epoch,
                batch,
                total: s[0] / n,
                mse: s[1] / n,
                social: s[2] / n,
                road: s[3] / n,
            };
            if !log.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch,
                    value: log.total,
                });
            }
            opt.step(model.params_mut(), &grads)?;
            for (acc, v) in sums.iter_mut().zip(s) {
                *acc += v;
            }
            debug!("epoch {epoch} batch {batch}: total {:.5}", log.total);
            steps.push(log);
        }
        let n = ds.train.len() as f64;
        let e = EpochLog {
            epoch,
            total: sums[0] / n,
            mse: sums[1] / n,
            social: sums[2] / n,
            road: sums[3] / n,
        };
        info!(
            "epoch {epoch}: total {:.4} mse {:.4} social {:.4} road {:.4}",
            e.total, e.mse, e.social, e.road
        );
        epochs.push(e);
    }
    Ok(TrainOutcome {
        model,
        steps,
        epochs,
    })
}

/// Builds the dataset described by `cfg` and trains on it.
pub fn train(cfg: &ExperimentConfig) -> Result<(Dataset, TrainOutcome)> {
    let ds = Dataset::build(cfg)?;
    let out = train_on(&ds, cfg)?;
    Ok((ds, out))
}
