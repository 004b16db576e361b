use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::eval::{evaluate, evaluate_expert, EvalReport};
use super::output::{write_run, RunArtifacts};
use super::train::train_on;
use crate::config::{ExperimentConfig, SweepAxis, SweepSpec};
use crate::{Error, Result};

/// Loss weights and seed identifying one training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunKey {
    pub k1: f64,
    pub k2: f64,
    pub seed: u64,
}

impl RunKey {
    fn bits(&self) -> (u64, u64, u64) {
        (self.k1.to_bits(), self.k2.to_bits(), self.seed)
    }

    pub fn run_id(&self) -> String {
        format!("k1-{}_k2-{}_seed-{}", self.k1, self.k2, self.seed)
    }

    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.loss.k1 = self.k1;
        cfg.loss.k2 = self.k2;
        cfg.seed = self.seed;
        cfg
    }
}

/// Validation reports of finished runs, shared between experiments that
/// revisit the same weights.
#[derive(Clone, Debug, Default)]
pub struct RunCache {
    runs: BTreeMap<(u64, u64, u64), EvalReport>,
}

impl RunCache {
    pub fn get(&self, key: &RunKey) -> Option<&EvalReport> {
        self.runs.get(&key.bits())
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

/// Trains and evaluates one run; writes its artifacts under `out/runs/<id>`.
pub fn run_point(
    ds: &Dataset,
    base: &ExperimentConfig,
    key: RunKey,
    out: Option<&Path>,
) -> Result<EvalReport> {
    if ds.val.is_empty() {
        return Err(Error::EmptyDataset("validation split is empty".into()));
    }
    let cfg = key.apply(base);
    let hash = cfg.hash();
    let outcome = train_on(ds, &cfg)?;
    let report = evaluate(&outcome.model, &ds.val, &cfg, &hash)?;
    info!(
        "run {}: mse {:.4} coll {:.4} oor {:.4}",
        key.run_id(),
        report.mse.unwrap_or(f64::NAN),
        report.coll_index,
        report.oor_index
    );
    if let Some(dir) = out {
        let run_dir: PathBuf = dir.join("runs").join(key.run_id());
        write_run(
            &run_dir,
            &RunArtifacts {
                cfg: &cfg,
                outcome: &outcome,
                report: &report,
            },
        )?;
    }
    Ok(report)
}

/// Runs every key missing from `cache`, in parallel.
pub fn run_all(
    ds: &Dataset,
    base: &ExperimentConfig,
    keys: &[RunKey],
    cache: &mut RunCache,
    out: Option<&Path>,
) -> Result<()> {
    let mut todo: Vec<RunKey> = Vec::new();
    for k in keys {
        if cache.get(k).is_none() && !todo.iter().any(|t| t.bits() == k.bits()) {
            todo.push(*k);
        }
    }
    let reports = todo
        .par_iter()
        .map(|k| run_point(ds, base, *k, out))
        .collect::<Result<Vec<_>>>()?;
    for (k, r) in todo.into_iter().zip(reports) {
        cache.runs.insert(k.bits(), r);
    }
    Ok(())
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `NaN` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let (a, b) = (rx[i] - mx, ry[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub mse: f64,
    pub coll_index: f64,
    pub oor_index: f64,
    pub total_overlap: f64,
}

/// Seed-averaged metrics at one weight value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub seeds: usize,
    pub mse: f64,
    pub coll_index: f64,
    pub oor_index: f64,
    pub total_overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
    /// Rank correlations between the weight and the seed-averaged metric.
    pub spearman_mse: f64,
    pub spearman_coll: f64,
    pub spearman_oor: f64,
}

impl SweepResult {
    pub fn point(&self, value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.value == value)
    }
}

fn sweep_key(axis: SweepAxis, value: f64, seed: u64) -> RunKey {
    match axis {
        SweepAxis::K1 => RunKey {
            k1: value,
            k2: 0.0,
            seed,
        },
        SweepAxis::K2 => RunKey {
            k1: 0.0,
            k2: value,
            seed,
        },
    }
}

/// Varies one weight with the other held at zero (the base weights are ignored).
pub fn sweep(
    ds: &Dataset,
    base: &ExperimentConfig,
    spec: &SweepSpec,
    cache: &mut RunCache,
    out: Option<&Path>,
) -> Result<SweepResult> {
    spec.validate()?;
    let keys: Vec<RunKey> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| sweep_key(spec.axis, v, s)))
        .collect();
    run_all(ds, base, &keys, cache, out)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &v in &spec.values {
        let mut acc = [0.0; 4];
        for &s in &spec.seeds {
            let r = cache
                .get(&sweep_key(spec.axis, v, s))
                .expect("run just finished");
            let row = SweepRow {
                value: v,
                seed: s,
                mse: r.mse.unwrap_or(f64::NAN),
                coll_index: r.coll_index,
                oor_index: r.oor_index,
                total_overlap: r.total_overlap,
            };
            acc[0] += row.mse;
            acc[1] += row.coll_index;
            acc[2] += row.oor_index;
            acc[3] += row.total_overlap;
            rows.push(row);
        }
        let n = spec.seeds.len() as f64;
        points.push(SweepPoint {
            value: v,
            seeds: spec.seeds.len(),
            mse: acc[0] / n,
            coll_index: acc[1] / n,
            oor_index: acc[2] / n,
            total_overlap: acc[3] / n,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let col = |f: fn(&SweepPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    Ok(SweepResult {
        axis: spec.axis,
        spearman_mse: spearman(&xs, &col(|p| p.mse)),
        spearman_coll: spearman(&xs, &col(|p| p.coll_index)),
        spearman_oor: spearman(&xs, &col(|p| p.oor_index)),
        rows,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    #[serde(rename = "K1")]
    pub k1: Option<f64>,
    #[serde(rename = "K2")]
    pub k2: Option<f64>,
    pub mse: Option<f64>,
    pub coll_index: f64,
    pub oor_index: f64,
    pub total_overlap: f64,
    pub social_index: Option<f64>,
    pub map_index: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// MSE, MSE+social, MSE+road and MSE+env models on identical data and seeds,
/// plus the expert reference computed from the ground-truth futures.
pub fn ablation(
    ds: &Dataset,
    base: &ExperimentConfig,
    seeds: &[u64],
    cache: &mut RunCache,
    out: Option<&Path>,
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let (k1, k2) = (base.ablation.k1, base.ablation.k2);
    let variants = [
        ("mse", 0.0, 0.0),
        ("mse+social", k1, 0.0),
        ("mse+road", 0.0, k2),
        ("mse+env", k1, k2),
    ];
    let keys: Vec<RunKey> = variants
        .iter()
        .flat_map(|&(_, a, b)| seeds.iter().map(move |&seed| RunKey { k1: a, k2: b, seed }))
        .collect();
    run_all(ds, base, &keys, cache, out)?;
    let n = seeds.len() as f64;
    let mut rows = Vec::new();
    for (name, a, b) in variants {
        let reps: Vec<&EvalReport> = seeds
            .iter()
            .map(|&seed| {
                cache
                    .get(&RunKey { k1: a, k2: b, seed })
                    .expect("run finished")
            })
            .collect();
        let avg = |f: fn(&EvalReport) -> f64| reps.iter().map(|r| f(r)).sum::<f64>() / n;
        rows.push(AblationRow {
            name: name.to_string(),
            k1: Some(a),
            k2: Some(b),
            mse: Some(avg(|r| r.mse.unwrap_or(f64::NAN))),
            coll_index: avg(|r| r.coll_index),
            oor_index: avg(|r| r.oor_index),
            total_overlap: avg(|r| r.total_overlap),
            social_index: Some(avg(|r| r.social_index.unwrap_or(f64::NAN))),
            map_index: Some(avg(|r| r.map_index.unwrap_or(f64::NAN))),
        });
    }
    let expert = evaluate_expert(&ds.val, base, &base.hash());
    rows.push(AblationRow {
        name: "expert".into(),
        k1: None,
        k2: None,
        mse: None,
        coll_index: expert.coll_index,
        oor_index: expert.oor_index,
        total_overlap: expert.total_overlap,
        social_index: None,
        map_index: None,
    });
    Ok(AblationReport {
        seeds: seeds.to_vec(),
        rows,
    })
}
