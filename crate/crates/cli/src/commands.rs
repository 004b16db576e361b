use std::path::{Path, PathBuf};

use envloss::config::ExperimentConfig;
use envloss::distfield::{build_sdf, write_field_pgm};
use envloss::losses::{actor_fields, road_point_loss, social_interaction};
use envloss::metrics::awareness;
use envloss::netcore::{load_checkpoint, RegressorModel, StateNorm};
use envloss::raster::{
    rasterize_layers, rasterize_scene, write_pgm, write_ppm, Grid, RasterTransform,
};
use envloss::scene::{generate_scene, load_scene, save_scene, Scene};
use envloss::trainer::{
    ablation, collect_scenes, ensure_dir, evaluate, is_validation, run_point, sweep,
    write_ablation, write_json, write_report, write_sweep, Dataset, Example, RunCache, RunKey,
};
use envloss::{Error, Model32, Result};
use serde_json::{json, Value};

use crate::{Cli, Command, SceneArg};

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        // a malformed config is a usage error, not a data error
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Parse { .. } | Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_or_generate(arg: &SceneArg, cfg: &ExperimentConfig) -> Result<Scene> {
    match &arg.scene {
        Some(p) => load_scene(p),
        None => generate_scene(arg.scene_seed, &cfg.data.generator),
    }
}

fn load_model(path: &Path) -> Result<Model32> {
    Ok(load_checkpoint::<f32>(path)?.0)
}

/// Copies the network architecture of `model` into `cfg`, so examples are
/// rasterized at the size the checkpoint expects.
fn with_model_arch(cfg: &ExperimentConfig, model: &Model32) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.arch = model.arch().clone();
    c
}

fn paths(ps: &[PathBuf]) -> Vec<String> {
    ps.iter().map(|p| p.display().to_string()).collect()
}

pub fn run(cli: &Cli) -> Result<Value> {
    let cfg = load_config(cli)?;
    let out = cli.out_dir.as_path();
    ensure_dir(out)?;
    write_json(&out.join("config.json"), &cfg)?;
    let hash = cfg.hash();
    let mut summary = match &cli.command {
        Command::Gen { sequences } => gen(&cfg, *sequences, out)?,
        Command::Rasterize { scene, size } => rasterize(&cfg, scene, *size, out)?,
        Command::Fields {
            scene,
            size,
            k1,
            k2,
        } => fields(&cfg, scene, *size, *k1, *k2, out)?,
        Command::Train { k1, k2 } => {
            let key = RunKey {
                k1: k1.unwrap_or(cfg.loss.k1),
                k2: k2.unwrap_or(cfg.loss.k2),
                seed: cfg.seed,
            };
            let ds = Dataset::build(&cfg)?;
            let report = run_point(&ds, &cfg, key, Some(out))?;
            json!({
                "run_dir": out.join("runs").join(key.run_id()).display().to_string(),
                "n_train": ds.train.len(),
                "metrics": report,
            })
        }
        Command::Eval { checkpoint, corpus } => eval(&cfg, checkpoint, corpus.as_deref(), out)?,
        Command::Sweep { axis } => {
            let mut spec = cfg.sweep.clone();
            if let Some(a) = axis {
                spec.axis = *a;
            }
            let ds = Dataset::build(&cfg)?;
            let res = sweep(&ds, &cfg, &spec, &mut RunCache::default(), Some(out))?;
            write_sweep(out, &res)?;
            json!({
                "axis": res.axis,
                "points": res.points,
                "spearman_mse": res.spearman_mse,
                "spearman_coll": res.spearman_coll,
                "spearman_oor": res.spearman_oor,
            })
        }
        Command::Ablate => {
            let ds = Dataset::build(&cfg)?;
            let rep = ablation(
                &ds,
                &cfg,
                &cfg.sweep.seeds,
                &mut RunCache::default(),
                Some(out),
            )?;
            write_ablation(out, &rep)?;
            json!({ "rows": rep.rows })
        }
        Command::Explain { checkpoint, scene } => explain(&cfg, checkpoint.as_deref(), scene, out)?,
    };
    let obj = summary.as_object_mut().expect("summaries are objects");
    obj.insert("command".into(), json!(command_name(&cli.command)));
    obj.insert("config_hash".into(), json!(hash));
    Ok(summary)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen { .. } => "gen",
        Command::Rasterize { .. } => "rasterize",
        Command::Fields { .. } => "fields",
        Command::Train { .. } => "train",
        Command::Eval { .. } => "eval",
        Command::Sweep { .. } => "sweep",
        Command::Ablate => "ablate",
        Command::Explain { .. } => "explain",
    }
}

fn gen(cfg: &ExperimentConfig, sequences: Option<usize>, out: &Path) -> Result<Value> {
    let mut data = cfg.data.clone();
    data.corpus_dir = None;
    if let Some(n) = sequences {
        data.sequences = n;
    }
    let scenes = collect_scenes(&data)?;
    let dir = out.join("scenes");
    ensure_dir(&dir)?;
    for s in &scenes {
        save_scene(s, dir.join(format!("{}.json", s.id)))?;
    }
    Ok(json!({ "corpus": dir.display().to_string(), "scenes": scenes.len() }))
}

fn rasterize(cfg: &ExperimentConfig, arg: &SceneArg, size: usize, out: &Path) -> Result<Value> {
    let scene = load_or_generate(arg, cfg)?;
    let t = RasterTransform::with_size(size);
    let map = rasterize_scene(&scene, &cfg.raster, &t);
    let files = [
        out.join(format!("{}.ppm", scene.id)),
        out.join(format!("{}.road.pgm", scene.id)),
        out.join(format!("{}.traffic.pgm", scene.id)),
    ];
    write_ppm(&map.rgb, &files[0])?;
    write_pgm(&map.road_layer().to_unit(), &files[1])?;
    write_pgm(&map.traffic_layer().to_unit(), &files[2])?;
    Ok(json!({ "scene": scene.id, "size": size, "files": paths(&files) }))
}

/// Social, road and weighted environmental loss at every pixel center.
pub fn loss_landscapes(
    scene: &Scene,
    cfg: &ExperimentConfig,
    t: &RasterTransform,
    k1: f64,
    k2: f64,
) -> [Grid<f64>; 3] {
    let n = t.size_px;
    let actors = actor_fields(&scene.actors, &cfg.loss.social());
    let df = build_sdf::<f64>(&rasterize_layers(scene, t).road_layer, t);
    let params = cfg.loss.road_params();
    let social = Grid::from_fn(n, n, |r, c| {
        let p = t.pixel_center(r, c);
        actors.iter().map(|a| social_interaction(a, p).0).sum()
    });
    let road = Grid::from_fn(n, n, |r, c| road_point_loss(*df.sdf.get(r, c), &params).0);
    let env = Grid::from_fn(n, n, |r, c| k1 * social.get(r, c) + k2 * road.get(r, c));
    [social, road, env]
}

fn fields(
    cfg: &ExperimentConfig,
    arg: &SceneArg,
    size: usize,
    k1: f64,
    k2: f64,
    out: &Path,
) -> Result<Value> {
    if !(k1 >= 0.0 && k2 >= 0.0) {
        return Err(Error::Config("--k1 and --k2 must be non-negative".into()));
    }
    let scene = load_or_generate(arg, cfg)?;
    let t = RasterTransform::with_size(size);
    let grids = loss_landscapes(&scene, cfg, &t, k1, k2);
    let mut ranges = serde_json::Map::new();
    let mut files = Vec::new();
    for (name, g) in ["social", "road", "env"].iter().zip(&grids) {
        let path = out.join(format!("{name}.pgm"));
        let range = write_field_pgm(g, &path)?;
        ranges.insert(name.to_string(), json!(range));
        files.push(path);
    }
    Ok(json!({
        "scene": scene.id,
        "K1": k1,
        "K2": k2,
        "ranges": ranges,
        "files": paths(&files),
    }))
}

fn eval(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    corpus: Option<&Path>,
    out: &Path,
) -> Result<Value> {
    let model = load_model(checkpoint)?;
    let cfg = with_model_arch(cfg, &model);
    let examples: Vec<Example> = match corpus {
        Some(dir) => Dataset::eval_corpus(dir, model.norm(), &cfg)?,
        None => {
            let scenes: Vec<Scene> = collect_scenes(&cfg.data)?
                .into_iter()
                .filter(|s| is_validation(&s.id, cfg.data.val_fraction))
                .collect();
            if scenes.is_empty() {
                return Err(Error::EmptyDataset("validation split is empty".into()));
            }
            Dataset::prepare_with(scenes, model.norm(), &cfg)
        }
    };
    let report = evaluate(&model, &examples, &cfg, &cfg.hash())?;
    write_report(out, &report)?;
    Ok(json!({ "metrics": report }))
}

fn explain(
    cfg: &ExperimentConfig,
    checkpoint: Option<&Path>,
    arg: &SceneArg,
    out: &Path,
) -> Result<Value> {
    let model = match checkpoint {
        Some(p) => load_model(p)?,
        None => RegressorModel::new(cfg.arch.clone(), StateNorm::default(), cfg.seed)?,
    };
    let cfg = with_model_arch(cfg, &model);
    let scene = load_or_generate(arg, &cfg)?;
    let id = scene.id.clone();
    let e = Dataset::prepare_with(vec![scene], model.norm(), &cfg)
        .pop()
        .expect("one scene in, one example out");
    let heat = model.guided_backprop(&e.input, &e.state, cfg.eval.saliency)?;
    let aw = awareness(&heat, &e.net_layers.traffic_layer, &e.net_layers.road_layer);
    let heat_path = out.join("heatmap.pgm");
    let range = write_field_pgm(&heat, &heat_path)?;
    let aw_path = out.join("awareness.json");
    write_json(
        &aw_path,
        &json!({ "scene": id, "awareness": aw, "heatmap_range": range }),
    )?;
    Ok(json!({
        "scene": id,
        "awareness": aw,
        "files": paths(&[heat_path, aw_path]),
    }))
}
