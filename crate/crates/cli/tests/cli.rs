use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use envloss::config::ExperimentConfig;
use envloss::geometry::{Pose2, Vec2};
use envloss::netcore::{save_checkpoint, RegressorModel, StateNorm};
use envloss::raster::{read_pgm, RasterTransform};
use envloss::scene::{
    generate_scene, save_scene, Actor, ActorClass, GeneratorConfig, RoadTemplate, StateSample,
};
use serde_json::Value;

const SMOKE: &str = r#"
seed = 0
[data]
sequences = 24
[arch]
input_size = 32
conv_channels = [4, 8]
hidden = [16]
[train]
epochs = 1
batch_size = 8
[eval]
metric_size = 100
field_size = 100
[sweep]
values = [0.0, 1.0]
seeds = [0]
"#;

fn envloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envloss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "summary is one line: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

fn smoke_config(dir: &Path) -> PathBuf {
    let p = dir.join("smoke.toml");
    std::fs::write(&p, SMOKE).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn range(sidecar: &Path) -> (f64, f64) {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    (v["min"].as_f64().unwrap(), v["max"].as_f64().unwrap())
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(envloss(&["--bogus"]).status.code(), Some(1));
    assert_eq!(envloss(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(envloss(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 0\nbogus_key = 1\n").unwrap();
    let out = envloss(&["--config", s(&bad), "--out-dir", s(dir.path()), "gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = envloss(&["--out-dir", s(dir.path()), "--threads", "0", "gen"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let missing = envloss(&[
        "--out-dir",
        s(&out_dir),
        "eval",
        "--checkpoint",
        "/no/such/file",
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_scene = dir.path().join("bad.json");
    let mut v: Value = serde_json::from_str(&envloss::scene::scene_to_json(
        &generate_scene(0, &GeneratorConfig::default()).unwrap(),
    ))
    .unwrap();
    v["expert_future"].as_array_mut().unwrap().pop();
    std::fs::write(&bad_scene, v.to_string()).unwrap();
    let out = envloss(&[
        "--out-dir",
        s(&out_dir),
        "rasterize",
        "--scene",
        s(&bad_scene),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 6 trajectory points"));

    let cfg = ExperimentConfig::default();
    let ckpt = dir.path().join("zero.ckpt");
    let model = RegressorModel::<f32>::zeros(cfg.arch.clone(), StateNorm::default()).unwrap();
    save_checkpoint(&model, 0, "", &ckpt).unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = envloss(&[
        "--out-dir",
        s(&out_dir),
        "eval",
        "--checkpoint",
        s(&ckpt),
        "--corpus",
        s(&empty),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("div.toml");
    std::fs::write(
        &cfg,
        SMOKE.replace("batch_size = 8", "batch_size = 8\nlr = 1e30"),
    )
    .unwrap();
    let out = envloss(&["--config", s(&cfg), "--out-dir", s(dir.path()), "train"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn gen_then_rasterize_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let g = summary(&envloss(&["--out-dir", s(&out), "gen", "--sequences", "2"]));
    assert_eq!(g["scenes"], 2);
    assert!(out.join("config.json").exists());
    let scene = out.join("scenes/gen-1-w00.json");
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let o = dir.path().join(run);
        let r = summary(&envloss(&[
            "--out-dir",
            s(&o),
            "rasterize",
            "--scene",
            s(&scene),
            "--size",
            "96",
        ]));
        assert_eq!(r["files"].as_array().unwrap().len(), 3);
        let files = [
            "gen-1-w00.ppm",
            "gen-1-w00.road.pgm",
            "gen-1-w00.traffic.pgm",
        ];
        bytes.push(files.map(|f| std::fs::read(o.join(f)).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
    assert!(bytes[0][0].starts_with(b"P6\n96 96\n255\n"));
}

#[test]
fn field_landscapes() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = generate_scene(
        1,
        &GeneratorConfig {
            templates: vec![RoadTemplate::Straight],
            actor_count: [0, 0],
            ..Default::default()
        },
    )
    .unwrap();
    let centroid = Vec2::new(1.75, 9.0);
    scene.actors = vec![Actor {
        class: ActorClass::Vehicle,
        length: 4.5,
        width: 1.9,
        history: vec![StateSample::new(
            Pose2::new(centroid.x, centroid.y, 1.2),
            5.0,
        )],
    }];
    let path = dir.path().join("scene.json");
    save_scene(&scene, &path).unwrap();
    let out = dir.path().join("o");
    summary(&envloss(&[
        "--out-dir",
        s(&out),
        "fields",
        "--scene",
        s(&path),
        "--size",
        "200",
        "--k1",
        "2",
        "--k2",
        "0.5",
    ]));
    let load = |n: &str| {
        let (lo, hi) = range(&out.join(format!("{n}.json")));
        let g = read_pgm(out.join(format!("{n}.pgm"))).unwrap();
        (g, lo, hi)
    };
    let (social, s_lo, s_hi) = load("social");
    let (road, r_lo, r_hi) = load("road");
    let (env, e_lo, e_hi) = load("env");

    // Gaussian peak at the actor centroid
    let t = RasterTransform::with_size(200);
    let (pr, pc) = t.world_to_pixel(centroid);
    let (pr, pc) = (pr as usize, pc as usize);
    assert_eq!(*social.get(pr, pc), 1.0);
    for r in 0..200 {
        for c in 0..200 {
            if *social.get(r, c) == 1.0 {
                assert!((t.pixel_center(r, c) - centroid).norm() < 1.0);
            }
        }
    }
    assert!((s_hi - 1.0).abs() < 0.01, "peak {s_hi}");

    // road cross-section: lowest in the middle of the road, rising outward
    let row = 130;
    let vals: Vec<f64> = (0..200).map(|c| *road.get(row, c)).collect();
    let mid = (0..200)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    assert!(vals[..mid].windows(2).all(|w| w[0] >= w[1]));
    assert!(vals[mid..].windows(2).all(|w| w[0] <= w[1]));
    // both ends are off the road, where the loss is at least 1
    let curb = (1.0 - r_lo) / (r_hi - r_lo) - 0.5 / 255.0;
    assert!(vals[0] >= curb && vals[199] >= curb && vals[mid] < curb);

    // env is the weighted sum, up to 8-bit quantization of the three images
    let q = 0.5 / 255.0;
    let tol = q * ((e_hi - e_lo) + 2.0 * (s_hi - s_lo) + 0.5 * (r_hi - r_lo)) + 1e-9;
    for i in 0..200 * 200 {
        let de = |v: f64, lo: f64, hi: f64| lo + v * (hi - lo);
        let sv = de(social.data()[i], s_lo, s_hi);
        let rv = de(road.data()[i], r_lo, r_hi);
        let ev = de(env.data()[i], e_lo, e_hi);
        assert!((ev - (2.0 * sv + 0.5 * rv)).abs() <= tol, "pixel {i}");
    }
}

#[test]
fn zero_model_eval_matches_expert_norms() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    let scene = generate_scene(3, &GeneratorConfig::default()).unwrap();
    save_scene(&scene, corpus.join("one.json")).unwrap();
    let cfg = smoke_config(dir.path());
    let arch = ExperimentConfig::load(&cfg).unwrap().arch;
    let ckpt = dir.path().join("zero.ckpt");
    let model = RegressorModel::<f32>::zeros(arch, StateNorm::default()).unwrap();
    save_checkpoint(&model, 0, "", &ckpt).unwrap();

    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let v = summary(&envloss(&[
            "--config",
            s(&cfg),
            "--out-dir",
            s(&out),
            "eval",
            "--checkpoint",
            s(&ckpt),
            "--corpus",
            s(&corpus),
        ]));
        let m = &v["metrics"];
        let expected = scene
            .expert_future
            .points
            .iter()
            .map(|p| p.norm_sq())
            .sum::<f64>()
            / 6.0;
        assert!((m["mse"].as_f64().unwrap() - expected).abs() < 1e-9 * expected);
        for key in [
            "coll_index",
            "oor_index",
            "total_overlap",
            "social_index",
            "map_index",
        ] {
            assert!(m[key].as_f64().unwrap() >= 0.0, "{key}");
        }
        assert_eq!(m["n_examples"], 1);
        reports.push(std::fs::read(out.join("metrics.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn train_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("o");
    let t = summary(&envloss(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(&out),
        "--threads",
        "2",
        "train",
        "--k1",
        "1",
    ]));
    let run_dir = PathBuf::from(t["run_dir"].as_str().unwrap());
    for f in [
        "checkpoint",
        "metrics.json",
        "metrics.csv",
        "log.csv",
        "config.json",
    ] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let ckpt = run_dir.join("checkpoint");
    let mut heat = Vec::new();
    for run in ["x", "y"] {
        let o = dir.path().join(run);
        let e = summary(&envloss(&[
            "--config",
            s(&cfg),
            "--out-dir",
            s(&o),
            "explain",
            "--checkpoint",
            s(&ckpt),
            "--scene-seed",
            "4",
        ]));
        let a = &e["awareness"];
        let (si, mi) = (
            a["social_index"].as_f64().unwrap(),
            a["map_index"].as_f64().unwrap(),
        );
        assert!((0.0..=1.0).contains(&si) && (0.0..=1.0).contains(&mi) && si + mi <= 1.0 + 1e-12);
        heat.push(std::fs::read(o.join("heatmap.pgm")).unwrap());
    }
    assert_eq!(heat[0], heat[1]);
}

#[test]
fn untrained_explain_and_small_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("x");
    let e = summary(&envloss(&[
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--out-dir",
        s(&out),
        "explain",
    ]));
    assert_eq!(e["awareness"]["empty_heatmap"], false);
    let heat = read_pgm(out.join("heatmap.pgm")).unwrap();
    assert_eq!(heat.rows(), 32);
    let (lo, hi) = range(&out.join("heatmap.json"));
    assert!(lo >= 0.0 && hi > 0.0 && hi <= 1.0);

    let sw = dir.path().join("sw");
    let v = summary(&envloss(&[
        "--config",
        s(&cfg),
        "--out-dir",
        s(&sw),
        "sweep",
        "--axis",
        "k2",
    ]));
    assert_eq!(v["axis"], "K2");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    for f in [
        "sweep.csv",
        "sweep_points.csv",
        "sweep.json",
        "runs/k1-0_k2-1_seed-0/metrics.json",
    ] {
        assert!(sw.join(f).exists(), "{f}");
    }
}
