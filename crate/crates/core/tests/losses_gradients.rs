mod common;

use common::{central_diff, rel_err, scene};
use envloss::distfield::build_sdf;
use envloss::geometry::Vec2;
use envloss::losses::*;
use envloss::raster::{rasterize_layers, RasterTransform};
use envloss::scene::{Trajectory, HORIZON};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn traj_from(x: &[f64]) -> Trajectory {
    Trajectory::from_flat(x)
}

fn flat_grad(g: &TrajectoryGrad) -> Vec<f64> {
    g.iter().flat_map(|v| [v.x, v.y]).collect()
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let y: Vec<f64> = (0..12).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let yt = traj_from(&y);
        let f = |v: &[f64]| mse(&yt, &traj_from(v)).0;
        let g = flat_grad(&mse(&yt, &traj_from(&x)).1);
        for i in 0..12 {
            assert!(rel_err(g[i], central_diff(&f, &x, i, 1e-5), 1e-8) < 1e-7);
        }
    }
}

#[test]
fn social_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let fields: Vec<GaussianActorField> = (0..rng.gen_range(1..4))
            .map(|_| {
                GaussianActorField::new(
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(0.0..20.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.4..3.0),
                    rng.gen_range(0.3..1.5),
                    rng.gen_range(0.5..2.0),
                )
            })
            .collect();
        let x: Vec<f64> = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    rng.gen_range(-5.0..5.0)
                } else {
                    rng.gen_range(0.0..20.0)
                }
            })
            .collect();
        let f = |v: &[f64]| social_loss(&fields, &traj_from(v)).0;
        let g = flat_grad(&social_loss(&fields, &traj_from(&x)).1);
        for i in 0..12 {
            assert!(
                rel_err(g[i], central_diff(&f, &x, i, 1e-5), 1e-4) < 1e-5,
                "coord {i}"
            );
        }
    }
}

#[test]
fn road_gradient_matches_finite_differences_away_from_kinks() {
    let s = scene(7);
    let t = RasterTransform::default();
    let layers = rasterize_layers(&s, &t);
    let df = build_sdf::<f64>(&layers.road_layer, &t);
    let res = t.res();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for mode in [RoadMode::Continuous, RoadMode::LogOnly] {
        let params = RoadLossParams {
            mode,
            ..RoadLossParams::default()
        };
        for _ in 0..200 {
            let p = Vec2::new(rng.gen_range(-14.0..14.0), rng.gen_range(-9.0..19.0));
            let (row, col) = t.world_to_pixel(p);
            let (fu, fv) = ((row - 0.5).fract(), (col - 0.5).fract());
            let near_cell_edge = fu.min(1.0 - fu) < 1e-3 || fv.min(1.0 - fv) < 1e-3;
            if near_cell_edge || df.sample(p).value.abs() < res {
                continue;
            }
            let mut x = vec![0.0; 12];
            x[0] = p.x;
            x[1] = p.y;
            let f = |v: &[f64]| road_loss(&df, &params, &traj_from(v)).0;
            // the remaining points stay at the origin and contribute nothing to coordinate 0/1
            let g = flat_grad(&road_loss(&df, &params, &traj_from(&x)).1);
            for i in 0..2 {
                let n = central_diff(&f, &x, i, 1e-6);
                assert!(
                    rel_err(g[i], n, 1e-4) < 1e-5,
                    "p={p:?} i={i} a={} n={n}",
                    g[i]
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 150, "only {checked} samples away from kinks");
}

#[test]
fn combined_gradient_is_the_weighted_sum() {
    let s = scene(11);
    let t = RasterTransform::default();
    let df = build_sdf::<f64>(&rasterize_layers(&s, &t).road_layer, &t);
    let fields = actor_fields(&s.actors, &SocialConfig::default());
    let params = RoadLossParams::default();
    let w = LossWeights::new(2.0, 0.5);
    let yhat = Trajectory::from_flat(&[
        0.3, 2.0, 0.4, 4.1, 0.2, 6.3, 0.1, 8.0, 0.0, 10.2, -0.2, 12.5,
    ]);
    let r = combined_loss(&s.expert_future, &yhat, &fields, &df, &w, &params);
    let (m, gm) = mse(&s.expert_future, &yhat);
    let (so, gs) = social_loss(&fields, &yhat);
    let (ro, gr, _) = road_loss(&df, &params, &yhat);
    assert!((r.total - (m + 2.0 * so + 0.5 * ro)).abs() < 1e-12);
    for t in 0..HORIZON {
        assert!((r.grad[t] - (gm[t] + gs[t] * 2.0 + gr[t] * 0.5)).norm() < 1e-12);
    }
    // zero weights still report every component
    let z = combined_loss(
        &s.expert_future,
        &yhat,
        &fields,
        &df,
        &LossWeights::default(),
        &params,
    );
    assert_eq!(z.social, so);
    assert_eq!(z.road, ro);
    assert_eq!(z.total, m);
}

#[test]
fn road_loss_is_monotone_in_distance() {
    let p = RoadLossParams::default();
    // inside: decreasing with distance from the curb
    let mut prev = f64::INFINITY;
    for i in 0..50 {
        let (l, _) = road_point_loss(i as f64 * 0.1, &p);
        assert!(l < prev || i == 0);
        prev = l;
    }
    // outside: increasing with distance past the curb
    let mut prev = f64::NEG_INFINITY;
    for i in 1..50 {
        let (l, _) = road_point_loss(-(i as f64) * 0.2, &p);
        assert!(l > prev);
        prev = l;
    }
}

#[test]
fn social_field_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (sx, sy, k) = (rng.gen_range(0.5..3.0), rng.gen_range(0.3..1.5), 1.0);
        let theta = rng.gen_range(-3.0..3.0);
        let phi = rng.gen_range(-3.0..3.0);
        let c = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let q = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let a = GaussianActorField::new(c.x, c.y, theta, sx, sy, k);
        let cr = c.rotate(phi);
        let b = GaussianActorField::new(cr.x, cr.y, theta + phi, sx, sy, k);
        let (va, ga) = social_interaction(&a, q);
        let (vb, gb) = social_interaction(&b, q.rotate(phi));
        assert!((va - vb).abs() < 1e-12);
        assert!((ga.rotate(phi) - gb).norm() < 1e-12);
    }
}
