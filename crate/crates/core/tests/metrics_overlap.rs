mod common;

use common::intersection_area;
use envloss::geometry::{OrientedBox, Vec2};
use envloss::metrics::awareness;
use envloss::metrics::{coll_index, ego_boxes, oor_index, safety, EgoFootprint};
use envloss::raster::{fill_box, Grid, Mask, RasterTransform, SemanticLayers};
use envloss::scene::{Trajectory, HORIZON};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layers_with_actor(actor: Option<&OrientedBox>, t: RasterTransform) -> SemanticLayers {
    let n = t.size_px;
    let mut traffic = Mask::filled(n, n, false);
    if let Some(b) = actor {
        fill_box(b, &t, |r, c| traffic.set(r, c, true));
    }
    SemanticLayers {
        road_layer: Mask::filled(n, n, false),
        traffic_layer: traffic,
        transform: t,
    }
}

fn analytic_coll(traj: &Trajectory, actor: &OrientedBox) -> f64 {
    let fp = EgoFootprint::default();
    ego_boxes(traj, &fp)
        .iter()
        .map(|b| intersection_area(&b.corners(), &actor.corners()))
        .sum::<f64>()
        / HORIZON as f64
}

/// Seeded fixture: a gently curving trajectory and one actor straddling it.
fn fixture(seed: u64) -> (Trajectory, OrientedBox) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = rng.gen_range(1.0..2.5);
    let drift = rng.gen_range(-0.15..0.15);
    let mut pts = [Vec2::ZERO; HORIZON];
    for (t, p) in pts.iter_mut().enumerate() {
        let k = (t + 1) as f64;
        *p = Vec2::new(drift * k * k, speed * k);
    }
    let traj = Trajectory::new(pts);
    let anchor = pts[rng.gen_range(1..HORIZON - 1)];
    let actor = OrientedBox::new(
        anchor + Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.5..1.5)),
        rng.gen_range(-3.1..3.1),
        rng.gen_range(3.5..5.0),
        rng.gen_range(1.6..2.0),
    );
    (traj, actor)
}

fn box_pixel_area(b: &OrientedBox, t: &RasterTransform) -> f64 {
    let mut n = 0usize;
    fill_box(b, t, |_, _| n += 1);
    n as f64 * t.res().powi(2)
}

fn perimeter(fp: &EgoFootprint) -> f64 {
    2.0 * (fp.length + fp.width)
}

#[test]
fn ego_covering_a_static_actor() {
    let fp = EgoFootprint::default();
    assert!((fp.area() - 7.2141).abs() < 1e-12);
    let t = RasterTransform::default();
    let actor = OrientedBox::new(Vec2::ZERO, std::f64::consts::FRAC_PI_2, fp.length, fp.width);
    let layers = layers_with_actor(Some(&actor), t);
    let c = coll_index(&Trajectory::zeros(), &layers, &fp);
    assert!(
        (c - 7.2141).abs() <= 2.0 * perimeter(&fp) * t.res(),
        "coll {c}"
    );
    // identical boxes rasterize to identical pixel sets
    assert_eq!(c, box_pixel_area(&actor, &t));
    assert!(oor_index(&Trajectory::zeros(), &layers, &fp) == 0.0);
}

#[test]
fn ego_on_sidewalk_for_every_step() {
    let fp = EgoFootprint::default();
    let t = RasterTransform::default();
    let n = t.size_px;
    let layers = SemanticLayers {
        road_layer: Mask::filled(n, n, true),
        traffic_layer: Mask::filled(n, n, false),
        transform: t,
    };
    let traj = Trajectory::new(std::array::from_fn(|k| {
        Vec2::new(0.0, 1.5 * (k + 1) as f64)
    }));
    let s = safety(&traj, &layers, &fp);
    assert!((s.oor_index - 7.2141).abs() <= 2.0 * perimeter(&fp) * t.res());
    assert_eq!(s.coll_index, 0.0);
    assert_eq!(s.total_overlap, s.coll_index + s.oor_index);
    for v in s.oor_per_step {
        assert!((v - 7.2141).abs() <= 2.0 * perimeter(&fp) * t.res());
    }
}

#[test]
fn indexes_are_bounded_by_the_rasterized_box() {
    let fp = EgoFootprint::default();
    let t = RasterTransform::new(30.0, 200);
    for seed in 0..20 {
        let (traj, actor) = fixture(seed);
        let layers = layers_with_actor(Some(&actor), t);
        let s = safety(&traj, &layers, &fp);
        let cap = ego_boxes(&traj, &fp)
            .iter()
            .map(|b| box_pixel_area(b, &t))
            .fold(0.0, f64::max);
        assert!(s.coll_index >= 0.0 && s.coll_index <= cap);
        assert_eq!(s.coll_index > 0.0, s.coll_per_step.iter().any(|&v| v > 0.0));
    }
}

#[test]
fn pixel_overlap_converges_to_polygon_clipping() {
    let fp = EgoFootprint::default();
    let sizes = [200, 400, 800];
    let mut mean_err = [0.0; 3];
    for seed in 0..10 {
        let (traj, actor) = fixture(seed);
        let exact = analytic_coll(&traj, &actor);
        assert!(exact > 0.5, "fixture {seed} barely overlaps");
        let errs: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let t = RasterTransform::new(30.0, n);
                let l = layers_with_actor(Some(&actor), t);
                (coll_index(&traj, &l, &fp) - exact).abs()
            })
            .collect();
        for (e, &n) in errs.iter().zip(&sizes) {
            let res = 30.0 / n as f64;
            assert!(
                *e <= 2.0 * perimeter(&fp) * res,
                "fixture {seed} res {res}: {e}"
            );
        }
        assert!(errs[2] < errs[0], "fixture {seed}: {errs:?}");
        for (m, e) in mean_err.iter_mut().zip(&errs) {
            *m += e / 10.0;
        }
    }
    assert!(
        mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2],
        "{mean_err:?}"
    );
}

#[test]
fn clipping_oracle_landmarks() {
    let a = OrientedBox::new(Vec2::ZERO, 0.0, 4.0, 2.0);
    assert!((intersection_area(&a.corners(), &a.corners()) - 8.0).abs() < 1e-12);
    let shifted = OrientedBox::new(Vec2::new(2.0, 1.0), 0.0, 4.0, 2.0);
    assert!((intersection_area(&a.corners(), &shifted.corners()) - 2.0).abs() < 1e-12);
    let far = OrientedBox::new(Vec2::new(10.0, 0.0), 0.3, 4.0, 2.0);
    assert_eq!(intersection_area(&a.corners(), &far.corners()), 0.0);
    // square rotated 45° inside a larger square
    let big = OrientedBox::new(Vec2::ZERO, 0.0, 10.0, 10.0);
    let diamond = OrientedBox::new(Vec2::ZERO, std::f64::consts::FRAC_PI_4, 2.0, 2.0);
    assert!((intersection_area(&diamond.corners(), &big.corners()) - 4.0).abs() < 1e-12);
}

#[test]
fn uniform_heatmap_gives_fill_fraction() {
    let traffic = Grid::from_fn(10, 10, |r, c| r < 3 && c < 5);
    let road = Grid::from_fn(10, 10, |r, _| r >= 6);
    let a = awareness(&Grid::filled(10, 10, 0.01), &traffic, &road);
    assert!((a.social_index - 0.15).abs() < 1e-12);
    assert!((a.map_index - 0.4).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn awareness_on_disjoint_layers_partitions_mass(
        heat in prop::collection::vec(0.0f64..1.0, 64),
        labels in prop::collection::vec(0u8..3, 64),
        scale in 0.01f64..100.0,
    ) {
        let h = Grid::from_vec(8, 8, heat);
        let traffic = Grid::from_vec(8, 8, labels.iter().map(|&l| l == 1).collect());
        let road = Grid::from_vec(8, 8, labels.iter().map(|&l| l == 2).collect());
        let a = awareness(&h, &traffic, &road);
        prop_assert!((0.0..=1.0).contains(&a.social_index));
        prop_assert!((0.0..=1.0).contains(&a.map_index));
        prop_assert!(a.social_index + a.map_index <= 1.0 + 1e-12);
        let b = awareness(&h.map(|v| v * scale), &traffic, &road);
        prop_assert!((a.social_index - b.social_index).abs() < 1e-12);
    }
}
