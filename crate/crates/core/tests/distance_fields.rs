mod common;

use common::{brute_force_edt, central_diff, rel_err};
use envloss::distfield::{build_sdf, edt};
use envloss::geometry::Vec2;
use envloss::raster::{Grid, Mask, RasterTransform};
use proptest::prelude::*;

fn mask_strategy(max: usize) -> impl Strategy<Value = Mask> {
    (1..=max, 1..=max, 0.0f64..0.5).prop_flat_map(|(r, c, density)| {
        proptest::collection::vec(proptest::bool::weighted(density.max(0.01)), r * c)
            .prop_map(move |v| Grid::from_vec(r, c, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_edt_equals_brute_force(mask in mask_strategy(40)) {
        prop_assume!(mask.count() > 0);
        let fast: Grid<f64> = edt(&mask, 0.5);
        let slow = brute_force_edt(&mask, 0.5);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn edt_is_translation_invariant(mask in mask_strategy(16), dr in 0usize..8, dc in 0usize..8) {
        prop_assume!(mask.count() > 0);
        // embed in a larger canvas far enough from the borders
        let n = 40;
        let place = |off_r: usize, off_c: usize| {
            let mut g = Mask::filled(n, n, false);
            for r in 0..mask.rows() {
                for c in 0..mask.cols() {
                    if *mask.get(r, c) {
                        g.set(r + off_r, c + off_c, true);
                    }
                }
            }
            g
        };
        let a: Grid<f64> = edt(&place(4, 4), 1.0);
        let b: Grid<f64> = edt(&place(4 + dr, 4 + dc), 1.0);
        for r in 0..(n - 12) {
            for c in 0..(n - 12) {
                // compare a window around the pattern where borders cannot matter
                if r + dr < n && c + dc < n && r >= 4 && c >= 4 && r < 20 && c < 20 {
                    prop_assert!((a.get(r, c) - b.get(r + dr, c + dc)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn sdf_sample_gradient_matches_finite_differences() {
    // disc of non-drivable area in the middle of a drivable square
    let t = RasterTransform::new(30.0, 120);
    let road = Grid::from_fn(120, 120, |r, c| {
        let p = t.pixel_center(r, c);
        (p - Vec2::new(2.0, 5.0)).norm() < 6.0
    });
    let df = build_sdf::<f64>(&road, &t);
    let mut checked = 0;
    for i in 0..400 {
        let p = Vec2::new(
            -13.0 + (i as f64 * 0.731) % 26.0,
            -9.0 + (i as f64 * 1.377) % 28.0,
        );
        let (row, col) = t.world_to_pixel(p);
        let (fu, fv) = ((row - 0.5).fract(), (col - 0.5).fract());
        if fu.min(1.0 - fu) < 1e-3 || fv.min(1.0 - fv) < 1e-3 {
            continue;
        }
        let f = |x: &[f64]| df.sample(Vec2::new(x[0], x[1])).value;
        let s = df.sample(p);
        for (k, a) in [s.grad.x, s.grad.y].into_iter().enumerate() {
            let n = central_diff(&f, &[p.x, p.y], k, 1e-6);
            assert!(rel_err(a, n, 1e-4) < 1e-5, "p={p:?} k={k} a={a} n={n}");
        }
        checked += 1;
    }
    assert!(checked > 300);
}

#[test]
fn sdf_agrees_with_nearest_pixel_query_at_centers() {
    let t = RasterTransform::new(30.0, 48);
    let road = Grid::from_fn(48, 48, |r, c| r < 10 || c > 40 || (r + c) % 17 == 0);
    let df = build_sdf::<f64>(&road, &t);
    for r in (0..48).step_by(5) {
        for c in (0..48).step_by(3) {
            let p = t.pixel_center(r, c);
            let a = df.sample(p).value;
            let b = df.nearest_pixel_distance(p).value;
            assert!((a - b).abs() < 1e-9, "({r},{c}) {a} vs {b}");
        }
    }
}

#[test]
fn single_precision_field_tracks_double() {
    let t = RasterTransform::new(30.0, 64);
    let road = Grid::from_fn(64, 64, |r, c| {
        (r as i64 - 30).pow(2) + (c as i64 - 20).pow(2) < 150
    });
    let a = build_sdf::<f64>(&road, &t);
    let b = build_sdf::<f32>(&road, &t);
    for (x, y) in a.sdf.data().iter().zip(b.sdf.data()) {
        assert!((x - *y as f64).abs() < 1e-5);
    }
}
