#![allow(dead_code)]

use envloss::geometry::Vec2;
use envloss::raster::{Grid, Mask};
use envloss::scene::{generate_scene, GeneratorConfig, Scene};

/// Central-difference derivative of `f` along coordinate `i`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

pub fn scene(seed: u64) -> Scene {
    generate_scene(seed, &GeneratorConfig::default()).expect("default generator succeeds")
}

/// O(n²) exact distance from each pixel center to the nearest `true` pixel.
pub fn brute_force_edt(mask: &Mask, res: f64) -> Grid<f64> {
    let (rows, cols) = (mask.rows(), mask.cols());
    let on: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| *mask.get(r, c))
        .collect();
    Grid::from_fn(rows, cols, |r, c| {
        on.iter()
            .map(|&(a, b)| {
                let (dr, dc) = (a as f64 - r as f64, b as f64 - c as f64);
                (dr * dr + dc * dc).sqrt() * res
            })
            .fold(f64::INFINITY, f64::min)
    })
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        .abs()
        / 2.0
}

/// Sutherland–Hodgman clip of `subject` by the convex CCW polygon `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let inside = |p: Vec2| (b - a).cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let (p, q) = (input[j], input[(j + 1) % input.len()]);
            let (ip, iq) = (inside(p), inside(q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let d = q - p;
                let t = (b - a).cross(a - p) / (b - a).cross(d);
                out.push(p + d * t);
            }
        }
    }
    out
}

pub fn intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let c = clip_convex(a, b);
    if c.len() < 3 {
        0.0
    } else {
        polygon_area(&c)
    }
}
