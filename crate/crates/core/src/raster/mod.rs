//! Top-down raster encoding of a scene plus its road and traffic layers.
//!
//! Pixel `(r, c)` covers the continuous square `[r, r+1) × [c, c+1)`; its
//! center is `(r + 0.5, c + 0.5)`. A pixel belongs to a shape when its center does.

mod grid;
mod image;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

pub use grid::{Grid, Mask, RgbGrid};
pub use image::{read_pgm, read_ppm, write_pgm, write_ppm};

use crate::geometry::{OrientedBox, Vec2};
use crate::metrics::EgoFootprint;
use crate::scene::Scene;

/// Meters ↔ pixels mapping for a square crop around the ego.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterTransform {
    pub extent: f64,
    pub size_px: usize,
}

impl Default for RasterTransform {
    fn default() -> Self {
        RasterTransform::new(30.0, 400)
    }
}

impl RasterTransform {
    /// Network input size used by the toy regressor.
    pub const TOY_SIZE: usize = 96;

    pub fn new(extent: f64, size_px: usize) -> Self {
        assert!(
            extent > 0.0 && size_px > 0,
            "raster needs positive extent and size"
        );
        RasterTransform { extent, size_px }
    }

    pub fn with_size(size_px: usize) -> Self {
        RasterTransform::new(30.0, size_px)
    }

    /// Meters per pixel.
    pub fn res(&self) -> f64 {
        self.extent / self.size_px as f64
    }

    /// Continuous `(row, col)` of the ego origin: lower center, two thirds down.
    pub fn ego_pixel(&self) -> (f64, f64) {
        let n = self.size_px as f64;
        ((n * 2.0 / 3.0).round(), (self.size_px / 2) as f64)
    }

    /// Continuous pixel coordinates of an ego-frame point; +y maps to decreasing row.
    pub fn world_to_pixel(&self, p: Vec2) -> (f64, f64) {
        let (r0, c0) = self.ego_pixel();
        let res = self.res();
        (r0 - p.y / res, c0 + p.x / res)
    }

    pub fn pixel_to_world(&self, row: f64, col: f64) -> Vec2 {
        let (r0, c0) = self.ego_pixel();
        let res = self.res();
        Vec2::new((col - c0) * res, (r0 - row) * res)
    }

    /// Ego-frame position of the center of pixel `(r, c)`.
    pub fn pixel_center(&self, r: usize, c: usize) -> Vec2 {
        self.pixel_to_world(r as f64 + 0.5, c as f64 + 0.5)
    }
}

/// Calls `visit(r, c)` for every pixel whose center lies inside `poly`
/// (even-odd rule). Vertices are continuous `(row, col)` coordinates.
pub fn fill_polygon_px(
    poly: &[(f64, f64)],
    rows: usize,
    cols: usize,
    mut visit: impl FnMut(usize, usize),
) {
    let n = poly.len();
    if n < 3 {
        return;
    }
    let (lo, hi) = poly
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let r_start = (lo - 0.5).ceil().max(0.0) as usize;
    let r_end = ((hi - 0.5).floor() + 1.0).clamp(0.0, rows as f64) as usize;
    let mut xs: Vec<f64> = Vec::with_capacity(8);
    for r in r_start..r_end {
        let yc = r as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.0 <= yc && yc < b.0) || (b.0 <= yc && yc < a.0) {
                xs.push(a.1 + (yc - a.0) * (b.1 - a.1) / (b.0 - a.0));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
        for pair in xs.chunks_exact(2) {
            let c0 = (pair[0] - 0.5).ceil().max(0.0);
            let c1 = (pair[1] - 0.5).ceil().min(cols as f64);
            if c1 > c0 {
                for c in c0 as usize..c1 as usize {
                    visit(r, c);
                }
            }
        }
    }
}

/// Scanline fill of an ego-frame polygon.
pub fn fill_polygon(poly: &[Vec2], t: &RasterTransform, visit: impl FnMut(usize, usize)) {
    let px: Vec<(f64, f64)> = poly.iter().map(|p| t.world_to_pixel(*p)).collect();
    fill_polygon_px(&px, t.size_px, t.size_px, visit);
}

pub fn fill_box(b: &OrientedBox, t: &RasterTransform, visit: impl FnMut(usize, usize)) {
    fill_polygon(&b.corners(), t, visit);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterConfig {
    /// Speed mapped to full green, m/s.
    pub v_max: f64,
    /// Boxes drawn per actor, current included.
    pub fade_steps: usize,
    pub ego_color: [f64; 3],
    pub road_color: [f64; 3],
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            v_max: 15.0,
            fade_steps: 6,
            ego_color: [0.0, 1.0, 0.0],
            road_color: [0.2, 0.2, 0.2],
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.v_max > 0.0) || self.fade_steps == 0 {
            return Err(crate::Error::Config(
                "raster v_max must be positive and fade_steps at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Maps a heading in `(-π, π]` linearly onto `(0, 1]`.
pub fn encode_heading(heading: f64) -> f64 {
    (crate::geometry::normalize_angle(heading) + PI) / (2.0 * PI)
}

/// Attenuation of a box drawn `steps_back` steps before the current one.
pub fn fade_factor(steps_back: usize, fade_steps: usize) -> f64 {
    (fade_steps - steps_back) as f64 / fade_steps as f64
}

/// Binary semantic layers: 1 = non-drivable, 1 = occupied by a current actor box.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticLayers {
    pub road_layer: Mask,
    pub traffic_layer: Mask,
    pub transform: RasterTransform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RasterMap {
    pub rgb: RgbGrid,
    pub layers: SemanticLayers,
}

impl RasterMap {
    pub fn road_layer(&self) -> &Mask {
        &self.layers.road_layer
    }

    pub fn traffic_layer(&self) -> &Mask {
        &self.layers.traffic_layer
    }

    pub fn transform(&self) -> &RasterTransform {
        &self.layers.transform
    }
}

fn drivable_mask(scene: &Scene, t: &RasterTransform) -> Mask {
    let n = t.size_px;
    let mut drivable = Mask::filled(n, n, false);
    for poly in &scene.road_polygons {
        fill_polygon(poly, t, |r, c| drivable.set(r, c, true));
    }
    drivable
}

/// Road and traffic layers only, without the color image.
pub fn rasterize_layers(scene: &Scene, t: &RasterTransform) -> SemanticLayers {
    let n = t.size_px;
    let road_layer = drivable_mask(scene, t).map(|&d| !d);
    let mut traffic_layer = Mask::filled(n, n, false);
    for actor in &scene.actors {
        fill_box(&actor.current_box(), t, |r, c| {
            traffic_layer.set(r, c, true)
        });
    }
    SemanticLayers {
        road_layer,
        traffic_layer,
        transform: *t,
    }
}

/// Ego footprint at the origin, heading +y.
pub fn ego_box_at_origin() -> OrientedBox {
    let fp = EgoFootprint::default();
    OrientedBox::new(Vec2::ZERO, FRAC_PI_2, fp.length, fp.width)
}

pub fn rasterize_scene(scene: &Scene, cfg: &RasterConfig, t: &RasterTransform) -> RasterMap {
    let n = t.size_px;
    let drivable = drivable_mask(scene, t);
    let mut rgb = RgbGrid::from_fn(n, n, |r, c| {
        if *drivable.get(r, c) {
            cfg.road_color
        } else {
            [0.0; 3]
        }
    });

    // oldest boxes first so newer ones overwrite
    for steps_back in (0..cfg.fade_steps).rev() {
        let delta = fade_factor(steps_back, cfg.fade_steps);
        for actor in &scene.actors {
            let n_hist = actor.history.len();
            if steps_back >= n_hist {
                continue;
            }
            let s = &actor.history[n_hist - 1 - steps_back];
            let color = [
                delta,
                delta * (s.speed / cfg.v_max).clamp(0.0, 1.0),
                delta * encode_heading(s.pose.heading),
            ];
            let b = actor.box_at(steps_back).expect("checked history length");
            fill_box(&b, t, |r, c| rgb.set(r, c, color));
        }
    }

    fill_box(&ego_box_at_origin(), t, |r, c| rgb.set(r, c, cfg.ego_color));

    let mut traffic_layer = Mask::filled(n, n, false);
    for actor in &scene.actors {
        fill_box(&actor.current_box(), t, |r, c| {
            traffic_layer.set(r, c, true)
        });
    }
    RasterMap {
        rgb,
        layers: SemanticLayers {
            road_layer: drivable.map(|&d| !d),
            traffic_layer,
            transform: *t,
        },
    }
}
