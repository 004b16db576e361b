//! Exact Euclidean distance transforms and a bilinear signed distance field.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::raster::{write_pgm, Grid, Mask, RasterTransform};
use crate::{Error, Real, Result};

/// Lower envelope of parabolas rooted at finite entries of `f`.
fn squared_dt_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let pf = p as f64;
                    let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
                    if s <= *z.last().expect("parallel to v") {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared pixel distance from every pixel center to the nearest `true` pixel
/// (`+∞` when the mask is empty). Columns first, then rows.
pub fn squared_edt(mask: &Mask) -> Grid<f64> {
    let (rows, cols) = (mask.rows(), mask.cols());
    let mut g = mask.map(|&m| if m { 0.0 } else { f64::INFINITY });
    let n = rows.max(cols);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n + 1));
    for c in 0..cols {
        for r in 0..rows {
            f[r] = *g.get(r, c);
        }
        squared_dt_1d(&f[..rows], &mut out[..rows], &mut v, &mut z);
        for r in 0..rows {
            g.set(r, c, out[r]);
        }
    }
    for r in 0..rows {
        f[..cols].copy_from_slice(&g.data()[r * cols..(r + 1) * cols]);
        squared_dt_1d(&f[..cols], &mut out[..cols], &mut v, &mut z);
        g.data_mut()[r * cols..(r + 1) * cols].copy_from_slice(&out[..cols]);
    }
    g
}

/// Distance in meters from each pixel to the nearest `true` pixel.
///
/// An empty mask yields the sentinel `2 · extent` everywhere.
pub fn edt<T: Real>(mask: &Mask, res: f64) -> Grid<T> {
    let sentinel = 2.0 * mask.rows().max(mask.cols()) as f64 * res;
    squared_edt(mask).map(|&d2| {
        T::from_f64_lossy(if d2.is_finite() {
            d2.sqrt() * res
        } else {
            sentinel
        })
    })
}

/// Value and ego-frame gradient of a field query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub grad: Vec2,
    /// False when the query fell outside the raster and was clamped.
    pub in_extent: bool,
}

/// Signed distance in meters: positive on drivable pixels (distance to the
/// nearest non-drivable pixel), negative on non-drivable pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField<T> {
    pub sdf: Grid<T>,
    pub transform: RasterTransform,
    /// Set when the road layer had only one class.
    pub degenerate: bool,
}

/// Builds the signed field from a road layer (`true` = non-drivable).
pub fn build_sdf<T: Real>(road_layer: &Mask, t: &RasterTransform) -> DistanceField<T> {
    let res = t.res();
    let nondrivable = road_layer.count();
    let degenerate = nondrivable == 0 || nondrivable == road_layer.data().len();
    if degenerate {
        warn!("road layer has a single class; distance field uses sentinel values");
    }
    let to_nondrivable: Grid<T> = edt(road_layer, res);
    let to_drivable: Grid<T> = edt(&road_layer.map(|&m| !m), res);
    let sdf = Grid::from_fn(road_layer.rows(), road_layer.cols(), |r, c| {
        if *road_layer.get(r, c) {
            -*to_drivable.get(r, c)
        } else {
            *to_nondrivable.get(r, c)
        }
    });
    DistanceField {
        sdf,
        transform: *t,
        degenerate,
    }
}

impl<T: Real> DistanceField<T> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.sdf.get(r, c).to_f64_lossy()
    }

    /// Bilinear interpolation between pixel centers with its exact gradient.
    ///
    /// Queries outside the image are clamped to the border with a zero gradient.
    pub fn sample(&self, p: Vec2) -> FieldSample {
        let n = self.transform.size_px;
        let res = self.transform.res();
        let (row, col) = self.transform.world_to_pixel(p);
        let size = n as f64;
        let in_extent = (0.0..=size).contains(&row) && (0.0..=size).contains(&col);
        // node coordinates: pixel centers sit on integers
        let (u, v) = (row - 0.5, col - 0.5);
        let max = (n - 1) as f64;
        let (uc, vc) = (u.clamp(0.0, max), v.clamp(0.0, max));
        let (i0, j0) = (
            (uc.floor() as usize).min(n.saturating_sub(2)),
            (vc.floor() as usize).min(n.saturating_sub(2)),
        );
        if n == 1 {
            return FieldSample {
                value: self.at(0, 0),
                grad: Vec2::ZERO,
                in_extent,
            };
        }
        let (fu, fv) = (uc - i0 as f64, vc - j0 as f64);
        let (q00, q01, q10, q11) = (
            self.at(i0, j0),
            self.at(i0, j0 + 1),
            self.at(i0 + 1, j0),
            self.at(i0 + 1, j0 + 1),
        );
        let value = q00 * (1.0 - fu) * (1.0 - fv)
            + q01 * (1.0 - fu) * fv
            + q10 * fu * (1.0 - fv)
            + q11 * fu * fv;
        if !in_extent {
            return FieldSample {
                value,
                grad: Vec2::ZERO,
                in_extent,
            };
        }
        let d_du = if u == uc {
            (q10 - q00) * (1.0 - fv) + (q11 - q01) * fv
        } else {
            0.0
        };
        let d_dv = if v == vc {
            (q01 - q00) * (1.0 - fu) + (q11 - q10) * fu
        } else {
            0.0
        };
        // col = c0 + x/res, row = r0 - y/res
        FieldSample {
            value,
            grad: Vec2::new(d_dv / res, -d_du / res),
            in_extent,
        }
    }

    /// Literal nearest-pixel query: classify the pixel containing `p`, then scan
    /// for the closest pixel center of the other class. Brute force, for
    /// cross-checking the interpolated field.
    pub fn nearest_pixel_distance(&self, p: Vec2) -> FieldSample {
        let n = self.transform.size_px;
        let (row, col) = self.transform.world_to_pixel(p);
        let size = n as f64;
        let in_extent = (0.0..size).contains(&row) && (0.0..size).contains(&col);
        let r = (row.floor().clamp(0.0, size - 1.0)) as usize;
        let c = (col.floor().clamp(0.0, size - 1.0)) as usize;
        let drivable = self.at(r, c) > 0.0;
        let mut best = f64::INFINITY;
        let mut best_center = p;
        for rr in 0..n {
            for cc in 0..n {
                if (self.at(rr, cc) > 0.0) == drivable {
                    continue;
                }
                let q = self.transform.pixel_center(rr, cc);
                let d = (q - p).norm_sq();
                if d < best {
                    best = d;
                    best_center = q;
                }
            }
        }
        if !best.is_finite() {
            let s = 2.0 * self.transform.extent;
            return FieldSample {
                value: if drivable { s } else { -s },
                grad: Vec2::ZERO,
                in_extent,
            };
        }
        let d = best.sqrt();
        let sign = if drivable { 1.0 } else { -1.0 };
        let grad = if d > 0.0 && in_extent {
            (p - best_center) * (sign / d)
        } else {
            Vec2::ZERO
        };
        FieldSample {
            value: sign * d,
            grad,
            in_extent,
        }
    }
}

/// Affine mapping used when dumping a field as an 8-bit image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn of(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        ValueRange { min, max }
    }

    /// Value → `[0, 1]`.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    /// `[0, 1]` → value.
    pub fn denormalize(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

/// Writes `grid` as PGM plus a `<path>.json` sidecar recording the value range.
pub fn write_field_pgm(grid: &Grid<f64>, path: impl AsRef<Path>) -> Result<ValueRange> {
    let path = path.as_ref();
    let range = ValueRange::of(grid.data());
    write_pgm(&grid.map(|&v| range.normalize(v)), path)?;
    let sidecar = path.with_extension("json");
    std::fs::write(
        &sidecar,
        serde_json::to_string_pretty(&range).expect("range serializes"),
    )
    .map_err(|e| Error::io(&sidecar, e))?;
    Ok(range)
}

impl<T: Real> DistanceField<T> {
    /// Debug dump of the signed field.
    pub fn write_debug(&self, path: impl AsRef<Path>) -> Result<ValueRange> {
        write_field_pgm(&self.sdf.map(|v| v.to_f64_lossy()), path)
    }
}
