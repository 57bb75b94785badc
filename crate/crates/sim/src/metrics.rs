//! Pose error, map overlap and association quality.

use nalgebra::Vector2;
use starslam_core::geometry::normalize_angle;
use starslam_core::Pose;
use std::collections::BTreeMap;

use crate::error::{scenario, Result};
use crate::world::WorldObject;

/// Samples used to turn a smooth ground-truth contour into a polygon.
pub const TRUTH_SAMPLES: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRmse {
    pub x: f64,
    pub y: f64,
    /// Degrees.
    pub heading: f64,
}

/// Time-averaged per-axis RMS error; heading errors are wrapped before
/// squaring.
pub fn pose_rmse(truth: &[Pose], estimate: &[Pose]) -> Result<PoseRmse> {
    if truth.is_empty() || truth.len() != estimate.len() {
        return Err(scenario("pose error needs two non-empty series of equal length"));
    }
    let n = truth.len() as f64;
    let (mut sx, mut sy, mut sh) = (0.0, 0.0, 0.0);
    for (t, e) in truth.iter().zip(estimate) {
        let d = e.position - t.position;
        let dh = normalize_angle(e.heading - t.heading)?;
        sx += d.x * d.x;
        sy += d.y * d.y;
        sh += dh * dh;
    }
    Ok(PoseRmse {
        x: (sx / n).sqrt(),
        y: (sy / n).sqrt(),
        heading: (sh / n).sqrt().to_degrees(),
    })
}

/// Marks, per row, the cells whose centers lie inside any polygon
/// (even-odd rule per polygon, union across polygons).
struct Raster {
    res: f64,
    i0: i64,
    j0: i64,
    width: usize,
    height: usize,
}

impl Raster {
    fn covering(polys: &[&[Vector2<f64>]], res: f64) -> Option<Self> {
        let pts = polys.iter().flat_map(|p| p.iter());
        let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
        for p in pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        if !lo.x.is_finite() || !hi.x.is_finite() {
            return None;
        }
        let i0 = (lo.x / res).floor() as i64 - 1;
        let j0 = (lo.y / res).floor() as i64 - 1;
        let width = ((hi.x / res).ceil() as i64 - i0 + 2) as usize;
        let height = ((hi.y / res).ceil() as i64 - j0 + 2) as usize;
        Some(Self { res, i0, j0, width, height })
    }

    fn fill_row(&self, j: usize, polys: &[Vec<Vector2<f64>>], row: &mut [bool], xs: &mut Vec<f64>) {
        row.fill(false);
        let y = ((self.j0 + j as i64) as f64 + 0.5) * self.res;
        for poly in polys {
            xs.clear();
            let n = poly.len();
            for k in 0..n {
                let (a, b) = (poly[k], poly[(k + 1) % n]);
                if (a.y > y) != (b.y > y) {
                    xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
            xs.sort_by(f64::total_cmp);
            for span in xs.chunks_exact(2) {
                // cells whose center x = (i + 0.5)·res lies in [x0, x1)
                let first = (span[0] / self.res - 0.5).ceil() as i64 - self.i0;
                let last = (span[1] / self.res - 0.5).ceil() as i64 - self.i0;
                let first = first.clamp(0, self.width as i64) as usize;
                let last = last.clamp(0, self.width as i64) as usize;
                row[first..last.max(first)].fill(true);
            }
        }
    }
}

/// Intersection over union of the regions covered by two sets of closed
/// polygons, rasterized at `resolution` on a grid anchored at the origin.
/// Two empty regions overlap perfectly.
pub fn polygon_iou(a: &[Vec<Vector2<f64>>], b: &[Vec<Vector2<f64>>], resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(scenario("IoU resolution must be positive"));
    }
    let all: Vec<&[Vector2<f64>]> = a.iter().chain(b).map(Vec::as_slice).collect();
    let Some(raster) = Raster::covering(&all, resolution) else {
        return Ok(1.0);
    };
    let (mut inter, mut union) = (0usize, 0usize);
    let mut ra = vec![false; raster.width];
    let mut rb = vec![false; raster.width];
    let mut xs = Vec::new();
    for j in 0..raster.height {
        raster.fill_row(j, a, &mut ra, &mut xs);
        raster.fill_row(j, b, &mut rb, &mut xs);
        for (p, q) in ra.iter().zip(&rb) {
            inter += (*p && *q) as usize;
            union += (*p || *q) as usize;
        }
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// IoU between estimated contour polygons and the ground-truth objects.
pub fn map_iou(estimated: &[Vec<Vector2<f64>>], truth: &[WorldObject], resolution: f64) -> Result<f64> {
    if truth.is_empty() {
        return Err(scenario("IoU needs a non-empty ground-truth map"));
    }
    let t: Vec<Vec<Vector2<f64>>> = truth.iter().map(|o| o.boundary(TRUTH_SAMPLES)).collect();
    polygon_iou(estimated, &t, resolution)
}

/// Majority-vote ground-truth object of every landmark over
/// `(true object, landmark)` pairs.
pub fn landmark_votes(pairs: &[(usize, u64)]) -> BTreeMap<u64, usize> {
    let mut counts: BTreeMap<u64, BTreeMap<usize, usize>> = BTreeMap::new();
    for &(obj, lm) in pairs {
        *counts.entry(lm).or_default().entry(obj).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(lm, c)| {
            // most votes, ties to the lowest object id
            let best = c.iter().max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0))).map(|(o, _)| *o).unwrap();
            (lm, best)
        })
        .collect()
}

/// Fraction of associated points whose landmark's majority object is the
/// point's own object; `0` when nothing was associated.
pub fn association_accuracy(pairs: &[(usize, u64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let votes = landmark_votes(pairs);
    let good = pairs.iter().filter(|(obj, lm)| votes[lm] == *obj).count();
    good as f64 / pairs.len() as f64
}
