//! Star-convex ground-truth objects.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{scenario, Result};

/// Radial contour of an object around its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialShape {
    /// Vertices relative to the center, counter-clockwise.
    Polygon { vertices: Vec<[f64; 2]> },
    /// `r(θ) = mean + Σ_k cos[k-1]·cos(kθ) + sin[k-1]·sin(kθ)`.
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldObject {
    pub id: usize,
    pub center: [f64; 2],
    pub shape: RadialShape,
}

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Ray parameter `t` where `origin + t·dir` meets segment `ab`, if any.
fn ray_segment(origin: Vector2<f64>, dir: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> Option<(f64, f64)> {
    let e = b - a;
    let denom = cross(dir, e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = a - origin;
    let t = cross(w, e) / denom;
    let s = cross(w, dir) / denom;
    Some((t, s))
}

impl WorldObject {
    pub fn regular_polygon(id: usize, center: [f64; 2], circumradius: f64, sides: usize, rotation: f64) -> Self {
        let vertices = (0..sides)
            .map(|k| {
                let a = rotation + TAU * k as f64 / sides as f64;
                [circumradius * a.cos(), circumradius * a.sin()]
            })
            .collect();
        Self {
            id,
            center,
            shape: RadialShape::Polygon { vertices },
        }
    }

    pub fn center(&self) -> Vector2<f64> {
        Vector2::new(self.center[0], self.center[1])
    }

    fn vertices(&self) -> Vec<Vector2<f64>> {
        match &self.shape {
            RadialShape::Polygon { vertices } => {
                vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect()
            }
            RadialShape::Fourier { .. } => Vec::new(),
        }
    }

    /// Radius of the contour along bearing `theta` from the center.
    pub fn radius(&self, theta: f64) -> f64 {
        match &self.shape {
            RadialShape::Polygon { .. } => {
                let dir = Vector2::new(theta.cos(), theta.sin());
                let v = self.vertices();
                let mut best = f64::INFINITY;
                for i in 0..v.len() {
                    if let Some((t, s)) = ray_segment(Vector2::zeros(), dir, v[i], v[(i + 1) % v.len()]) {
                        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                            best = best.min(t);
                        }
                    }
                }
                best
            }
            RadialShape::Fourier { mean, cos, sin } => {
                let mut r = *mean;
                for (k, c) in cos.iter().enumerate() {
                    r += c * ((k + 1) as f64 * theta).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    r += s * ((k + 1) as f64 * theta).sin();
                }
                r
            }
        }
    }

    /// Upper bound on the radius.
    pub fn bounding_radius(&self) -> f64 {
        match &self.shape {
            RadialShape::Polygon { vertices } => vertices
                .iter()
                .map(|v| v[0].hypot(v[1]))
                .fold(0.0, f64::max),
            RadialShape::Fourier { mean, cos, sin } => {
                mean + cos.iter().chain(sin).map(|c| c.abs()).sum::<f64>()
            }
        }
    }

    /// Checks `r(θ) > 0` and, for polygons, that every ray from the center
    /// leaves the polygon exactly once, on a 1° grid.
    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(scenario(format!("object {}: center must be finite", self.id)));
        }
        let verts = self.vertices();
        if let RadialShape::Polygon { vertices } = &self.shape {
            if vertices.len() < 3 {
                return Err(scenario(format!("object {}: polygon needs at least 3 vertices", self.id)));
            }
            if !vertices.iter().flatten().all(|c| c.is_finite()) {
                return Err(scenario(format!("object {}: vertices must be finite", self.id)));
            }
        }
        for deg in 0..360 {
            let theta = (deg as f64).to_radians();
            let r = self.radius(theta);
            if !(r.is_finite() && r > 0.0) {
                return Err(scenario(format!(
                    "object {}: radius at {deg} deg is not positive, shape is not star-convex about its center",
                    self.id
                )));
            }
            if !verts.is_empty() {
                let dir = Vector2::new(theta.cos(), theta.sin());
                let mut hits: Vec<f64> = (0..verts.len())
                    .filter_map(|i| ray_segment(Vector2::zeros(), dir, verts[i], verts[(i + 1) % verts.len()]))
                    .filter(|&(t, s)| t > 0.0 && (-1e-9..=1.0 + 1e-9).contains(&s))
                    .map(|(t, _)| t)
                    .collect();
                hits.sort_by(f64::total_cmp);
                hits.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                let crossings = hits.len();
                if crossings != 1 {
                    return Err(scenario(format!(
                        "object {}: ray at {deg} deg crosses the boundary {crossings} times",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        let d = p - self.center();
        let n = d.norm();
        n == 0.0 || n < self.radius(d.y.atan2(d.x))
    }

    /// Boundary as a closed polygon in world coordinates: the exact vertices
    /// of a polygon, `samples` points of a smooth contour.
    pub fn boundary(&self, samples: usize) -> Vec<Vector2<f64>> {
        let c = self.center();
        match &self.shape {
            RadialShape::Polygon { .. } => self.vertices().into_iter().map(|v| c + v).collect(),
            RadialShape::Fourier { .. } => (0..samples)
                .map(|k| {
                    let a = TAU * k as f64 / samples as f64;
                    c + Vector2::new(a.cos(), a.sin()) * self.radius(a)
                })
                .collect(),
        }
    }

    /// Distance along the unit ray `origin + t·dir` to the first boundary
    /// crossing with `0 < t ≤ max_range`.
    pub fn ray_hit(&self, origin: &Vector2<f64>, dir: &Vector2<f64>, max_range: f64) -> Option<f64> {
        let c = self.center();
        match &self.shape {
            RadialShape::Polygon { .. } => {
                let v = self.vertices();
                let mut best: Option<f64> = None;
                for i in 0..v.len() {
                    let (a, b) = (c + v[i], c + v[(i + 1) % v.len()]);
                    if let Some((t, s)) = ray_segment(*origin, *dir, a, b) {
                        if t > 0.0 && t <= max_range && (0.0..=1.0).contains(&s) {
                            best = Some(best.map_or(t, |m| m.min(t)));
                        }
                    }
                }
                best
            }
            RadialShape::Fourier { .. } => {
                // bracket the first sign change of |p − c| − r(∠(p − c)) inside the bounding circle
                let bound = self.bounding_radius();
                let w = origin - c;
                let b = w.dot(dir);
                let disc = b * b - (w.norm_squared() - bound * bound);
                if disc <= 0.0 {
                    return None;
                }
                let root = disc.sqrt();
                let t_in = (-b - root).max(0.0);
                let t_out = (-b + root).min(max_range);
                if t_out <= t_in {
                    return None;
                }
                let g = |t: f64| {
                    let d = origin + dir * t - c;
                    d.norm() - self.radius(d.y.atan2(d.x))
                };
                let step = 2e-3;
                let mut lo = t_in;
                if g(lo) <= 0.0 {
                    // entering exactly on the contour, or starting inside
                    return (t_in > 0.0).then_some(t_in);
                }
                while lo < t_out {
                    let hi = (lo + step).min(t_out);
                    let g_hi = g(hi);
                    if g_hi <= 0.0 {
                        let (mut a, mut z) = (lo, hi);
                        for _ in 0..80 {
                            let m = 0.5 * (a + z);
                            if g(m) > 0.0 {
                                a = m;
                            } else {
                                z = m;
                            }
                            if z - a < 1e-13 {
                                break;
                            }
                        }
                        return Some(0.5 * (a + z));
                    }
                    lo = hi;
                }
                None
            }
        }
    }
}
