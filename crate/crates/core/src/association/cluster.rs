use nalgebra::Vector2;

use crate::scalar::Real;

/// Density-based clustering with DBSCAN semantics.
///
/// A point is a core point when at least `min_pts` points (itself included)
/// lie within `eps`. Clusters are the eps-connected components of core
/// points plus the border points they reach; everything else is noise.
/// Clusters come out ordered by their first core point and each holds input
/// indices in discovery order.
pub fn dbscan<T: Real>(points: &[Vector2<T>], eps: T, min_pts: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| (points[i] - points[j]).norm_squared() <= eps2)
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if label[seed].is_some() || !is_core[seed] {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        let mut frontier = vec![seed];
        while let Some(p) = frontier.pop() {
            if !is_core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(id);
                    members.push(q);
                    frontier.push(q);
                }
            }
        }
        clusters.push(members);
    }
    clusters
}
