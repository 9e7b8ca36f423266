//! Boolean-model clustering, exterior distances and open-cell crossings.

mod crossing;
mod flow;

pub use crossing::{disjoint_crossing_paths, open_cells, cell_counts, CellGrid, Direction, Path};

use std::f64::consts::PI;

use crate::spatial::{Deployment, GridIndex, Point};
use crate::{Error, Result};

/// Default size threshold (fraction of realized nodes) for calling the
/// largest cluster giant.
pub const DEFAULT_GIANT_FRACTION: f64 = 0.5;

/// Connected components of the disk graph with edges at distance `<= r`.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    pub radius_r: f64,
    /// `lambda * pi * r^2`.
    pub gamma: f64,
    /// Cluster id per node; ids are numbered by lowest member index.
    pub cluster_of: Vec<u32>,
    pub sizes: Vec<usize>,
    pub giant_id: Option<u32>,
    pub giant_fraction: f64,
}

impl ClusterLabeling {
    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Size of the largest cluster (0 for an empty deployment).
    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn in_giant(&self, u: usize) -> bool {
        self.giant_id == Some(self.cluster_of[u])
    }
}

/// Distances of nodes outside the giant cluster to the giant cluster.
#[derive(Debug, Clone, Default)]
pub struct ExteriorStats {
    /// `(node, distance)` for every exterior node, ascending by node.
    pub distances: Vec<(usize, f64)>,
    pub max_distance: f64,
    /// `lambda * r * max_distance / ln n`.
    pub scaled_max: f64,
}

/// Clusters with the default giant threshold.
pub fn cluster(d: &Deployment, r: f64) -> Result<ClusterLabeling> {
    cluster_with(d, r, DEFAULT_GIANT_FRACTION)
}

/// Clusters the deployment at connection distance `r`.
pub fn cluster_with(d: &Deployment, r: f64, giant_fraction: f64) -> Result<ClusterLabeling> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::param(format!("connection distance must be positive, got {r}")));
    }
    if !(giant_fraction > 0.0 && giant_fraction <= 1.0) {
        return Err(Error::param(format!("giant_fraction {giant_fraction} outside (0, 1]")));
    }
    let pts = d.points();
    let k = pts.len();
    let grid = GridIndex::new(pts, d.side(), r.max(d.side() / 4096.0));
    let mut uf = crate::spatial::UnionFind::new(k);
    let (cols, rows) = grid.dims();
    let r2 = r * r;
    for cy in 0..rows {
        for cx in 0..cols {
            let here = grid.bucket_items(cx, cy);
            for (a, &i) in here.iter().enumerate() {
                for &j in &here[a + 1..] {
                    if pts[i as usize].dist2(pts[j as usize]) <= r2 {
                        uf.union(i as usize, j as usize);
                    }
                }
            }
            // forward half of the 8-neighbourhood
            for (dx, dy) in [(1isize, 0isize), (-1, 1), (0, 1), (1, 1)] {
                let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                if nx < 0 || ny < 0 || nx >= cols as isize || ny >= rows as isize {
                    continue;
                }
                let there = grid.bucket_items(nx as usize, ny as usize);
                for &i in here {
                    let p = pts[i as usize];
                    for &j in there {
                        if p.dist2(pts[j as usize]) <= r2 {
                            uf.union(i as usize, j as usize);
                        }
                    }
                }
            }
        }
    }
    let mut id_of_root = vec![u32::MAX; k];
    let mut cluster_of = vec![0u32; k];
    let mut sizes = Vec::new();
    for (u, c) in cluster_of.iter_mut().enumerate() {
        let root = uf.find(u);
        if id_of_root[root] == u32::MAX {
            id_of_root[root] = sizes.len() as u32;
            sizes.push(0);
        }
        *c = id_of_root[root];
        sizes[*c as usize] += 1;
    }
    let mut giant_id = None;
    if let Some((id, &size)) = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
    {
        if size as f64 >= giant_fraction * k as f64 {
            giant_id = Some(id as u32);
        }
    }
    Ok(ClusterLabeling {
        radius_r: r,
        gamma: d.lambda() * PI * r * r,
        cluster_of,
        sizes,
        giant_id,
        giant_fraction,
    })
}

/// Connection distance giving `gamma = lambda * pi * r^2`.
pub fn radius_for_gamma(lambda: f64, gamma: f64) -> f64 {
    (gamma / (PI * lambda)).sqrt()
}

/// Distance from each exterior node to the nearest giant-cluster node.
pub fn exterior_stats(d: &Deployment, cl: &ClusterLabeling) -> Result<ExteriorStats> {
    let giant = cl
        .giant_id
        .ok_or_else(|| Error::state("no giant cluster in this labeling"))?;
    let pts = d.points();
    let members: Vec<u32> = (0..pts.len() as u32)
        .filter(|&u| cl.cluster_of[u as usize] == giant)
        .collect();
    let bucket = d.side() / ((members.len() as f64 / 2.0).sqrt().ceil().max(1.0));
    let grid = GridIndex::with_subset(pts, &members, Point::new(0.0, 0.0), d.side(), bucket);
    let mut distances = Vec::new();
    let mut max_distance: f64 = 0.0;
    for u in 0..pts.len() {
        if cl.cluster_of[u] == giant {
            continue;
        }
        let (_, d2) = grid
            .nearest_where(pts, pts[u], |_| true)
            .ok_or_else(|| Error::state("giant cluster is empty"))?;
        let dist = d2.sqrt();
        max_distance = max_distance.max(dist);
        distances.push((u, dist));
    }
    let ln_n = d.ln_n();
    let scaled_max = if ln_n > 0.0 {
        d.lambda() * cl.radius_r * max_distance / ln_n
    } else {
        0.0
    };
    Ok(ExteriorStats {
        distances,
        max_distance,
        scaled_max,
    })
}

/// Maximum-likelihood `eps` for an exponential tail
/// `Pr[distance - r > x] = exp(-eps * lambda * r * x)` of the exterior
/// distances; `None` without exterior nodes.
pub fn tail_rate(stats: &ExteriorStats, lambda: f64, r: f64) -> Option<f64> {
    if stats.distances.is_empty() {
        return None;
    }
    let excess = stats.distances.iter().map(|&(_, d)| d - r).sum::<f64>() / stats.distances.len() as f64;
    (excess > 0.0).then(|| 1.0 / (lambda * r * excess))
}

/// True iff the `r`-disk graph over the deployment is connected.
pub fn connectivity_radius_check(d: &Deployment, r: f64) -> Result<bool> {
    Ok(cluster(d, r)?.num_clusters() <= 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::sample_deployment;
    use proptest::prelude::*;

    #[test]
    fn tail_rate_inverts_mean_excess() {
        let stats = ExteriorStats {
            distances: vec![(0, 1.5), (3, 2.5)],
            max_distance: 2.5,
            scaled_max: 0.0,
        };
        // mean excess over r = 1 is 1, so eps = 1 / (lambda r)
        assert!((tail_rate(&stats, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tail_rate(&ExteriorStats::default(), 1.0, 1.0), None);
    }

    fn bfs_components(pts: &[Point], r: f64) -> Vec<usize> {
        let k = pts.len();
        let mut comp = vec![usize::MAX; k];
        let mut next = 0;
        for s in 0..k {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = vec![s];
            while let Some(u) = queue.pop() {
                for v in 0..k {
                    if comp[v] == usize::MAX && pts[u].dist(pts[v]) <= r {
                        comp[v] = next;
                        queue.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    #[test]
    fn two_close_nodes_join() {
        let d = Deployment::from_points(4, 1.0, 0, vec![Point::new(0.5, 0.5), Point::new(1.4, 0.5)])
            .unwrap();
        let cl = cluster(&d, 1.0).unwrap();
        assert_eq!(cl.sizes, vec![2]);
        assert_eq!(cl.giant_id, Some(0));
    }

    #[test]
    fn bad_radius() {
        let d = sample_deployment(10, 1.0, 0).unwrap();
        assert!(matches!(cluster(&d, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn no_giant_is_state_error() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.9, 1.9), Point::new(0.0, 1.9)];
        let d = Deployment::from_points(4, 1.0, 0, pts).unwrap();
        let cl = cluster(&d, 0.1).unwrap();
        assert!(matches!(exterior_stats(&d, &cl), Err(Error::State(_))));
    }

    #[test]
    fn single_exterior_node() {
        let pts = vec![
            Point::new(0.1, 0.1),
            Point::new(0.2, 0.1),
            Point::new(0.3, 0.1),
            Point::new(1.9, 1.9),
        ];
        let d = Deployment::from_points(4, 1.0, 0, pts.clone()).unwrap();
        let cl = cluster(&d, 0.15).unwrap();
        let ex = exterior_stats(&d, &cl).unwrap();
        assert_eq!(ex.distances.len(), 1);
        assert_eq!(ex.max_distance, pts[2].dist(pts[3]));
    }

    #[test]
    fn all_in_giant_gives_zero() {
        let d = sample_deployment(200, 1.0, 1).unwrap();
        let cl = cluster(&d, 30.0).unwrap();
        let ex = exterior_stats(&d, &cl).unwrap();
        assert!(ex.distances.is_empty());
        assert_eq!(ex.max_distance, 0.0);
    }

    #[test]
    fn full_diagonal_radius_connects() {
        let d = sample_deployment(500, 1.0, 2).unwrap();
        assert!(connectivity_radius_check(&d, d.side() * 2f64.sqrt()).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_bfs(seed in 0u64..1_000, n in 20usize..500, gamma in 0.5f64..12.0) {
            let d = sample_deployment(n, 1.0, seed).unwrap();
            let r = radius_for_gamma(1.0, gamma);
            let cl = cluster(&d, r).unwrap();
            let oracle = bfs_components(d.points(), r);
            prop_assert_eq!(cl.sizes.iter().sum::<usize>(), d.len());
            for u in 0..d.len() {
                for v in 0..d.len() {
                    prop_assert_eq!(cl.cluster_of[u] == cl.cluster_of[v], oracle[u] == oracle[v]);
                }
            }
        }

        #[test]
        fn smaller_radius_refines(seed in 0u64..1_000, g1 in 0.5f64..6.0, extra in 0.1f64..6.0) {
            let d = sample_deployment(400, 1.0, seed).unwrap();
            let a = cluster(&d, radius_for_gamma(1.0, g1)).unwrap();
            let b = cluster(&d, radius_for_gamma(1.0, g1 + extra)).unwrap();
            let mut image = vec![u32::MAX; a.num_clusters()];
            for u in 0..d.len() {
                let slot = &mut image[a.cluster_of[u] as usize];
                if *slot == u32::MAX {
                    *slot = b.cluster_of[u];
                }
                prop_assert_eq!(*slot, b.cluster_of[u]);
            }
        }

        #[test]
        fn exterior_distances_exceed_r(seed in 0u64..1_000, gamma in 3.0f64..15.0) {
            let d = sample_deployment(600, 1.0, seed).unwrap();
            let r = radius_for_gamma(1.0, gamma);
            let cl = cluster(&d, r).unwrap();
            if let Ok(ex) = exterior_stats(&d, &cl) {
                let mut max: f64 = 0.0;
                for &(_, dist) in &ex.distances {
                    prop_assert!(dist > r);
                    max = max.max(dist);
                }
                prop_assert_eq!(max, ex.max_distance);
            }
        }
    }
}
