use rand::Rng;

use super::{stream_rng, Deployment, GridIndex, Point, STREAM_EMST_STAT};
use crate::{Error, Result};

/// Spanning-tree edges over a point list, as `(i, j, length)` with `i < j`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize, f64)>,
    pub total_length: f64,
}

impl EdgeList {
    pub fn from_edges(mut edges: Vec<(usize, usize, f64)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        let total_length = edges.iter().map(|e| e.2).sum();
        EdgeList {
            edges,
            total_length,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// True iff the edges form a spanning tree over `k` vertices.
    pub fn is_spanning_tree(&self, k: usize) -> bool {
        if k == 0 || self.edges.len() != k - 1 {
            return false;
        }
        let mut uf = UnionFind::new(k);
        self.edges
            .iter()
            .all(|&(a, b, _)| a < k && b < k && uf.union(a, b))
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Exact Euclidean minimum spanning tree (Boruvka over a bucket grid).
///
/// Candidate edges are compared by `(squared length, lower index, higher
/// index)`, a strict total order, so every round's minimum outgoing edges are
/// consistent and the result is unique.
pub fn emst(points: &[Point]) -> Result<EdgeList> {
    let k = points.len();
    if k < 2 {
        return Err(Error::param(format!("emst needs at least 2 points, got {k}")));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    let per_side = (k as f64 / 2.0).sqrt().ceil().max(1.0);
    let bucket = if extent > 0.0 { extent / per_side } else { 1.0 };
    let all: Vec<u32> = (0..k as u32).collect();
    let grid = GridIndex::with_subset(points, &all, lo, extent, bucket);

    let mut uf = UnionFind::new(k);
    let mut comp = vec![0u32; k];
    let mut edges = Vec::with_capacity(k - 1);
    let mut order: Vec<u32> = all.clone();
    while edges.len() < k - 1 {
        for (i, c) in comp.iter_mut().enumerate() {
            *c = uf.find(i) as u32;
        }
        order.sort_unstable_by_key(|&i| (comp[i as usize], i));
        let mut found: Vec<(f64, usize, usize)> = Vec::new();
        let mut start = 0;
        while start < k {
            let root = comp[order[start] as usize];
            let mut end = start;
            while end < k && comp[order[end] as usize] == root {
                end += 1;
            }
            let mut best: Option<(f64, usize, usize)> = None;
            for &p in &order[start..end] {
                let bound = best.map_or(f64::INFINITY, |b| b.0);
                let hit = grid.nearest_bounded(points, points[p as usize], bound, |q| {
                    comp[q as usize] != root
                });
                if let Some((q, d2)) = hit {
                    let (a, b) = minmax(p as usize, q as usize);
                    let cand = (d2, a, b);
                    if best.is_none_or(|bb| edge_lt(cand, bb)) {
                        best = Some(cand);
                    }
                }
            }
            if let Some(b) = best {
                found.push(b);
            }
            start = end;
        }
        for (d2, a, b) in found {
            if uf.union(a, b) {
                edges.push((a, b, d2.sqrt()));
            }
        }
    }
    edges.sort_by(|x, y| x.2.total_cmp(&y.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    Ok(EdgeList::from_edges(edges))
}

fn minmax(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn edge_lt(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
}

/// Mean EMST length of `trials` independent sets of `set_size` uniform points
/// in the deployment's region.
pub fn emst_length_statistic(
    d: &Deployment,
    trials: usize,
    set_size: usize,
    seed: u64,
) -> Result<f64> {
    if set_size < 2 {
        return Err(Error::param("set_size must be at least 2"));
    }
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let side = d.side();
    let mut rng = stream_rng(seed, STREAM_EMST_STAT);
    let mut total = 0.0;
    for _ in 0..trials {
        let pts: Vec<Point> = (0..set_size)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();
        total += emst(&pts)?.total_length;
    }
    Ok(total / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prim(points: &[Point]) -> f64 {
        let k = points.len();
        let mut in_tree = vec![false; k];
        let mut dist = vec![f64::INFINITY; k];
        dist[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..k {
            let u = (0..k)
                .filter(|&i| !in_tree[i])
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
                .unwrap();
            in_tree[u] = true;
            total += dist[u];
            for v in 0..k {
                if !in_tree[v] {
                    dist[v] = dist[v].min(points[u].dist(points[v]));
                }
            }
        }
        total
    }

    #[test]
    fn collinear() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let t = emst(&pts).unwrap();
        assert_eq!(t.edges, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(t.total_length, 2.0);
    }

    #[test]
    fn unit_square() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let t = emst(&pts).unwrap();
        assert_eq!(t.total_length, 3.0);
        assert!(t.is_spanning_tree(4));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(emst(&[Point::new(0.0, 0.0)]), Err(Error::Parameter(_))));
    }

    #[test]
    fn coincident_points() {
        let pts = vec![Point::new(0.5, 0.5); 5];
        let t = emst(&pts).unwrap();
        assert!(t.is_spanning_tree(5));
        assert_eq!(t.total_length, 0.0);
    }

    #[test]
    fn lattice_ties() {
        let pts: Vec<Point> = (0..100)
            .map(|i| Point::new((i % 10) as f64, (i / 10) as f64))
            .collect();
        let t = emst(&pts).unwrap();
        assert!(t.is_spanning_tree(100));
        assert!((t.total_length - 99.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn matches_prim(raw in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..120)) {
            let pts: Vec<Point> = raw.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let t = emst(&pts).unwrap();
            prop_assert!(t.is_spanning_tree(pts.len()));
            let oracle = prim(&pts);
            prop_assert!((t.total_length - oracle).abs() <= 1e-9 * oracle.max(1.0));
        }

        #[test]
        fn scales_with_region(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..60), s in 0.1f64..50.0) {
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let scaled: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x * s, y * s)).collect();
            let a = emst(&pts).unwrap().total_length;
            let b = emst(&scaled).unwrap().total_length;
            prop_assert!((b - s * a).abs() <= 1e-9 * b.max(1.0));
        }
    }
}
