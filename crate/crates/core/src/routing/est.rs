use std::fmt;
use std::str::FromStr;

use crate::spatial::{emst, EdgeList, Point};
use crate::{Error, Result};

/// Tree used as the skeleton of a routing tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Skeleton {
    /// Length-bounded spanning tree from [`est`].
    #[default]
    Est,
    /// Exact Euclidean minimum spanning tree.
    Emst,
}

impl Skeleton {
    pub fn build(self, points: &[Point], side: f64) -> Result<EdgeList> {
        match self {
            Skeleton::Est => est(points, side),
            Skeleton::Emst => {
                if points.len() < 2 {
                    return Err(Error::param("a spanning tree needs at least 2 points"));
                }
                emst(points)
            }
        }
    }
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Skeleton::Est => "est",
            Skeleton::Emst => "emst",
        })
    }
}

impl FromStr for Skeleton {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "est" => Ok(Skeleton::Est),
            "emst" => Ok(Skeleton::Emst),
            other => Err(Error::param(format!("unknown skeleton `{other}`"))),
        }
    }
}

/// `2 sqrt(2) sqrt(k) a` for `k` points in a square of side `a`.
pub fn est_bound(k: usize, side: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (k as f64).sqrt() * side
}

const HILBERT_ORDER: u32 = 16;

fn hilbert_index(x: u32, y: u32) -> u64 {
    let (mut x, mut y) = (x, y);
    let mut d = 0u64;
    let max = (1u32 << HILBERT_ORDER) - 1;
    let mut s = 1u32 << (HILBERT_ORDER - 1);
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = max - x;
                y = max - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// Spanning tree with total length at most [`est_bound`].
///
/// Points are chained in the order of a recursive quad-dissection (Hilbert
/// curve). If the chain exceeds the bound the exact EMST is used instead;
/// the returned tree is always checked against the bound.
pub fn est(points: &[Point], side: f64) -> Result<EdgeList> {
    let k = points.len();
    if k < 2 {
        return Err(Error::param("a spanning tree needs at least 2 points"));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::param(format!("region side must be positive, got {side}")));
    }
    let bound = est_bound(k, side);
    let scale = f64::from((1u32 << HILBERT_ORDER) - 1) / side;
    let cell = |v: f64| (v * scale).round().clamp(0.0, f64::from((1u32 << HILBERT_ORDER) - 1)) as u32;
    let mut order: Vec<(u64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (hilbert_index(cell(p.x), cell(p.y)), i))
        .collect();
    order.sort_unstable();
    let chain = EdgeList::from_edges(
        order
            .windows(2)
            .map(|w| (w[0].1, w[1].1, points[w[0].1].dist(points[w[1].1])))
            .collect(),
    );
    let tree = if chain.total_length <= bound { chain } else { emst(points)? };
    if tree.total_length > bound * (1.0 + 1e-12) {
        return Err(Error::construction(format!(
            "spanning tree length {} exceeds {bound}",
            tree.total_length
        )));
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn hilbert_visits_cells_adjacently() {
        // on a 2^16 grid, consecutive curve indices of the first 4^3 cells are edge-adjacent
        let mut cells: Vec<(u64, u32, u32)> = (0..8u32)
            .flat_map(|x| (0..8u32).map(move |y| (hilbert_index(x, y), x, y)))
            .collect();
        cells.sort();
        assert_eq!(cells.iter().map(|c| c.0).collect::<Vec<_>>(), (0..64).collect::<Vec<u64>>());
        for w in cells.windows(2) {
            assert_eq!(w[0].1.abs_diff(w[1].1) + w[0].2.abs_diff(w[1].2), 1);
        }
    }

    #[test]
    fn small_cases() {
        let two = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        let t = est(&two, 1.0).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.total_length <= est_bound(2, 1.0));
        let corners = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let t = est(&corners, 1.0).unwrap();
        assert!(t.is_spanning_tree(4));
        assert!((t.total_length - 3.0).abs() < 1e-9);
        assert!(est(&two[..1], 1.0).is_err());
    }

    #[test]
    fn skeleton_names() {
        assert_eq!("EMST".parse::<Skeleton>().unwrap(), Skeleton::Emst);
        assert_eq!(Skeleton::Est.to_string(), "est");
        assert!("x".parse::<Skeleton>().is_err());
    }

    #[test]
    fn random_sets_respect_bound() {
        let mut rng = stream_rng(11, 99);
        for k in [5usize, 17, 65, 300] {
            for _ in 0..50 {
                let pts: Vec<Point> = (0..k)
                    .map(|_| Point::new(rng.random::<f64>() * 7.0, rng.random::<f64>() * 7.0))
                    .collect();
                let t = est(&pts, 7.0).unwrap();
                assert!(t.is_spanning_tree(k));
                assert!(t.total_length <= est_bound(k, 7.0));
            }
        }
    }

    proptest! {
        #[test]
        fn clustered_sets_respect_bound(
            raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..80),
            shrink in 0.001f64..1.0,
        ) {
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x * shrink, y)).collect();
            let t = est(&pts, 1.0).unwrap();
            prop_assert!(t.is_spanning_tree(pts.len()));
            prop_assert!(t.total_length <= est_bound(pts.len(), 1.0));
        }
    }
}
