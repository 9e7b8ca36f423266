use std::ops::Range;

use crate::channel::{reuse_side, Link, TdmaBuilder, TdmaSchedule};
use crate::percolation::{disjoint_crossing_paths, open_cells, Direction};
use crate::spatial::{Deployment, Point, SchemeLattice};
use crate::{Error, Result};

/// Default `c`, with `c^2 = 2 ln 6` so that a cell is open with probability
/// `1 - 1/36`.
pub fn default_c() -> f64 {
    (2.0 * 6f64.ln()).sqrt()
}

/// Smallest integer `kappa` with `2 + kappa * ln(6 (1 - p)) < 0` for the
/// open probability `p` induced by `c`; `None` when `p <= 5/6`.
pub fn default_kappa(c: f64) -> Option<f64> {
    let q = 6.0 * (-c * c).exp();
    if q >= 1.0 {
        return None;
    }
    let mut k = (-2.0 / q.ln()).floor();
    while 2.0 + k * q.ln() >= 0.0 {
        k += 1.0;
    }
    Some(k.max(1.0))
}

/// One crossing of a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct Highway {
    pub dir: Direction,
    pub slab: usize,
    pub slice: usize,
    /// Site path over the expanded lattice grid, junctions included.
    pub sites: Vec<(usize, usize)>,
    /// Station node per site; `None` at junctions.
    pub stations: Vec<Option<u32>>,
}

impl Highway {
    /// Stations in travel order.
    pub fn station_path(&self) -> Vec<u32> {
        self.stations.iter().flatten().copied().collect()
    }

    /// Stations met travelling from site position `from` to `to`, both ends
    /// included when they are bond sites.
    pub fn stations_between(&self, from: usize, to: usize) -> Vec<u32> {
        let pick = |k: usize| self.stations[k];
        if from <= to {
            (from..=to).filter_map(pick).collect()
        } else {
            (to..=from).rev().filter_map(pick).collect()
        }
    }
}

/// A horizontal or vertical band of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    /// Rows (horizontal) or columns (vertical) of the expanded site grid.
    pub band: Range<usize>,
    /// Coordinate range in the region (y for horizontal, x for vertical).
    pub lo: f64,
    pub hi: f64,
    /// Maximum number of disjoint crossings found.
    pub crossings: usize,
    /// Chosen highway ids, one per slice in slice order.
    pub chosen: Vec<usize>,
}

/// Where a horizontal highway meets a vertical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    /// Site position on the horizontal highway.
    pub h_pos: usize,
    /// Site position on the vertical highway.
    pub v_pos: usize,
    /// The shared site is a junction (otherwise a shared bond cell).
    pub junction: bool,
}

/// Percolation highways over a `pi/4`-rotated lattice.
#[derive(Debug, Clone)]
pub struct HighwaySystem {
    pub lattice: SchemeLattice,
    pub c: f64,
    pub kappa: f64,
    /// Probability that a cell is open.
    pub p_open: f64,
    /// Bonds per side.
    pub m: usize,
    /// Slab height in lattice vertex rows.
    pub slab_height: usize,
    pub horizontal: Vec<Highway>,
    pub vertical: Vec<Highway>,
    pub slabs_h: Vec<Slab>,
    pub slabs_v: Vec<Slab>,
    /// Realized `min_i N_i / ln m`.
    pub eta_est: f64,
    /// False when some slab has no crossing.
    pub complete: bool,
    pub diagnostics: Vec<String>,
    transfers: Vec<Option<Transfer>>,
}

/// Builds horizontal and vertical highways.
///
/// Cells of side `c / sqrt(lambda)` are open when they hold a node; the
/// station of an open cell is its node nearest the cell centre. Each slab of
/// `ceil(kappa ln m)` vertex rows keeps `K = min_i N_i` of its disjoint
/// crossings, spread evenly across the slab, one per slice.
pub fn build_highways(d: &Deployment, c: f64, kappa: f64) -> Result<HighwaySystem> {
    if !(c.is_finite() && c > 0.0 && kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param(format!("c = {c}, kappa = {kappa} must be positive")));
    }
    let p_open = 1.0 - (-c * c).exp();
    if p_open <= 5.0 / 6.0 {
        return Err(Error::param(format!("open probability {p_open:.4} must exceed 5/6")));
    }
    if 2.0 + kappa * (6.0 * (1.0 - p_open)).ln() >= 0.0 {
        return Err(Error::param(format!(
            "kappa = {kappa} violates 2 + kappa ln(6(1-p)) < 0 at p = {p_open:.4}"
        )));
    }
    let lat = SchemeLattice::diagonal(d.side(), c / d.lambda().sqrt())?;
    let m = lat.bonds_per_side();
    let mut grid = open_cells(&lat, d);

    // nodes that the boundary clamp pushed outside their cell's diamond do
    // not count, so every station lies within s/2 of its bond's midpoint
    let half = lat.bond_spacing() / 2.0 * (1.0 + 1e-12);
    let mut best = vec![(f64::INFINITY, u32::MAX); lat.rows() * lat.cols()];
    for (u, &p) in d.points().iter().enumerate() {
        let (r, col) = lat.cell_of(p);
        let q = lat.cell_center(r, col);
        if (p.x - q.x).abs() + (p.y - q.y).abs() > half {
            continue;
        }
        let k = lat.index(r, col);
        let d2 = p.dist2(q);
        if (d2, u as u32) < best[k] {
            best[k] = (d2, u as u32);
        }
    }
    for (r, col) in lat.cells() {
        grid.set(r, col, best[lat.index(r, col)].1 != u32::MAX);
    }
    let station_at = |r: usize, col: usize| -> Option<u32> {
        if !lat.is_cell(r, col) {
            return None;
        }
        let s = best[lat.index(r, col)].1;
        (s != u32::MAX).then_some(s)
    };

    let ln_m = (m as f64).ln();
    let slab_height = ((kappa * ln_m).ceil() as usize).clamp(1, m + 1);
    let vertex_lines = m + 1;
    let n_slabs = (vertex_lines / slab_height).max(1);
    let s = lat.bond_spacing();
    let side = d.side();

    let mut system = HighwaySystem {
        lattice: lat.clone(),
        c,
        kappa,
        p_open,
        m,
        slab_height,
        horizontal: Vec::new(),
        vertical: Vec::new(),
        slabs_h: Vec::new(),
        slabs_v: Vec::new(),
        eta_est: 0.0,
        complete: true,
        diagnostics: Vec::new(),
        transfers: Vec::new(),
    };

    for dir in [Direction::Horizontal, Direction::Vertical] {
        let mut slabs = Vec::with_capacity(n_slabs);
        let mut found: Vec<Vec<Vec<(usize, usize)>>> = Vec::with_capacity(n_slabs);
        for i in 0..n_slabs {
            let j0 = i * slab_height;
            let j1 = if i + 1 == n_slabs { vertex_lines } else { j0 + slab_height };
            let band = 2 * j0..2 * j1 - 1;
            let lo = if i == 0 { 0.0 } else { (j0 as f64 - 0.5) * s };
            let hi = if i + 1 == n_slabs { side } else { (j1 as f64 - 0.5) * s };
            let paths = disjoint_crossing_paths(&grid, band.clone(), dir);
            slabs.push(Slab {
                band,
                lo,
                hi,
                crossings: paths.len(),
                chosen: Vec::new(),
            });
            found.push(paths);
        }
        let k = slabs.iter().map(|sl| sl.crossings).min().unwrap_or(0);
        if k == 0 {
            system.complete = false;
            for (i, sl) in slabs.iter().enumerate().filter(|(_, sl)| sl.crossings == 0) {
                system
                    .diagnostics
                    .push(format!("{dir:?} slab {i} (band {:?}) has no open crossing", sl.band));
            }
        }
        let mut highways = Vec::new();
        for (i, paths) in found.into_iter().enumerate() {
            if k == 0 {
                break;
            }
            let across = |p: &(usize, usize)| match dir {
                Direction::Horizontal => p.0 as f64,
                Direction::Vertical => p.1 as f64,
            };
            let mut order: Vec<(f64, usize)> = paths
                .iter()
                .enumerate()
                .map(|(idx, p)| (p.iter().map(across).sum::<f64>() / p.len() as f64, idx))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let n_i = order.len();
            for slice in 0..k {
                let pick = order[((2 * slice + 1) * n_i) / (2 * k)].1;
                let sites = paths[pick].clone();
                let stations = sites.iter().map(|&(r, col)| station_at(r, col)).collect();
                slabs[i].chosen.push(highways.len());
                highways.push(Highway {
                    dir,
                    slab: i,
                    slice,
                    sites,
                    stations,
                });
            }
        }
        match dir {
            Direction::Horizontal => {
                system.slabs_h = slabs;
                system.horizontal = highways;
            }
            Direction::Vertical => {
                system.slabs_v = slabs;
                system.vertical = highways;
            }
        }
    }

    let k_min = system
        .slabs_h
        .iter()
        .chain(&system.slabs_v)
        .map(|sl| sl.crossings)
        .min()
        .unwrap_or(0);
    system.eta_est = if ln_m > 0.0 { k_min as f64 / ln_m } else { 0.0 };
    system.transfers = intersections(&system);
    system.check_hops(d)?;
    Ok(system)
}

fn intersections(hs: &HighwaySystem) -> Vec<Option<Transfer>> {
    let cols = hs.lattice.cols();
    let mut owner = vec![u32::MAX; hs.lattice.rows() * cols];
    let mut pos_in = vec![0u32; owner.len()];
    for (vi, v) in hs.vertical.iter().enumerate() {
        for (k, &(r, c)) in v.sites.iter().enumerate() {
            owner[r * cols + c] = vi as u32;
            pos_in[r * cols + c] = k as u32;
        }
    }
    let nv = hs.vertical.len();
    let mut table = vec![None; hs.horizontal.len() * nv];
    for (hi, h) in hs.horizontal.iter().enumerate() {
        for (k, &(r, c)) in h.sites.iter().enumerate() {
            let o = owner[r * cols + c];
            if o == u32::MAX {
                continue;
            }
            let slot = &mut table[hi * nv + o as usize];
            if slot.is_none() {
                *slot = Some(Transfer {
                    h_pos: k,
                    v_pos: pos_in[r * cols + c] as usize,
                    junction: r % 2 == 0 && c % 2 == 0,
                });
            }
        }
    }
    table
}

impl HighwaySystem {
    /// First shared site of horizontal highway `h` and vertical highway `v`.
    pub fn transfer(&self, h: usize, v: usize) -> Option<Transfer> {
        self.transfers[h * self.vertical.len() + v]
    }

    /// Maximum hop length between consecutive stations: twice the bond spacing.
    pub fn hop_bound(&self) -> f64 {
        2.0 * self.lattice.bond_spacing()
    }

    /// Per-slab disjoint crossing counts, horizontal slabs first.
    pub fn slab_counts(&self) -> Vec<usize> {
        self.slabs_h.iter().chain(&self.slabs_v).map(|s| s.crossings).collect()
    }

    fn slab_index(slabs: &[Slab], coord: f64) -> usize {
        slabs
            .iter()
            .position(|s| coord < s.hi)
            .unwrap_or(slabs.len().saturating_sub(1))
    }

    fn slice_in(slab: &Slab, coord: f64) -> usize {
        let k = slab.chosen.len().max(1);
        let f = ((coord - slab.lo) / (slab.hi - slab.lo)).clamp(0.0, 1.0);
        ((f * k as f64).floor() as usize).min(k - 1)
    }

    /// `(slab, slice)` of a point among the horizontal slabs.
    pub fn horizontal_slice(&self, p: Point) -> (usize, usize) {
        let i = Self::slab_index(&self.slabs_h, p.y);
        (i, Self::slice_in(&self.slabs_h[i], p.y))
    }

    /// `(slab, slice)` of a point among the vertical slabs.
    pub fn vertical_slice(&self, p: Point) -> (usize, usize) {
        let i = Self::slab_index(&self.slabs_v, p.x);
        (i, Self::slice_in(&self.slabs_v[i], p.x))
    }

    /// Horizontal highway serving the slice that contains `p`.
    pub fn horizontal_for(&self, p: Point) -> Result<usize> {
        let (i, j) = self.horizontal_slice(p);
        self.slabs_h[i]
            .chosen
            .get(j)
            .copied()
            .ok_or_else(|| Error::construction(format!("horizontal slab {i} has no highway")))
    }

    /// Vertical highway serving the slice that contains `p`.
    pub fn vertical_for(&self, p: Point) -> Result<usize> {
        let (i, j) = self.vertical_slice(p);
        self.slabs_v[i]
            .chosen
            .get(j)
            .copied()
            .ok_or_else(|| Error::construction(format!("vertical slab {i} has no highway")))
    }

    /// Every station-to-station hop of every highway, both directions.
    pub fn road_links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for h in self.horizontal.iter().chain(&self.vertical) {
            for w in h.station_path().windows(2) {
                out.push((w[0], w[1]));
                out.push((w[1], w[0]));
            }
        }
        out
    }

    fn check_hops(&self, d: &Deployment) -> Result<()> {
        let bound = self.hop_bound() * (1.0 + 1e-9);
        let pts = d.points();
        for h in self.horizontal.iter().chain(&self.vertical) {
            if h.stations.iter().zip(&h.sites).any(|(s, &(r, c))| s.is_none() && r % 2 + c % 2 == 1) {
                return Err(Error::construction("open bond cell without a station"));
            }
            for w in h.station_path().windows(2) {
                let len = pts[w[0] as usize].dist(pts[w[1] as usize]);
                if len > bound {
                    return Err(Error::construction(format!(
                        "highway hop {}->{} has length {len} > {bound}",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Schedule over the rotated lattice for all highway hops plus `extra`
/// links (transfers). Each transmitting node is one unit; the colouring side
/// is [`reuse_side`] of the hop bound.
pub fn highway_schedule(hs: &HighwaySystem, d: &Deployment, extra: &[Link]) -> Result<TdmaSchedule> {
    let a = reuse_side(hs.hop_bound(), hs.lattice.cell_side());
    let mut b = TdmaBuilder::new(a * a);
    let pts = d.points();
    for l in hs.road_links().into_iter().chain(extra.iter().copied()) {
        let (r, c) = hs.lattice.cell_of(pts[l.0 as usize]);
        b.add(l, hs.lattice.color(r, c, a), l.0 as u64)?;
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::sample_deployment;

    fn deployment_for(m: usize, c: f64, seed: u64) -> Deployment {
        // side = sqrt(2) c m slightly enlarged so that the lattice has m bonds per side
        let n = (2.0 * c * c * (m * m) as f64 * 1.0001).ceil() as usize;
        sample_deployment(n, 1.0, seed).unwrap()
    }

    #[test]
    fn kappa_defaults() {
        let c = default_c();
        assert_eq!(default_kappa(c), Some(2.0));
        assert!(default_kappa(1.0).is_none());
        // p = 0.9 admits kappa = 4
        let c9 = (10f64.ln()).sqrt();
        assert!(2.0 + 4.0 * (6.0 * 0.1f64).ln() < 0.0);
        assert!(default_kappa(c9).unwrap() <= 4.0);
    }

    #[test]
    fn rejects_bad_hypothesis() {
        let d = sample_deployment(500, 1.0, 1).unwrap();
        assert!(matches!(build_highways(&d, 1.0, 2.0), Err(Error::Parameter(_))));
        assert!(matches!(build_highways(&d, default_c(), 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn structure() {
        let c = default_c();
        let d = deployment_for(48, c, 3);
        let hs = build_highways(&d, c, 2.0).unwrap();
        assert_eq!(hs.m, 48);
        assert!(hs.complete, "{:?}", hs.diagnostics);
        let pts = d.points();
        for list in [&hs.horizontal, &hs.vertical] {
            for h in list.iter() {
                let path = h.station_path();
                for w in path.windows(2) {
                    assert!(pts[w[0] as usize].dist(pts[w[1] as usize]) <= hs.hop_bound() + 1e-9);
                }
            }
        }
        // highways never share a site within one direction
        let mut seen = std::collections::HashSet::new();
        for h in &hs.horizontal {
            for s in &h.sites {
                assert!(seen.insert(*s));
            }
        }
        // slices map one-to-one onto chosen highways
        for slab in hs.slabs_h.iter().chain(&hs.slabs_v) {
            let mut ids = slab.chosen.clone();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), slab.chosen.len());
        }
        // every horizontal meets every vertical
        for h in 0..hs.horizontal.len() {
            for v in 0..hs.vertical.len() {
                assert!(hs.transfer(h, v).is_some());
            }
        }
    }

    #[test]
    fn fully_open_lattice_gives_straight_crossings() {
        let c = 4.0; // even half-cells on the boundary are closed with probability e^{-8}
        let d = deployment_for(12, c, 5);
        let hs = build_highways(&d, c, 1.0).unwrap();
        let g = open_cells(&hs.lattice, &d);
        assert!(g.open.iter().enumerate().all(|(i, &o)| o || (i / g.cols) % 2 == 1 && (i % g.cols) % 2 == 1));
        for slab in &hs.slabs_h {
            let vertex_rows = slab.band.len().div_ceil(2);
            assert!(slab.crossings >= vertex_rows);
        }
    }

    #[test]
    fn deterministic() {
        let c = default_c();
        let d = deployment_for(24, c, 9);
        let a = build_highways(&d, c, 2.0).unwrap();
        let b = build_highways(&d, c, 2.0).unwrap();
        assert_eq!(a.horizontal, b.horizontal);
        assert_eq!(a.vertical, b.vertical);
    }
}
