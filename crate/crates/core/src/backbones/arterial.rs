use rand::seq::index::sample;

use crate::channel::{reuse_side, Link, TdmaBuilder, TdmaSchedule};
use crate::percolation::{cell_counts, Direction};
use crate::spatial::{stream_rng, Deployment, Point, SchemeLattice, STREAM_STATIONS};
use crate::{Error, Result};

/// Arterial road flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArKind {
    /// One station per cell.
    Ordinary,
    /// `ceil(2 ln n)` stations per cell, wired rank-to-rank.
    Parallel,
}

/// A road: a row (horizontal) or column (vertical) of cells, at one station
/// rank (always 0 for ordinary roads).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Road {
    pub dir: Direction,
    pub line: usize,
    pub rank: usize,
}

const NO_STATION: u32 = u32::MAX;

/// Arterial roads over an axis-aligned lattice of cells of side about
/// `3 sqrt(ln n / lambda)`.
#[derive(Debug, Clone)]
pub struct ArterialSystem {
    kind: ArKind,
    lattice: SchemeLattice,
    ln_n: f64,
    per_cell: usize,
    /// Stations per cell index, sorted by node index (position = rank).
    stations: Vec<Vec<u32>>,
    cell_of: Vec<u32>,
    /// `(cell, rank)` of station nodes; `NO_STATION` elsewhere.
    rank_of: Vec<u32>,
    pa_cell_of: Vec<u32>,
    drain: Vec<u32>,
    deliver: Vec<u32>,
    counts: Vec<u32>,
}

/// Builds ordinary or parallel arterial roads.
///
/// Every cell must hold between `4.5 ln n` and `18 ln n` nodes. Stations are
/// drawn uniformly at random from the deployment's station stream: one per
/// cell, or `ceil(2 ln n)` from the central station-cell of side two thirds
/// of the cell.
pub fn build_arterial(d: &Deployment, kind: ArKind) -> Result<ArterialSystem> {
    let ln_n = d.ln_n();
    if ln_n <= 0.0 {
        return Err(Error::param("arterial roads need n >= 2"));
    }
    let lat = SchemeLattice::axis_fitted(d.side(), 3.0 * (ln_n / d.lambda()).sqrt())?;
    let (rows, cols) = (lat.rows(), lat.cols());
    if kind == ArKind::Parallel && rows < 2 {
        return Err(Error::construction("parallel roads need at least 2 rows of cells"));
    }
    let counts = cell_counts(&lat, d);
    let (lo, hi) = (4.5 * ln_n, 18.0 * ln_n);
    for (r, c) in lat.cells() {
        let k = counts[lat.index(r, c)] as f64;
        if k < lo || k > hi {
            return Err(Error::construction(format!(
                "AR-cell ({r}, {c}) holds {k} nodes, outside [{lo:.1}, {hi:.1}]"
            )));
        }
    }
    let pts = d.points();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); rows * cols];
    let mut cell_of = vec![0u32; pts.len()];
    for (u, &p) in pts.iter().enumerate() {
        let (r, c) = lat.cell_of(p);
        let k = lat.index(r, c);
        cell_of[u] = k as u32;
        members[k].push(u as u32);
    }
    let per_cell = match kind {
        ArKind::Ordinary => 1,
        ArKind::Parallel => (2.0 * ln_n).ceil() as usize,
    };
    let stream = STREAM_STATIONS * 16 + kind as u64;
    let mut rng = stream_rng(d.seed(), stream);
    let cell = lat.cell_side();
    let mut stations = Vec::with_capacity(rows * cols);
    for (k, list) in members.iter().enumerate() {
        let pool: Vec<u32> = match kind {
            ArKind::Ordinary => list.clone(),
            ArKind::Parallel => {
                let (r, c) = (k / cols, k % cols);
                let (x0, y0) = (c as f64 * cell, r as f64 * cell);
                list.iter()
                    .copied()
                    .filter(|&u| {
                        let p = pts[u as usize];
                        let inside = |v: f64, o: f64| v >= o + cell / 6.0 && v <= o + 5.0 * cell / 6.0;
                        inside(p.x, x0) && inside(p.y, y0)
                    })
                    .collect()
            }
        };
        if pool.len() < per_cell {
            return Err(Error::construction(format!(
                "station-cell ({}, {}) holds {} nodes, fewer than {per_cell}",
                k / cols,
                k % cols,
                pool.len()
            )));
        }
        let mut chosen: Vec<u32> = sample(&mut rng, pool.len(), per_cell)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        chosen.sort_unstable();
        stations.push(chosen);
    }
    let mut rank_of = vec![NO_STATION; pts.len()];
    for (k, list) in stations.iter().enumerate() {
        for (rank, &s) in list.iter().enumerate() {
            rank_of[s as usize] = (k * per_cell + rank) as u32;
        }
    }
    let mut sys = ArterialSystem {
        kind,
        lattice: lat,
        ln_n,
        per_cell,
        stations,
        cell_of,
        rank_of,
        pa_cell_of: Vec::new(),
        drain: Vec::new(),
        deliver: Vec::new(),
        counts,
    };
    sys.assign(pts);
    Ok(sys)
}

impl ArterialSystem {
    fn assign(&mut self, pts: &[Point]) {
        let n = pts.len();
        let (rows, cols) = (self.lattice.rows(), self.lattice.cols());
        self.drain = vec![0; n];
        self.deliver = vec![0; n];
        self.pa_cell_of = vec![0; n];
        for u in 0..n {
            let k = self.cell_of[u] as usize;
            if self.rank_of[u] != NO_STATION {
                self.drain[u] = u as u32;
                self.deliver[u] = u as u32;
                self.pa_cell_of[u] = self.rank_of[u] % self.per_cell as u32;
                continue;
            }
            match self.kind {
                ArKind::Ordinary => {
                    self.drain[u] = self.stations[k][0];
                    self.deliver[u] = self.stations[k][0];
                }
                ArKind::Parallel => {
                    let pa = self.pa_index(pts[u], k);
                    self.pa_cell_of[u] = pa as u32;
                    let (r, c) = (k / cols, k % cols);
                    let dr = if r + 1 < rows { r + 1 } else { r - 1 };
                    let dc = if c + 1 < cols { c + 1 } else { c - 1 };
                    self.drain[u] = self.stations[dr * cols + c][pa];
                    self.deliver[u] = self.stations[r * cols + dc][pa];
                }
            }
        }
    }

    /// PA-cell of a point inside AR-cell `k`: the cell is cut into `S` strips
    /// of a near-square layout, the last row of sub-cells taking the remainder.
    fn pa_index(&self, p: Point, k: usize) -> usize {
        let s = self.per_cell;
        let gc = (s as f64).sqrt().ceil() as usize;
        let gr = s.div_ceil(gc);
        let cols = self.lattice.cols();
        let cell = self.lattice.cell_side();
        let (r, c) = (k / cols, k % cols);
        let fx = ((p.x - c as f64 * cell) / cell).clamp(0.0, 1.0);
        let fy = ((p.y - r as f64 * cell) / cell).clamp(0.0, 1.0);
        let row = ((fy * gr as f64).floor() as usize).min(gr - 1);
        let in_row = if row + 1 == gr { s - (gr - 1) * gc } else { gc };
        let col = ((fx * in_row as f64).floor() as usize).min(in_row - 1);
        row * gc + col
    }

    pub fn kind(&self) -> ArKind {
        self.kind
    }

    pub fn lattice(&self) -> &SchemeLattice {
        &self.lattice
    }

    pub fn ln_n(&self) -> f64 {
        self.ln_n
    }

    /// Stations per cell.
    pub fn stations_per_cell(&self) -> usize {
        self.per_cell
    }

    /// Node count per cell index.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Stations of a cell, rank order.
    pub fn stations(&self, row: usize, col: usize) -> &[u32] {
        &self.stations[self.lattice.index(row, col)]
    }

    pub fn station(&self, row: usize, col: usize, rank: usize) -> u32 {
        self.stations[self.lattice.index(row, col)][rank]
    }

    /// `(row, col)` of the cell holding node `u`.
    pub fn cell_of(&self, u: u32) -> (usize, usize) {
        let k = self.cell_of[u as usize] as usize;
        (k / self.lattice.cols(), k % self.lattice.cols())
    }

    /// Rank of a station node within its cell.
    pub fn rank_of(&self, u: u32) -> Option<usize> {
        let r = self.rank_of[u as usize];
        (r != NO_STATION).then(|| r as usize % self.per_cell)
    }

    pub fn is_station(&self, u: u32) -> bool {
        self.rank_of[u as usize] != NO_STATION
    }

    /// PA-cell index of a node within its cell (parallel systems).
    pub fn pa_cell_of(&self, u: u32) -> usize {
        self.pa_cell_of[u as usize] as usize
    }

    /// Station that collects `u`'s packets (`u` itself for a station).
    pub fn drain_station(&self, u: u32) -> u32 {
        self.drain[u as usize]
    }

    /// Station that hands packets to `v` (`v` itself for a station).
    pub fn deliver_station(&self, v: u32) -> u32 {
        self.deliver[v as usize]
    }

    /// Every road of the system.
    pub fn roads(&self) -> Vec<Road> {
        let (rows, cols) = (self.lattice.rows(), self.lattice.cols());
        let mut out = Vec::new();
        for rank in 0..self.per_cell {
            out.extend((0..rows).map(|line| Road { dir: Direction::Horizontal, line, rank }));
            out.extend((0..cols).map(|line| Road { dir: Direction::Vertical, line, rank }));
        }
        out
    }

    /// Stations of a road, in increasing column (or row) order.
    pub fn road_stations(&self, road: Road) -> Vec<u32> {
        match road.dir {
            Direction::Horizontal => (0..self.lattice.cols())
                .map(|c| self.station(road.line, c, road.rank))
                .collect(),
            Direction::Vertical => (0..self.lattice.rows())
                .map(|r| self.station(r, road.line, road.rank))
                .collect(),
        }
    }

    /// Road hops from cell position `from` to `to` along `road`.
    pub fn road_segment(&self, road: Road, from: usize, to: usize) -> Vec<Link> {
        let at = |i: usize| match road.dir {
            Direction::Horizontal => self.station(road.line, i, road.rank),
            Direction::Vertical => self.station(i, road.line, road.rank),
        };
        let mut out = Vec::new();
        if from <= to {
            for i in from..to {
                out.push((at(i), at(i + 1)));
            }
        } else {
            for i in (to + 1..=from).rev() {
                out.push((at(i), at(i - 1)));
            }
        }
        out
    }

    /// Every road hop, both directions.
    pub fn road_links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for road in self.roads() {
            let st = self.road_stations(road);
            for w in st.windows(2) {
                out.push((w[0], w[1]));
                out.push((w[1], w[0]));
            }
        }
        out
    }

    /// Longest admissible road hop: twice the cell diagonal.
    pub fn hop_bound(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.lattice.cell_side()
    }
}

/// Longest road hop between edge-adjacent cells: `sqrt(5)` cells for
/// ordinary stations, between station-cells for parallel ones.
pub fn road_reach(ar: &ArterialSystem) -> f64 {
    let w = ar.lattice.cell_side();
    match ar.kind {
        ArKind::Ordinary => 5f64.sqrt() * w,
        ArKind::Parallel => 29f64.sqrt() / 3.0 * w,
    }
}

/// Road schedule, one unit per transmitting station, plus `extra` links
/// (highway entries and exits, which stay inside one cell). The colouring
/// side is [`reuse_side`] of the longest road hop.
pub fn arterial_schedule(ar: &ArterialSystem, d: &Deployment, extra: &[Link]) -> Result<TdmaSchedule> {
    let a = reuse_side(road_reach(ar), ar.lattice.cell_side());
    let mut b = TdmaBuilder::new(a * a);
    let pts = d.points();
    for l in ar.road_links().into_iter().chain(extra.iter().copied()) {
        let (r, c) = ar.lattice.cell_of(pts[l.0 as usize]);
        b.add(l, ar.lattice.color(r, c, a), l.0 as u64)?;
    }
    Ok(b.build())
}
