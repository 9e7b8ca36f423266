//! Poisson deployments, bucket indexing, scheme lattices and spanning trees.

mod grid;
mod lattice;
mod mst;

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub use grid::GridIndex;
pub use lattice::{Orientation, SchemeLattice};
pub use mst::{emst, emst_length_statistic, EdgeList};
pub(crate) use mst::UnionFind;

use crate::{Error, Result};

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist2(self, o: Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        self.dist2(o).sqrt()
    }
}

/// A seeded RNG for a (seed, stream) pair.
///
/// Every random choice in the crate draws from one of these so that separate
/// concerns (deployment, stations, sessions) never share a stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) const STREAM_DEPLOY: u64 = 0;
pub(crate) const STREAM_EMST_STAT: u64 = 1;
pub(crate) const STREAM_STATIONS: u64 = 2;
pub(crate) const STREAM_SESSIONS: u64 = 3;
pub(crate) const STREAM_OCCUPANCY: u64 = 4;

/// A realized Poisson deployment over `[0, side]^2`.
#[derive(Debug, Clone)]
pub struct Deployment {
    n: usize,
    lambda: f64,
    side: f64,
    seed: u64,
    points: Vec<Point>,
    grid: GridIndex,
}

impl Deployment {
    /// Wraps explicit points; `side` is derived from `n` and `lambda`.
    pub fn from_points(n: usize, lambda: f64, seed: u64, points: Vec<Point>) -> Result<Self> {
        check_density(n, lambda)?;
        let side = (n as f64 / lambda).sqrt();
        if let Some(p) = points
            .iter()
            .find(|p| !(0.0..=side).contains(&p.x) || !(0.0..=side).contains(&p.y))
        {
            return Err(Error::param(format!(
                "point ({}, {}) outside [0, {side}]^2",
                p.x, p.y
            )));
        }
        let grid = GridIndex::new(&points, side, default_bucket(side, points.len()));
        Ok(Deployment {
            n,
            lambda,
            side,
            seed,
            points,
            grid,
        })
    }

    /// Expected node count.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Realized node count.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid(&self) -> &GridIndex {
        &self.grid
    }

    /// Natural log of the expected node count.
    pub fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// Nodes within `radius` of `center`, ascending.
    pub fn within(&self, center: Point, radius: f64) -> Vec<u32> {
        self.grid.within(&self.points, center, radius)
    }

    /// Writes `#n=..,lambda=..,seed=..` followed by `index,x,y` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#n={},lambda={},seed={}", self.n, self.lambda, self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", "y"])?;
        for (i, p) in self.points.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Data("missing deployment header line".into()))?;
        let (mut n, mut lambda, mut seed) = (None, None, None);
        for kv in header.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("bad header field `{kv}`")))?;
            let bad = |_| Error::Data(format!("bad header value `{kv}`"));
            match k.trim() {
                "n" => n = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "lambda" => lambda = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(v.trim().parse::<u64>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let (n, lambda, seed) = match (n, lambda, seed) {
            (Some(n), Some(l), Some(s)) => (n, l, s),
            _ => return Err(Error::Data("header needs n, lambda and seed".into())),
        };
        let mut rdr = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Data(format!("row {row}: bad column {i}")))
            };
            if field(0)? as usize != row {
                return Err(Error::Data(format!("row {row}: index out of order")));
            }
            points.push(Point::new(field(1)?, field(2)?));
        }
        Deployment::from_points(n, lambda, seed, points)
    }
}

fn check_density(n: usize, lambda: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::param("n must be at least 1"));
    }
    if !(lambda.is_finite() && lambda >= 1.0 && lambda <= n as f64) {
        return Err(Error::param(format!("lambda = {lambda} outside [1, {n}]")));
    }
    Ok(())
}

/// About two points per bucket.
fn default_bucket(side: f64, count: usize) -> f64 {
    let per_side = ((count as f64 / 2.0).sqrt().ceil()).max(1.0);
    side / per_side
}

/// Samples a Poisson(n) number of i.i.d. uniform points over `[0, sqrt(n/lambda)]^2`.
///
/// The count is drawn first and the coordinates are unit uniforms scaled by
/// the side, so the same seed at two densities yields similar point sets.
pub fn sample_deployment(n: usize, lambda: f64, seed: u64) -> Result<Deployment> {
    check_density(n, lambda)?;
    let side = (n as f64 / lambda).sqrt();
    let mut rng = stream_rng(seed, STREAM_DEPLOY);
    let count = Poisson::new(n as f64)
        .map_err(|e| Error::param(e.to_string()))?
        .sample(&mut rng) as usize;
    let points = (0..count)
        .map(|_| {
            let ux: f64 = rng.random();
            let uy: f64 = rng.random();
            Point::new(ux * side, uy * side)
        })
        .collect();
    Deployment::from_points(n, lambda, seed, points)
}

/// Nearest deployed node to `p`; ties go to the lowest index.
pub fn nearest_node(d: &Deployment, p: Point) -> Result<usize> {
    d.grid
        .nearest(&d.points, p)
        .map(|i| i as usize)
        .ok_or_else(|| Error::state("nearest_node on an empty deployment"))
}
