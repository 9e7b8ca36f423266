use rand::Rng;

use crate::spatial::{nearest_node, stream_rng, Deployment, Point, STREAM_SESSIONS};
use crate::{Error, Result};

/// One multicast session.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticastSession {
    pub k: usize,
    pub source: u32,
    /// The `n_d` uniform points the destinations are drawn from.
    pub candidate_points: Vec<Point>,
    /// Nearest node of each candidate point, duplicates removed in draw order.
    pub destinations: Vec<u32>,
    /// Source followed by the destinations that differ from it.
    pub spanning_set: Vec<u32>,
    /// Measured per-session rate, once known.
    pub rate: Option<f64>,
}

/// Draws `n_s` sessions with uniform sources and `n_d` uniform candidate
/// points each. Sessions are drawn in order from one stream, so the first
/// `k` sessions do not depend on `n_s`.
pub fn generate_sessions(d: &Deployment, n_s: usize, n_d: usize, seed: u64) -> Result<Vec<MulticastSession>> {
    let n = d.n();
    if n_d < 1 || n_d + 1 > n {
        return Err(Error::param(format!("n_d = {n_d} outside [1, n - 1] for n = {n}")));
    }
    if n_s <= 1 || n_s > n {
        return Err(Error::param(format!("n_s = {n_s} outside (1, n] for n = {n}")));
    }
    if d.is_empty() {
        return Err(Error::state("cannot draw sessions on an empty deployment"));
    }
    let side = d.side();
    let mut rng = stream_rng(seed, STREAM_SESSIONS);
    let mut out = Vec::with_capacity(n_s);
    for k in 0..n_s {
        let source = rng.random_range(0..d.len()) as u32;
        let candidate_points: Vec<Point> = (0..n_d)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();
        let mut destinations: Vec<u32> = Vec::with_capacity(n_d);
        for &p in &candidate_points {
            let v = nearest_node(d, p)? as u32;
            if !destinations.contains(&v) {
                destinations.push(v);
            }
        }
        let mut spanning_set = vec![source];
        spanning_set.extend(destinations.iter().copied().filter(|&v| v != source));
        out.push(MulticastSession {
            k,
            source,
            candidate_points,
            destinations,
            spanning_set,
            rate: None,
        });
    }
    Ok(out)
}
