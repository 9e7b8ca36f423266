use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use super::{Hop, HopKind, MulticastSession, RoutingTree, Scheme, Skeleton};
use crate::backbones::{ArKind, ArterialSystem, HighwaySystem, Road};
use crate::channel::Link;
use crate::percolation::Direction;
use crate::spatial::{Deployment, Point};
use crate::{Error, Result};

/// Routes sessions over fixed backbones.
///
/// A horizontal highway is entered, from AR column `c`, at its first station
/// (in travel order) lying in column `c`; a vertical highway is left, towards
/// AR row `r`, at its first station lying in row `r`.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    d: &'a Deployment,
    ar: &'a ArterialSystem,
    hs: Option<&'a HighwaySystem>,
    /// `(site position, station)` per horizontal highway and AR column.
    entry: Vec<(usize, u32)>,
    /// `(site position, station)` per vertical highway and AR row.
    exit: Vec<(usize, u32)>,
}

impl<'a> Router<'a> {
    pub fn new(d: &'a Deployment, ar: &'a ArterialSystem, hs: Option<&'a HighwaySystem>) -> Result<Self> {
        let (rows, cols) = (ar.lattice().rows(), ar.lattice().cols());
        let mut entry = Vec::new();
        let mut exit = Vec::new();
        if let Some(hs) = hs {
            entry = first_per_line(ar, &hs.horizontal, cols, |rc| rc.1, "column")?;
            exit = first_per_line(ar, &hs.vertical, rows, |rc| rc.0, "row")?;
        }
        Ok(Router { d, ar, hs, entry, exit })
    }

    fn highways(&self) -> Result<&'a HighwaySystem> {
        let hs = self.hs.ok_or_else(|| Error::state("scheme needs a highway system"))?;
        if !hs.complete {
            return Err(Error::state(format!(
                "highway system is incomplete: {}",
                hs.diagnostics.join("; ")
            )));
        }
        Ok(hs)
    }

    fn check_scheme(&self, scheme: Scheme) -> Result<()> {
        let want = if scheme.is_parallel() { ArKind::Parallel } else { ArKind::Ordinary };
        if self.ar.kind() != want {
            return Err(Error::state(format!(
                "scheme {scheme} needs {want:?} arterial roads, got {:?}",
                self.ar.kind()
            )));
        }
        if scheme.uses_highways() {
            self.highways()?;
        }
        Ok(())
    }

    fn rank(&self, s: u32) -> usize {
        self.ar.rank_of(s).unwrap_or(0)
    }

    /// Static entry links of a highway scheme: every AR station of the entry
    /// cell (rank 0 only for ordinary roads) to the entry station.
    pub fn entry_links(&self) -> Vec<Link> {
        let Some(hs) = self.hs else { return Vec::new() };
        let cols = self.ar.lattice().cols();
        let mut out = Vec::new();
        for h in 0..hs.horizontal.len() {
            for c in 0..cols {
                let (_, e) = self.entry[h * cols + c];
                let r = self.ar.cell_of(e).0;
                out.extend(self.ar.stations(r, c).iter().map(|&s| (s, e)).filter(|l| l.0 != l.1));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Static exit links: exit station to the rank-0 station of its AR cell.
    pub fn exit_links(&self) -> Vec<Link> {
        let Some(hs) = self.hs else { return Vec::new() };
        let rows = self.ar.lattice().rows();
        let mut out = Vec::new();
        for v in 0..hs.vertical.len() {
            for r in 0..rows {
                let (_, x) = self.exit[v * rows + r];
                let c = self.ar.cell_of(x).1;
                let s = self.ar.station(r, c, 0);
                if s != x {
                    out.push((x, s));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Static transfer links: at a junction shared by a horizontal and a
    /// vertical highway, each adjacent horizontal station to each adjacent
    /// vertical station.
    pub fn transfer_links(&self) -> Vec<Link> {
        let Some(hs) = self.hs else { return Vec::new() };
        let mut out = Vec::new();
        for (hi, h) in hs.horizontal.iter().enumerate() {
            for (vi, v) in hs.vertical.iter().enumerate() {
                let Some(t) = hs.transfer(hi, vi) else { continue };
                if !t.junction {
                    continue;
                }
                let near = |stations: &[Option<u32>], pos: usize| -> Vec<u32> {
                    [pos.checked_sub(1), Some(pos + 1)]
                        .into_iter()
                        .flatten()
                        .filter_map(|k| stations.get(k).copied().flatten())
                        .collect()
                };
                for a in near(&h.stations, t.h_pos) {
                    for b in near(&v.stations, t.v_pos) {
                        if a != b {
                            out.push((a, b));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn road(&self, hops: &mut Vec<Hop>, dir: Direction, line: usize, rank: usize, from: usize, to: usize) {
        for (tx, rx) in self.ar.road_segment(Road { dir, line, rank }, from, to) {
            push(hops, tx, rx, HopKind::Road);
        }
    }

    /// Physical hops carrying a packet from node `u` to node `v`.
    fn route_pair(&self, scheme: Scheme, u: u32, v: u32, hops: &mut Vec<Hop>) -> Result<()> {
        let ar = self.ar;
        let su = ar.drain_station(u);
        let sv = ar.deliver_station(v);
        push(hops, u, su, HopKind::Access);
        let (ra, ca) = ar.cell_of(su);
        let (rb, cb) = ar.cell_of(sv);
        let (ta, tb) = (self.rank(su), self.rank(sv));
        if !scheme.uses_highways() {
            self.road(hops, Direction::Vertical, ca, ta, ra, rb);
            push(hops, ar.station(rb, ca, ta), ar.station(rb, ca, tb), HopKind::Switch);
            self.road(hops, Direction::Horizontal, rb, tb, ca, cb);
        } else {
            let hs = self.highways()?;
            let pts = self.d.points();
            let hi = hs.horizontal_for(pts[u as usize])?;
            let vi = hs.vertical_for(pts[v as usize])?;
            let (rows, cols) = (ar.lattice().rows(), ar.lattice().cols());
            let (pe, e) = self.entry[hi * cols + ca];
            let re = ar.cell_of(e).0;
            self.road(hops, Direction::Vertical, ca, ta, ra, re);
            push(hops, ar.station(re, ca, ta), e, HopKind::Entry);

            let (px, x) = self.exit[vi * rows + rb];
            let t = hs.transfer(hi, vi).ok_or_else(|| {
                Error::construction(format!("horizontal highway {hi} never meets vertical highway {vi}"))
            })?;
            let (h, vert) = (&hs.horizontal[hi], &hs.vertical[vi]);
            let (h_end, v_start) = if t.junction {
                let hp = if pe < t.h_pos { t.h_pos - 1 } else { t.h_pos + 1 };
                let vp = if px > t.v_pos { t.v_pos + 1 } else { t.v_pos - 1 };
                (hp, vp)
            } else {
                (t.h_pos, t.v_pos)
            };
            chain(hops, &h.stations_between(pe, h_end));
            let (a, b) = (station_at(h, h_end)?, station_at(vert, v_start)?);
            push(hops, a, b, HopKind::Transfer);
            chain(hops, &vert.stations_between(v_start, px));

            let cx = ar.cell_of(x).1;
            let s0 = ar.station(rb, cx, 0);
            push(hops, x, s0, HopKind::Exit);
            push(hops, s0, ar.station(rb, cx, tb), HopKind::Switch);
            self.road(hops, Direction::Horizontal, rb, tb, cx, cb);
        }
        push(hops, sv, v, HopKind::Access);
        Ok(())
    }

    /// Routing tree of one session: every skeleton edge is routed, duplicate
    /// hops are merged, and the breadth-first tree from the source is kept
    /// with branches leading to no destination pruned.
    pub fn route(&self, session: &MulticastSession, scheme: Scheme, skeleton: Skeleton) -> Result<RoutingTree> {
        self.check_scheme(scheme)?;
        let source = session.source;
        let mut tree = RoutingTree {
            session: session.k,
            scheme,
            source,
            hops: Vec::new(),
        };
        let set = &session.spanning_set;
        if set.len() < 2 {
            return Ok(tree);
        }
        let pts = self.d.points();
        let coords: Vec<Point> = set.iter().map(|&u| pts[u as usize]).collect();
        let sk = skeleton.build(&coords, self.d.side())?;

        let mut adj = vec![Vec::new(); set.len()];
        for &(i, j, _) in &sk.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut raw = Vec::new();
        let mut seen = vec![false; set.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    self.route_pair(scheme, set[i], set[j], &mut raw)?;
                    queue.push_back(j);
                }
            }
        }
        tree.hops = prune(source, &session.destinations, raw)?;
        Ok(tree)
    }
}

fn push(hops: &mut Vec<Hop>, tx: u32, rx: u32, kind: HopKind) {
    if tx != rx {
        hops.push(Hop { tx, rx, kind });
    }
}

fn chain(hops: &mut Vec<Hop>, stations: &[u32]) {
    for w in stations.windows(2) {
        push(hops, w[0], w[1], HopKind::Highway);
    }
}

fn station_at(h: &crate::backbones::Highway, pos: usize) -> Result<u32> {
    h.stations
        .get(pos)
        .copied()
        .flatten()
        .ok_or_else(|| Error::construction(format!("highway site {pos} has no station")))
}

fn first_per_line(
    ar: &ArterialSystem,
    highways: &[crate::backbones::Highway],
    lines: usize,
    pick: impl Fn((usize, usize)) -> usize,
    what: &str,
) -> Result<Vec<(usize, u32)>> {
    let mut out = vec![(0usize, u32::MAX); highways.len() * lines];
    for (hi, h) in highways.iter().enumerate() {
        for (pos, st) in h.stations.iter().enumerate() {
            let Some(st) = *st else { continue };
            let slot = &mut out[hi * lines + pick(ar.cell_of(st))];
            if slot.1 == u32::MAX {
                *slot = (pos, st);
            }
        }
        if let Some(missing) = (0..lines).find(|&l| out[hi * lines + l].1 == u32::MAX) {
            return Err(Error::construction(format!(
                "{:?} highway {hi} has no station in AR {what} {missing}",
                h.dir
            )));
        }
    }
    Ok(out)
}

/// Merges duplicate hops, keeps the breadth-first tree from `source` and
/// strips branches without destinations.
fn prune(source: u32, destinations: &[u32], raw: Vec<Hop>) -> Result<Vec<Hop>> {
    let mut uniq = FxHashSet::default();
    let hops: Vec<Hop> = raw.into_iter().filter(|h| uniq.insert(*h)).collect();
    let mut out_of: FxHashMap<u32, Vec<usize>> = FxHashMap::default();
    for (i, h) in hops.iter().enumerate() {
        out_of.entry(h.tx).or_default().push(i);
    }
    let mut parent: FxHashMap<u32, usize> = FxHashMap::default();
    let mut order = vec![source];
    let mut head = 0;
    let mut reached = FxHashSet::default();
    reached.insert(source);
    while head < order.len() {
        let u = order[head];
        head += 1;
        if let Some(list) = out_of.get(&u) {
            for &i in list {
                let v = hops[i].rx;
                if reached.insert(v) {
                    parent.insert(v, i);
                    order.push(v);
                }
            }
        }
    }
    if let Some(&miss) = destinations.iter().find(|d| !reached.contains(d)) {
        return Err(Error::construction(format!("destination {miss} unreachable from {source}")));
    }
    // walk back from every destination; the union of those paths is the tree
    let mut keep = FxHashSet::default();
    for &dst in destinations {
        let mut v = dst;
        while let Some(&i) = parent.get(&v) {
            if !keep.insert(i) {
                break;
            }
            v = hops[i].tx;
        }
    }
    let pos: FxHashMap<u32, usize> = order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut kept: Vec<usize> = keep.into_iter().collect();
    kept.sort_unstable_by_key(|&i| (pos[&hops[i].rx], i));
    Ok(kept.into_iter().map(|i| hops[i]).collect())
}

/// Routes one session, building the entry and exit tables on the fly.
pub fn route(
    d: &Deployment,
    ar: &ArterialSystem,
    hs: Option<&HighwaySystem>,
    session: &MulticastSession,
    scheme: Scheme,
    skeleton: Skeleton,
) -> Result<RoutingTree> {
    Router::new(d, ar, hs)?.route(session, scheme, skeleton)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbones::{build_arterial, build_highways, default_c};
    use crate::routing::{generate_sessions, Layer};
    use crate::spatial::sample_deployment;

    fn check_tree(t: &RoutingTree, s: &MulticastSession) {
        // a tree: every node entered at most once, and every destination reached
        let mut entered = FxHashSet::default();
        for h in &t.hops {
            assert!(entered.insert(h.rx), "node {} entered twice", h.rx);
            assert_ne!(h.rx, t.source);
        }
        let mut reach = FxHashSet::default();
        reach.insert(t.source);
        for h in &t.hops {
            assert!(reach.contains(&h.tx), "hops not in breadth-first order");
            reach.insert(h.rx);
        }
        for d in &s.destinations {
            assert!(reach.contains(d));
        }
    }

    #[test]
    fn prune_keeps_needed_branches() {
        let h = |tx, rx| Hop { tx, rx, kind: HopKind::Road };
        let raw = vec![h(0, 1), h(1, 2), h(0, 1), h(1, 3), h(3, 4), h(2, 4), h(0, 5)];
        let t = prune(0, &[4], raw).unwrap();
        assert_eq!(t, vec![h(0, 1), h(1, 2), h(2, 4)]);
        assert!(prune(0, &[9], vec![h(0, 1)]).is_err());
    }

    #[test]
    fn same_cell_session_under_o() {
        let d = sample_deployment(1 << 12, 1.0, 6).unwrap();
        let ar = build_arterial(&d, ArKind::Ordinary).unwrap();
        let router = Router::new(&d, &ar, None).unwrap();
        let st = ar.station(0, 0, 0);
        let mut others = (0..d.len() as u32).filter(|&u| ar.cell_of(u) == (0, 0) && u != st);
        let (a, b) = (others.next().unwrap(), others.next().unwrap());
        let s = MulticastSession {
            k: 0,
            source: a,
            candidate_points: vec![d.points()[b as usize]],
            destinations: vec![b],
            spanning_set: vec![a, b],
            rate: None,
        };
        let t = router.route(&s, Scheme::O, Skeleton::Est).unwrap();
        assert_eq!(
            t.hops,
            vec![
                Hop { tx: a, rx: st, kind: HopKind::Access },
                Hop { tx: st, rx: b, kind: HopKind::Access }
            ]
        );
        assert!(router.route(&s, Scheme::P, Skeleton::Est).is_err());
        assert!(router.route(&s, Scheme::OH, Skeleton::Est).is_err());
    }

    #[test]
    fn manhattan_hop_count_under_o() {
        let d = sample_deployment(1 << 13, 1.0, 7).unwrap();
        let ar = build_arterial(&d, ArKind::Ordinary).unwrap();
        let router = Router::new(&d, &ar, None).unwrap();
        for s in generate_sessions(&d, 40, 1, 3).unwrap() {
            let t = router.route(&s, Scheme::O, Skeleton::Est).unwrap();
            let (u, v) = (s.source, s.destinations[0]);
            if u == v {
                assert!(t.hops.is_empty());
                continue;
            }
            let (ra, ca) = ar.cell_of(ar.drain_station(u));
            let (rb, cb) = ar.cell_of(ar.deliver_station(v));
            let road = t.hops.iter().filter(|h| h.kind == HopKind::Road).count();
            assert_eq!(road, ra.abs_diff(rb) + ca.abs_diff(cb));
            check_tree(&t, &s);
        }
    }

    #[test]
    fn all_schemes_build_trees() {
        let d = sample_deployment(1 << 13, 1.0, 12).unwrap();
        let hs = build_highways(&d, default_c(), 2.0).unwrap();
        assert!(hs.complete);
        let sessions = generate_sessions(&d, 12, 6, 4).unwrap();
        for kind in [ArKind::Ordinary, ArKind::Parallel] {
            let ar = build_arterial(&d, kind).unwrap();
            let router = Router::new(&d, &ar, Some(&hs)).unwrap();
            let schemes = match kind {
                ArKind::Ordinary => [Scheme::O, Scheme::OH],
                ArKind::Parallel => [Scheme::P, Scheme::PH],
            };
            let pts = d.points();
            let entries: FxHashSet<Link> = router.entry_links().into_iter().collect();
            let exits: FxHashSet<Link> = router.exit_links().into_iter().collect();
            let transfers: FxHashSet<Link> = router.transfer_links().into_iter().collect();
            let roads: FxHashSet<Link> = ar.road_links().into_iter().collect();
            let highway: FxHashSet<Link> = hs.road_links().into_iter().collect();
            for scheme in schemes {
                for s in &sessions {
                    let t = router.route(s, scheme, Skeleton::Est).unwrap();
                    check_tree(&t, s);
                    for h in &t.hops {
                        let l = h.link();
                        let ok = match h.kind {
                            HopKind::Access => {
                                ar.drain_station(h.tx) == h.rx || ar.deliver_station(h.rx) == h.tx
                            }
                            HopKind::Road => roads.contains(&l),
                            HopKind::Switch => {
                                scheme.is_parallel() && ar.cell_of(h.tx) == ar.cell_of(h.rx)
                            }
                            HopKind::Entry => entries.contains(&l),
                            HopKind::Highway => highway.contains(&l),
                            HopKind::Transfer => transfers.contains(&l),
                            HopKind::Exit => exits.contains(&l),
                        };
                        assert!(ok, "{scheme}: hop {h:?} outside the constructed structures");
                        let len = pts[h.tx as usize].dist(pts[h.rx as usize]);
                        assert!(len <= ar.hop_bound().max(hs.hop_bound()) * 1.5, "{h:?} has length {len}");
                    }
                    if scheme.uses_highways() && !t.hops.is_empty() {
                        assert!(t.hops.iter().any(|h| h.layer() == Layer::Highway));
                    }
                }
            }
        }
    }

    #[test]
    fn shared_segments_merge() {
        let d = sample_deployment(1 << 12, 1.0, 2).unwrap();
        let ar = build_arterial(&d, ArKind::Ordinary).unwrap();
        let router = Router::new(&d, &ar, None).unwrap();
        for s in generate_sessions(&d, 20, 10, 8).unwrap() {
            let t = router.route(&s, Scheme::O, Skeleton::Emst).unwrap();
            let uniq: FxHashSet<Hop> = t.hops.iter().copied().collect();
            assert_eq!(uniq.len(), t.hops.len());
            check_tree(&t, &s);
        }
    }
}
