use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::{Hop, HopKind, Layer, MulticastSession, Router, RoutingTree, Scheme, Skeleton};
use crate::backbones::{arterial_schedule, highway_schedule, AccessPathSet, ArterialSystem, HighwaySystem};
use crate::channel::{reuse_side, sustained_rates, ChannelParams, Link, TdmaBuilder, TdmaSchedule};
use crate::spatial::Deployment;
use crate::{Error, Result};

/// Interns hops as dense ids.
#[derive(Debug, Clone, Default)]
pub struct LinkRegistry {
    index: FxHashMap<Hop, u32>,
    hops: Vec<Hop>,
}

impl LinkRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, hop: Hop) -> u32 {
        let next = self.hops.len() as u32;
        *self.index.entry(hop).or_insert_with(|| {
            self.hops.push(hop);
            next
        })
    }

    pub fn id_of(&self, hop: Hop) -> Option<u32> {
        self.index.get(&hop).copied()
    }

    pub fn hop(&self, id: u32) -> Hop {
        self.hops[id as usize]
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }
}

/// A routing tree stored as registry ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactTree {
    pub session: usize,
    pub scheme: Scheme,
    pub source: u32,
    pub hops: Vec<u32>,
}

impl CompactTree {
    pub fn compact(tree: &RoutingTree, reg: &mut LinkRegistry) -> Self {
        CompactTree {
            session: tree.session,
            scheme: tree.scheme,
            source: tree.source,
            hops: tree.hops.iter().map(|&h| reg.intern(h)).collect(),
        }
    }

    pub fn expand(&self, reg: &LinkRegistry) -> RoutingTree {
        RoutingTree {
            session: self.session,
            scheme: self.scheme,
            source: self.source,
            hops: self.hops.iter().map(|&i| reg.hop(i)).collect(),
        }
    }
}

fn layer_slot(layer: Layer) -> usize {
    match layer {
        Layer::Access => 0,
        Layer::Arterial => 1,
        Layer::Highway => 2,
    }
}

/// Number of distinct sessions per hop and per node of each layer.
///
/// A node's load in a layer counts the sessions with at least one hop of
/// that layer incident to it.
#[derive(Debug, Clone, Default)]
pub struct LoadMap {
    link: Vec<u32>,
    station: [FxHashMap<u32, u32>; 3],
}

impl LoadMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one session's tree; its hops must be distinct.
    pub fn add(&mut self, tree: &CompactTree, reg: &LinkRegistry) {
        if self.link.len() < reg.len() {
            self.link.resize(reg.len(), 0);
        }
        let mut touched: FxHashSet<(usize, u32)> = FxHashSet::default();
        for &id in &tree.hops {
            self.link[id as usize] += 1;
            let h = reg.hop(id);
            let l = layer_slot(h.layer());
            touched.insert((l, h.tx));
            touched.insert((l, h.rx));
        }
        for (l, node) in touched {
            *self.station[l].entry(node).or_insert(0) += 1;
        }
    }

    pub fn load(&self, id: u32) -> u32 {
        self.link.get(id as usize).copied().unwrap_or(0)
    }

    pub fn link_loads(&self) -> &[u32] {
        &self.link
    }

    pub fn max_link_load(&self) -> u32 {
        self.link.iter().copied().max().unwrap_or(0)
    }

    pub fn station_load(&self, layer: Layer, node: u32) -> u32 {
        self.station[layer_slot(layer)].get(&node).copied().unwrap_or(0)
    }

    pub fn max_station_load(&self, layer: Layer) -> u32 {
        self.station[layer_slot(layer)].values().copied().max().unwrap_or(0)
    }
}

/// Registry, compacted trees and loads of a set of trees.
pub fn load_map(trees: &[RoutingTree]) -> (LinkRegistry, Vec<CompactTree>, LoadMap) {
    let mut reg = LinkRegistry::new();
    let mut loads = LoadMap::new();
    let mut out = Vec::with_capacity(trees.len());
    for t in trees {
        let c = CompactTree::compact(t, &mut reg);
        loads.add(&c, &reg);
        out.push(c);
    }
    (reg, out, loads)
}

/// Per-session rates and the network throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    /// `min` over hops of rate / load; `None` for a session without hops.
    pub per_session: Vec<Option<f64>>,
    /// Minimum per-session rate.
    pub throughput: f64,
    /// Layer of the hop limiting the slowest session.
    pub bottleneck: Layer,
}

/// Applies the load model: each hop's sustained rate is shared equally by
/// the sessions using it. `rates` is indexed by registry id.
pub fn measure_throughput(
    trees: &[CompactTree],
    reg: &LinkRegistry,
    loads: &LoadMap,
    rates: &[f64],
) -> Result<ThroughputReport> {
    let mut per_session = Vec::with_capacity(trees.len());
    let mut best: Option<(f64, Layer)> = None;
    for t in trees {
        let mut low: Option<(f64, Layer)> = None;
        for &id in &t.hops {
            let r = rates.get(id as usize).copied().unwrap_or(f64::NAN);
            let load = loads.load(id);
            if !(r.is_finite() && r > 0.0) || load == 0 {
                return Err(Error::state(format!(
                    "hop {:?} has rate {r} and load {load}",
                    reg.hop(id)
                )));
            }
            let share = r / f64::from(load);
            if low.is_none_or(|(v, _)| share < v) {
                low = Some((share, reg.hop(id).layer()));
            }
        }
        per_session.push(low.map(|x| x.0));
        if let Some((v, layer)) = low {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, layer));
            }
        }
    }
    let (throughput, bottleneck) = best.ok_or_else(|| Error::state("no session uses any link"))?;
    Ok(ThroughputReport {
        per_session,
        throughput,
        bottleneck,
    })
}

/// Everything measured for one scheme.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub report: ThroughputReport,
    /// Schedules time-shared by the scheme; every sustained rate is divided by it.
    pub phases: usize,
    pub registry: LinkRegistry,
    pub trees: Vec<CompactTree>,
    pub loads: LoadMap,
}

impl SchemeOutcome {
    pub fn max_station_load(&self, layer: Layer) -> u32 {
        self.loads.max_station_load(layer)
    }

    pub fn routing_trees(&self) -> Vec<RoutingTree> {
        self.trees.iter().map(|t| t.expand(&self.registry)).collect()
    }
}

fn rate_table(params: &ChannelParams, sched: &TdmaSchedule, d: &Deployment) -> Result<FxHashMap<Link, f64>> {
    let rates = sustained_rates(params, sched, d.points())?;
    Ok(sched.links().iter().copied().zip(rates).collect())
}

const CHUNK: usize = 2048;

/// Routes every session under `scheme` and measures the resulting rates.
///
/// Access, road, highway and (for parallel roads) switch hops are served by
/// separate TDMA schedules that take turns. Road and highway schedules are
/// static, with highway entries and exits on the road schedule; the switch
/// schedule holds only the switches in use, one unit per transmitting
/// station.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_scheme(
    d: &Deployment,
    ar: &ArterialSystem,
    hs: Option<&HighwaySystem>,
    access: &AccessPathSet,
    params: &ChannelParams,
    sessions: &[MulticastSession],
    scheme: Scheme,
    skeleton: Skeleton,
) -> Result<SchemeOutcome> {
    if access.kind != ar.kind() {
        return Err(Error::state("access paths were built for other arterial roads"));
    }
    let router = Router::new(d, ar, if scheme.uses_highways() { hs } else { None })?;
    let mut registry = LinkRegistry::new();
    let mut loads = LoadMap::new();
    let mut trees = Vec::with_capacity(sessions.len());
    for chunk in sessions.chunks(CHUNK) {
        let routed: Vec<RoutingTree> = chunk
            .par_iter()
            .map(|s| router.route(s, scheme, skeleton))
            .collect::<Result<_>>()?;
        for t in &routed {
            let c = CompactTree::compact(t, &mut registry);
            loads.add(&c, &registry);
            trees.push(c);
        }
    }

    let mut connectors = router.entry_links();
    connectors.extend(router.exit_links());
    let ar_rates = rate_table(params, &arterial_schedule(ar, d, &connectors)?, d)?;
    let hw_rates = match (scheme.uses_highways(), hs) {
        (true, Some(hs)) => rate_table(params, &highway_schedule(hs, d, &router.transfer_links())?, d)?,
        _ => FxHashMap::default(),
    };
    let mut switches: Vec<Link> = registry
        .hops()
        .iter()
        .filter(|h| h.kind == HopKind::Switch)
        .map(|h| h.link())
        .collect();
    switches.sort_unstable();
    let sw_rates = if switches.is_empty() {
        FxHashMap::default()
    } else {
        let w = ar.lattice().cell_side();
        let a = reuse_side(2.0 * std::f64::consts::SQRT_2 / 3.0 * w, w);
        let mut b = TdmaBuilder::new(a * a);
        let pts = d.points();
        for &l in &switches {
            let (r, c) = ar.lattice().cell_of(pts[l.0 as usize]);
            b.add(l, ar.lattice().color(r, c, a), u64::from(l.0))?;
        }
        rate_table(params, &b.build(), d)?
    };
    let phases = 2 + usize::from(scheme.uses_highways()) + usize::from(scheme.is_parallel());
    let share = phases as f64;
    let rates: Vec<f64> = registry
        .hops()
        .iter()
        .map(|h| {
            let l = h.link();
            let r = match h.kind {
                HopKind::Access => access.rate(l),
                HopKind::Road | HopKind::Entry | HopKind::Exit => ar_rates.get(&l).copied(),
                HopKind::Switch => sw_rates.get(&l).copied(),
                HopKind::Highway | HopKind::Transfer => hw_rates.get(&l).copied(),
            };
            r.map_or(f64::NAN, |r| r / share)
        })
        .collect();
    let report = measure_throughput(&trees, &registry, &loads, &rates)?;
    Ok(SchemeOutcome {
        scheme,
        report,
        phases,
        registry,
        trees,
        loads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbones::{build_access, build_arterial, build_highways, default_c, ArKind};
    use crate::routing::generate_sessions;
    use crate::spatial::sample_deployment;

    fn tree(session: usize, hops: &[(u32, u32)]) -> RoutingTree {
        RoutingTree {
            session,
            scheme: Scheme::O,
            source: hops[0].0,
            hops: hops.iter().map(|&(tx, rx)| Hop { tx, rx, kind: HopKind::Road }).collect(),
        }
    }

    #[test]
    fn single_hop_single_session() {
        let (reg, trees, loads) = load_map(&[tree(0, &[(0, 1)])]);
        let r = measure_throughput(&trees, &reg, &loads, &[2.5]).unwrap();
        assert_eq!(r.throughput, 2.5);
        assert_eq!(r.bottleneck, Layer::Arterial);
    }

    #[test]
    fn shared_hop_halves_rate() {
        let (reg, trees, loads) = load_map(&[tree(0, &[(0, 1)]), tree(1, &[(0, 1), (1, 2)])]);
        assert_eq!(loads.link_loads(), &[2, 1]);
        let r = measure_throughput(&trees, &reg, &loads, &[1.0, 1.0]).unwrap();
        assert_eq!(r.per_session, vec![Some(0.5), Some(0.5)]);
        assert_eq!(loads.station_load(Layer::Arterial, 1), 2);
        assert_eq!(loads.max_station_load(Layer::Arterial), 2);
        assert_eq!(loads.max_station_load(Layer::Highway), 0);
    }

    #[test]
    fn disjoint_trees_have_unit_loads() {
        let ts: Vec<RoutingTree> = (0..5).map(|k| tree(k, &[(10 * k as u32, 10 * k as u32 + 1)])).collect();
        let (_, _, loads) = load_map(&ts);
        assert!(loads.link_loads().iter().all(|&l| l == 1));
    }

    #[test]
    fn sessions_through_one_cell_load_its_station() {
        let ts: Vec<RoutingTree> = (0..7).map(|k| tree(k, &[(100 + k as u32, 1), (1, 200 + k as u32)])).collect();
        let (_, _, loads) = load_map(&ts);
        assert_eq!(loads.station_load(Layer::Arterial, 1), 7);
    }

    #[test]
    fn missing_rate_is_an_error() {
        let (reg, trees, loads) = load_map(&[tree(0, &[(0, 1)])]);
        assert!(measure_throughput(&trees, &reg, &loads, &[]).is_err());
        let (reg, trees, loads) = load_map(&[]);
        assert!(measure_throughput(&trees, &reg, &loads, &[]).is_err());
    }

    #[test]
    fn end_to_end_all_schemes() {
        let d = sample_deployment(1 << 13, 1.0, 31).unwrap();
        let hs = build_highways(&d, default_c(), 2.0).unwrap();
        let params = ChannelParams::default();
        let sessions = generate_sessions(&d, 64, 4, 2).unwrap();
        for kind in [ArKind::Ordinary, ArKind::Parallel] {
            let ar = build_arterial(&d, kind).unwrap();
            let acc = build_access(&d, &ar, &params).unwrap();
            let schemes = if kind == ArKind::Ordinary { [Scheme::O, Scheme::OH] } else { [Scheme::P, Scheme::PH] };
            for scheme in schemes {
                let a = evaluate_scheme(&d, &ar, Some(&hs), &acc, &params, &sessions, scheme, Skeleton::Est).unwrap();
                assert!(a.report.throughput > 0.0 && a.report.throughput.is_finite());
                assert_eq!(a.trees.len(), sessions.len());
                let b = evaluate_scheme(&d, &ar, Some(&hs), &acc, &params, &sessions, scheme, Skeleton::Est).unwrap();
                assert_eq!(a.report, b.report);
                // fewer sessions never lowers any remaining session's rate
                let c = evaluate_scheme(&d, &ar, Some(&hs), &acc, &params, &sessions[..32], scheme, Skeleton::Est)
                    .unwrap();
                for (x, y) in c.report.per_session.iter().zip(&a.report.per_session) {
                    if let (Some(x), Some(y)) = (x, y) {
                        assert!(x >= y, "{scheme}: {x} < {y}");
                    }
                }
            }
        }
    }
}
