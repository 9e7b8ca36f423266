use rustc_hash::FxHashMap;

use super::{ArKind, ArterialSystem};
use crate::channel::{reuse_side, sustained_rates, ChannelParams, Link, TdmaBuilder, TdmaSchedule};
use crate::spatial::Deployment;
use crate::Result;

/// Single-hop links between ordinary nodes and their stations.
#[derive(Debug, Clone)]
pub struct AccessPathSet {
    pub kind: ArKind,
    /// Node to its draining station; `None` for stations (zero hops).
    pub draining: Vec<Option<Link>>,
    /// Delivering station to node; `None` for stations.
    pub delivering: Vec<Option<Link>>,
    pub schedule: TdmaSchedule,
    rates: FxHashMap<Link, f64>,
}

impl AccessPathSet {
    /// Sustained rate of an access link.
    pub fn rate(&self, link: Link) -> Option<f64> {
        self.rates.get(&link).copied()
    }
}

/// Wires access links and schedules them.
///
/// Links are coloured by their transmitter's AR-cell with side
/// [`reuse_side`] of the longest access hop. Ordinary: one unit per cell
/// carrying both its draining and delivering links. Parallel: a draining
/// phase then a delivering phase, one unit per station.
pub fn build_access(d: &Deployment, ar: &ArterialSystem, params: &ChannelParams) -> Result<AccessPathSet> {
    params.validate()?;
    let n = d.len();
    let lat = ar.lattice();
    let w = lat.cell_side();
    let mut draining = vec![None; n];
    let mut delivering = vec![None; n];
    let (a, phases) = match ar.kind() {
        ArKind::Ordinary => (reuse_side(std::f64::consts::SQRT_2 * w, w), 1),
        ArKind::Parallel => (reuse_side(5f64.sqrt() * w, w), 2),
    };
    let per_phase = a * a;
    let mut b = TdmaBuilder::new(per_phase * phases);
    for u in 0..n as u32 {
        let (r, c) = ar.cell_of(u);
        let s = ar.drain_station(u);
        if s != u {
            let unit = match ar.kind() {
                ArKind::Ordinary => lat.index(r, c) as u64,
                ArKind::Parallel => s as u64,
            };
            b.add((u, s), lat.color(r, c, a), unit)?;
            draining[u as usize] = Some((u, s));
        }
        let t = ar.deliver_station(u);
        if t != u {
            let (tr, tc) = ar.cell_of(t);
            let (offset, unit) = match ar.kind() {
                ArKind::Ordinary => (0, lat.index(r, c) as u64),
                ArKind::Parallel => (per_phase, t as u64),
            };
            b.add((t, u), offset + lat.color(tr, tc, a), unit)?;
            delivering[u as usize] = Some((t, u));
        }
    }
    let schedule = b.build();
    let r = sustained_rates(params, &schedule, d.points())?;
    let rates = schedule.links().iter().copied().zip(r).collect();
    Ok(AccessPathSet {
        kind: ar.kind(),
        draining,
        delivering,
        schedule,
        rates,
    })
}
