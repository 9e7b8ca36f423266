//! SINR link rates and TDMA schedules.

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::spatial::{Point, SchemeLattice};
use crate::{Error, Result};

/// Path-loss regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attenuation {
    /// `l(x) = x^-alpha`.
    Dense,
    /// `l(x) = min(1, x^-alpha)`.
    #[default]
    Extended,
}

/// Physical-layer constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub power: f64,
    pub noise: f64,
    pub bandwidth: f64,
    pub alpha: f64,
    pub attenuation: Attenuation,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            power: 1.0,
            noise: 1.0,
            bandwidth: 1.0,
            alpha: 3.0,
            attenuation: Attenuation::Extended,
        }
    }
}

impl ChannelParams {
    pub fn new(
        power: f64,
        noise: f64,
        bandwidth: f64,
        alpha: f64,
        attenuation: Attenuation,
    ) -> Result<Self> {
        let p = ChannelParams {
            power,
            noise,
            bandwidth,
            alpha,
            attenuation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::param(format!("alpha must exceed 2, got {}", self.alpha)));
        }
        for (name, v) in [("P", self.power), ("N0", self.noise), ("B", self.bandwidth)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Attenuation at distance `x`.
    #[inline]
    pub fn gain(&self, x: f64) -> f64 {
        let g = x.powf(-self.alpha);
        match self.attenuation {
            Attenuation::Dense => g,
            Attenuation::Extended => g.min(1.0),
        }
    }
}

/// `B * log2(1 + SINR)` for a transmission `tx -> rx` with concurrent
/// transmitters at `interferers`.
pub fn link_rate(params: &ChannelParams, tx: Point, rx: Point, interferers: &[Point]) -> Result<f64> {
    let d = tx.dist(rx);
    if d == 0.0 {
        return Err(Error::param("zero-length link"));
    }
    let interference: f64 = interferers
        .iter()
        .map(|&x| params.power * params.gain(x.dist(rx)))
        .sum();
    Ok(rate_from(params, d, interference))
}

#[inline]
fn rate_from(params: &ChannelParams, d: f64, interference: f64) -> f64 {
    let sinr = params.power * params.gain(d) / (params.noise + interference);
    params.bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Slot of every lattice address under the `sqrt(k) x sqrt(k)` periodic
/// colouring, indexed like [`SchemeLattice::index`].
pub fn tdma_color(lat: &SchemeLattice, k: usize) -> Result<Vec<usize>> {
    let a = tdma_side(k)?;
    let mut out = vec![0; lat.rows() * lat.cols()];
    for r in 0..lat.rows() {
        for c in 0..lat.cols() {
            out[lat.index(r, c)] = lat.color(r, c, a);
        }
    }
    Ok(out)
}

/// Smallest colouring side `a` with `(a - 1) * cell >= 2 * max_link`: any
/// receiver is then at least one link length away from every other
/// transmitter of its slot.
pub fn reuse_side(max_link: f64, cell: f64) -> usize {
    (2.0 * max_link / cell - 1e-9).ceil().max(1.0) as usize + 1
}

/// `sqrt(k)` for a perfect-square period.
pub fn tdma_side(k: usize) -> Result<usize> {
    let a = (k as f64).sqrt().round() as usize;
    if k == 0 || a * a != k {
        return Err(Error::param(format!("TDMA period {k} is not a perfect square")));
    }
    Ok(a)
}

/// A directed physical link between two nodes.
pub type Link = (u32, u32);

/// Links active in one `(slot, subslot)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulingSet {
    pub slot: usize,
    pub subslot: usize,
    pub links: Vec<Link>,
}

impl SchedulingSet {
    /// No transmitter repeats and no receiver also transmits.
    pub fn is_valid(&self) -> bool {
        let mut tx: Vec<u32> = self.links.iter().map(|l| l.0).collect();
        tx.sort_unstable();
        if tx.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        self.links.iter().all(|l| tx.binary_search(&l.1).is_err())
    }
}

/// Assignment of links to `(slot, subslot)` pairs within a period.
#[derive(Debug, Clone, Default)]
pub struct TdmaSchedule {
    period: usize,
    subslots_per_slot: usize,
    links: Vec<Link>,
    assignment: Vec<(u32, u32)>,
    index: FxHashMap<Link, u32>,
}

impl TdmaSchedule {
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn subslots_per_slot(&self) -> usize {
        self.subslots_per_slot
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: Link) -> bool {
        self.index.contains_key(&link)
    }

    /// `(slot, subslot)` of a scheduled link.
    pub fn slot_of(&self, link: Link) -> Option<(usize, usize)> {
        self.index.get(&link).map(|&i| {
            let (s, u) = self.assignment[i as usize];
            (s as usize, u as usize)
        })
    }

    /// Link ids grouped by `(slot, subslot)`, in slot order.
    fn groups(&self) -> Vec<Vec<u32>> {
        let mut keyed: Vec<((u32, u32), u32)> = self
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, i as u32))
            .collect();
        keyed.sort_unstable();
        let mut out: Vec<Vec<u32>> = Vec::new();
        let mut last = None;
        for (k, i) in keyed {
            if last != Some(k) {
                out.push(Vec::new());
                last = Some(k);
            }
            out.last_mut().unwrap().push(i);
        }
        out
    }

    /// The schedule as scheduling sets, one per occupied `(slot, subslot)`.
    pub fn scheduling_sets(&self) -> Vec<SchedulingSet> {
        self.groups()
            .into_iter()
            .map(|g| {
                let (slot, subslot) = self.assignment[g[0] as usize];
                SchedulingSet {
                    slot: slot as usize,
                    subslot: subslot as usize,
                    links: g.iter().map(|&i| self.links[i as usize]).collect(),
                }
            })
            .collect()
    }
}

/// Builds a [`TdmaSchedule`].
///
/// Links are added with a slot and a unit key. Links of one unit share a
/// single transmission opportunity per slot, so they are serialised into
/// subslots; distinct units transmit concurrently. A link also avoids any
/// subslot where one of its endpoints already transmits or its receiver
/// already receives. Each link takes the first admissible subslot.
#[derive(Debug, Clone)]
pub struct TdmaBuilder {
    period: usize,
    links: Vec<Link>,
    assignment: Vec<(u32, u32)>,
    index: FxHashMap<Link, u32>,
    units: FxHashSet<(u32, u32, u64)>,
    cursor: FxHashMap<(u32, u64), u32>,
    sending: FxHashSet<(u32, u32, u32)>,
    receiving: FxHashSet<(u32, u32, u32)>,
    subslots: u32,
}

impl TdmaBuilder {
    pub fn new(period: usize) -> Self {
        TdmaBuilder {
            period: period.max(1),
            links: Vec::new(),
            assignment: Vec::new(),
            index: FxHashMap::default(),
            units: FxHashSet::default(),
            cursor: FxHashMap::default(),
            sending: FxHashSet::default(),
            receiving: FxHashSet::default(),
            subslots: 1,
        }
    }

    /// Schedules `link` in `slot` under `unit`; a link already present keeps
    /// its first assignment.
    pub fn add(&mut self, link: Link, slot: usize, unit: u64) -> Result<()> {
        if slot >= self.period {
            return Err(Error::param(format!("slot {slot} outside period {}", self.period)));
        }
        if link.0 == link.1 {
            return Err(Error::param("self-loop link"));
        }
        if self.index.contains_key(&link) {
            return Ok(());
        }
        let slot = slot as u32;
        let (tx, rx) = link;
        let start = self.cursor.get(&(slot, unit)).copied().unwrap_or(0);
        let mut sub = start;
        while self.units.contains(&(slot, sub, unit))
            || self.sending.contains(&(slot, sub, tx))
            || self.sending.contains(&(slot, sub, rx))
            || self.receiving.contains(&(slot, sub, tx))
            || self.receiving.contains(&(slot, sub, rx))
        {
            sub += 1;
        }
        self.units.insert((slot, sub, unit));
        self.sending.insert((slot, sub, tx));
        self.receiving.insert((slot, sub, rx));
        if sub == start {
            let mut c = start + 1;
            while self.units.contains(&(slot, c, unit)) {
                c += 1;
            }
            self.cursor.insert((slot, unit), c);
        }
        self.subslots = self.subslots.max(sub + 1);
        self.index.insert(link, self.links.len() as u32);
        self.links.push(link);
        self.assignment.push((slot, sub));
        Ok(())
    }

    pub fn build(self) -> TdmaSchedule {
        let subslots = self.subslots as usize;
        TdmaSchedule {
            period: self.period,
            subslots_per_slot: subslots,
            links: self.links,
            assignment: self.assignment,
            index: self.index,
        }
    }
}

/// Time-shared rate of one scheduled link: its SINR rate against the other
/// links of its `(slot, subslot)`, divided by `period * subslots_per_slot`.
pub fn sustained_rate(
    params: &ChannelParams,
    sched: &TdmaSchedule,
    link: Link,
    points: &[Point],
) -> Result<f64> {
    let (slot, sub) = sched
        .slot_of(link)
        .ok_or_else(|| Error::param(format!("link {link:?} is not scheduled")))?;
    let interferers: Vec<Point> = sched
        .links
        .iter()
        .zip(&sched.assignment)
        .filter(|(l, a)| **l != link && a.0 as usize == slot && a.1 as usize == sub)
        .map(|(l, _)| points[l.0 as usize])
        .collect();
    let r = link_rate(params, points[link.0 as usize], points[link.1 as usize], &interferers)?;
    Ok(r / (sched.period * sched.subslots_per_slot) as f64)
}

/// [`sustained_rate`] for every link, aligned with [`TdmaSchedule::links`].
pub fn sustained_rates(
    params: &ChannelParams,
    sched: &TdmaSchedule,
    points: &[Point],
) -> Result<Vec<f64>> {
    let share = (sched.period * sched.subslots_per_slot) as f64;
    let groups = sched.groups();
    let per_group: Vec<Vec<(u32, f64)>> = groups
        .par_iter()
        .map(|g| {
            let tx: Vec<Point> = g.iter().map(|&i| points[sched.links[i as usize].0 as usize]).collect();
            g.iter()
                .enumerate()
                .map(|(k, &i)| {
                    let (a, b) = sched.links[i as usize];
                    let (pa, pb) = (points[a as usize], points[b as usize]);
                    let interference: f64 = tx
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, &x)| params.power * params.gain(x.dist(pb)))
                        .sum();
                    let d = pa.dist(pb);
                    let r = if d == 0.0 { f64::NAN } else { rate_from(params, d, interference) };
                    (i, r / share)
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; sched.links.len()];
    for (i, r) in per_group.into_iter().flatten() {
        if r.is_nan() {
            let (a, b) = sched.links[i as usize];
            return Err(Error::param(format!("zero-length link ({a}, {b})")));
        }
        out[i as usize] = r;
    }
    Ok(out)
}

/// Writes `slot,subslot,tx,rx,rate` rows for a schedule.
pub fn write_rate_table<W: std::io::Write>(
    out: W,
    sched: &TdmaSchedule,
    rates: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "subslot", "tx", "rx", "rate"])?;
    for ((l, a), r) in sched.links.iter().zip(&sched.assignment).zip(rates) {
        w.write_record([
            a.0.to_string(),
            a.1.to_string(),
            l.0.to_string(),
            l.1.to_string(),
            r.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
