use super::{ArKind, ArterialSystem, HighwaySystem, Road};
use crate::percolation::Direction;
use crate::spatial::Deployment;
use crate::Result;

/// Backbones used to carry a packet from `u` to `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    /// Vertical road through `u`'s draining station.
    pub ar_vertical_u: Road,
    /// Horizontal highway mapped to `u`'s horizontal slice.
    pub highway_horizontal_u: usize,
    /// Vertical highway mapped to `v`'s vertical slice.
    pub highway_vertical_v: usize,
    /// Horizontal road through `v`'s delivering station.
    pub ar_horizontal_v: Road,
}

/// Deterministic backbone lookup for a source/destination pair.
pub fn assign_backbones(
    hs: &HighwaySystem,
    ar: &ArterialSystem,
    d: &Deployment,
    u: u32,
    v: u32,
) -> Result<Assignment> {
    let pts = d.points();
    let su = ar.drain_station(u);
    let sv = ar.deliver_station(v);
    let rank = |s: u32| match ar.kind() {
        ArKind::Ordinary => 0,
        ArKind::Parallel => ar.rank_of(s).unwrap_or(0),
    };
    Ok(Assignment {
        ar_vertical_u: Road {
            dir: Direction::Vertical,
            line: ar.cell_of(su).1,
            rank: rank(su),
        },
        highway_horizontal_u: hs.horizontal_for(pts[u as usize])?,
        highway_vertical_v: hs.vertical_for(pts[v as usize])?,
        ar_horizontal_v: Road {
            dir: Direction::Horizontal,
            line: ar.cell_of(sv).0,
            rank: rank(sv),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbones::{build_arterial, build_highways, default_c};
    use crate::spatial::sample_deployment;

    #[test]
    fn same_cell_same_roads_and_stable() {
        let d = sample_deployment(1 << 13, 1.0, 21).unwrap();
        let ar = build_arterial(&d, ArKind::Ordinary).unwrap();
        let hs = build_highways(&d, default_c(), 2.0).unwrap();
        assert!(hs.complete);
        let s = ar.station(1, 1, 0);
        let others: Vec<u32> = (0..d.len() as u32).filter(|&u| ar.cell_of(u) == (1, 1)).take(3).collect();
        let a = assign_backbones(&hs, &ar, &d, others[0], others[1]).unwrap();
        let b = assign_backbones(&hs, &ar, &d, others[1], others[2]).unwrap();
        assert_eq!(a.ar_vertical_u, b.ar_vertical_u);
        assert_eq!(a.ar_horizontal_v, b.ar_horizontal_v);
        assert_eq!(a.ar_vertical_u.line, ar.cell_of(s).1);
        let again = assign_backbones(&hs, &ar, &d, others[0], others[1]).unwrap();
        assert_eq!(a, again);
    }
}
