//! Highways, arterial roads, access paths and backbone assignment.

mod access;
mod arterial;
mod assign;
mod highway;

pub use access::{build_access, AccessPathSet};
pub use arterial::{arterial_schedule, build_arterial, road_reach, ArKind, ArterialSystem, Road};
pub use assign::{assign_backbones, Assignment};
pub use highway::{
    build_highways, default_c, default_kappa, highway_schedule, Highway, HighwaySystem, Slab,
    Transfer,
};

use std::io::Write;

use crate::Result;

/// Writes `system,road_id,hop_index,station_node_index` rows for every road
/// and highway.
pub fn write_backbone_dump<W: Write>(
    out: W,
    ar: Option<&ArterialSystem>,
    hs: Option<&HighwaySystem>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "road_id", "hop_index", "station_node_index"])?;
    if let Some(ar) = ar {
        let name = match ar.kind() {
            ArKind::Ordinary => "o-ar",
            ArKind::Parallel => "p-ar",
        };
        for (id, road) in ar.roads().iter().enumerate() {
            for (k, s) in ar.road_stations(*road).iter().enumerate() {
                w.write_record([name.to_string(), id.to_string(), k.to_string(), s.to_string()])?;
            }
        }
    }
    if let Some(hs) = hs {
        for (name, list) in [("highway-h", &hs.horizontal), ("highway-v", &hs.vertical)] {
            for (id, h) in list.iter().enumerate() {
                for (k, s) in h.station_path().iter().enumerate() {
                    w.write_record([name.to_string(), id.to_string(), k.to_string(), s.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
