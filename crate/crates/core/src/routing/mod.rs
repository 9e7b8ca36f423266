//! Multicast sessions, spanning skeletons, routing trees and throughput.

mod est;
mod measure;
mod route;
mod sessions;

pub use est::{est, est_bound, Skeleton};
pub use measure::{
    evaluate_scheme, load_map, measure_throughput, CompactTree, LinkRegistry, LoadMap,
    SchemeOutcome, ThroughputReport,
};
pub use route::{route, Router};
pub use sessions::{generate_sessions, MulticastSession};

use std::fmt;
use std::str::FromStr;

use crate::channel::Link;
use crate::{Error, Result};

/// The four routing schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Ordinary arterial roads only.
    O,
    /// Parallel arterial roads only.
    P,
    /// Ordinary arterial roads feeding highways.
    OH,
    /// Parallel arterial roads feeding highways.
    PH,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::O, Scheme::P, Scheme::OH, Scheme::PH];

    pub fn uses_highways(self) -> bool {
        matches!(self, Scheme::OH | Scheme::PH)
    }

    pub fn is_parallel(self) -> bool {
        matches!(self, Scheme::P | Scheme::PH)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::O => "o",
            Scheme::P => "p",
            Scheme::OH => "o&h",
            Scheme::PH => "p&h",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o" => Ok(Scheme::O),
            "p" => Ok(Scheme::P),
            "oh" | "o&h" => Ok(Scheme::OH),
            "ph" | "p&h" => Ok(Scheme::PH),
            other => Err(Error::param(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Structure a physical hop belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Access,
    Arterial,
    Highway,
}

impl Layer {
    pub fn name(self) -> &'static str {
        match self {
            Layer::Access => "access",
            Layer::Arterial => "ar",
            Layer::Highway => "highway",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Finer hop classification; each class is scheduled by one schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum HopKind {
    /// Draining or delivering access link.
    Access,
    /// Station-to-station hop along an arterial road.
    Road,
    /// Rank change between two parallel stations of one cell.
    Switch,
    /// Arterial station onto a highway station.
    Entry,
    /// Station-to-station hop along a highway.
    Highway,
    /// Horizontal highway onto a vertical highway.
    Transfer,
    /// Highway station onto an arterial station.
    Exit,
}

impl HopKind {
    pub fn layer(self) -> Layer {
        match self {
            HopKind::Access => Layer::Access,
            HopKind::Road | HopKind::Switch | HopKind::Entry | HopKind::Exit => Layer::Arterial,
            HopKind::Highway | HopKind::Transfer => Layer::Highway,
        }
    }
}

/// A directed physical hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hop {
    pub tx: u32,
    pub rx: u32,
    pub kind: HopKind,
}

impl Hop {
    pub fn link(self) -> Link {
        (self.tx, self.rx)
    }

    pub fn layer(self) -> Layer {
        self.kind.layer()
    }
}

/// Merged, pruned hop set carrying one session from its source to every
/// destination.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    pub session: usize,
    pub scheme: Scheme,
    pub source: u32,
    pub hops: Vec<Hop>,
}

/// Writes `session,scheme,layer,tx,rx` rows.
pub fn write_tree_dump<W: std::io::Write>(out: W, trees: &[RoutingTree]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["session", "scheme", "layer", "tx", "rx"])?;
    for t in trees {
        for h in &t.hops {
            w.write_record([
                t.session.to_string(),
                t.scheme.to_string(),
                h.layer().to_string(),
                h.tx.to_string(),
                h.rx.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
