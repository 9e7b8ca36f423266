//! Multicast capacity scaling for random wireless ad hoc networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`spatial`] samples Poisson deployments over `[0, sqrt(n/lambda)]^2`,
//!   indexes them, and builds exact Euclidean minimum spanning trees.
//! * [`percolation`] clusters the Boolean model, measures the distance of
//!   exterior nodes to the giant component and extracts disjoint open
//!   crossings of a cell grid.
//! * [`channel`] evaluates SINR link rates and TDMA schedules.
//! * [`backbones`] builds highways, ordinary and parallel arterial roads and
//!   the access paths that connect ordinary nodes to them.
//! * [`routing`] generates multicast sessions, builds routing trees under the
//!   four schemes and measures the resulting per-session throughput.
//! * [`bounds`] evaluates the closed-form order functions, the capacity upper
//!   bound and the achievable lower bound.
//! * [`harness`] parses experiment configurations, runs seeded sweeps and
//!   writes CSV output.

pub mod backbones;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod harness;
pub mod percolation;
pub mod routing;
pub mod spatial;

pub use error::{Error, Result};
