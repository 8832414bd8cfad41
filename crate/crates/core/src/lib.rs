//! Gossip-based distributed slicing.
//!
//! Two families of protocols let every node of a large, dynamic network work
//! out which slice of an attribute-ordered partition it belongs to:
//!
//! * the *ordering* protocols ([`ordering`]) swap uniform random values
//!   between misplaced neighbours until the random sequence mirrors the
//!   attribute sequence (`JK`, and `mod-JK` which picks the neighbour whose
//!   swap most reduces the local disorder);
//! * the *ranking* protocol ([`ranking`]) estimates each node's normalized
//!   rank from the stream of attribute values it observes, optionally over a
//!   sliding window of one-bit observations.
//!
//! Both run on top of a peer-sampling service ([`sampling`]) inside a
//! deterministic cycle-based simulator ([`engine`]) with churn and message
//! overlap. [`metrics`] holds the omniscient disorder measures and
//! [`analysis`] the closed-form bounds with their Monte-Carlo checks.

pub mod analysis;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod ordering;
pub mod presets;
pub mod ranking;
pub mod report;
pub mod rng;
pub mod sampling;

pub use engine::{run, RunOutput, SimConfig, SimError, Simulation};
pub use metrics::CycleMetrics;
pub use model::{NodeId, SliceSpec, View, ViewEntry};
