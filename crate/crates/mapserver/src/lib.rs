//! FLOW-Mapping service.
//!
//! Keeps the yellow pages of a distributed team, ingests communication
//! events from any source, and derives observed (Ist) FLOW-Maps from them.
//! Maps are built from who communicated when and how long; the content of
//! the communication is never captured and cannot be inferred.

pub mod conformance;
pub mod ist;
pub mod server;
pub mod state;
pub mod tail;
pub mod types;

pub use conformance::{check_plan, conformance_check, occurrences};
pub use ist::{build_ist_map, thickness, Thickness};
pub use server::{router, serve, ServerConfig};
pub use state::{
    Clock, FixedClock, LogRecord, MapService, MapState, Outcome, ServiceConfig, StateError,
    SystemClock,
};
pub use types::*;

#[cfg(feature = "testkit")]
pub mod synth;
