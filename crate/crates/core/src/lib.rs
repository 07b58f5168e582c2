//! FLOW information-flow models.
//!
//! The crate holds the notation ([`model`]), its validation rules
//! ([`validate`]), the text format and DOT export ([`dsl`]), derivation of
//! models from process descriptions and interviews ([`derive`]), pattern
//! search and Soll/Ist comparison ([`analysis`]), the software-quanta
//! simulation ([`sim`]), model assembly ([`merge`]), improvement rewrites
//! ([`transform`]) and technique selection over the goal cube ([`goals`]).
//!
//! Everything here is a pure function over immutable values.

pub mod analysis;
pub mod derive;
pub mod dsl;
pub mod goals;
pub mod merge;
pub mod model;
pub mod sim;
pub mod transform;
pub mod validate;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use model::{
    normalize_name, Activity, AggregateState, Attachment, Flow, FlowModel, InformationStore,
    ModelKind, Multiplicity, NodeRef, ObservationScope, Site,
};
pub use validate::{validate, Rule, Severity, Violation};
