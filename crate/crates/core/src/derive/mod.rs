//! Deriving FLOW models from other sources: process models, interview
//! records, and product dependencies.

pub mod cut;
pub mod document_flows;
pub mod elicitation;
pub mod process;
pub mod roles;

pub use cut::{integration_cut, CutError, CutResult};
pub use document_flows::{derive_document_flows, Derivation, DocumentPair, Finding};
pub use elicitation::{
    ingest_elicitation, parse_records, ElicitationEntry, ElicitationError, ElicitationRecord,
};
pub use process::{parse_process, ProcessError, ProcessModel, RoleKind};
pub use roles::augment_role_flows;
