//! Built-in FLOW pattern signatures.
//!
//! The published pattern catalog describes these patterns in prose only; the
//! structures below are this crate's conventions. They are data, so a user
//! catalog loaded from JSON can replace them.

use super::matcher::{scan, MatchResult};
use super::template::{
    ChainSpec, DegreeConstraint, DegreeDirection, EdgeConstraint, NodeConstraint, PathSpec,
    PatternTemplate, Polarity,
};
use crate::model::{AggregateState::*, Attachment, FlowModel};

pub const TOTES_DOKUMENT: &str = "Totes Dokument";
pub const STILLE_POST: &str = "Stille Post";
pub const BUEROKRATIE: &str = "Bürokratie";
pub const OSMOSE: &str = "Osmose";
pub const LEICHTGEWICHTIGE_DOKUMENTATION: &str = "Leichtgewichtige Dokumentation";

/// A document that is written but never read.
pub fn totes_dokument() -> PatternTemplate {
    PatternTemplate::new(TOTES_DOKUMENT, Polarity::Negative)
        .describe("solid store with at least one incoming and no outgoing flow")
        .node(
            NodeConstraint::store("doc", &[Solid])
                .degree(DegreeConstraint::at_least(DegreeDirection::In, 1))
                .degree(DegreeConstraint::at_most(DegreeDirection::Out, 0)),
        )
}

/// Information passed on by word of mouth across several people.
pub fn stille_post() -> PatternTemplate {
    PatternTemplate::new(STILLE_POST, Polarity::Negative)
        .describe("chain of at least three liquid stores relaying the same content")
        .node(NodeConstraint::store("person", &[Liquid]))
        .chain(ChainSpec {
            min_len: 3,
            flow_states: vec![Liquid],
        })
}

/// An activity that only consumes and produces documents.
pub fn buerokratie() -> PatternTemplate {
    PatternTemplate::new(BUEROKRATIE, Polarity::Negative)
        .describe(
            "activity with >=3 solid content inputs, >=2 solid outputs and no liquid content flow",
        )
        .node(
            NodeConstraint::activity("activity")
                .degree(
                    DegreeConstraint::at_least(DegreeDirection::In, 3)
                        .states(&[Solid])
                        .attachments(&[Attachment::Content]),
                )
                .degree(DegreeConstraint::at_least(DegreeDirection::Out, 2).states(&[Solid]))
                .degree(
                    DegreeConstraint::at_most(DegreeDirection::Any, 0)
                        .states(&[Liquid])
                        .attachments(&[Attachment::Content]),
                ),
        )
}

/// Information seeping past the documented route.
pub fn osmose() -> PatternTemplate {
    PatternTemplate::new(OSMOSE, Polarity::Neutral)
        .describe("liquid flow between two stores that are also connected through documents")
        .node(NodeConstraint::store("from", &[Liquid]))
        .node(NodeConstraint::store("to", &[]))
        .edge(EdgeConstraint::new("direct", "from", "to").states(&[Liquid]))
        .edge(
            EdgeConstraint::new("documented", "from", "to").via(PathSpec {
                min_len: 2,
                intermediate_states: vec![Solid],
            }),
        )
}

/// Knowledge written down by the person holding it, and then read.
pub fn leichtgewichtige_dokumentation() -> PatternTemplate {
    PatternTemplate::new(LEICHTGEWICHTIGE_DOKUMENTATION, Polarity::Positive)
        .describe("liquid store writing into a solid store that is read by someone")
        .node(NodeConstraint::store("author", &[Liquid]))
        .node(
            NodeConstraint::store("doc", &[Solid])
                .degree(DegreeConstraint::at_least(DegreeDirection::Out, 1)),
        )
        .edge(EdgeConstraint::new("write", "author", "doc").states(&[Liquid]))
}

pub fn builtin_catalog() -> Vec<PatternTemplate> {
    vec![
        totes_dokument(),
        stille_post(),
        buerokratie(),
        osmose(),
        leichtgewichtige_dokumentation(),
    ]
}

/// Runs the built-in catalog.
pub fn scan_catalog(model: &FlowModel) -> Vec<MatchResult> {
    scan(model, &builtin_catalog())
}
