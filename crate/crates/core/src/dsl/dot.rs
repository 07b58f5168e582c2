//! Graphviz export.
//!
//! The notation's glyphs have no DOT counterpart, so shapes are a
//! convention: documents are `note`, people `ellipse`, undefined stores a
//! `record` combining both readings, activities `box`. Liquid flows are
//! dashed, solid flows solid, undefined flows dotted (DOT has no dash-dot
//! style). Experience elements are gray. Control and support flows attach
//! at the top and bottom port of an activity, content flows at the sides.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::serialize::SerializeError;
use crate::model::{AggregateState, Attachment, Flow, FlowModel, InformationStore, Multiplicity};
use crate::validate::{validate, Violation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DotOptions {
    /// Label flows with their content.
    pub show_content: bool,
}

pub fn export_dot(model: &FlowModel, options: DotOptions) -> Result<String, SerializeError> {
    let errors: Vec<Violation> = validate(model)
        .into_iter()
        .filter(Violation::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(SerializeError(errors));
    }
    let model = model.canonical();
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", id(&model.name));
    out.push_str(
        "  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\"];\n",
    );
    write_body(&mut out, &model, &model, options, 1);
    out.push_str("}\n");
    Ok(out)
}

fn id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn record_escape(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if matches!(c, '{' | '}' | '|' | '<' | '>' | '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn write_body(
    out: &mut String,
    root: &FlowModel,
    m: &FlowModel,
    options: DotOptions,
    depth: usize,
) {
    let pad = "  ".repeat(depth);
    // Stores grouped by site on the top level.
    for site in &m.sites {
        let _ = writeln!(
            out,
            "{pad}subgraph {} {{",
            id(&format!("cluster_site_{}", site.id))
        );
        let _ = writeln!(out, "{pad}  label={};", id(&site.label));
        for s in m
            .stores
            .iter()
            .filter(|s| s.site.as_deref() == Some(&site.id))
        {
            let _ = writeln!(out, "{pad}  {}", store_node(s));
        }
        let _ = writeln!(out, "{pad}}}");
    }
    for s in &m.stores {
        let sited = s
            .site
            .as_ref()
            .is_some_and(|site| m.sites.iter().any(|x| &x.id == site));
        if !sited {
            let _ = writeln!(out, "{pad}{}", store_node(s));
        }
    }
    for a in &m.activities {
        let mut attrs = vec!["shape=box".to_string(), format!("label={}", id(&a.name))];
        if a.sub_model.is_some() {
            attrs.push("peripheries=2".into());
        }
        let _ = writeln!(out, "{pad}{} [{}];", id(&a.id), attrs.join(", "));
        if let Some(sub) = a.sub_model.as_deref() {
            let _ = writeln!(
                out,
                "{pad}subgraph {} {{",
                id(&format!("cluster_detail_{}", a.id))
            );
            let _ = writeln!(out, "{pad}  label={};\n{pad}  style=dashed;", id(&a.name));
            write_body(out, root, sub, options, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
    for f in &m.flows {
        let _ = writeln!(out, "{pad}{}", edge(root, m, f, options));
    }
}

fn store_node(s: &InformationStore) -> String {
    let mut attrs = Vec::new();
    match s.state {
        AggregateState::Solid => attrs.push("shape=note".to_string()),
        AggregateState::Liquid => attrs.push("shape=ellipse".to_string()),
        AggregateState::Undefined => attrs.push("shape=record".to_string()),
    }
    let label = match (s.state, s.is_role) {
        (AggregateState::Undefined, _) => {
            id(&format!("{{{}|solid or liquid}}", record_escape(&s.name)))
        }
        (_, true) => format!("<<u>{}</u>>", html_escape(&s.name)),
        _ => id(&s.name),
    };
    attrs.push(format!("label={label}"));
    if s.multiplicity == Multiplicity::Multiple {
        attrs.push("peripheries=3".into());
    }
    if s.is_experience {
        attrs.push("color=gray".into());
        attrs.push("fontcolor=gray".into());
    }
    format!("{} [{}];", id(&s.id), attrs.join(", "))
}

fn is_activity(root: &FlowModel, m: &FlowModel, node: &str) -> bool {
    fn find(m: &FlowModel, node: &str) -> bool {
        m.activities
            .iter()
            .any(|a| a.id == node || a.sub_model.as_deref().is_some_and(|s| find(s, node)))
    }
    m.activity(node).is_some() || find(root, node)
}

fn port(attachment: Attachment, incoming: bool) -> &'static str {
    match attachment {
        Attachment::Control => "n",
        Attachment::Support => "s",
        Attachment::Content if incoming => "w",
        Attachment::Content => "e",
    }
}

fn edge(root: &FlowModel, m: &FlowModel, f: &Flow, options: DotOptions) -> String {
    let mut attrs = vec![match f.state {
        AggregateState::Liquid => "style=dashed".to_string(),
        AggregateState::Solid => "style=solid".to_string(),
        AggregateState::Undefined => "style=dotted".to_string(),
    }];
    if is_activity(root, m, &f.target) {
        attrs.push(format!("headport={}", port(f.attachment, true)));
    }
    if is_activity(root, m, &f.source) {
        attrs.push(format!("tailport={}", port(f.attachment, false)));
    }
    if !f.directed {
        attrs.push("dir=none".into());
    }
    if f.is_null_flow {
        attrs.push("arrowhead=tee".into());
    }
    if f.is_experience {
        attrs.push("color=gray".into());
        attrs.push("fontcolor=gray".into());
    }
    if let Some(i) = f.intensity {
        // Same buckets as the map server: thin, medium, thick.
        let width = if i < 15.0 {
            1.0
        } else if i < 60.0 {
            2.5
        } else {
            4.0
        };
        attrs.push(format!("penwidth={width}"));
    }
    if options.show_content {
        if let Some(c) = &f.content {
            attrs.push(format!("label={}", id(c)));
        }
    }
    attrs.push(format!("id={}", id(&f.id)));
    format!(
        "{} -> {} [{}];",
        id(&f.source),
        id(&f.target),
        attrs.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Activity;

    fn sample() -> FlowModel {
        FlowModel::default()
            .with_store(InformationStore::liquid("Kunde").experience())
            .with_store(InformationStore::solid("Spec").multiple())
            .with_store(InformationStore::liquid("Analyst").role())
            .with_activity(Activity::new("A"))
            .with_flow(
                Flow::new("f1", "Kunde", "Spec", AggregateState::Liquid)
                    .with_content("Anforderungen"),
            )
            .with_flow(Flow::new("f2", "Spec", "A", AggregateState::Solid))
            .with_flow(
                Flow::new("f3", "Analyst", "A", AggregateState::Liquid)
                    .attached(Attachment::Control),
            )
    }

    #[test]
    fn styles() {
        let dot = export_dot(&sample(), DotOptions { show_content: true }).unwrap();
        assert!(dot.contains("\"Kunde\" -> \"Spec\" [style=dashed, label=\"Anforderungen\""));
        assert!(dot.contains("\"Kunde\" [shape=ellipse, label=\"Kunde\", color=gray"));
        assert!(dot.contains("peripheries=3"));
        assert!(dot.contains("label=<<u>Analyst</u>>"));
        assert!(dot.contains("\"Analyst\" -> \"A\" [style=dashed, headport=n"));
        assert!(dot.contains("\"Spec\" -> \"A\" [style=solid, headport=w"));
    }

    #[test]
    fn deterministic_under_declaration_order() {
        let a = sample();
        let mut b = sample();
        b.stores.reverse();
        b.flows.reverse();
        let opts = DotOptions::default();
        assert_eq!(export_dot(&a, opts).unwrap(), export_dot(&b, opts).unwrap());
    }

    #[test]
    fn rejects_invalid_models() {
        let m = FlowModel::default().with_flow(Flow::new("f", "x", "y", AggregateState::Solid));
        assert!(export_dot(&m, DotOptions::default()).is_err());
    }
}
