use std::fmt::Write as _;

use chrono::SecondsFormat;
use thiserror::Error;

use super::lexer::quote;
use crate::model::{
    is_identifier, AggregateState, Attachment, Flow, FlowModel, Multiplicity, NodeRef,
};
use crate::validate::{resolve, validate, Violation};

#[derive(Debug, Error, PartialEq)]
#[error("model is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct SerializeError(pub Vec<Violation>);

/// Writes `model` in the `.flow` format.
///
/// Output is canonical: elements are ordered by id, flow ids are always
/// written, and a flow state is written only when it differs from the state
/// the parser would infer. Models with validation errors are rejected.
pub fn serialize(model: &FlowModel) -> Result<String, SerializeError> {
    let errors: Vec<Violation> = validate(model)
        .into_iter()
        .filter(Violation::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(SerializeError(errors));
    }
    let model = model.canonical();
    let mut out = String::new();
    let mut enclosing = Vec::new();
    write_model(&mut out, &model, &mut enclosing, 0);
    Ok(out)
}

fn name_token(name: &str) -> String {
    if is_identifier(name) {
        name.to_string()
    } else {
        quote(name)
    }
}

fn write_model<'a>(
    out: &mut String,
    m: &'a FlowModel,
    enclosing: &mut Vec<&'a FlowModel>,
    depth: usize,
) {
    let pad = "  ".repeat(depth);
    let _ = write!(
        out,
        "{pad}model {} {}",
        name_token(&m.name),
        m.kind.keyword()
    );
    if m.map {
        out.push_str(" map");
    }
    out.push('\n');
    for site in &m.sites {
        let _ = writeln!(out, "{pad}site {} {}", site.id, quote(&site.label));
    }
    if let Some(scope) = &m.scope {
        let _ = write!(
            out,
            "{pad}scope {} {}",
            quote(&scope.start.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
            quote(&scope.end.to_rfc3339_opts(SecondsFormat::AutoSi, true))
        );
        for p in &scope.persons {
            let _ = write!(out, " {}", quote(p));
        }
        out.push('\n');
    }
    for s in &m.stores {
        let _ = write!(out, "{pad}store {}", s.id);
        if s.name != s.id {
            let _ = write!(out, " {}", quote(&s.name));
        }
        let _ = write!(out, " {}", s.state);
        if s.multiplicity == Multiplicity::Multiple {
            out.push_str(" multi");
        }
        if s.is_role {
            out.push_str(" role");
        }
        if s.is_experience {
            out.push_str(" experience");
        }
        if let Some(site) = &s.site {
            let _ = write!(out, " @{site}");
        }
        out.push('\n');
    }
    enclosing.push(m);
    for a in &m.activities {
        let _ = write!(out, "{pad}activity {}", a.id);
        if a.name != a.id {
            let _ = write!(out, " {}", quote(&a.name));
        }
        match a.sub_model.as_deref() {
            Some(sub) => {
                out.push_str(" {\n");
                write_model(out, sub, enclosing, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            None => out.push('\n'),
        }
    }
    enclosing.pop();
    for f in &m.flows {
        let inferred = match resolve(m, enclosing, &f.source) {
            Some(NodeRef::Store(s)) => s.state,
            _ => AggregateState::Undefined,
        };
        write_flow(out, &pad, f, inferred);
    }
}

fn write_flow(out: &mut String, pad: &str, f: &Flow, inferred: AggregateState) {
    let arrow = if f.directed { "->" } else { "--" };
    let _ = write!(out, "{pad}flow {}: {} {arrow} {}", f.id, f.source, f.target);
    if let Some(c) = &f.content {
        let _ = write!(out, " {}", quote(c));
    }
    if f.state != inferred {
        let _ = write!(out, " {}", f.state);
    }
    if f.is_experience {
        out.push_str(" experience");
    }
    if f.is_null_flow {
        out.push_str(" null");
    }
    if f.attachment != Attachment::Content {
        let _ = write!(out, " {}", f.attachment.keyword());
    }
    if let Some(i) = f.intensity {
        let _ = write!(out, " intensity {i}");
    }
    out.push('\n');
}
