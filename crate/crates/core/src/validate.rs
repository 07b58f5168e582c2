//! Syntactic modeling rules.
//!
//! | rule | checks |
//! |------|--------|
//! | `R1` | liquid store with a non-liquid outgoing flow |
//! | `R2` | solid store with a non-solid outgoing flow |
//! | `R2b`| undefined store with a non-undefined outgoing flow |
//! | `R3` | control/support attachment without an activity endpoint |
//! | `R4` | undirected flow outside a FLOW-Map |
//! | `R5` | activity interface differs from its detail model's boundary |
//! | `R6` | duplicate id |
//!
//! Dangling references are reported before everything else. `Malformed`
//! covers field-level problems (empty names, bad identifiers, negative
//! intensities, inverted scopes). `W1` is the only warning: a role flag on
//! a store that is not liquid.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{is_identifier, AggregateState, Attachment, Flow, FlowModel, NodeRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Dangling,
    R1,
    R2,
    R2b,
    R3,
    R4,
    R5,
    R6,
    Malformed,
    W1,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::Dangling => "dangling",
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R2b => "R2b",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::Malformed => "malformed",
            Rule::W1 => "W1",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Rule::W1 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub severity: Severity,
    /// Id of the offending element.
    pub element: String,
    pub message: String,
}

impl Violation {
    fn new(rule: Rule, element: &str, message: String) -> Self {
        Self {
            rule,
            severity: rule.severity(),
            element: element.to_string(),
            message,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{level}[{}] {}: {}",
            self.rule, self.element, self.message
        )
    }
}

/// Returns every rule violation of `model`, detail models included.
///
/// Dangling references come first, the rest is ordered by element id and
/// rule. The result is deterministic; an empty list means the model is valid.
pub fn validate(model: &FlowModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut scopes = Vec::new();
    check_scope(model, &mut scopes, model, model.is_map(), &mut out);

    for (id, count) in model.all_ids() {
        if count > 1 {
            out.push(Violation::new(
                Rule::R6,
                id,
                format!("id is declared {count} times"),
            ));
        }
    }
    for (id, count) in count_ids(model.sites.iter().map(|s| s.id.as_str())) {
        if count > 1 {
            out.push(Violation::new(
                Rule::R6,
                id,
                format!("site id is declared {count} times"),
            ));
        }
    }

    out.sort_by(|a, b| {
        (a.rule != Rule::Dangling, &a.element, a.rule, &a.message).cmp(&(
            b.rule != Rule::Dangling,
            &b.element,
            b.rule,
            &b.message,
        ))
    });
    out.dedup();
    out
}

/// True when `validate` reports no errors (warnings allowed).
pub fn is_valid(model: &FlowModel) -> bool {
    validate(model).iter().all(|v| !v.is_error())
}

fn count_ids<'a>(ids: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for id in ids {
        *counts.entry(id).or_default() += 1;
    }
    counts
}

/// Resolves an id in `model`, then in the enclosing models, innermost first.
pub(crate) fn resolve<'a>(
    model: &'a FlowModel,
    enclosing: &[&'a FlowModel],
    id: &str,
) -> Option<NodeRef<'a>> {
    model
        .node(id)
        .or_else(|| enclosing.iter().rev().find_map(|m| m.node(id)))
}

fn check_scope<'a>(
    model: &'a FlowModel,
    enclosing: &mut Vec<&'a FlowModel>,
    root: &FlowModel,
    map_context: bool,
    out: &mut Vec<Violation>,
) {
    for store in &model.stores {
        if !is_identifier(&store.id) {
            out.push(Violation::new(
                Rule::Malformed,
                &store.id,
                "store id is not an identifier".into(),
            ));
        }
        if store.name.trim().is_empty() {
            out.push(Violation::new(
                Rule::Malformed,
                &store.id,
                "store name is empty".into(),
            ));
        }
        if store.is_role && store.state != AggregateState::Liquid {
            out.push(Violation::new(
                Rule::W1,
                &store.id,
                format!("role flag on a {} store; roles are liquid", store.state),
            ));
        }
        if let Some(site) = &store.site {
            if !root.sites.iter().any(|s| &s.id == site) {
                out.push(Violation::new(
                    Rule::Dangling,
                    &store.id,
                    format!("site `{site}` is not declared"),
                ));
            }
        }
    }
    for activity in &model.activities {
        if !is_identifier(&activity.id) {
            out.push(Violation::new(
                Rule::Malformed,
                &activity.id,
                "activity id is not an identifier".into(),
            ));
        }
        if activity.name.trim().is_empty() {
            out.push(Violation::new(
                Rule::Malformed,
                &activity.id,
                "activity name is empty".into(),
            ));
        }
    }
    if let Some(scope) = &model.scope {
        if scope.start > scope.end {
            out.push(Violation::new(
                Rule::Malformed,
                &model.name,
                "observation scope ends before it starts".into(),
            ));
        }
        if scope.persons.is_empty() {
            out.push(Violation::new(
                Rule::Malformed,
                &model.name,
                "observation scope names no persons".into(),
            ));
        }
    }

    for flow in &model.flows {
        check_flow(model, enclosing, flow, map_context, out);
    }

    enclosing.push(model);
    for activity in &model.activities {
        let Some(sub) = activity.sub_model.as_deref() else {
            continue;
        };
        let outer = activity_interface(model, &activity.id);
        let inner = boundary_interface(sub);
        if outer != inner {
            out.push(Violation::new(
                Rule::R5,
                &activity.id,
                format!(
                    "interface {} does not match detail model boundary {}",
                    describe(&outer),
                    describe(&inner)
                ),
            ));
        }
        check_scope(sub, enclosing, root, map_context || sub.is_map(), out);
    }
    enclosing.pop();
}

fn check_flow(
    model: &FlowModel,
    enclosing: &[&FlowModel],
    flow: &Flow,
    map_context: bool,
    out: &mut Vec<Violation>,
) {
    if !is_identifier(&flow.id) {
        out.push(Violation::new(
            Rule::Malformed,
            &flow.id,
            "flow id is not an identifier".into(),
        ));
    }
    if let Some(intensity) = flow.intensity {
        if !(intensity >= 0.0 && intensity.is_finite()) {
            out.push(Violation::new(
                Rule::Malformed,
                &flow.id,
                format!("intensity {intensity} is not a finite non-negative number"),
            ));
        }
    }

    let source = resolve(model, enclosing, &flow.source);
    let target = resolve(model, enclosing, &flow.target);
    for (end, resolved) in [(&flow.source, source), (&flow.target, target)] {
        if resolved.is_none() {
            out.push(Violation::new(
                Rule::Dangling,
                &flow.id,
                format!("endpoint `{end}` is not declared"),
            ));
        }
    }

    if let Some(NodeRef::Store(store)) = source {
        if flow.state != store.state {
            let rule = match store.state {
                AggregateState::Liquid => Rule::R1,
                AggregateState::Solid => Rule::R2,
                AggregateState::Undefined => Rule::R2b,
            };
            out.push(Violation::new(
                rule,
                &flow.id,
                format!(
                    "{} flow leaves {} store `{}`",
                    flow.state, store.state, store.id
                ),
            ));
        }
    }

    if flow.attachment != Attachment::Content {
        let touches_activity = [source, target].iter().flatten().any(NodeRef::is_activity);
        let resolved = source.is_some() && target.is_some();
        if resolved && !touches_activity {
            out.push(Violation::new(
                Rule::R3,
                &flow.id,
                format!(
                    "{} attachment without an activity endpoint",
                    flow.attachment.keyword()
                ),
            ));
        }
    }

    if !flow.directed && !map_context {
        out.push(Violation::new(
            Rule::R4,
            &flow.id,
            "undirected flow outside a FLOW-Map".into(),
        ));
    }
}

/// Direction of a flow relative to an activity or a detail model boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
    Undirected,
}

/// One element of a FLOW interface.
pub type InterfaceEntry = (Direction, AggregateState, Option<String>);

/// The sorted multiset of flows attached to `activity` in `model`.
pub fn activity_interface(model: &FlowModel, activity: &str) -> Vec<InterfaceEntry> {
    let mut entries: Vec<InterfaceEntry> = model
        .flows
        .iter()
        .filter(|f| f.touches(activity) && f.source != f.target)
        .map(|f| {
            let direction = if !f.directed {
                Direction::Undirected
            } else if f.target == activity {
                Direction::In
            } else {
                Direction::Out
            };
            (direction, f.state, f.content.clone())
        })
        .collect();
    entries.sort();
    entries
}

/// The sorted multiset of flows crossing the boundary of a detail model,
/// i.e. flows with exactly one endpoint declared inside `sub`.
pub fn boundary_interface(sub: &FlowModel) -> Vec<InterfaceEntry> {
    let mut entries: Vec<InterfaceEntry> = sub
        .flows
        .iter()
        .filter_map(|f| {
            let src_inside = sub.node(&f.source).is_some();
            let dst_inside = sub.node(&f.target).is_some();
            let direction = match (src_inside, dst_inside) {
                (true, true) | (false, false) => return None,
                _ if !f.directed => Direction::Undirected,
                (false, true) => Direction::In,
                (true, false) => Direction::Out,
            };
            Some((direction, f.state, f.content.clone()))
        })
        .collect();
    entries.sort();
    entries
}

fn describe(entries: &[InterfaceEntry]) -> String {
    let parts: Vec<String> = entries
        .iter()
        .map(|(d, s, c)| {
            let d = match d {
                Direction::In => "in",
                Direction::Out => "out",
                Direction::Undirected => "both",
            };
            match c {
                Some(c) => format!("{d} {s} \"{c}\""),
                None => format!("{d} {s}"),
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}
