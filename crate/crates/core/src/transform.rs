//! Improvement rewrites.
//!
//! Each [`Transformation`] names its targets and any new element explicitly;
//! nothing is named automatically except the ids of split flows, which get
//! `.1`, `.2`, ... suffixes. [`apply_transformation`] returns a new model and
//! rejects any result that does not validate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::matcher::match_pattern;
use crate::analysis::template::PatternTemplate;
use crate::model::{AggregateState, Attachment, Flow, FlowModel, InformationStore, NodeRef};
use crate::validate::{validate, Violation};

/// A store introduced by a rewrite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewStore {
    pub id: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transformation {
    /// Captures a liquid flow in a new document: `src -> doc -> dst`.
    Solidify { flow: String, document: NewStore },
    /// Replaces the document hop `inflow`, `outflow` by one liquid flow.
    Liquefy { inflow: String, outflow: String },
    /// Removes the relay through `intermediate`, connecting `source` and
    /// `target` directly.
    Shortcut {
        source: String,
        intermediate: String,
        target: String,
    },
    /// Routes `flow` through the store `via`, creating it when `create` is
    /// given.
    Detour {
        flow: String,
        via: String,
        #[serde(default)]
        create: Option<(String, AggregateState)>,
    },
    /// Copies `flow` to an additional target.
    Branch { flow: String, new_target: String },
    /// Folds store `absorb` into store `keep`.
    Merge { keep: String, absorb: String },
    /// Edits the flows attached to an activity. When the activity has a
    /// detail model, a matching replacement must be supplied.
    InterfaceAdaptation {
        activity: String,
        #[serde(default)]
        remove: Vec<String>,
        #[serde(default)]
        add: Vec<Flow>,
        #[serde(default)]
        sub_model: Option<FlowModel>,
    },
    /// Replaces an activity's detail model, keeping its interface.
    ActivityAdaptation {
        activity: String,
        sub_model: FlowModel,
    },
    /// Applies a template's replacement to its `occurrence`-th match.
    /// `new_ids` maps each store the replacement adds to (model id, name).
    PatternReplacement {
        template: PatternTemplate,
        occurrence: usize,
        #[serde(default)]
        new_ids: BTreeMap<String, NewStore>,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("{kind} `{id}` does not exist")]
    Missing { kind: &'static str, id: String },
    #[error("id `{0}` is already in use")]
    IdTaken(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("result violates modeling rules: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

type Result<T> = std::result::Result<T, TransformError>;

fn missing(kind: &'static str, id: &str) -> TransformError {
    TransformError::Missing {
        kind,
        id: id.to_string(),
    }
}

fn precondition(msg: impl Into<String>) -> TransformError {
    TransformError::Precondition(msg.into())
}

/// Applies `t` to a copy of `model`.
pub fn apply_transformation(model: &FlowModel, t: &Transformation) -> Result<FlowModel> {
    let mut m = model.clone();
    match t {
        Transformation::Solidify { flow, document } => solidify(&mut m, flow, document)?,
        Transformation::Liquefy { inflow, outflow } => liquefy(&mut m, inflow, outflow)?,
        Transformation::Shortcut {
            source,
            intermediate,
            target,
        } => shortcut(&mut m, source, intermediate, target)?,
        Transformation::Detour { flow, via, create } => detour(&mut m, flow, via, create.as_ref())?,
        Transformation::Branch { flow, new_target } => branch(&mut m, flow, new_target)?,
        Transformation::Merge { keep, absorb } => merge_stores(&mut m, keep, absorb)?,
        Transformation::InterfaceAdaptation {
            activity,
            remove,
            add,
            sub_model,
        } => adapt_interface(&mut m, activity, remove, add, sub_model.as_ref())?,
        Transformation::ActivityAdaptation {
            activity,
            sub_model,
        } => {
            let a = m
                .activity_mut(activity)
                .ok_or_else(|| missing("activity", activity))?;
            a.sub_model = Some(Box::new(sub_model.clone()));
        }
        Transformation::PatternReplacement {
            template,
            occurrence,
            new_ids,
        } => replace_pattern(&mut m, template, *occurrence, new_ids)?,
    }
    let errors: Vec<Violation> = validate(&m)
        .into_iter()
        .filter(Violation::is_error)
        .collect();
    if errors.is_empty() {
        Ok(m)
    } else {
        Err(TransformError::Invalid(errors))
    }
}

fn take_flow(m: &mut FlowModel, id: &str) -> Result<Flow> {
    let pos = m
        .flows
        .iter()
        .position(|f| f.id == id)
        .ok_or_else(|| missing("flow", id))?;
    Ok(m.flows.remove(pos))
}

fn is_activity(m: &FlowModel, id: &str) -> bool {
    m.activity(id).is_some()
}

/// State a new flow leaving `source` must have, falling back to `default`
/// when the source is an activity.
fn state_from(m: &FlowModel, source: &str, default: AggregateState) -> AggregateState {
    m.store(source).map_or(default, |s| s.state)
}

/// Attachment for a flow between `a` and `b`: kept only when an endpoint
/// is an activity.
fn attachment_for(m: &FlowModel, a: &str, b: &str, wanted: Attachment) -> Attachment {
    if is_activity(m, a) || is_activity(m, b) {
        wanted
    } else {
        Attachment::Content
    }
}

fn add_store(m: &mut FlowModel, store: InformationStore) -> Result<()> {
    if m.all_ids().contains_key(store.id.as_str()) {
        return Err(TransformError::IdTaken(store.id));
    }
    m.stores.push(store);
    Ok(())
}

fn remove_if_isolated(m: &mut FlowModel, store: &str) {
    if !m.flows.iter().any(|f| f.touches(store)) {
        m.stores.retain(|s| s.id != store);
    }
}

fn solidify(m: &mut FlowModel, flow: &str, doc: &NewStore) -> Result<()> {
    let f = take_flow(m, flow)?;
    if f.state == AggregateState::Solid {
        return Err(precondition(format!("flow `{flow}` is already solid")));
    }
    if !f.directed {
        return Err(precondition(format!("flow `{flow}` is undirected")));
    }
    add_store(m, InformationStore::solid(&doc.id).named(&doc.name))?;
    let mut write = f.clone();
    write.target = doc.id.clone();
    write.attachment = attachment_for(m, &write.source, &doc.id, f.attachment);
    m.flows.push(write);
    let mut read = f.clone();
    read.id = m.fresh_id(&f.id);
    read.source = doc.id.clone();
    read.state = AggregateState::Solid;
    read.attachment = attachment_for(m, &doc.id, &read.target, f.attachment);
    m.flows.push(read);
    Ok(())
}

fn liquefy(m: &mut FlowModel, inflow: &str, outflow: &str) -> Result<()> {
    let fin = m
        .flow(inflow)
        .ok_or_else(|| missing("flow", inflow))?
        .clone();
    let fout = m
        .flow(outflow)
        .ok_or_else(|| missing("flow", outflow))?
        .clone();
    if fin.target != fout.source || !fin.directed || !fout.directed {
        return Err(precondition(format!(
            "`{inflow}` and `{outflow}` do not form a hop"
        )));
    }
    let doc = fin.target.clone();
    if m.store(&doc).map(|s| s.state) != Some(AggregateState::Solid) {
        return Err(precondition(format!("`{doc}` is not a solid store")));
    }
    if m.store(&fin.source)
        .is_some_and(|s| s.state != AggregateState::Liquid)
    {
        return Err(precondition(format!(
            "source `{}` cannot emit liquid information",
            fin.source
        )));
    }
    m.flows.retain(|f| f.id != inflow && f.id != outflow);
    let wanted = if is_activity(m, &fout.target) {
        fout.attachment
    } else {
        fin.attachment
    };
    let mut direct = Flow::new(inflow, &fin.source, &fout.target, AggregateState::Liquid);
    direct.content = fin.content.clone().or(fout.content.clone());
    direct.is_experience = fin.is_experience || fout.is_experience;
    direct.attachment = attachment_for(m, &fin.source, &fout.target, wanted);
    m.flows.push(direct);
    remove_if_isolated(m, &doc);
    Ok(())
}

fn shortcut(m: &mut FlowModel, source: &str, via: &str, target: &str) -> Result<()> {
    for id in [source, target] {
        m.node(id).ok_or_else(|| missing("element", id))?;
    }
    if m.store(via).is_none() {
        return Err(missing("store", via));
    }
    let hop_in = m
        .flows
        .iter()
        .find(|f| f.source == source && f.target == via && f.directed)
        .cloned();
    let hop_out = m
        .flows
        .iter()
        .find(|f| f.source == via && f.target == target && f.directed)
        .cloned();
    let (Some(hop_in), Some(hop_out)) = (hop_in, hop_out) else {
        return Err(precondition(format!(
            "no path {source} -> {via} -> {target}"
        )));
    };
    m.flows
        .retain(|f| !(f.directed && f.source == source && f.target == via));
    m.flows
        .retain(|f| !(f.directed && f.source == via && f.target == target));
    let wanted = if is_activity(m, target) {
        hop_out.attachment
    } else {
        hop_in.attachment
    };
    let mut direct = Flow::new(
        &hop_in.id,
        source,
        target,
        state_from(m, source, hop_in.state),
    );
    direct.content = hop_in.content.clone().or(hop_out.content.clone());
    direct.is_experience = hop_in.is_experience;
    direct.attachment = attachment_for(m, source, target, wanted);
    m.flows.push(direct);
    remove_if_isolated(m, via);
    Ok(())
}

fn detour(
    m: &mut FlowModel,
    flow: &str,
    via: &str,
    create: Option<&(String, AggregateState)>,
) -> Result<()> {
    let f = take_flow(m, flow)?;
    if !f.directed {
        return Err(precondition(format!("flow `{flow}` is undirected")));
    }
    if let Some((name, state)) = create {
        add_store(m, InformationStore::new(via, *state).named(name))?;
    }
    let via_state = m.store(via).ok_or_else(|| missing("store", via))?.state;
    if via == f.source || via == f.target {
        return Err(precondition(format!("`{via}` is an endpoint of `{flow}`")));
    }
    let mut first = f.clone();
    first.target = via.to_string();
    first.attachment = attachment_for(m, &f.source, via, f.attachment);
    m.flows.push(first);
    let mut second = f.clone();
    second.id = m.fresh_id(&f.id);
    second.source = via.to_string();
    second.state = via_state;
    second.attachment = attachment_for(m, via, &f.target, f.attachment);
    m.flows.push(second);
    Ok(())
}

fn branch(m: &mut FlowModel, flow: &str, new_target: &str) -> Result<()> {
    let f = m.flow(flow).ok_or_else(|| missing("flow", flow))?.clone();
    m.node(new_target)
        .ok_or_else(|| missing("element", new_target))?;
    if new_target == f.source || new_target == f.target {
        return Err(precondition(format!(
            "`{new_target}` is already an endpoint of `{flow}`"
        )));
    }
    let mut copy = f.clone();
    copy.id = m.fresh_id(&f.id);
    copy.target = new_target.to_string();
    copy.attachment = attachment_for(m, &f.source, new_target, f.attachment);
    m.flows.push(copy);
    Ok(())
}

fn merge_stores(m: &mut FlowModel, keep: &str, absorb: &str) -> Result<()> {
    let k = m.store(keep).ok_or_else(|| missing("store", keep))?.clone();
    let a = m
        .store(absorb)
        .ok_or_else(|| missing("store", absorb))?
        .clone();
    if keep == absorb {
        return Err(precondition("cannot merge a store with itself"));
    }
    if k.state != a.state {
        return Err(precondition(format!(
            "`{keep}` is {} but `{absorb}` is {}",
            k.state, a.state
        )));
    }
    m.stores.retain(|s| s.id != absorb);
    let kept = m.store_mut(keep).expect("checked above");
    kept.is_experience |= a.is_experience;
    kept.is_role |= a.is_role;
    if a.multiplicity == crate::model::Multiplicity::Multiple {
        kept.multiplicity = a.multiplicity;
    }
    for f in &mut m.flows {
        if f.source == absorb {
            f.source = keep.to_string();
        }
        if f.target == absorb {
            f.target = keep.to_string();
        }
    }
    m.flows.retain(|f| f.source != f.target);
    let mut seen: Vec<Flow> = Vec::new();
    m.flows.retain(|f| {
        let mut key = f.clone();
        key.id.clear();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    Ok(())
}

fn adapt_interface(
    m: &mut FlowModel,
    activity: &str,
    remove: &[String],
    add: &[Flow],
    sub_model: Option<&FlowModel>,
) -> Result<()> {
    if !is_activity(m, activity) {
        return Err(missing("activity", activity));
    }
    for id in remove {
        let f = take_flow(m, id)?;
        if !f.touches(activity) {
            return Err(precondition(format!(
                "flow `{id}` is not attached to `{activity}`"
            )));
        }
    }
    for f in add {
        if !f.touches(activity) {
            return Err(precondition(format!(
                "flow `{}` is not attached to `{activity}`",
                f.id
            )));
        }
        if m.all_ids().contains_key(f.id.as_str()) {
            return Err(TransformError::IdTaken(f.id.clone()));
        }
        m.flows.push(f.clone());
    }
    if let Some(sub) = sub_model {
        m.activity_mut(activity).expect("checked above").sub_model = Some(Box::new(sub.clone()));
    }
    Ok(())
}

fn replace_pattern(
    m: &mut FlowModel,
    template: &PatternTemplate,
    occurrence: usize,
    new_ids: &BTreeMap<String, NewStore>,
) -> Result<()> {
    template.check().map_err(|e| precondition(e.to_string()))?;
    let replacement = template
        .replacement
        .as_ref()
        .ok_or_else(|| precondition(format!("template `{}` has no replacement", template.name)))?;
    if template.chain.is_some() {
        return Err(precondition("chain templates cannot be rewritten"));
    }
    let matches = match_pattern(m, template);
    let hit = matches.get(occurrence).ok_or_else(|| {
        precondition(format!(
            "template `{}` has {} matches, no occurrence {occurrence}",
            template.name,
            matches.len()
        ))
    })?;

    let mut resolve: BTreeMap<&str, String> = hit
        .binding
        .iter()
        .map(|(k, v)| (k.as_str(), v.clone()))
        .collect();
    for spec in &replacement.add_stores {
        let store = new_ids
            .get(&spec.id)
            .ok_or_else(|| precondition(format!("no id given for new store `{}`", spec.id)))?;
        add_store(
            m,
            InformationStore::new(&store.id, spec.state).named(&store.name),
        )?;
        resolve.insert(spec.id.as_str(), store.id.clone());
    }

    for edge in &replacement.remove_edges {
        let flow = &hit.binding[edge];
        m.flows.retain(|f| &f.id != flow);
    }
    for node in &replacement.remove_nodes {
        let id = &hit.binding[node];
        m.flows.retain(|f| !f.touches(id));
        m.stores.retain(|s| &s.id != id);
        m.activities.retain(|a| &a.id != id);
    }
    for spec in &replacement.add_flows {
        let (from, to) = (&resolve[spec.from.as_str()], &resolve[spec.to.as_str()]);
        let state = match (m.node(from), spec.state) {
            (Some(NodeRef::Store(s)), _) => s.state,
            (Some(NodeRef::Activity(_)), Some(state)) => state,
            (Some(NodeRef::Activity(_)), None) => {
                return Err(precondition(format!(
                    "flow from activity `{from}` needs an explicit state"
                )))
            }
            (None, _) => return Err(missing("element", from)),
        };
        let mut f = Flow::new(m.fresh_id(&format!("{from}.{to}")), from, to, state);
        f.content = spec.content.clone();
        f.attachment = spec.attachment;
        m.flows.push(f);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::template::{
        EdgeConstraint, NewFlowSpec, NewStoreSpec, NodeConstraint, Polarity, Replacement,
    };
    use crate::model::Activity;
    use AggregateState::*;

    fn chain() -> FlowModel {
        FlowModel::default()
            .with_store(InformationStore::liquid("A"))
            .with_store(InformationStore::liquid("B"))
            .with_store(InformationStore::liquid("C"))
            .with_flow(Flow::new("ab", "A", "B", Liquid))
            .with_flow(Flow::new("bc", "B", "C", Liquid))
    }

    #[test]
    fn shortcut_removes_relay() {
        let input = chain();
        let out = apply_transformation(
            &input,
            &Transformation::Shortcut {
                source: "A".into(),
                intermediate: "B".into(),
                target: "C".into(),
            },
        )
        .unwrap();
        assert_eq!(out.flows.len(), 1);
        assert_eq!(
            (out.flows[0].source.as_str(), out.flows[0].target.as_str()),
            ("A", "C")
        );
        assert!(out.store("B").is_none());
        assert_eq!(input, chain());
    }

    #[test]
    fn solidify_inserts_document() {
        let m = FlowModel::default()
            .with_store(InformationStore::liquid("Dev"))
            .with_store(InformationStore::liquid("Tester"))
            .with_flow(Flow::new("f", "Dev", "Tester", Liquid).with_content("Testhinweise"));
        let out = apply_transformation(
            &m,
            &Transformation::Solidify {
                flow: "f".into(),
                document: NewStore {
                    id: "notes".into(),
                    name: "Testnotizen".into(),
                },
            },
        )
        .unwrap();
        assert_eq!(out.store("notes").unwrap().state, Solid);
        let w = out.flow("f").unwrap();
        let r = out.flow("f.1").unwrap();
        assert_eq!((w.target.as_str(), w.state), ("notes", Liquid));
        assert_eq!(
            (r.source.as_str(), r.target.as_str(), r.state),
            ("notes", "Tester", Solid)
        );
        assert_eq!(r.content.as_deref(), Some("Testhinweise"));
    }

    #[test]
    fn liquefy_undoes_solidify() {
        let m = FlowModel::default()
            .with_store(InformationStore::liquid("Dev"))
            .with_store(InformationStore::solid("Doc"))
            .with_activity(Activity::new("Test"))
            .with_flow(Flow::new("w", "Dev", "Doc", Liquid))
            .with_flow(Flow::new("r", "Doc", "Test", Solid).attached(Attachment::Support));
        let out = apply_transformation(
            &m,
            &Transformation::Liquefy {
                inflow: "w".into(),
                outflow: "r".into(),
            },
        )
        .unwrap();
        assert!(out.store("Doc").is_none());
        let f = out.flow("w").unwrap();
        assert_eq!(
            (f.target.as_str(), f.state, f.attachment),
            ("Test", Liquid, Attachment::Support)
        );
    }

    #[test]
    fn branch_copies_state() {
        let m = chain().with_store(InformationStore::liquid("D"));
        let out = apply_transformation(
            &m,
            &Transformation::Branch {
                flow: "ab".into(),
                new_target: "D".into(),
            },
        )
        .unwrap();
        let copy = out.flow("ab.1").unwrap();
        assert_eq!(
            (copy.source.as_str(), copy.target.as_str(), copy.state),
            ("A", "D", Liquid)
        );
    }

    #[test]
    fn detour_through_new_document() {
        let out = apply_transformation(
            &chain(),
            &Transformation::Detour {
                flow: "ab".into(),
                via: "wiki".into(),
                create: Some(("Wiki".into(), Solid)),
            },
        )
        .unwrap();
        assert_eq!(out.flow("ab.1").unwrap().state, Solid);
        assert_eq!(out.flow("ab").unwrap().target, "wiki");
    }

    #[test]
    fn merge_requires_equal_states() {
        let m = chain().with_store(InformationStore::solid("S"));
        let err = apply_transformation(
            &m,
            &Transformation::Merge {
                keep: "A".into(),
                absorb: "S".into(),
            },
        );
        assert!(matches!(err, Err(TransformError::Precondition(_))));
        let out = apply_transformation(
            &chain(),
            &Transformation::Merge {
                keep: "A".into(),
                absorb: "B".into(),
            },
        )
        .unwrap();
        assert_eq!(out.stores.len(), 2);
        assert_eq!(out.flows.len(), 1);
        assert_eq!(out.flows[0].source, "A");
    }

    #[test]
    fn missing_targets_are_named() {
        let err = apply_transformation(
            &chain(),
            &Transformation::Branch {
                flow: "zz".into(),
                new_target: "A".into(),
            },
        );
        assert_eq!(
            err,
            Err(TransformError::Missing {
                kind: "flow",
                id: "zz".into()
            })
        );
    }

    #[test]
    fn interface_change_must_keep_detail_consistent() {
        let sub = FlowModel::default()
            .with_activity(Activity::new("inner"))
            .with_flow(Flow::new("x", "S", "inner", Solid));
        let m = FlowModel::default()
            .with_store(InformationStore::solid("S"))
            .with_store(InformationStore::liquid("P"))
            .with_activity(Activity::new("A").with_sub_model(sub.clone()))
            .with_flow(Flow::new("in", "S", "A", Solid));
        let add = vec![Flow::new("talk", "P", "A", Liquid)];
        let t = Transformation::InterfaceAdaptation {
            activity: "A".into(),
            remove: vec![],
            add: add.clone(),
            sub_model: None,
        };
        assert!(matches!(
            apply_transformation(&m, &t),
            Err(TransformError::Invalid(_))
        ));
        let sub2 = sub.with_flow(Flow::new("talk.in", "P", "inner", Liquid));
        let t = Transformation::InterfaceAdaptation {
            activity: "A".into(),
            remove: vec![],
            add,
            sub_model: Some(sub2),
        };
        assert!(apply_transformation(&m, &t).is_ok());
    }

    #[test]
    fn pattern_replacement_rewrites_a_match() {
        // Replace a direct liquid hand-over by a written note.
        let mut t = PatternTemplate::new("handover", Polarity::Neutral)
            .node(NodeConstraint::store("x", &[Liquid]))
            .node(NodeConstraint::store("y", &[Liquid]))
            .edge(EdgeConstraint::new("e", "x", "y"));
        t.replacement = Some(Replacement {
            remove_edges: vec!["e".into()],
            remove_nodes: vec![],
            add_stores: vec![NewStoreSpec {
                id: "note".into(),
                state: Solid,
            }],
            add_flows: vec![
                NewFlowSpec {
                    from: "x".into(),
                    to: "note".into(),
                    state: None,
                    content: None,
                    attachment: Attachment::Content,
                },
                NewFlowSpec {
                    from: "note".into(),
                    to: "y".into(),
                    state: None,
                    content: None,
                    attachment: Attachment::Content,
                },
            ],
        });
        let new_ids = BTreeMap::from([(
            "note".to_string(),
            NewStore {
                id: "N".into(),
                name: "Notiz".into(),
            },
        )]);
        let out = apply_transformation(
            &chain(),
            &Transformation::PatternReplacement {
                template: t,
                occurrence: 1,
                new_ids,
            },
        )
        .unwrap();
        assert!(out.flow("bc").is_none());
        assert!(out
            .flows
            .iter()
            .any(|f| f.source == "B" && f.target == "N" && f.state == Liquid));
        assert!(out
            .flows
            .iter()
            .any(|f| f.source == "N" && f.target == "C" && f.state == Solid));
    }
}
