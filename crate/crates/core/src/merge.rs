//! Assembling partial models into one.
//!
//! Interviews produce one small model per activity. Merging joins them at
//! their connection points: stores with the same normalized name and the
//! same aggregate state become one store. A name match with differing states
//! is not joined; it is reported so the analyst can follow up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_name, AggregateState, Flow, FlowModel, ModelKind, Multiplicity};

/// Two stores share a name but not an aggregate state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionIssue {
    pub name: String,
    pub existing: String,
    pub existing_state: AggregateState,
    pub incoming: String,
    pub incoming_state: AggregateState,
}

impl std::fmt::Display for ConnectionIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "store `{}` is {} as `{}` but {} as `{}`",
            self.name, self.existing_state, self.existing, self.incoming_state, self.incoming
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error("activity `{0}` appears in several parts with different content")]
    AmbiguousActivity(String),
    #[error("activity `{0}` collides with a store of the same id")]
    ActivityIdTaken(String),
    #[error("cannot merge {0} and {1} models")]
    MixedKinds(ModelKind, ModelKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeResult {
    pub model: FlowModel,
    pub issues: Vec<ConnectionIssue>,
}

/// Merges `parts` in order. The first part supplies name and kind.
pub fn merge_models(parts: &[FlowModel]) -> Result<MergeResult, MergeError> {
    let Some(first) = parts.first() else {
        return Ok(MergeResult {
            model: FlowModel::default(),
            issues: Vec::new(),
        });
    };
    let mut merged = FlowModel::new(first.name.clone(), first.kind);
    let mut issues = Vec::new();
    // (normalized name, state) -> id of the unified store
    let mut by_key: BTreeMap<(String, AggregateState), String> = BTreeMap::new();

    for part in parts {
        if part.kind != merged.kind {
            return Err(MergeError::MixedKinds(merged.kind, part.kind));
        }
        merged.map |= part.map;
        if merged.scope.is_none() {
            merged.scope = part.scope.clone();
        }
        for site in &part.sites {
            if !merged.sites.iter().any(|s| s.id == site.id) {
                merged.sites.push(site.clone());
            }
        }

        let mut renamed: BTreeMap<String, String> = BTreeMap::new();
        for store in &part.stores {
            let key = (normalize_name(&store.name), store.state);
            if let Some(existing) = by_key.get(&key) {
                let target = merged.store_mut(existing).expect("indexed store exists");
                target.is_experience |= store.is_experience;
                target.is_role |= store.is_role;
                if store.multiplicity == Multiplicity::Multiple {
                    target.multiplicity = Multiplicity::Multiple;
                }
                if target.site.is_none() {
                    target.site = store.site.clone();
                }
                renamed.insert(store.id.clone(), existing.clone());
                continue;
            }
            for other in merged
                .stores
                .iter()
                .filter(|s| normalize_name(&s.name) == key.0)
            {
                issues.push(ConnectionIssue {
                    name: store.name.clone(),
                    existing: other.id.clone(),
                    existing_state: other.state,
                    incoming: store.id.clone(),
                    incoming_state: store.state,
                });
            }
            let mut store = store.clone();
            if merged.contains_id(&store.id) {
                let fresh = merged.fresh_id(&store.id);
                renamed.insert(store.id.clone(), fresh.clone());
                store.id = fresh;
            }
            by_key.insert(key, store.id.clone());
            merged.stores.push(store);
        }

        for activity in &part.activities {
            let mut activity = activity.clone();
            if let Some(sub) = activity.sub_model.as_deref_mut() {
                rename_endpoints(sub, &renamed);
            }
            match merged.activity(&activity.id) {
                Some(existing) if *existing == activity => {}
                Some(_) => return Err(MergeError::AmbiguousActivity(activity.id)),
                None if merged.store(&activity.id).is_some() => {
                    return Err(MergeError::ActivityIdTaken(activity.id));
                }
                None => merged.activities.push(activity),
            }
        }

        // Duplicates are only dropped against earlier parts; two equal flows
        // inside one part are both meant.
        let earlier = merged.flows.len();
        for flow in &part.flows {
            let mut flow = flow.clone();
            rename_flow(&mut flow, &renamed);
            if merged.flows[..earlier].iter().any(|f| same_flow(f, &flow)) {
                continue;
            }
            if merged.contains_id(&flow.id) {
                flow.id = merged.fresh_id(&flow.id);
            }
            merged.flows.push(flow);
        }
    }

    Ok(MergeResult {
        model: merged,
        issues,
    })
}

fn rename_flow(flow: &mut Flow, renamed: &BTreeMap<String, String>) {
    if let Some(new) = renamed.get(&flow.source) {
        flow.source = new.clone();
    }
    if let Some(new) = renamed.get(&flow.target) {
        flow.target = new.clone();
    }
}

fn rename_endpoints(model: &mut FlowModel, renamed: &BTreeMap<String, String>) {
    // Ids declared inside the detail model shadow the enclosing ones.
    let local: BTreeMap<String, String> = renamed
        .iter()
        .filter(|(old, _)| model.node(old).is_none())
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    for flow in &mut model.flows {
        rename_flow(flow, &local);
    }
    for activity in &mut model.activities {
        if let Some(sub) = activity.sub_model.as_deref_mut() {
            rename_endpoints(sub, &local);
        }
    }
}

/// Flows equal in everything but their id.
fn same_flow(a: &Flow, b: &Flow) -> bool {
    a.source == b.source
        && a.target == b.target
        && a.state == b.state
        && a.content == b.content
        && a.is_experience == b.is_experience
        && a.directed == b.directed
        && a.intensity == b.intensity
        && a.attachment == b.attachment
        && a.is_null_flow == b.is_null_flow
}

/// Id-independent description of a merged model: stores by (normalized
/// name, state), activities by id, flows by endpoint keys and attributes.
///
/// Merging the same parts under any grouping yields equal signatures.
pub fn structural_signature(model: &FlowModel) -> String {
    let key_of = |id: &str| -> String {
        match model.store(id) {
            Some(s) => format!("store:{}:{}", normalize_name(&s.name), s.state),
            None => format!("node:{id}"),
        }
    };
    let mut stores: Vec<String> = model
        .stores
        .iter()
        .map(|s| {
            format!(
                "{}|{:?}|{}|{}|{:?}",
                key_of(&s.id),
                s.multiplicity,
                s.is_experience,
                s.is_role,
                s.site
            )
        })
        .collect();
    stores.sort();
    let mut activities: Vec<String> = model
        .activities
        .iter()
        .map(|a| format!("{}|{}|{}", a.id, a.name, a.sub_model.is_some()))
        .collect();
    activities.sort();
    let mut flows: Vec<String> = model
        .flows
        .iter()
        .map(|f| {
            format!(
                "{}->{}|{}|{:?}|{}|{}|{:?}|{:?}|{}",
                key_of(&f.source),
                key_of(&f.target),
                f.state,
                f.content,
                f.is_experience,
                f.directed,
                f.intensity,
                f.attachment,
                f.is_null_flow
            )
        })
        .collect();
    flows.sort();
    flows.dedup();
    format!("stores={stores:?}\nactivities={activities:?}\nflows={flows:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, InformationStore};
    use crate::validate::validate;

    fn part(activity: &str, store: InformationStore, inbound: bool) -> FlowModel {
        let state = store.state;
        let flow = if inbound {
            Flow::new(format!("f.{activity}"), store.id.clone(), activity, state)
        } else {
            Flow::new(format!("f.{activity}"), activity, store.id.clone(), state)
        };
        FlowModel::default()
            .with_activity(Activity::new(activity))
            .with_store(store)
            .with_flow(flow)
    }

    #[test]
    fn matching_names_and_states_are_unified() {
        let a = part(
            "Analyse",
            InformationStore::solid("Spec").named("Spezifikation"),
            false,
        );
        let b = part(
            "Entwurf",
            InformationStore::solid("spez").named(" spezifikation "),
            true,
        );
        let r = merge_models(&[a, b]).unwrap();
        assert_eq!(r.model.stores.len(), 1);
        assert_eq!(r.model.activities.len(), 2);
        assert!(r.issues.is_empty());
        assert_eq!(r.model.flows[1].source, "Spec");
        assert!(validate(&r.model).is_empty());
    }

    #[test]
    fn state_mismatch_is_reported_not_unified() {
        let a = part("A", InformationStore::liquid("Kunde"), true);
        let b = part("B", InformationStore::solid("Kunde"), true);
        let r = merge_models(&[a, b]).unwrap();
        assert_eq!(r.model.stores.len(), 2);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.model.stores[1].id, "Kunde.1");
        assert!(validate(&r.model).is_empty());
    }

    #[test]
    fn conflicting_activity_is_an_error() {
        let a = FlowModel::default().with_activity(Activity::new("A").named("one"));
        let b = FlowModel::default().with_activity(Activity::new("A").named("two"));
        assert_eq!(
            merge_models(&[a.clone(), b]),
            Err(MergeError::AmbiguousActivity("A".into()))
        );
        assert_eq!(
            merge_models(&[a.clone(), a])
                .unwrap()
                .model
                .activities
                .len(),
            1
        );
    }

    #[test]
    fn kinds_must_agree() {
        let a = FlowModel::new("a", ModelKind::Soll);
        let b = FlowModel::new("b", ModelKind::Ist);
        assert!(matches!(
            merge_models(&[a, b]),
            Err(MergeError::MixedKinds(..))
        ));
    }
}
