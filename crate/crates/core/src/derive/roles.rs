//! Role flows: who steers and who supports an activity.

use std::collections::{BTreeMap, BTreeSet};

use super::process::{ProcessModel, RoleKind};
use crate::model::{
    sanitize_identifier, AggregateState, Attachment, Flow, FlowModel, InformationStore,
};

/// Adds a liquid role store per role, a control flow for each responsible
/// role, a support flow for each participating role, and an undirected
/// liquid flow between every pair of roles sharing an activity.
///
/// Undirected flows are only allowed on maps, so the result is marked as a
/// map when such a pair exists.
pub fn augment_role_flows(process: &ProcessModel, model: &FlowModel) -> FlowModel {
    let mut m = model.clone();
    let mut store_of: BTreeMap<&str, String> = BTreeMap::new();
    for r in &process.roles {
        if !store_of.contains_key(r.role.as_str()) {
            let id = m.fresh_id(&format!("role.{}", sanitize_identifier(&r.role)));
            m.stores
                .push(InformationStore::liquid(&id).named(&r.role).role());
            store_of.insert(&r.role, id);
        }
    }
    for r in &process.roles {
        if m.activity(&r.activity).is_none() {
            continue;
        }
        let store = &store_of[r.role.as_str()];
        let (attachment, tag) = match r.kind {
            RoleKind::Responsible => (Attachment::Control, "control"),
            RoleKind::Participating => (Attachment::Support, "support"),
        };
        let id = m.fresh_id(&format!(
            "{tag}.{}.{}",
            r.activity,
            sanitize_identifier(&r.role)
        ));
        m.flows
            .push(Flow::new(&id, store, &r.activity, AggregateState::Liquid).attached(attachment));
    }
    let mut by_activity: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &process.roles {
        by_activity
            .entry(&r.activity)
            .or_default()
            .insert(store_of[r.role.as_str()].as_str());
    }
    let mut peers: BTreeSet<(&str, &str)> = BTreeSet::new();
    for roles in by_activity.values() {
        let roles: Vec<&str> = roles.iter().copied().collect();
        for (i, a) in roles.iter().enumerate() {
            for b in &roles[i + 1..] {
                peers.insert((a, b));
            }
        }
    }
    for (a, b) in &peers {
        let id = m.fresh_id(&format!("peer.{a}.{b}"));
        m.flows
            .push(Flow::new(&id, *a, *b, AggregateState::Liquid).undirected());
    }
    if !peers.is_empty() {
        m.map = true;
    }
    m
}
