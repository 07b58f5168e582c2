//! Integration cuts: the products between a set of source and target
//! products, plus the products that depend on them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::FlowModel;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutResult {
    pub intermediates: BTreeSet<String>,
    pub extra_targets: BTreeSet<String>,
    /// No source reaches any target.
    pub warning: bool,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CutError {
    #[error("`{0}` is not a store of the model")]
    UnknownStore(String),
    #[error("`{0}` is both a source and a target")]
    SourceIsTarget(String),
}

pub(crate) type Adjacency<'a> = BTreeMap<&'a str, Vec<&'a str>>;

/// Adjacency over all top-level nodes; null flows carry nothing and are
/// skipped, undirected flows count both ways.
pub(crate) fn adjacency(m: &FlowModel) -> (Adjacency<'_>, Adjacency<'_>) {
    let mut fwd = Adjacency::new();
    let mut bwd = Adjacency::new();
    for f in m.flows.iter().filter(|f| !f.is_null_flow) {
        let (a, b) = (f.source.as_str(), f.target.as_str());
        fwd.entry(a).or_default().push(b);
        bwd.entry(b).or_default().push(a);
        if !f.directed {
            fwd.entry(b).or_default().push(a);
            bwd.entry(a).or_default().push(b);
        }
    }
    (fwd, bwd)
}

/// Nodes reachable from `start` in at least one step.
fn reach<'a>(
    adj: &BTreeMap<&'a str, Vec<&'a str>>,
    start: impl IntoIterator<Item = &'a str>,
) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&str> = start.into_iter().collect();
    while let Some(n) = queue.pop_front() {
        for &next in adj.get(n).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

pub fn integration_cut(
    m: &FlowModel,
    sources: &BTreeSet<String>,
    targets: &BTreeSet<String>,
) -> Result<CutResult, CutError> {
    for id in sources.iter().chain(targets) {
        if m.store(id).is_none() {
            return Err(CutError::UnknownStore(id.clone()));
        }
    }
    if let Some(id) = sources.intersection(targets).next() {
        return Err(CutError::SourceIsTarget(id.clone()));
    }
    let (fwd, bwd) = adjacency(m);
    let from_sources = reach(&fwd, sources.iter().map(String::as_str));
    if !targets.iter().any(|t| from_sources.contains(t.as_str())) {
        return Ok(CutResult {
            warning: true,
            ..CutResult::default()
        });
    }
    let is_store = |id: &str| m.store(id).is_some();
    let mut all_targets: BTreeSet<&str> = targets.iter().map(String::as_str).collect();
    let mut extra: BTreeSet<&str> = BTreeSet::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let to_targets = reach(&bwd, all_targets.iter().copied());
        let intermediates: BTreeSet<&str> = from_sources
            .intersection(&to_targets)
            .copied()
            .filter(|id| is_store(id) && !sources.contains(*id) && !all_targets.contains(id))
            .collect();
        let dependents: BTreeSet<&str> = reach(&fwd, intermediates.iter().copied())
            .into_iter()
            .filter(|id| {
                is_store(id)
                    && !intermediates.contains(id)
                    && !all_targets.contains(id)
                    && !sources.contains(*id)
            })
            .collect();
        if dependents.is_empty() {
            return Ok(CutResult {
                intermediates: intermediates.into_iter().map(String::from).collect(),
                extra_targets: extra.into_iter().map(String::from).collect(),
                warning: false,
                iterations,
            });
        }
        extra.extend(&dependents);
        all_targets.extend(dependents);
    }
}
