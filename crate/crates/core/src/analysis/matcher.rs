//! Backtracking subgraph search for pattern templates.
//!
//! Only the top level of a model is searched; detail models behind
//! activities are separate models. Null flows are invisible to matching.
//! Undirected flows match an edge constraint in either orientation.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::template::{
    DegreeConstraint, DegreeDirection, EdgeConstraint, NodeConstraint, NodeKind, PathSpec,
    PatternTemplate, Polarity,
};
use crate::model::{Flow, FlowModel, NodeRef};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchResult {
    pub pattern: String,
    pub polarity: Polarity,
    /// Template node and edge ids to model element ids. Chain members are
    /// keyed `<node>[<position>]`.
    pub binding: BTreeMap<String, String>,
    /// Node sequence of a chain match; empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<String>,
}

/// Read-only view with null flows removed and everything ordered by id.
pub(crate) struct View<'a> {
    pub model: &'a FlowModel,
    pub nodes: Vec<&'a str>,
    pub flows: Vec<&'a Flow>,
}

impl<'a> View<'a> {
    pub fn new(model: &'a FlowModel) -> Self {
        let mut flows: Vec<&Flow> = model.flows.iter().filter(|f| !f.is_null_flow).collect();
        flows.sort_by(|a, b| a.id.cmp(&b.id));
        Self {
            model,
            nodes: model.node_ids(),
            flows,
        }
    }

    fn node(&self, id: &str) -> Option<NodeRef<'a>> {
        self.model.node(id)
    }

    pub fn degree(&self, node: &str, d: &DegreeConstraint) -> usize {
        self.flows
            .iter()
            .filter(|f| d.states.is_empty() || d.states.contains(&f.state))
            .filter(|f| d.attachments.is_empty() || d.attachments.contains(&f.attachment))
            .filter(|f| match d.direction {
                DegreeDirection::In => f.target == node || (!f.directed && f.source == node),
                DegreeDirection::Out => f.source == node || (!f.directed && f.target == node),
                DegreeDirection::Any => f.touches(node),
            })
            .count()
    }

    pub fn node_ok(&self, id: &str, c: &NodeConstraint) -> bool {
        let Some(node) = self.node(id) else {
            return false;
        };
        let kind = if node.is_activity() {
            NodeKind::Activity
        } else {
            NodeKind::Store
        };
        if c.kind.is_some_and(|k| k != kind) {
            return false;
        }
        if !c.states.is_empty() && !node.state().is_some_and(|s| c.states.contains(&s)) {
            return false;
        }
        let experience = matches!(node, NodeRef::Store(s) if s.is_experience);
        if c.experience.is_some_and(|e| e != experience) {
            return false;
        }
        c.degrees.iter().all(|d| d.admits(self.degree(id, d)))
    }

    pub fn edge_candidates(&self, e: &EdgeConstraint, from: &str, to: &str) -> Vec<&'a Flow> {
        self.flows
            .iter()
            .copied()
            .filter(|f| e.states.is_empty() || e.states.contains(&f.state))
            .filter(|f| e.attachments.is_empty() || e.attachments.contains(&f.attachment))
            .filter(|f| {
                (f.source == from && f.target == to)
                    || (!f.directed && f.source == to && f.target == from)
            })
            .collect()
    }

    /// Neighbours reachable over one flow, following undirected flows both ways.
    fn successors(&self, node: &str) -> Vec<&'a str> {
        let mut out: Vec<&str> = self
            .flows
            .iter()
            .filter_map(|f| {
                if f.source == node {
                    Some(f.target.as_str())
                } else if !f.directed && f.target == node {
                    Some(f.source.as_str())
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether a simple path of at least `spec.min_len` flows leads from
    /// `from` to `to` through admissible intermediate stores.
    pub fn path_exists(&self, from: &str, to: &str, spec: &PathSpec) -> bool {
        let mut visited = BTreeSet::from([from]);
        self.path_dfs(from, to, spec, 0, &mut visited)
    }

    fn path_dfs<'b>(
        &'b self,
        at: &str,
        to: &str,
        spec: &PathSpec,
        len: usize,
        visited: &mut BTreeSet<&'b str>,
    ) -> bool {
        for next in self.successors(at) {
            if next == to {
                if len + 1 >= spec.min_len {
                    return true;
                }
                continue;
            }
            if visited.contains(next) || !self.intermediate_ok(next, spec) {
                continue;
            }
            visited.insert(next);
            let found = self.path_dfs(next, to, spec, len + 1, visited);
            visited.remove(next);
            if found {
                return true;
            }
        }
        false
    }

    fn intermediate_ok(&self, id: &str, spec: &PathSpec) -> bool {
        match self.node(id) {
            Some(NodeRef::Store(s)) => {
                spec.intermediate_states.is_empty() || spec.intermediate_states.contains(&s.state)
            }
            _ => false,
        }
    }
}

/// All injective bindings of `template` in `model`, sorted.
pub fn match_pattern(model: &FlowModel, template: &PatternTemplate) -> Vec<MatchResult> {
    let view = View::new(model);
    let mut results = if template.chain.is_some() {
        match_chain(&view, template)
    } else {
        match_graph(&view, template)
    };
    results.sort();
    results.dedup();
    results
}

/// Runs every template and concatenates the results in template order.
pub fn scan(model: &FlowModel, templates: &[PatternTemplate]) -> Vec<MatchResult> {
    templates
        .par_iter()
        .map(|t| match_pattern(model, t))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn match_graph(view: &View<'_>, t: &PatternTemplate) -> Vec<MatchResult> {
    let candidates: Vec<Vec<&str>> = t
        .nodes
        .iter()
        .map(|c| {
            view.nodes
                .iter()
                .copied()
                .filter(|id| view.node_ok(id, c))
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let index: BTreeMap<&str, usize> = t
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    // Edges become checkable once both endpoints are bound.
    let mut ready: Vec<Vec<&EdgeConstraint>> = vec![Vec::new(); t.nodes.len()];
    for e in &t.edges {
        ready[index[e.from.as_str()].max(index[e.to.as_str()])].push(e);
    }

    let mut search = GraphSearch {
        view,
        t,
        candidates,
        ready,
        index,
        bound: Vec::new(),
        out: Vec::new(),
    };
    search.assign(0);
    search.out
}

struct GraphSearch<'v, 'a> {
    view: &'v View<'a>,
    t: &'v PatternTemplate,
    candidates: Vec<Vec<&'a str>>,
    ready: Vec<Vec<&'v EdgeConstraint>>,
    index: BTreeMap<&'v str, usize>,
    bound: Vec<&'a str>,
    out: Vec<MatchResult>,
}

impl<'v, 'a> GraphSearch<'v, 'a> {
    fn bound_id(&self, template_node: &str) -> &'a str {
        self.bound[self.index[template_node]]
    }

    fn assign(&mut self, depth: usize) {
        if depth == self.t.nodes.len() {
            self.bind_edges();
            return;
        }
        for i in 0..self.candidates[depth].len() {
            let candidate = self.candidates[depth][i];
            if self.bound.contains(&candidate) {
                continue;
            }
            self.bound.push(candidate);
            if self.ready[depth].iter().all(|e| self.edge_feasible(e)) {
                self.assign(depth + 1);
            }
            self.bound.pop();
        }
    }

    fn edge_feasible(&self, e: &EdgeConstraint) -> bool {
        let (from, to) = (self.bound_id(&e.from), self.bound_id(&e.to));
        match &e.via {
            Some(path) => self.view.path_exists(from, to, path),
            None => !self.view.edge_candidates(e, from, to).is_empty(),
        }
    }

    fn bind_edges(&mut self) {
        let direct: Vec<(&EdgeConstraint, Vec<&'a Flow>)> = self
            .t
            .edges
            .iter()
            .filter(|e| e.via.is_none())
            .map(|e| {
                (
                    e,
                    self.view
                        .edge_candidates(e, self.bound_id(&e.from), self.bound_id(&e.to)),
                )
            })
            .collect();
        let mut chosen: Vec<&Flow> = Vec::new();
        self.choose(&direct, &mut chosen);
    }

    fn choose(&mut self, direct: &[(&EdgeConstraint, Vec<&'a Flow>)], chosen: &mut Vec<&'a Flow>) {
        let i = chosen.len();
        if i == direct.len() {
            let mut binding: BTreeMap<String, String> = self
                .t
                .nodes
                .iter()
                .zip(&self.bound)
                .map(|(n, id)| (n.id.clone(), id.to_string()))
                .collect();
            for ((e, _), f) in direct.iter().zip(chosen.iter()) {
                binding.insert(e.id.clone(), f.id.clone());
            }
            self.out.push(MatchResult {
                pattern: self.t.name.clone(),
                polarity: self.t.polarity,
                binding,
                path: Vec::new(),
            });
            return;
        }
        let (edge, flows) = &direct[i];
        for &flow in flows {
            if chosen.iter().any(|f| f.id == flow.id) {
                continue;
            }
            if edge.same_content {
                let earlier = direct[..i]
                    .iter()
                    .zip(chosen.iter())
                    .find(|((e, _), _)| e.same_content);
                if earlier.is_some_and(|(_, f)| f.content != flow.content) {
                    continue;
                }
            }
            chosen.push(flow);
            self.choose(direct, chosen);
            chosen.pop();
        }
    }
}

fn match_chain(view: &View<'_>, t: &PatternTemplate) -> Vec<MatchResult> {
    let chain = t.chain.as_ref().expect("chain template");
    let member = &t.nodes[0];
    let eligible: BTreeSet<&str> = view
        .nodes
        .iter()
        .copied()
        .filter(|id| view.node_ok(id, member))
        .collect();

    // content label -> directed links among eligible nodes
    let mut links: BTreeMap<Option<&str>, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for f in &view.flows {
        if !chain.flow_states.is_empty() && !chain.flow_states.contains(&f.state) {
            continue;
        }
        let (s, d) = (f.source.as_str(), f.target.as_str());
        if s == d || !eligible.contains(s) || !eligible.contains(d) {
            continue;
        }
        let set = links.entry(f.content.as_deref()).or_default();
        set.insert((s, d));
        if !f.directed {
            set.insert((d, s));
        }
    }

    let mut found: BTreeSet<Vec<&str>> = BTreeSet::new();
    for set in links.values() {
        let succ = |n: &str| -> Vec<&str> {
            set.iter()
                .filter(|(a, _)| *a == n)
                .map(|(_, b)| *b)
                .collect()
        };
        let pred = |n: &str| -> Vec<&str> {
            set.iter()
                .filter(|(_, b)| *b == n)
                .map(|(a, _)| *a)
                .collect()
        };
        for &start in &eligible {
            let mut path = vec![start];
            extend_chain(&mut path, &succ, &pred, chain.min_len, &mut found);
        }
    }

    let results: Vec<Vec<&str>> = found
        .iter()
        .filter(|p| {
            let rev: Vec<&str> = p.iter().rev().copied().collect();
            !(found.contains(&rev) && rev < **p)
        })
        .cloned()
        .collect();
    results
        .into_iter()
        .map(|path| MatchResult {
            pattern: t.name.clone(),
            polarity: t.polarity,
            binding: path
                .iter()
                .enumerate()
                .map(|(i, id)| (format!("{}[{i}]", member.id), id.to_string()))
                .collect(),
            path: path.iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

fn extend_chain<'a>(
    path: &mut Vec<&'a str>,
    succ: &dyn Fn(&str) -> Vec<&'a str>,
    pred: &dyn Fn(&str) -> Vec<&'a str>,
    min_len: usize,
    found: &mut BTreeSet<Vec<&'a str>>,
) {
    let last = *path.last().expect("non-empty path");
    let next: Vec<&str> = succ(last)
        .into_iter()
        .filter(|n| !path.contains(n))
        .collect();
    if next.is_empty() {
        let extendable_back = pred(path[0]).iter().any(|n| !path.contains(n));
        if !extendable_back && path.len() >= min_len {
            found.insert(path.clone());
        }
        return;
    }
    for n in next {
        path.push(n);
        extend_chain(path, succ, pred, min_len, found);
        path.pop();
    }
}
