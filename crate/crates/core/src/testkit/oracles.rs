//! Brute-force reference implementations. They share no code with the
//! algorithms they check and trade all efficiency for obviousness.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::analysis::template::{
    DegreeDirection, EdgeConstraint, NodeConstraint, NodeKind, PatternTemplate,
};
use crate::analysis::MatchResult;
use crate::derive::{DocumentPair, Finding, ProcessModel};
use crate::model::{Flow, FlowModel, InformationStore};

fn live_flows(m: &FlowModel) -> Vec<&Flow> {
    m.flows.iter().filter(|f| !f.is_null_flow).collect()
}

/// Every way to read flow `f` as a step `a -> b`.
fn steps(f: &Flow) -> Vec<(&str, &str)> {
    let mut out = vec![(f.source.as_str(), f.target.as_str())];
    if !f.directed {
        out.push((f.target.as_str(), f.source.as_str()));
    }
    out
}

fn node_admitted(m: &FlowModel, flows: &[&Flow], id: &str, c: &NodeConstraint) -> bool {
    let store: Option<&InformationStore> = m.stores.iter().find(|s| s.id == id);
    let is_activity = m.activities.iter().any(|a| a.id == id);
    match c.kind {
        Some(NodeKind::Store) if store.is_none() => return false,
        Some(NodeKind::Activity) if !is_activity => return false,
        _ => {}
    }
    if !c.states.is_empty() && !store.is_some_and(|s| c.states.contains(&s.state)) {
        return false;
    }
    let experience = store.is_some_and(|s| s.is_experience);
    if c.experience.is_some_and(|e| e != experience) {
        return false;
    }
    c.degrees.iter().all(|d| {
        let mut n = 0;
        for f in flows {
            if !d.states.is_empty() && !d.states.contains(&f.state) {
                continue;
            }
            if !d.attachments.is_empty() && !d.attachments.contains(&f.attachment) {
                continue;
            }
            let counts = match d.direction {
                DegreeDirection::Any => f.source == id || f.target == id,
                DegreeDirection::In => steps(f).iter().any(|(_, b)| *b == id),
                DegreeDirection::Out => steps(f).iter().any(|(a, _)| *a == id),
            };
            if counts {
                n += 1;
            }
        }
        d.min.is_none_or(|min| n >= min) && d.max.is_none_or(|max| n <= max)
    })
}

fn edge_admits(e: &EdgeConstraint, f: &Flow, from: &str, to: &str) -> bool {
    (e.states.is_empty() || e.states.contains(&f.state))
        && (e.attachments.is_empty() || e.attachments.contains(&f.attachment))
        && steps(f).contains(&(from, to))
}

/// Some ordering of some subset of admissible stores forms a path of at
/// least `min_len` flows from `from` to `to`.
fn path_by_enumeration(
    m: &FlowModel,
    flows: &[&Flow],
    from: &str,
    to: &str,
    e: &EdgeConstraint,
) -> bool {
    let spec = e.via.as_ref().expect("path edge");
    let inner: Vec<&str> = m
        .stores
        .iter()
        .filter(|s| s.id != from && s.id != to)
        .filter(|s| {
            spec.intermediate_states.is_empty() || spec.intermediate_states.contains(&s.state)
        })
        .map(|s| s.id.as_str())
        .collect();
    let linked = |a: &str, b: &str| flows.iter().any(|f| steps(f).contains(&(a, b)));
    (0..=inner.len()).any(|k| {
        k + 1 >= spec.min_len
            && inner.iter().copied().permutations(k).any(|mid| {
                let mut seq = vec![from];
                seq.extend(mid);
                seq.push(to);
                seq.windows(2).all(|w| linked(w[0], w[1]))
            })
    })
}

/// All injective bindings, found by trying every assignment.
pub fn match_oracle(m: &FlowModel, t: &PatternTemplate) -> Vec<MatchResult> {
    let flows = live_flows(m);
    let mut out = if t.chain.is_some() {
        chain_oracle(m, &flows, t)
    } else {
        graph_oracle(m, &flows, t)
    };
    out.sort();
    out.dedup();
    out
}

fn graph_oracle(m: &FlowModel, flows: &[&Flow], t: &PatternTemplate) -> Vec<MatchResult> {
    let nodes: Vec<&str> = m
        .stores
        .iter()
        .map(|s| s.id.as_str())
        .chain(m.activities.iter().map(|a| a.id.as_str()))
        .collect();
    let mut out = Vec::new();
    for assignment in nodes.iter().copied().permutations(t.nodes.len()) {
        if !t
            .nodes
            .iter()
            .zip(&assignment)
            .all(|(c, id)| node_admitted(m, flows, id, c))
        {
            continue;
        }
        let bound: BTreeMap<&str, &str> = t
            .nodes
            .iter()
            .map(|c| c.id.as_str())
            .zip(assignment.iter().copied())
            .collect();
        if !t
            .edges
            .iter()
            .filter(|e| e.via.is_some())
            .all(|e| path_by_enumeration(m, flows, bound[e.from.as_str()], bound[e.to.as_str()], e))
        {
            continue;
        }
        let direct: Vec<&EdgeConstraint> = t.edges.iter().filter(|e| e.via.is_none()).collect();
        let options: Vec<Vec<&Flow>> = direct
            .iter()
            .map(|e| {
                flows
                    .iter()
                    .copied()
                    .filter(|f| edge_admits(e, f, bound[e.from.as_str()], bound[e.to.as_str()]))
                    .collect()
            })
            .collect();
        for choice in options
            .iter()
            .map(|o| o.iter().copied())
            .multi_cartesian_product_or_unit()
        {
            if choice
                .iter()
                .map(|f| f.id.as_str())
                .collect::<BTreeSet<_>>()
                .len()
                != choice.len()
            {
                continue;
            }
            let same: Vec<&Option<String>> = direct
                .iter()
                .zip(&choice)
                .filter(|(e, _)| e.same_content)
                .map(|(_, f)| &f.content)
                .collect();
            if same.windows(2).any(|w| w[0] != w[1]) {
                continue;
            }
            let mut binding: BTreeMap<String, String> = bound
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            for (e, f) in direct.iter().zip(&choice) {
                binding.insert(e.id.clone(), f.id.clone());
            }
            out.push(MatchResult {
                pattern: t.name.clone(),
                polarity: t.polarity,
                binding,
                path: Vec::new(),
            });
        }
    }
    out
}

trait CartesianOrUnit: Iterator + Sized {
    /// Like `multi_cartesian_product`, but yields one empty combination for
    /// an empty list of factors.
    fn multi_cartesian_product_or_unit(self) -> Vec<Vec<<Self::Item as IntoIterator>::Item>>
    where
        Self::Item: IntoIterator,
        <Self::Item as IntoIterator>::IntoIter: Clone,
        <Self::Item as IntoIterator>::Item: Clone;
}

impl<I: Iterator> CartesianOrUnit for I {
    fn multi_cartesian_product_or_unit(self) -> Vec<Vec<<Self::Item as IntoIterator>::Item>>
    where
        Self::Item: IntoIterator,
        <Self::Item as IntoIterator>::IntoIter: Clone,
        <Self::Item as IntoIterator>::Item: Clone,
    {
        let factors: Vec<_> = self.map(IntoIterator::into_iter).collect();
        if factors.is_empty() {
            return vec![Vec::new()];
        }
        factors.into_iter().multi_cartesian_product().collect()
    }
}

fn chain_oracle(m: &FlowModel, flows: &[&Flow], t: &PatternTemplate) -> Vec<MatchResult> {
    let spec = t.chain.as_ref().expect("chain");
    let member = &t.nodes[0];
    let eligible: Vec<&str> = m
        .stores
        .iter()
        .map(|s| s.id.as_str())
        .chain(m.activities.iter().map(|a| a.id.as_str()))
        .filter(|id| node_admitted(m, flows, id, member))
        .collect();
    let labels: BTreeSet<Option<&str>> = flows.iter().map(|f| f.content.as_deref()).collect();
    let mut found: BTreeSet<Vec<&str>> = BTreeSet::new();
    for label in labels {
        let linked = |a: &str, b: &str| {
            a != b
                && flows.iter().any(|f| {
                    f.content.as_deref() == label
                        && (spec.flow_states.is_empty() || spec.flow_states.contains(&f.state))
                        && eligible.contains(&f.source.as_str())
                        && eligible.contains(&f.target.as_str())
                        && steps(f).contains(&(a, b))
                })
        };
        for k in spec.min_len.max(1)..=eligible.len() {
            for seq in eligible.iter().copied().permutations(k) {
                if !seq.windows(2).all(|w| linked(w[0], w[1])) {
                    continue;
                }
                let outside = eligible.iter().filter(|n| !seq.contains(n));
                let maximal = outside
                    .clone()
                    .all(|&n| !linked(seq[k - 1], n) && !linked(n, seq[0]));
                if maximal {
                    found.insert(seq);
                }
            }
        }
    }
    found
        .iter()
        .filter(|p| {
            let rev: Vec<&str> = p.iter().rev().copied().collect();
            !(found.contains(&rev) && rev < **p)
        })
        .map(|p| MatchResult {
            pattern: t.name.clone(),
            polarity: t.polarity,
            binding: p
                .iter()
                .enumerate()
                .map(|(i, id)| (format!("{}[{i}]", member.id), id.to_string()))
                .collect(),
            path: p.iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

/// Every maximal control path of a DAG process (source to sink).
pub fn maximal_paths(p: &ProcessModel) -> Vec<Vec<&str>> {
    let succ = |a: &str| -> Vec<&str> {
        p.edges
            .iter()
            .filter(|(x, _)| x == a)
            .map(|(_, y)| y.as_str())
            .collect()
    };
    let has_pred = |a: &str| p.edges.iter().any(|(_, y)| y == a);
    let mut out = Vec::new();
    let mut stack: Vec<Vec<&str>> = p
        .activities
        .iter()
        .map(|a| a.id.as_str())
        .filter(|a| !has_pred(a))
        .map(|a| vec![a])
        .collect();
    while let Some(path) = stack.pop() {
        let next = succ(path.last().expect("non-empty"));
        if next.is_empty() {
            out.push(path);
        } else {
            for n in next {
                let mut longer = path.clone();
                longer.push(n);
                stack.push(longer);
            }
        }
    }
    out
}

/// Walks every maximal path independently, exactly as the step-by-step
/// description reads, and unites the results.
pub fn document_flow_oracle(p: &ProcessModel) -> (BTreeSet<DocumentPair>, Vec<Finding>) {
    let paths = maximal_paths(p);
    let mut pairs = BTreeSet::new();
    // (activity, document) -> (seen on a path without producer, seen with one)
    let mut reads: BTreeMap<(&str, &str), (bool, bool)> = BTreeMap::new();
    for doc in p.documents() {
        for path in &paths {
            let mut producer: Option<&str> = None;
            for &a in path {
                if p.inputs.get(a).is_some_and(|d| d.contains(doc)) {
                    let entry = reads.entry((a, doc)).or_default();
                    match producer {
                        Some(prod) => {
                            entry.1 = true;
                            pairs.insert(DocumentPair {
                                document: doc.into(),
                                producer: prod.into(),
                                consumer: a.into(),
                            });
                        }
                        None => entry.0 = true,
                    }
                }
                if p.outputs.get(a).is_some_and(|d| d.contains(doc)) {
                    producer = Some(a);
                }
            }
        }
    }
    let mut findings: Vec<Finding> = reads
        .into_iter()
        .filter(|(_, (orphan, _))| *orphan)
        .map(|((a, d), (_, produced))| Finding::OrphanInput {
            activity: a.into(),
            document: d.into(),
            on_every_path: !produced,
        })
        .collect();
    findings.sort();
    (pairs, findings)
}

/// Integration cut by exhaustive simple-path enumeration: `x` depends on
/// `y` when some simple path leads from `y` to `x`.
pub fn cut_oracle(
    m: &FlowModel,
    sources: &BTreeSet<String>,
    targets: &BTreeSet<String>,
) -> (BTreeSet<String>, BTreeSet<String>, bool) {
    let flows = live_flows(m);
    let all: Vec<&str> = m.node_ids();
    let linked = |a: &str, b: &str| flows.iter().any(|f| steps(f).contains(&(a, b)));
    // path(a, b): simple path of >= 1 flow, found by DFS over all simple paths.
    let path = |a: &str, b: &str| -> bool {
        let mut stack: Vec<Vec<&str>> = vec![vec![a]];
        while let Some(p) = stack.pop() {
            let last = *p.last().expect("non-empty");
            for &n in &all {
                if !linked(last, n) {
                    continue;
                }
                if n == b {
                    return true;
                }
                if !p.contains(&n) {
                    let mut q = p.clone();
                    q.push(n);
                    stack.push(q);
                }
            }
        }
        false
    };
    let stores: Vec<&str> = m.stores.iter().map(|s| s.id.as_str()).collect();
    if !targets.iter().any(|t| sources.iter().any(|s| path(s, t))) {
        return (BTreeSet::new(), BTreeSet::new(), true);
    }
    let mut tgt: BTreeSet<String> = targets.clone();
    let mut extra = BTreeSet::new();
    loop {
        let inter: BTreeSet<String> = stores
            .iter()
            .filter(|x| !sources.contains(**x) && !tgt.contains(**x))
            .filter(|x| sources.iter().any(|s| path(s, x)) && tgt.iter().any(|t| path(x, t)))
            .map(|x| x.to_string())
            .collect();
        let dependents: BTreeSet<String> = stores
            .iter()
            .filter(|y| !sources.contains(**y) && !tgt.contains(**y) && !inter.contains(**y))
            .filter(|y| inter.iter().any(|x| path(x, y)))
            .map(|y| y.to_string())
            .collect();
        if dependents.is_empty() {
            return (inter, extra, false);
        }
        extra.extend(dependents.iter().cloned());
        tgt.extend(dependents);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::catalog;
    use crate::analysis::match_pattern;
    use crate::testkit::fixtures;

    #[test]
    fn oracles_agree_on_fixtures() {
        for (model, template) in [
            (fixtures::dead_document(), catalog::totes_dokument()),
            (fixtures::stille_post(), catalog::stille_post()),
        ] {
            let o = match_oracle(&model, &template);
            assert_eq!(o.len(), 1);
            assert_eq!(o, match_pattern(&model, &template));
        }
    }

    #[test]
    fn paths_of_a_diamond() {
        let p = ProcessModel::default()
            .activity("a")
            .activity("b")
            .activity("c")
            .activity("d")
            .edge("a", "b")
            .edge("a", "c")
            .edge("b", "d")
            .edge("c", "d");
        assert_eq!(maximal_paths(&p).len(), 2);
    }
}
