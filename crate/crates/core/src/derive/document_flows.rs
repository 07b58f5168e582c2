//! Document flows from a process model.
//!
//! Every maximal control path is walked separately: an activity reading a
//! document consumes the version of the last producer before it on that
//! path, and an activity writing it becomes the new producer. The union over
//! all paths is computed as reaching definitions on the DAG, which visits
//! each activity once instead of enumerating paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::process::{ProcessError, ProcessModel};
use crate::model::{Activity, AggregateState, Flow, FlowModel, InformationStore, ModelKind};

/// Producer -> consumer hand-over of one document.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocumentPair {
    pub document: String,
    pub producer: String,
    pub consumer: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    /// `activity` reads `document` on a path where nobody wrote it before.
    OrphanInput {
        activity: String,
        document: String,
        on_every_path: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub model: FlowModel,
    pub findings: Vec<Finding>,
    pub pairs: BTreeSet<DocumentPair>,
}

/// `None` stands for "no producer yet".
type Reaching<'a> = BTreeSet<Option<&'a str>>;

pub fn derive_document_flows(process: &ProcessModel) -> Result<Derivation, ProcessError> {
    process.check()?;
    let order = process.topological_order()?;
    let mut pairs = BTreeSet::new();
    let mut findings = Vec::new();
    for doc in process.documents() {
        let mut out: BTreeMap<&str, Reaching> = BTreeMap::new();
        for &a in &order {
            let mut reaching = Reaching::new();
            let mut has_pred = false;
            for p in process.predecessors(a) {
                has_pred = true;
                reaching.extend(out[p].iter().copied());
            }
            if !has_pred {
                reaching.insert(None);
            }
            if process.reads_doc(a, doc) {
                for p in reaching.iter().flatten() {
                    pairs.insert(DocumentPair {
                        document: doc.into(),
                        producer: (*p).into(),
                        consumer: a.into(),
                    });
                }
                if reaching.contains(&None) {
                    findings.push(Finding::OrphanInput {
                        activity: a.into(),
                        document: doc.into(),
                        on_every_path: reaching.len() == 1,
                    });
                }
            }
            if process.writes_doc(a, doc) {
                reaching = BTreeSet::from([Some(a)]);
            }
            out.insert(a, reaching);
        }
    }
    findings.sort();
    let model = build_model(process, &pairs);
    Ok(Derivation {
        model,
        findings,
        pairs,
    })
}

/// One solid store per (document, producer); named after the document, with
/// the producer appended to the id when several activities write it.
fn build_model(process: &ProcessModel, pairs: &BTreeSet<DocumentPair>) -> FlowModel {
    let mut m = FlowModel {
        kind: ModelKind::Soll,
        ..FlowModel::default()
    };
    for a in &process.activities {
        m.activities.push(Activity::new(&a.id).named(&a.name));
    }
    let mut producers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, docs) in &process.outputs {
        for d in docs {
            producers.entry(d.as_str()).or_default().push(a.as_str());
        }
    }
    let mut store_of: BTreeMap<(&str, &str), String> = BTreeMap::new();
    for (doc, ps) in &producers {
        for p in ps {
            let base = if ps.len() == 1 && !m.contains_id(doc) {
                doc.to_string()
            } else {
                format!("{doc}.{p}")
            };
            let id = m.fresh_id(&base);
            m.stores.push(InformationStore::solid(&id).named(*doc));
            store_of.insert((doc, p), id);
        }
    }
    for ((doc, p), store) in &store_of {
        let id = m.fresh_id(&format!("out.{p}.{doc}"));
        m.flows
            .push(Flow::new(&id, *p, store, AggregateState::Solid));
    }
    for pair in pairs {
        let store = &store_of[&(pair.document.as_str(), pair.producer.as_str())];
        let id = m.fresh_id(&format!(
            "in.{}.{}.{}",
            pair.consumer, pair.document, pair.producer
        ));
        m.flows
            .push(Flow::new(&id, store, &pair.consumer, AggregateState::Solid));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate;

    fn pair(d: &str, p: &str, c: &str) -> DocumentPair {
        DocumentPair {
            document: d.into(),
            producer: p.into(),
            consumer: c.into(),
        }
    }

    #[test]
    fn linear_chain() {
        let p = ProcessModel::default()
            .activity("A1")
            .activity("A2")
            .activity("A3")
            .edge("A1", "A2")
            .edge("A2", "A3")
            .writes("A1", "D")
            .reads("A3", "D");
        let d = derive_document_flows(&p).unwrap();
        assert_eq!(d.pairs, BTreeSet::from([pair("D", "A1", "A3")]));
        assert!(d.findings.is_empty());
        let m = &d.model;
        assert_eq!(m.stores.len(), 1);
        assert_eq!(m.stores[0].id, "D");
        assert!(m.flow("out.A1.D").is_some() && m.flow("in.A3.D.A1").is_some());
        assert!(validate(m).is_empty());
    }

    #[test]
    fn revision_and_branches() {
        // A1 writes D, A2 revises it on one branch, A4 reads after the join.
        let p = ProcessModel::default()
            .activity("A1")
            .activity("A2")
            .activity("A3")
            .activity("A4")
            .edge("A1", "A2")
            .edge("A1", "A3")
            .edge("A2", "A4")
            .edge("A3", "A4")
            .writes("A1", "D")
            .reads("A2", "D")
            .writes("A2", "D")
            .reads("A4", "D");
        let d = derive_document_flows(&p).unwrap();
        assert_eq!(
            d.pairs,
            BTreeSet::from([
                pair("D", "A1", "A2"),
                pair("D", "A1", "A4"),
                pair("D", "A2", "A4")
            ])
        );
        let ids: Vec<&str> = d.model.stores.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["D.A1", "D.A2"]);
        assert!(d.model.stores.iter().all(|s| s.name == "D"));
    }

    #[test]
    fn orphan_inputs_are_findings() {
        let p = ProcessModel::default()
            .activity("A")
            .activity("B")
            .activity("C")
            .edge("A", "C")
            .edge("B", "C")
            .writes("A", "D")
            .reads("C", "D")
            .reads("B", "E");
        let d = derive_document_flows(&p).unwrap();
        assert_eq!(
            d.findings,
            [
                Finding::OrphanInput {
                    activity: "B".into(),
                    document: "E".into(),
                    on_every_path: true
                },
                Finding::OrphanInput {
                    activity: "C".into(),
                    document: "D".into(),
                    on_every_path: false
                },
            ]
        );
        assert_eq!(d.pairs.len(), 1);
    }

    #[test]
    fn unconsumed_documents_get_a_store() {
        let p = ProcessModel::default().activity("A").writes("A", "D");
        let d = derive_document_flows(&p).unwrap();
        assert_eq!(d.model.incoming("D").count(), 1);
        assert_eq!(d.model.outgoing("D").count(), 0);
    }

    #[test]
    fn document_named_like_an_activity() {
        let p = ProcessModel::default()
            .activity("A")
            .activity("B")
            .edge("A", "B")
            .writes("A", "B")
            .reads("B", "B");
        let d = derive_document_flows(&p).unwrap();
        assert_eq!(d.model.stores[0].id, "B.A");
        assert!(validate(&d.model).is_empty());
    }
}
