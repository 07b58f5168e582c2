//! Interview records (one per activity template) and their FLOW models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    sanitize_identifier, Activity, AggregateState, Attachment, Flow, FlowModel, InformationStore,
    ModelKind,
};

/// One row of an interview sheet: who, what, how firm, which medium.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitationEntry {
    pub function_or_person: String,
    #[serde(default)]
    pub content: String,
    /// Free text: `solid`/`fest` or `liquid`/`flüssig`.
    pub state: String,
    #[serde(default)]
    pub medium: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElicitationRecord {
    pub organization: String,
    pub respondent: String,
    pub date: String,
    pub interviewee: String,
    pub context: String,
    pub task_name: String,
    pub inputs: Vec<ElicitationEntry>,
    pub outputs: Vec<ElicitationEntry>,
    pub steering: Vec<ElicitationEntry>,
    pub support: Vec<ElicitationEntry>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElicitationError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("record {record} ({task}): task name is empty")]
    EmptyTask { record: usize, task: String },
    #[error("record {record} ({task}), {section}[{entry}]: unknown state `{text}`")]
    UnknownState {
        record: usize,
        task: String,
        section: &'static str,
        entry: usize,
        text: String,
    },
    #[error("record {record} ({task}), {section}[{entry}]: function or person is empty")]
    EmptyParty {
        record: usize,
        task: String,
        section: &'static str,
        entry: usize,
    },
}

/// Reads line-delimited JSON records. Blank lines are skipped.
pub fn parse_records(text: &str) -> Result<Vec<ElicitationRecord>, ElicitationError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ElicitationError::Syntax {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_state(text: &str) -> Option<AggregateState> {
    match text.trim().to_lowercase().as_str() {
        "solid" | "fest" => Some(AggregateState::Solid),
        "liquid" | "flüssig" | "fluessig" => Some(AggregateState::Liquid),
        _ => None,
    }
}

/// One single-activity model per record. Records are numbered from 1 in
/// error messages.
pub fn ingest_elicitation(
    records: &[ElicitationRecord],
) -> Result<Vec<FlowModel>, ElicitationError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| record_model(i + 1, r))
        .collect()
}

#[derive(Clone, Copy)]
enum Side {
    In,
    Out,
}

fn record_model(record: usize, r: &ElicitationRecord) -> Result<FlowModel, ElicitationError> {
    let task = r.task_name.trim();
    if task.is_empty() {
        return Err(ElicitationError::EmptyTask {
            record,
            task: r.task_name.clone(),
        });
    }
    let activity = sanitize_identifier(task);
    let mut m =
        FlowModel::new(task, ModelKind::Ist).with_activity(Activity::new(&activity).named(task));
    // (name, state) -> store id
    let mut stores: BTreeMap<(String, AggregateState), String> = BTreeMap::new();
    let sections: [(&'static str, &[ElicitationEntry], Side, Attachment); 4] = [
        ("inputs", &r.inputs, Side::In, Attachment::Content),
        ("outputs", &r.outputs, Side::Out, Attachment::Content),
        ("steering", &r.steering, Side::In, Attachment::Control),
        ("support", &r.support, Side::In, Attachment::Support),
    ];
    for (section, entries, side, attachment) in sections {
        for (entry, e) in entries.iter().enumerate() {
            let name = e.function_or_person.trim();
            if name.is_empty() {
                return Err(ElicitationError::EmptyParty {
                    record,
                    task: task.into(),
                    section,
                    entry,
                });
            }
            let state = parse_state(&e.state).ok_or_else(|| ElicitationError::UnknownState {
                record,
                task: task.into(),
                section,
                entry,
                text: e.state.clone(),
            })?;
            let store = match stores.get(&(name.to_string(), state)) {
                Some(id) => id.clone(),
                None => {
                    let id = m.fresh_id(&sanitize_identifier(name));
                    m.stores.push(InformationStore::new(&id, state).named(name));
                    stores.insert((name.to_string(), state), id.clone());
                    id
                }
            };
            let tag = match (side, attachment) {
                (Side::Out, _) => "out",
                (_, Attachment::Control) => "ctl",
                (_, Attachment::Support) => "sup",
                _ => "in",
            };
            let id = m.fresh_id(&format!("{activity}.{tag}{}", entry + 1));
            let (source, target) = match side {
                Side::In => (store.as_str(), activity.as_str()),
                Side::Out => (activity.as_str(), store.as_str()),
            };
            let mut f = Flow::new(id, source, target, state).attached(attachment);
            if !e.content.trim().is_empty() {
                f = f.with_content(e.content.trim());
            }
            m.flows.push(f);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::merge_models;
    use crate::validate::validate;

    fn entry(who: &str, what: &str, state: &str) -> ElicitationEntry {
        ElicitationEntry {
            function_or_person: who.into(),
            content: what.into(),
            state: state.into(),
            medium: String::new(),
        }
    }

    #[test]
    fn sections_map_to_attachments() {
        let r = ElicitationRecord {
            task_name: "Anforderungsanalyse".into(),
            inputs: vec![entry("Kunde", "Anforderungen", "flüssig")],
            outputs: vec![entry("Spezifikation", "Anforderungen", "fest")],
            steering: vec![entry("Projektleiter", "Termine", "liquid")],
            support: vec![entry("Wiki", "Vorlagen", "Solid")],
            ..Default::default()
        };
        let m = &ingest_elicitation(&[r]).unwrap()[0];
        assert_eq!(m.store("Kunde").unwrap().state, AggregateState::Liquid);
        let f = m.flow("Anforderungsanalyse.in1").unwrap();
        assert_eq!(
            (f.source.as_str(), f.attachment),
            ("Kunde", Attachment::Content)
        );
        assert_eq!(
            m.flow("Anforderungsanalyse.out1").unwrap().target,
            "Spezifikation"
        );
        assert_eq!(
            m.flow("Anforderungsanalyse.ctl1").unwrap().attachment,
            Attachment::Control
        );
        assert_eq!(
            m.flow("Anforderungsanalyse.sup1").unwrap().attachment,
            Attachment::Support
        );
        assert!(validate(m).is_empty(), "{:?}", validate(m));
    }

    #[test]
    fn unknown_state_names_the_location() {
        let r = ElicitationRecord {
            task_name: "Test".into(),
            outputs: vec![entry("a", "", "fest"), entry("b", "", "gasförmig")],
            ..Default::default()
        };
        let e = ingest_elicitation(&[
            ElicitationRecord {
                task_name: "ok".into(),
                ..Default::default()
            },
            r,
        ])
        .unwrap_err();
        assert_eq!(
            e.to_string(),
            "record 2 (Test), outputs[1]: unknown state `gasförmig`"
        );
    }

    #[test]
    fn shared_document_merges_to_one_store() {
        let a = ElicitationRecord {
            task_name: "Entwurf".into(),
            outputs: vec![entry("Spezifikation", "", "solid")],
            ..Default::default()
        };
        let b = ElicitationRecord {
            task_name: "Test".into(),
            inputs: vec![entry("Spezifikation", "", "solid")],
            ..Default::default()
        };
        let models = ingest_elicitation(&[a, b]).unwrap();
        let merged = merge_models(&models).unwrap();
        assert!(merged.issues.is_empty());
        assert_eq!(merged.model.stores.len(), 1);
        assert_eq!(merged.model.flows.len(), 2);
    }

    #[test]
    fn jsonl_reading() {
        let text = "{\"task_name\":\"A\",\"inputs\":[{\"function_or_person\":\"K\",\"state\":\"liquid\"}]}\n\nnot json\n";
        let e = parse_records(text).unwrap_err();
        assert!(matches!(e, ElicitationError::Syntax { line: 3, .. }));
        assert_eq!(parse_records(&text[..text.len() - 9]).unwrap().len(), 1);
    }
}
