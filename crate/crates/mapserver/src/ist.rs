//! Observed FLOW-Map from communication events.
//!
//! Intensities are minutes of overlap with the window. The events say who
//! talked to whom and for how long, not what was said, so the flows carry no
//! content label.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use flow_core::{Activity, AggregateState, Flow, FlowModel, InformationStore, ModelKind, Site};

use crate::types::{CommunicationEvent, ParticipantProfile, Window};

/// Line thickness of a flow, from its intensity per day.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Thickness {
    Thin,
    Medium,
    Thick,
}

/// Buckets at 15 and 60 minutes per day. Windows shorter than a day count
/// as one day.
pub fn thickness(minutes: f64, window: &Window) -> Thickness {
    let days = ((window.end - window.start).num_seconds() as f64 / 86_400.0).max(1.0);
    match minutes / days {
        x if x < 15.0 => Thickness::Thin,
        x if x < 60.0 => Thickness::Medium,
        _ => Thickness::Thick,
    }
}

/// Minutes of `e` inside `w`; open events run until `now`.
pub fn overlap_minutes(e: &CommunicationEvent, w: &Window, now: DateTime<Utc>) -> f64 {
    let end = e.end.unwrap_or(now.max(e.start));
    let from = e.start.max(w.start);
    let to = end.min(w.end);
    if to <= from {
        0.0
    } else {
        (to - from).num_milliseconds() as f64 / 60_000.0
    }
}

/// An event belongs to the window when it overlaps it, or, having no
/// duration, starts inside it.
pub fn in_window(e: &CommunicationEvent, w: &Window, now: DateTime<Utc>) -> bool {
    let end = e.end.unwrap_or(now.max(e.start));
    if end == e.start {
        w.contains(e.start)
    } else {
        overlap_minutes(e, w, now) > 0.0
    }
}

pub enum EventShape<'a> {
    /// A document was changed by the participants.
    DocumentChange(&'a str),
    Pair(&'a str, &'a str),
    /// Three or more participants.
    Conference,
    /// One participant and no artifact: nothing to draw.
    Solo,
}

pub fn shape(e: &CommunicationEvent) -> EventShape<'_> {
    if let Some(a) = e.artifact.as_deref() {
        return EventShape::DocumentChange(a);
    }
    match e.party()[..] {
        [a, b] => EventShape::Pair(a, b),
        [_, _, _, ..] => EventShape::Conference,
        _ => EventShape::Solo,
    }
}

/// Builds the Ist map for `window`. `participants` must be sorted by id and
/// every event participant must be among them.
pub fn build_ist_map<'a>(
    participants: impl IntoIterator<Item = &'a ParticipantProfile>,
    events: impl IntoIterator<Item = &'a CommunicationEvent>,
    window: &Window,
    now: DateTime<Utc>,
) -> FlowModel {
    let mut m = FlowModel::new("Ist", ModelKind::Ist);
    m.map = true;
    for p in participants {
        if !m.sites.iter().any(|s| s.id == p.site_id) {
            m.sites.push(Site {
                id: p.site_id.clone(),
                label: p.site_id.clone(),
            });
        }
        m.stores.push(
            InformationStore::liquid(&p.id)
                .named(&p.name)
                .at_site(&p.site_id),
        );
    }
    m.sites.sort_by(|a, b| a.id.cmp(&b.id));
    if window.is_empty() {
        return m;
    }

    let mut events: Vec<&CommunicationEvent> = events
        .into_iter()
        .filter(|e| in_window(e, window, now))
        .collect();
    events.sort_by(|a, b| (a.start, &a.id).cmp(&(b.start, &b.id)));

    let mut pairs: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut edits: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for e in &events {
        match shape(e) {
            EventShape::Pair(a, b) => {
                *pairs.entry((a, b)).or_default() += overlap_minutes(e, window, now)
            }
            // Counted once, in the window where the change starts.
            EventShape::DocumentChange(doc) if window.contains(e.start) => {
                for p in e.party() {
                    *edits.entry((p, doc)).or_default() += 1;
                }
            }
            EventShape::Conference => {
                let node = m.fresh_id(&format!(
                    "conf.{}",
                    flow_core::model::sanitize_identifier(&e.id)
                ));
                m.activities.push(Activity::new(&node).named(&e.channel));
                let minutes = overlap_minutes(e, window, now);
                for p in e.party() {
                    let id = m.fresh_id(&format!("{node}.{p}"));
                    m.flows.push(
                        Flow::new(id, p, &node, AggregateState::Liquid)
                            .undirected()
                            .with_intensity(minutes),
                    );
                }
            }
            EventShape::DocumentChange(_) | EventShape::Solo => {}
        }
    }
    for ((a, b), minutes) in pairs {
        let id = m.fresh_id(&format!("talk.{a}.{b}"));
        m.flows.push(
            Flow::new(id, a, b, AggregateState::Liquid)
                .undirected()
                .with_intensity(minutes),
        );
    }
    let mut doc_ids: BTreeMap<&str, String> = BTreeMap::new();
    for ((p, doc), count) in edits {
        let store = match doc_ids.get(doc) {
            Some(id) => id.clone(),
            None => {
                let id = if m.contains_id(doc) {
                    m.fresh_id(&format!("doc.{doc}"))
                } else {
                    doc.to_string()
                };
                m.stores.push(InformationStore::solid(&id).named(doc));
                doc_ids.insert(doc, id.clone());
                id
            }
        };
        let id = m.fresh_id(&format!("edit.{p}.{doc}"));
        m.flows
            .push(Flow::new(id, p, store, AggregateState::Liquid).with_intensity(f64::from(count)));
    }
    m
}

/// Ongoing events with three or more participants at the end of `window`.
pub fn active_conferences<'a>(
    events: impl IntoIterator<Item = &'a CommunicationEvent>,
    window: &Window,
) -> Vec<CommunicationEvent> {
    let mut out: Vec<CommunicationEvent> = events
        .into_iter()
        .filter(|e| matches!(shape(e), EventShape::Conference))
        .filter(|e| e.start <= window.end && e.end.is_none_or(|end| end > window.end))
        .cloned()
        .collect();
    out.sort_by(|a, b| (a.start, &a.id).cmp(&(b.start, &b.id)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration as D;
    use chrono::TimeZone;
    use flow_core::validate;

    fn t(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 6, h, m, 0).unwrap()
    }

    fn people() -> Vec<ParticipantProfile> {
        vec![
            ParticipantProfile::new("alice", "Alice", "GER"),
            ParticipantProfile::new("bob", "Bob", "GER"),
            ParticipantProfile::new("carol", "Carol", "IND"),
        ]
    }

    fn chat(id: &str, a: &str, b: &str, from: DateTime<Utc>, mins: i64) -> CommunicationEvent {
        CommunicationEvent::new(
            id,
            "text-chat",
            &[a, b],
            from,
            Some(from + D::minutes(mins)),
        )
    }

    #[test]
    fn pair_minutes_add_up() {
        let events = [
            chat("e1", "alice", "bob", t(9, 0), 10),
            chat("e2", "bob", "alice", t(10, 0), 10),
            chat("e3", "alice", "bob", t(11, 0), 10),
            chat("late", "alice", "bob", t(20, 0), 10),
        ];
        let w = Window::new(t(8, 0), t(12, 0));
        let m = build_ist_map(&people(), &events, &w, t(23, 0));
        assert_eq!(m.flows.len(), 1);
        assert_eq!(m.flows[0].intensity, Some(30.0));
        assert!(!m.flows[0].directed);
        assert_eq!(m.sites.len(), 2);
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
    }

    #[test]
    fn group_calls_become_conference_nodes() {
        let call = CommunicationEvent::new(
            "c1",
            "voice-conference",
            &["alice", "bob", "carol"],
            t(9, 0),
            Some(t(9, 30)),
        );
        let m = build_ist_map(
            &people(),
            [&call],
            &Window::new(t(8, 0), t(12, 0)),
            t(23, 0),
        );
        assert_eq!(m.activities.len(), 1);
        assert_eq!(m.flows.len(), 3);
        assert!(m
            .flows
            .iter()
            .all(|f| f.touches(&m.activities[0].id) && f.intensity == Some(30.0)));
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn document_changes_point_at_the_document() {
        let mut commit =
            CommunicationEvent::new("v1", "vcs-commit", &["alice"], t(9, 0), Some(t(9, 0)));
        commit.artifact = Some("Spec".into());
        let mut again = commit.clone();
        again.id = "v2".into();
        let m = build_ist_map(
            &people(),
            [&commit, &again],
            &Window::new(t(8, 0), t(12, 0)),
            t(23, 0),
        );
        let f = m.flows.iter().find(|f| f.source == "alice").unwrap();
        assert_eq!((f.target.as_str(), f.intensity), ("Spec", Some(2.0)));
        assert_eq!(m.store("Spec").unwrap().state, AggregateState::Solid);
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn open_events_run_until_now() {
        let open = CommunicationEvent::new(
            "o",
            "voice-conference",
            &["alice", "bob", "carol"],
            t(9, 0),
            None,
        );
        let w = Window::new(t(8, 0), t(12, 0));
        let m = build_ist_map(&people(), [&open], &w, t(9, 20));
        assert_eq!(m.flows[0].intensity, Some(20.0));
        assert_eq!(
            active_conferences([&open], &Window::new(t(8, 0), t(9, 20))).len(),
            1
        );
    }

    #[test]
    fn empty_window_gives_participants_only() {
        let events = [chat("e1", "alice", "bob", t(9, 0), 10)];
        let m = build_ist_map(&people(), &events, &Window::new(t(9, 0), t(9, 0)), t(23, 0));
        assert!(m.flows.is_empty());
        assert_eq!(m.stores.len(), 3);
    }

    #[test]
    fn thickness_buckets() {
        let day = Window::new(t(0, 0), t(0, 0) + D::days(1));
        assert_eq!(thickness(14.9, &day), Thickness::Thin);
        assert_eq!(thickness(15.0, &day), Thickness::Medium);
        assert_eq!(thickness(60.0, &day), Thickness::Thick);
        let week = Window::new(t(0, 0), t(0, 0) + D::days(7));
        assert_eq!(thickness(60.0, &week), Thickness::Thin);
    }
}
