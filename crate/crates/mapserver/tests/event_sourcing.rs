use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use flow_mapserver::synth::{self, monday};
use flow_mapserver::{
    Clock, FixedClock, LogRecord, MapService, MapState, Mode, Outcome, ServiceConfig, Window,
};
use proptest::prelude::*;

fn now() -> DateTime<Utc> {
    monday() + Duration::days(3)
}

fn clock() -> Arc<dyn Clock> {
    Arc::new(FixedClock::new(now()))
}

fn loaded(seed: u64, n: usize) -> (MapState, Vec<LogRecord>) {
    let people = synth::team(6);
    let events = synth::events(&mut synth::rng(seed), &people, n, 3);
    let mut state = MapState::default();
    let mut records: Vec<LogRecord> = people
        .into_iter()
        .map(|profile| LogRecord::Participant { profile })
        .collect();
    records.extend(events.into_iter().map(|event| LogRecord::Event { event }));
    for r in &records {
        state.apply(r.clone()).unwrap();
    }
    (state, records)
}

fn intensities(m: &flow_core::FlowModel) -> Vec<(String, f64)> {
    m.flows
        .iter()
        .map(|f| {
            (
                format!("{}|{}|{}", f.source, f.target, f.id),
                f.intensity.unwrap_or(0.0),
            )
        })
        .collect()
}

#[test]
fn restart_reproduces_snapshots_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (_, records) = loaded(5, 300);
    let mut svc = MapService::open(dir.path(), ServiceConfig::default(), clock()).unwrap();
    for r in records.iter().cloned() {
        svc.submit(r).unwrap();
    }
    let w = Some(Window::new(monday(), now()));
    let before = serde_json::to_vec(&svc.snapshot(Mode::History, w)).unwrap();
    drop(svc);
    let again = MapService::open(dir.path(), ServiceConfig::default(), clock()).unwrap();
    assert_eq!(
        serde_json::to_vec(&again.snapshot(Mode::History, w)).unwrap(),
        before
    );
    assert_eq!(
        serde_json::to_vec(&again.snapshot(Mode::Live, None)).unwrap(),
        serde_json::to_vec(&again.snapshot(Mode::Live, None)).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pair_intensities_match_direct_aggregation(seed in any::<u64>(), from in 0i64..72, len in 0i64..72) {
        let (state, records) = loaded(seed, 120);
        let events: Vec<_> = records.iter().filter_map(|r| match r { LogRecord::Event { event } => Some(event.clone()), _ => None }).collect();
        let w = Window::new(monday() + Duration::hours(from), monday() + Duration::hours(from + len));
        let m = state.ist_map(&w, now());
        let oracle = synth::pair_minutes_oracle(&events, &w, now());
        let mut got = std::collections::BTreeMap::new();
        for f in m.flows.iter().filter(|f| f.id.starts_with("talk.") && f.intensity.unwrap_or(0.0) > 0.0) {
            got.insert((f.source.clone(), f.target.clone()), f.intensity.unwrap());
        }
        prop_assert_eq!(got.len(), oracle.len());
        for (k, v) in &oracle {
            prop_assert!((got[k] - v).abs() < 1e-9, "{:?}: {} vs {}", k, got[k], v);
        }
    }

    #[test]
    fn intensities_add_over_adjacent_windows(seed in any::<u64>(), cut in 1i64..71) {
        let (state, _) = loaded(seed, 120);
        let (a, b, c) = (monday(), monday() + Duration::hours(cut), monday() + Duration::hours(72));
        let sum_by_pair = |w: Window| {
            let mut out = std::collections::BTreeMap::<String, f64>::new();
            let m = state.ist_map(&w, now());
            for f in &m.flows {
                // Conference node ids depend on the event, not the window.
                *out.entry(format!("{}|{}", f.source, f.target)).or_default() += f.intensity.unwrap_or(0.0);
            }
            out
        };
        let whole = sum_by_pair(Window::new(a, c));
        let mut parts = sum_by_pair(Window::new(a, b));
        for (k, v) in sum_by_pair(Window::new(b, c)) {
            *parts.entry(k).or_default() += v;
        }
        prop_assert_eq!(whole.len(), parts.len());
        for (k, v) in &whole {
            prop_assert!((parts[k] - v).abs() < 1e-6, "{}: {} vs {}", k, parts[k], v);
        }
    }

    #[test]
    fn resending_a_prefix_changes_nothing(seed in any::<u64>(), cut in 0usize..126) {
        let (mut state, records) = loaded(seed, 120);
        let before = state.clone();
        let cut = cut.min(records.len());
        // Events only: yellow-pages updates are not ingestion.
        for r in records[..cut].iter().filter(|r| matches!(r, LogRecord::Event { .. })) {
            prop_assert_eq!(state.apply(r.clone()).unwrap(), Outcome::Unchanged);
        }
        prop_assert_eq!(state, before);
    }

    #[test]
    fn ist_maps_are_valid(seed in any::<u64>()) {
        let (state, _) = loaded(seed, 60);
        let m = state.ist_map(&Window::new(monday(), now()), now());
        prop_assert!(flow_core::validate(&m).is_empty(), "{:?}", flow_core::validate(&m));
        prop_assert!(intensities(&m).iter().all(|(_, i)| *i >= 0.0));
    }
}
