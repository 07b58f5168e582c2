//! Synthetic teams, event streams and plans, and a direct aggregation of
//! pair minutes that shares no code with the map builder.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveTime, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{
    ActivityKind, CommunicationEvent, CommunicationPlan, ParticipantProfile, PlannedActivity,
    Recurrence, Schedule, Window,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Monday 2024-05-06, 00:00 UTC.
pub fn monday() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 6, 0, 0, 0)
        .single()
        .expect("valid date")
}

const SITES: [&str; 3] = ["GER", "IND", "USA"];

/// `n` participants spread over the sites, named `p0`, `p1`, ...
pub fn team(n: usize) -> Vec<ParticipantProfile> {
    (0..n)
        .map(|i| {
            let mut p = ParticipantProfile::new(
                &format!("p{i}"),
                &format!("Person {i}"),
                SITES[i % SITES.len()],
            );
            p.role = if i % 4 == 0 {
                "Tester".into()
            } else {
                "Entwickler".into()
            };
            p
        })
        .collect()
}

/// `n` random events over `days` days from [`monday`]: mostly pair chats,
/// some conferences, document changes and solo notes; one in twenty is
/// still open.
pub fn events(
    rng: &mut impl Rng,
    people: &[ParticipantProfile],
    n: usize,
    days: i64,
) -> Vec<CommunicationEvent> {
    let ids: Vec<&str> = people.iter().map(|p| p.id.as_str()).collect();
    (0..n)
        .map(|i| {
            let start = monday() + Duration::minutes(rng.random_range(0..days * 24 * 60));
            let len = Duration::minutes(rng.random_range(0..90));
            let kind = rng.random_range(0..10);
            let size = match kind {
                0 | 1 => rng.random_range(3..=ids.len().clamp(3, 5)),
                2 => 1,
                _ => 2,
            }
            .min(ids.len());
            let party: Vec<&str> = ids.choose_multiple(rng, size).copied().collect();
            let channel = ["text-chat", "voice-conference", "meeting", "wiki-edit"]
                .choose(rng)
                .expect("channels");
            let end = if rng.random_bool(0.05) {
                None
            } else {
                Some(start + len)
            };
            let mut e = CommunicationEvent::new(&format!("ev-{i}"), channel, &party, start, end);
            if kind == 3 {
                e.artifact = Some(
                    ["Spec", "Wiki", "Code"]
                        .choose(rng)
                        .expect("docs")
                        .to_string(),
                );
            }
            e
        })
        .collect()
}

/// A weekday standup at 09:00 Berlin time for `who`.
pub fn standup_plan(who: &[&str]) -> CommunicationPlan {
    CommunicationPlan {
        activities: vec![PlannedActivity {
            name: "Standup".into(),
            kind: ActivityKind::Scheduled,
            schedule: Some(Schedule {
                recurrence: Recurrence::Weekdays,
                time: NaiveTime::from_hms_opt(9, 0, 0).expect("valid time"),
                timezone: "Europe/Berlin".into(),
            }),
            trigger: None,
            participants: who.iter().map(|s| s.to_string()).collect(),
            roles: Vec::new(),
            media: vec!["voice-conference".into()],
            flow_map: None,
        }],
    }
}

/// Standup calls on the five weekdays from [`monday`] except `skip`
/// (0 = Monday), each a few minutes off schedule.
pub fn standup_events(who: &[&str], skip: Option<i64>) -> Vec<CommunicationEvent> {
    (0..5)
        .filter(|d| Some(*d) != skip)
        .map(|d| {
            // 09:00 Berlin is 07:00 UTC in May.
            let start =
                monday() + Duration::days(d) + Duration::hours(7) + Duration::minutes(3 * d - 6);
            CommunicationEvent::new(
                &format!("standup-{d}"),
                "voice-conference",
                who,
                start,
                Some(start + Duration::minutes(15)),
            )
        })
        .collect()
}

/// Minutes per unordered participant pair of two-party events without an
/// artifact, clipped to `window`, with open events running until `now`.
pub fn pair_minutes_oracle(
    events: &[CommunicationEvent],
    window: &Window,
    now: DateTime<Utc>,
) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for e in events {
        let mut who = e.participants.clone();
        who.sort();
        who.dedup();
        if e.artifact.is_some() || who.len() != 2 {
            continue;
        }
        let end = e
            .end
            .unwrap_or(now)
            .timestamp_millis()
            .max(e.start.timestamp_millis());
        let lo = e
            .start
            .timestamp_millis()
            .max(window.start.timestamp_millis());
        let hi = end.min(window.end.timestamp_millis());
        if hi > lo {
            *out.entry((who[0].clone(), who[1].clone())).or_insert(0.0) +=
                (hi - lo) as f64 / 60_000.0;
        }
    }
    out
}
