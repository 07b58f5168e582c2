//! Checking a communication plan against observed events.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use chrono_tz::Tz;
use flow_core::analysis::diff::{ScheduleDeviation, ScheduleDeviationKind};
use thiserror::Error;

use crate::types::{
    ActivityKind, CommunicationEvent, CommunicationPlan, ParticipantProfile, PlannedActivity,
    Schedule, Window,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("activity `{0}` is scheduled but has no schedule")]
    MissingSchedule(String),
    #[error("activity `{0}` is event-based but has no trigger")]
    MissingTrigger(String),
    #[error("activity `{activity}`: unknown timezone `{tz}`")]
    UnknownTimezone { activity: String, tz: String },
}

pub fn check_plan(plan: &CommunicationPlan) -> Result<(), PlanError> {
    for a in &plan.activities {
        match a.kind {
            ActivityKind::Scheduled => {
                let s = a
                    .schedule
                    .as_ref()
                    .ok_or_else(|| PlanError::MissingSchedule(a.name.clone()))?;
                s.timezone
                    .parse::<Tz>()
                    .map_err(|_| PlanError::UnknownTimezone {
                        activity: a.name.clone(),
                        tz: s.timezone.clone(),
                    })?;
            }
            ActivityKind::EventBased => {
                if a.trigger.as_deref().is_none_or(|t| t.trim().is_empty()) {
                    return Err(PlanError::MissingTrigger(a.name.clone()));
                }
            }
        }
    }
    Ok(())
}

/// Planned start times of `schedule` inside `window`, in UTC. Local times
/// skipped by a daylight-saving change have no occurrence.
pub fn occurrences(schedule: &Schedule, window: &Window) -> Vec<DateTime<Utc>> {
    let Ok(tz) = schedule.timezone.parse::<Tz>() else {
        return Vec::new();
    };
    if window.is_empty() {
        return Vec::new();
    }
    let first = window.start.with_timezone(&tz).date_naive() - Duration::days(1);
    let last = window.end.with_timezone(&tz).date_naive() + Duration::days(1);
    first
        .iter_days()
        .take_while(|d| *d <= last)
        .filter(|d| schedule.recurrence.includes(chrono::Datelike::weekday(d)))
        .filter_map(|d: NaiveDate| {
            tz.from_local_datetime(&d.and_time(schedule.time))
                .earliest()
        })
        .map(|t| t.with_timezone(&Utc))
        .filter(|t| window.contains(*t))
        .collect()
}

fn attends(a: &PlannedActivity, e: &CommunicationEvent, roles: &BTreeMap<&str, &str>) -> bool {
    let party = e.party();
    (a.media.is_empty() || a.media.contains(&e.channel))
        && a.participants.iter().all(|p| party.contains(&p.as_str()))
        && a.roles
            .iter()
            .all(|r| party.iter().any(|p| roles.get(p) == Some(&r.as_str())))
}

/// Missed occurrences of scheduled activities and one informational entry
/// per event-based activity, which cannot be verified.
pub fn conformance_check<'a>(
    plan: &CommunicationPlan,
    participants: impl IntoIterator<Item = &'a ParticipantProfile>,
    events: impl IntoIterator<Item = &'a CommunicationEvent>,
    window: &Window,
    grace: Duration,
) -> Vec<ScheduleDeviation> {
    let roles: BTreeMap<&str, &str> = participants
        .into_iter()
        .map(|p| (p.id.as_str(), p.role.as_str()))
        .collect();
    let events: Vec<&CommunicationEvent> = events.into_iter().collect();
    let mut out = Vec::new();
    for a in &plan.activities {
        match (a.kind, &a.schedule) {
            (ActivityKind::Scheduled, Some(s)) => {
                for at in occurrences(s, window) {
                    let met = events
                        .iter()
                        .any(|e| (e.start - at).abs() <= grace && attends(a, e, &roles));
                    if !met {
                        out.push(ScheduleDeviation {
                            kind: ScheduleDeviationKind::MissedOccurrence,
                            activity: a.name.clone(),
                            expected_at: Some(at),
                            message: format!(
                                "no matching event within {} min of {at}",
                                grace.num_minutes()
                            ),
                        });
                    }
                }
            }
            (ActivityKind::Scheduled, None) => {}
            (ActivityKind::EventBased, _) => out.push(ScheduleDeviation {
                kind: ScheduleDeviationKind::Unverifiable,
                activity: a.name.clone(),
                expected_at: None,
                message: format!(
                    "event-based activity cannot be checked automatically (trigger: {})",
                    a.trigger.as_deref().unwrap_or("")
                ),
            }),
        }
    }
    out.sort_by(|x, y| {
        (x.expected_at, &x.activity, x.kind).cmp(&(y.expected_at, &y.activity, y.kind))
    });
    out
}
