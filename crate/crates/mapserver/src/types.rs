//! Wire types. Key names are part of the HTTP contract.

use chrono::{DateTime, NaiveTime, Utc, Weekday};
use flow_core::analysis::DeviationReport;
use flow_core::FlowModel;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactEntry {
    /// `mail`, `phone`, `chat`, ...
    pub scheme: String,
    pub address: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[default]
    Available,
    Busy,
    Offline,
}

/// A yellow-pages entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub id: String,
    pub name: String,
    pub site_id: String,
    #[serde(default)]
    pub contacts: Vec<ContactEntry>,
    #[serde(default)]
    pub photo: Option<String>,
    /// IANA zone name such as `Europe/Berlin`.
    pub timezone: String,
    #[serde(default)]
    pub status: Status,
    #[serde(default)]
    pub role: String,
    #[serde(default)]
    pub skills: Vec<String>,
    #[serde(default)]
    pub current_task: String,
    #[serde(default)]
    pub current_artifact: String,
    #[serde(default)]
    pub pair_partner: Option<String>,
}

impl ParticipantProfile {
    pub fn new(id: &str, name: &str, site_id: &str) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            site_id: site_id.into(),
            contacts: Vec::new(),
            photo: None,
            timezone: "UTC".into(),
            status: Status::Available,
            role: String::new(),
            skills: Vec::new(),
            current_task: String::new(),
            current_artifact: String::new(),
            pair_partner: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationEvent {
    /// Client-supplied; re-sending an id is idempotent.
    pub id: String,
    /// `voice-conference`, `text-chat`, `vcs-commit`, `wiki-edit`, `meeting`, ...
    pub channel: String,
    pub participants: Vec<String>,
    pub start: DateTime<Utc>,
    /// Absent while the event is ongoing.
    #[serde(default)]
    pub end: Option<DateTime<Utc>>,
    /// Store id of the changed document, for document-change events.
    #[serde(default)]
    pub artifact: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl CommunicationEvent {
    pub fn new(
        id: &str,
        channel: &str,
        participants: &[&str],
        start: DateTime<Utc>,
        end: Option<DateTime<Utc>>,
    ) -> Self {
        Self {
            id: id.into(),
            channel: channel.into(),
            participants: participants.iter().map(|p| p.to_string()).collect(),
            start,
            end,
            artifact: None,
            note: None,
        }
    }

    /// Participants sorted and deduplicated.
    pub fn party(&self) -> Vec<&str> {
        let mut p: Vec<&str> = self.participants.iter().map(String::as_str).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn is_open(&self) -> bool {
        self.end.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivityKind {
    Scheduled,
    EventBased,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Daily,
    /// Monday to Friday.
    Weekdays,
    Weekly(Vec<Weekday>),
}

impl Recurrence {
    pub fn includes(&self, day: Weekday) -> bool {
        match self {
            Recurrence::Daily => true,
            Recurrence::Weekdays => !matches!(day, Weekday::Sat | Weekday::Sun),
            Recurrence::Weekly(days) => days.contains(&day),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub recurrence: Recurrence,
    /// Local time of day, `HH:MM` or `HH:MM:SS`.
    pub time: NaiveTime,
    pub timezone: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedActivity {
    pub name: String,
    pub kind: ActivityKind,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    /// Free-text trigger of event-based activities.
    #[serde(default)]
    pub trigger: Option<String>,
    #[serde(default)]
    pub participants: Vec<String>,
    /// Each role must be represented by at least one attendee.
    #[serde(default)]
    pub roles: Vec<String>,
    /// Acceptable channels; empty accepts any.
    #[serde(default)]
    pub media: Vec<String>,
    #[serde(default)]
    pub flow_map: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationPlan {
    pub activities: Vec<PlannedActivity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Live,
    History,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSnapshot {
    pub mode: Mode,
    pub window: Window,
    pub map: FlowModel,
    pub active_conferences: Vec<CommunicationEvent>,
    pub profiles: Vec<ParticipantProfile>,
    #[serde(default)]
    pub deviations: Option<DeviationReport>,
}
