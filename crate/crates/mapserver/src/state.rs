//! Event-sourced service state.
//!
//! Every accepted change is one line in an append-only JSON log. Replaying
//! the log into an empty state rebuilds the state exactly; a change that
//! alters nothing is acknowledged without being logged.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use flow_core::analysis::{diff_maps, DeviationReport, DiffTolerance};
use flow_core::model::is_identifier;
use flow_core::{FlowModel, ModelKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{check_plan, conformance_check, PlanError};
use crate::ist::{active_conferences, build_ist_map};
use crate::types::{
    CommunicationEvent, CommunicationPlan, MapSnapshot, Mode, ParticipantProfile, Window,
};

pub const LOG_FILE: &str = "events.jsonl";

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that stands still, for tests and reproducible snapshots.
pub struct FixedClock(pub std::sync::Mutex<DateTime<Utc>>);

impl FixedClock {
    pub fn new(t: DateTime<Utc>) -> Self {
        Self(std::sync::Mutex::new(t))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().expect("clock lock") = t;
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}

/// One log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Participant { profile: ParticipantProfile },
    Event { event: CommunicationEvent },
    SollMap { text: String },
    Plan { plan: CommunicationPlan },
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("event `{0}` ends before it starts")]
    EndBeforeStart(String),
    #[error("event `{0}` has no participants")]
    NoParticipants(String),
    #[error("event `{0}` was already recorded with different data")]
    Conflict(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("unknown pair partner `{0}`")]
    UnknownPartner(String),
    #[error("participant cannot pair with itself")]
    SelfPair,
    #[error("unknown timezone `{0}`")]
    UnknownTimezone(String),
    #[error("soll map: {0}")]
    SollMap(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("event log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("event log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Changed,
    Unchanged,
}

/// Aggregate state rebuilt from the log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapState {
    pub participants: BTreeMap<String, ParticipantProfile>,
    pub events: BTreeMap<String, CommunicationEvent>,
    pub soll: Option<(String, FlowModel)>,
    pub plan: Option<CommunicationPlan>,
}

fn parse_soll(text: &str) -> Result<FlowModel, StateError> {
    let m = flow_core::dsl::parse(text).map_err(|errors| {
        StateError::SollMap(
            errors
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    if m.kind != ModelKind::Soll {
        return Err(StateError::SollMap(format!(
            "expected a soll model, found {}",
            m.kind
        )));
    }
    let errors: Vec<String> = flow_core::validate(&m)
        .iter()
        .filter(|v| v.is_error())
        .map(ToString::to_string)
        .collect();
    if !errors.is_empty() {
        return Err(StateError::SollMap(errors.join("; ")));
    }
    Ok(m)
}

impl MapState {
    /// Checks `rec` against the current state without changing it.
    pub fn check(&self, rec: &LogRecord) -> Result<Outcome, StateError> {
        match rec {
            LogRecord::Participant { profile } => self.check_participant(profile),
            LogRecord::Event { event } => self.check_event(event),
            LogRecord::SollMap { text } => {
                parse_soll(text)?;
                Ok(if self.soll.as_ref().is_some_and(|(t, _)| t == text) {
                    Outcome::Unchanged
                } else {
                    Outcome::Changed
                })
            }
            LogRecord::Plan { plan } => {
                check_plan(plan)?;
                Ok(if self.plan.as_ref() == Some(plan) {
                    Outcome::Unchanged
                } else {
                    Outcome::Changed
                })
            }
        }
    }

    fn check_participant(&self, p: &ParticipantProfile) -> Result<Outcome, StateError> {
        if !is_identifier(&p.id) {
            return Err(StateError::BadIdentifier(p.id.clone()));
        }
        if !is_identifier(&p.site_id) {
            return Err(StateError::BadIdentifier(p.site_id.clone()));
        }
        if p.timezone.parse::<chrono_tz::Tz>().is_err() {
            return Err(StateError::UnknownTimezone(p.timezone.clone()));
        }
        if let Some(partner) = &p.pair_partner {
            if *partner == p.id {
                return Err(StateError::SelfPair);
            }
            if !self.participants.contains_key(partner) {
                return Err(StateError::UnknownPartner(partner.clone()));
            }
        }
        Ok(if self.participants.get(&p.id) == Some(p) {
            Outcome::Unchanged
        } else {
            Outcome::Changed
        })
    }

    fn check_event(&self, e: &CommunicationEvent) -> Result<Outcome, StateError> {
        if e.participants.is_empty() {
            return Err(StateError::NoParticipants(e.id.clone()));
        }
        if let Some(p) = e
            .participants
            .iter()
            .find(|p| !self.participants.contains_key(*p))
        {
            return Err(StateError::UnknownParticipant(p.clone()));
        }
        if e.end.is_some_and(|end| end < e.start) {
            return Err(StateError::EndBeforeStart(e.id.clone()));
        }
        if let Some(a) = &e.artifact {
            if !is_identifier(a) {
                return Err(StateError::BadIdentifier(a.clone()));
            }
        }
        let Some(old) = self.events.get(&e.id) else {
            return Ok(Outcome::Changed);
        };
        let same_but_end = CommunicationEvent {
            end: old.end,
            ..e.clone()
        } == *old;
        match (old.end, e.end) {
            _ if old == e => Ok(Outcome::Unchanged),
            // Closing an open event.
            (None, Some(_)) if same_but_end => Ok(Outcome::Changed),
            // A stale copy sent before the event was closed.
            (Some(_), None) if same_but_end => Ok(Outcome::Unchanged),
            _ => Err(StateError::Conflict(e.id.clone())),
        }
    }

    /// Applies a record that passed [`MapState::check`].
    fn commit(&mut self, rec: LogRecord) {
        match rec {
            LogRecord::Participant { profile } => {
                let old_partner = self
                    .participants
                    .get(&profile.id)
                    .and_then(|p| p.pair_partner.clone());
                if let Some(old) = old_partner.filter(|o| Some(o) != profile.pair_partner.as_ref())
                {
                    if let Some(o) = self.participants.get_mut(&old) {
                        o.pair_partner = None;
                    }
                }
                if let Some(partner) = &profile.pair_partner {
                    let theirs = self
                        .participants
                        .get(partner)
                        .and_then(|p| p.pair_partner.clone());
                    if let Some(t) = theirs.filter(|t| *t != profile.id) {
                        if let Some(o) = self.participants.get_mut(&t) {
                            o.pair_partner = None;
                        }
                    }
                    if let Some(p) = self.participants.get_mut(partner) {
                        p.pair_partner = Some(profile.id.clone());
                    }
                }
                self.participants.insert(profile.id.clone(), profile);
            }
            LogRecord::Event { event } => {
                self.events.insert(event.id.clone(), event);
            }
            LogRecord::SollMap { text } => {
                let m = parse_soll(&text).expect("checked");
                self.soll = Some((text, m));
            }
            LogRecord::Plan { plan } => self.plan = Some(plan),
        }
    }

    /// Checks and applies `rec`.
    pub fn apply(&mut self, rec: LogRecord) -> Result<Outcome, StateError> {
        let outcome = self.check(&rec)?;
        if outcome == Outcome::Changed {
            self.commit(rec);
        }
        Ok(outcome)
    }

    pub fn ist_map(&self, window: &Window, now: DateTime<Utc>) -> FlowModel {
        build_ist_map(
            self.participants.values(),
            self.events.values(),
            window,
            now,
        )
    }

    pub fn snapshot(&self, mode: Mode, window: Window, now: DateTime<Utc>) -> MapSnapshot {
        let map = self.ist_map(&window, now);
        let deviations = self.soll.as_ref().map(|(_, soll)| {
            diff_maps(soll, &map, DiffTolerance::default()).expect("kinds checked on upload")
        });
        MapSnapshot {
            mode,
            window,
            active_conferences: active_conferences(self.events.values(), &window),
            profiles: self.participants.values().cloned().collect(),
            deviations,
            map,
        }
    }

    /// Schedule deviations of the plan plus, when a soll map is registered,
    /// the flow-level comparison.
    pub fn conformance(
        &self,
        window: &Window,
        grace: Duration,
        now: DateTime<Utc>,
    ) -> DeviationReport {
        let mut report = match &self.soll {
            Some((_, soll)) => {
                diff_maps(soll, &self.ist_map(window, now), DiffTolerance::default())
                    .expect("kinds checked on upload")
            }
            None => DeviationReport::default(),
        };
        if let Some(plan) = &self.plan {
            report.schedule = conformance_check(
                plan,
                self.participants.values(),
                self.events.values(),
                window,
                grace,
            );
        }
        report
    }
}

/// Append-only JSON-lines file.
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (creating if needed) the log in `dir` and replays it.
    pub fn open(dir: &Path) -> Result<(Self, MapState), StateError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let state = if path.exists() {
            replay(BufReader::new(File::open(&path)?))?
        } else {
            MapState::default()
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((Self { path, file }, state))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, rec: &LogRecord) -> Result<(), StateError> {
        let mut line = serde_json::to_string(rec).expect("log records serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

/// Rebuilds the state from log lines.
pub fn replay(reader: impl BufRead) -> Result<MapState, StateError> {
    let mut state = MapState::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| StateError::CorruptLog {
            line: i + 1,
            message,
        };
        let rec: LogRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        state.apply(rec).map_err(|e| corrupt(e.to_string()))?;
    }
    Ok(state)
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub live_window: Duration,
    pub grace: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            live_window: Duration::minutes(60),
            grace: Duration::minutes(15),
        }
    }
}

/// State, log and clock behind one writer.
pub struct MapService {
    pub state: MapState,
    log: Option<EventLog>,
    pub config: ServiceConfig,
    pub clock: Arc<dyn Clock>,
}

impl MapService {
    /// A service without a log, for tests.
    pub fn in_memory(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        Self {
            state: MapState::default(),
            log: None,
            config,
            clock,
        }
    }

    pub fn open(
        dir: &Path,
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StateError> {
        let (log, state) = EventLog::open(dir)?;
        Ok(Self {
            state,
            log: Some(log),
            config,
            clock,
        })
    }

    /// Validates, logs and applies `rec`. Nothing is logged when the
    /// record is rejected or changes nothing.
    pub fn submit(&mut self, rec: LogRecord) -> Result<Outcome, StateError> {
        let outcome = self.state.check(&rec)?;
        if outcome == Outcome::Changed {
            if let Some(log) = &mut self.log {
                log.append(&rec)?;
            }
            self.state.commit(rec);
        }
        Ok(outcome)
    }

    pub fn live_window(&self) -> Window {
        let now = self.clock.now();
        Window::new(now - self.config.live_window, now)
    }

    pub fn snapshot(&self, mode: Mode, window: Option<Window>) -> MapSnapshot {
        let window = match (mode, window) {
            (Mode::History, Some(w)) => w,
            _ => self.live_window(),
        };
        self.state.snapshot(mode, window, self.clock.now())
    }

    pub fn conformance(&self, window: &Window) -> DeviationReport {
        self.state
            .conformance(window, self.config.grace, self.clock.now())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 6, h, 0, 0).unwrap()
    }

    fn person(id: &str) -> LogRecord {
        LogRecord::Participant {
            profile: ParticipantProfile::new(id, id, "GER"),
        }
    }

    fn event(id: &str, who: &[&str], end: Option<u32>) -> LogRecord {
        LogRecord::Event {
            event: CommunicationEvent::new(id, "text-chat", who, t(9), end.map(t)),
        }
    }

    fn state() -> MapState {
        let mut s = MapState::default();
        s.apply(person("alice")).unwrap();
        s.apply(person("bob")).unwrap();
        s
    }

    #[test]
    fn unknown_participants_are_rejected_by_name() {
        let err = state()
            .apply(event("e", &["alice", "mallory"], Some(10)))
            .unwrap_err();
        assert!(matches!(err, StateError::UnknownParticipant(p) if p == "mallory"));
    }

    #[test]
    fn end_before_start_is_rejected() {
        let err = state()
            .apply(event("e", &["alice", "bob"], Some(8)))
            .unwrap_err();
        assert!(matches!(err, StateError::EndBeforeStart(_)));
    }

    #[test]
    fn events_are_idempotent_and_can_be_closed() {
        let mut s = state();
        assert_eq!(
            s.apply(event("e", &["alice", "bob"], None)).unwrap(),
            Outcome::Changed
        );
        assert_eq!(
            s.apply(event("e", &["alice", "bob"], None)).unwrap(),
            Outcome::Unchanged
        );
        assert_eq!(
            s.apply(event("e", &["alice", "bob"], Some(10))).unwrap(),
            Outcome::Changed
        );
        assert_eq!(
            s.apply(event("e", &["alice", "bob"], None)).unwrap(),
            Outcome::Unchanged
        );
        assert_eq!(s.events["e"].end, Some(t(10)));
        assert!(matches!(
            s.apply(event("e", &["alice"], Some(10))),
            Err(StateError::Conflict(_))
        ));
    }

    #[test]
    fn pair_partners_stay_symmetric() {
        let mut s = state();
        s.apply(person("carol")).unwrap();
        let mut alice = ParticipantProfile::new("alice", "alice", "GER");
        alice.pair_partner = Some("bob".into());
        s.apply(LogRecord::Participant {
            profile: alice.clone(),
        })
        .unwrap();
        assert_eq!(s.participants["bob"].pair_partner.as_deref(), Some("alice"));

        // Carol takes Bob; Alice is left without a partner.
        let mut carol = ParticipantProfile::new("carol", "carol", "GER");
        carol.pair_partner = Some("bob".into());
        s.apply(LogRecord::Participant { profile: carol }).unwrap();
        assert_eq!(s.participants["bob"].pair_partner.as_deref(), Some("carol"));
        assert_eq!(s.participants["alice"].pair_partner, None);

        alice.pair_partner = Some("nobody".into());
        assert!(matches!(
            s.apply(LogRecord::Participant { profile: alice }),
            Err(StateError::UnknownPartner(_))
        ));
    }

    #[test]
    fn log_replay_rebuilds_the_state() {
        let dir = tempfile::tempdir().unwrap();
        let clock: Arc<dyn Clock> = Arc::new(FixedClock::new(t(12)));
        let mut svc =
            MapService::open(dir.path(), ServiceConfig::default(), clock.clone()).unwrap();
        for rec in [
            person("alice"),
            person("bob"),
            event("e", &["alice", "bob"], None),
            event("e", &["alice", "bob"], Some(10)),
        ] {
            svc.submit(rec).unwrap();
        }
        svc.submit(person("alice")).unwrap();
        let text = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));
        let again = MapService::open(dir.path(), ServiceConfig::default(), clock).unwrap();
        assert_eq!(again.state, svc.state);
    }

    #[test]
    fn corrupt_log_names_the_line() {
        let err = replay("\n{\"type\":\"plan\"}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, StateError::CorruptLog { line: 2, .. }));
    }

    #[test]
    fn soll_map_must_be_a_valid_soll_model() {
        let mut s = state();
        let ok = "model Plan soll map\nstore alice liquid\nstore bob liquid\nflow f: alice -- bob liquid\n";
        assert_eq!(
            s.apply(LogRecord::SollMap { text: ok.into() }).unwrap(),
            Outcome::Changed
        );
        let ist = ok.replace("soll", "ist");
        assert!(matches!(
            s.apply(LogRecord::SollMap { text: ist }),
            Err(StateError::SollMap(_))
        ));
    }
}
