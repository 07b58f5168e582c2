//! Soll/Ist comparison of FLOW-Maps.
//!
//! Flows are compared between stores, identified by normalized name, as
//! unordered pairs: a map records who exchanges information with whom, and
//! observed communication rarely has a direction. Parallel flows between
//! the same pair are summed. Flows touching activities (such as conference
//! nodes of an observed map) are not compared.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_name, AggregateState, FlowModel, ModelKind, NodeRef};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffTolerance {
    /// Relative intensity deviation tolerated for matched flows.
    pub intensity_rel: f64,
}

impl Default for DiffTolerance {
    fn default() -> Self {
        Self {
            intensity_rel: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDeviationKind {
    Missing,
    Unplanned,
    IntensityDeviation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDeviation {
    pub kind: FlowDeviationKind,
    /// Normalized store names, `a <= b`.
    pub a: String,
    pub b: String,
    pub soll_intensity: Option<f64>,
    pub ist_intensity: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantDeviationKind {
    Missing,
    Unplanned,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantDeviation {
    pub kind: ParticipantDeviationKind,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleDeviationKind {
    MissedOccurrence,
    Unverifiable,
}

/// Result of checking a communication plan entry against observed events.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleDeviation {
    pub kind: ScheduleDeviationKind,
    pub activity: String,
    #[serde(default)]
    pub expected_at: Option<DateTime<Utc>>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub flows: Vec<FlowDeviation>,
    pub participants: Vec<ParticipantDeviation>,
    pub schedule: Vec<ScheduleDeviation>,
}

impl DeviationReport {
    pub fn is_empty(&self) -> bool {
        self.flows.is_empty() && self.participants.is_empty() && self.schedule.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flows.len() + self.participants.len() + self.schedule.len()
    }

    pub fn count(&self, kind: FlowDeviationKind) -> usize {
        self.flows.iter().filter(|d| d.kind == kind).count()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("first model must be a soll model, found {0}")]
    NotSoll(ModelKind),
    #[error("second model must be an ist model, found {0}")]
    NotIst(ModelKind),
}

/// Summed intensity per unordered store pair; `None` when no flow of the
/// pair carries an intensity.
fn pair_intensities(m: &FlowModel) -> BTreeMap<(String, String), Option<f64>> {
    let mut pairs: BTreeMap<(String, String), Option<f64>> = BTreeMap::new();
    for f in m.flows.iter().filter(|f| !f.is_null_flow) {
        let (Some(NodeRef::Store(a)), Some(NodeRef::Store(b))) =
            (m.node(&f.source), m.node(&f.target))
        else {
            continue;
        };
        let (a, b) = (normalize_name(&a.name), normalize_name(&b.name));
        if a == b {
            continue;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        let slot = pairs.entry(key).or_insert(None);
        if let Some(i) = f.intensity {
            *slot = Some(slot.unwrap_or(0.0) + i);
        }
    }
    pairs
}

fn participants(m: &FlowModel) -> BTreeSet<String> {
    m.stores
        .iter()
        .filter(|s| s.state == AggregateState::Liquid)
        .map(|s| normalize_name(&s.name))
        .collect()
}

/// Deviations of the observed map from the planned one.
pub fn diff_maps(
    soll: &FlowModel,
    ist: &FlowModel,
    tol: DiffTolerance,
) -> Result<DeviationReport, DiffError> {
    if soll.kind != ModelKind::Soll {
        return Err(DiffError::NotSoll(soll.kind));
    }
    if ist.kind != ModelKind::Ist {
        return Err(DiffError::NotIst(ist.kind));
    }
    Ok(compare(soll, ist, tol))
}

/// Like [`diff_maps`] without the kind check, for comparing a map with itself.
pub fn compare(soll: &FlowModel, ist: &FlowModel, tol: DiffTolerance) -> DeviationReport {
    let planned = pair_intensities(soll);
    let observed = pair_intensities(ist);
    let mut report = DeviationReport::default();

    for ((a, b), &soll_i) in &planned {
        let deviation = |kind, ist_intensity| FlowDeviation {
            kind,
            a: a.clone(),
            b: b.clone(),
            soll_intensity: soll_i,
            ist_intensity,
        };
        match observed.get(&(a.clone(), b.clone())) {
            None => report
                .flows
                .push(deviation(FlowDeviationKind::Missing, None)),
            Some(&ist_i) => {
                if let (Some(s), Some(i)) = (soll_i, ist_i) {
                    if relative_deviation(s, i) > tol.intensity_rel {
                        report
                            .flows
                            .push(deviation(FlowDeviationKind::IntensityDeviation, ist_i));
                    }
                }
            }
        }
    }
    for ((a, b), &ist_i) in &observed {
        if !planned.contains_key(&(a.clone(), b.clone())) {
            report.flows.push(FlowDeviation {
                kind: FlowDeviationKind::Unplanned,
                a: a.clone(),
                b: b.clone(),
                soll_intensity: None,
                ist_intensity: ist_i,
            });
        }
    }
    report
        .flows
        .sort_by(|x, y| (&x.a, &x.b, x.kind).cmp(&(&y.a, &y.b, y.kind)));

    let (p_soll, p_ist) = (participants(soll), participants(ist));
    for name in p_soll.difference(&p_ist) {
        report.participants.push(ParticipantDeviation {
            kind: ParticipantDeviationKind::Missing,
            name: name.clone(),
        });
    }
    for name in p_ist.difference(&p_soll) {
        report.participants.push(ParticipantDeviation {
            kind: ParticipantDeviationKind::Unplanned,
            name: name.clone(),
        });
    }
    report
}

fn relative_deviation(planned: f64, observed: f64) -> f64 {
    if planned == 0.0 {
        if observed == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((observed - planned) / planned).abs()
    }
}
