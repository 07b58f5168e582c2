//! FLOW goals and technique selection.
//!
//! A goal is a point in the intent x time x scope cube. A technique profile
//! lists the goals it supports, the method phases it covers and optional
//! constraints on project parameters. Selection keeps the techniques that
//! support the goal and accept the project.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Understand,
    Improve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalTime {
    Before,
    During,
    After,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalScope {
    Activity,
    Project,
    Organization,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Elicit,
    Analyze,
    Improve,
}

impl Intent {
    pub const ALL: [Intent; 2] = [Intent::Understand, Intent::Improve];

    /// Phases a technique combination must cover for this intent.
    pub fn required_phases(self) -> BTreeSet<Phase> {
        match self {
            Intent::Understand => BTreeSet::from([Phase::Elicit, Phase::Analyze]),
            Intent::Improve => BTreeSet::from([Phase::Elicit, Phase::Analyze, Phase::Improve]),
        }
    }
}

impl GoalTime {
    pub const ALL: [GoalTime; 3] = [GoalTime::Before, GoalTime::During, GoalTime::After];
}

impl GoalScope {
    pub const ALL: [GoalScope; 3] = [
        GoalScope::Activity,
        GoalScope::Project,
        GoalScope::Organization,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoalSpec {
    pub intent: Intent,
    pub time: GoalTime,
    pub scope: GoalScope,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GoalError {
    #[error(
        "goal {0} is outside the goal cube: nothing can be done after an organization's lifetime"
    )]
    InvalidGoal(GoalSpec),
}

impl fmt::Display for GoalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?}, {:?})", self.intent, self.time, self.scope)
    }
}

impl GoalSpec {
    pub fn new(intent: Intent, time: GoalTime, scope: GoalScope) -> Result<Self, GoalError> {
        let g = Self {
            intent,
            time,
            scope,
        };
        if g.is_valid() {
            Ok(g)
        } else {
            Err(GoalError::InvalidGoal(g))
        }
    }

    /// Every combination except (any, After, Organization).
    pub fn is_valid(&self) -> bool {
        !(self.time == GoalTime::After && self.scope == GoalScope::Organization)
    }

    /// All 18 points of the cube, valid or not.
    pub fn all() -> impl Iterator<Item = GoalSpec> {
        Intent::ALL.into_iter().flat_map(|intent| {
            GoalTime::ALL.into_iter().flat_map(move |time| {
                GoalScope::ALL.into_iter().map(move |scope| GoalSpec {
                    intent,
                    time,
                    scope,
                })
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessStyle {
    Agile,
    ProcessDriven,
    /// Matches every constraint.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Local,
    DistributedVertical,
    DistributedHorizontal,
    DistributedOther,
}

impl Distribution {
    pub const DISTRIBUTED: [Distribution; 3] = [
        Self::DistributedVertical,
        Self::DistributedHorizontal,
        Self::DistributedOther,
    ];
}

/// Known facts about a project. Unknown fields never exclude a technique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectParams {
    #[serde(default)]
    pub team_size: Option<u32>,
    #[serde(default)]
    pub budget: Option<String>,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub process_style: Option<ProcessStyle>,
    #[serde(default)]
    pub process_model: Option<String>,
    #[serde(default)]
    pub distribution: Option<Distribution>,
    #[serde(default)]
    pub misc: Vec<String>,
}

/// Constraints a technique places on projects. Empty lists accept anything.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamConstraints {
    #[serde(default)]
    pub team_size_min: Option<u32>,
    #[serde(default)]
    pub team_size_max: Option<u32>,
    #[serde(default)]
    pub domains: Vec<String>,
    #[serde(default)]
    pub process_styles: Vec<ProcessStyle>,
    #[serde(default)]
    pub process_models: Vec<String>,
    #[serde(default)]
    pub distributions: Vec<Distribution>,
}

fn accepts<T: PartialEq>(allowed: &[T], value: Option<&T>) -> bool {
    match value {
        None => true,
        Some(v) => allowed.is_empty() || allowed.contains(v),
    }
}

impl ParamConstraints {
    pub fn admits(&self, p: &ProjectParams) -> bool {
        let size_ok = p.team_size.is_none_or(|n| {
            self.team_size_min.is_none_or(|lo| n >= lo)
                && self.team_size_max.is_none_or(|hi| n <= hi)
        });
        let style = p.process_style.filter(|s| *s != ProcessStyle::Any);
        let domain_ok = p.domain.as_ref().is_none_or(|d| {
            self.domains.is_empty() || self.domains.iter().any(|x| x.eq_ignore_ascii_case(d))
        });
        let model_ok = p.process_model.as_ref().is_none_or(|m| {
            self.process_models.is_empty()
                || self
                    .process_models
                    .iter()
                    .any(|x| x.eq_ignore_ascii_case(m))
        });
        size_ok
            && domain_ok
            && model_ok
            && accepts(&self.process_styles, style.as_ref())
            && accepts(&self.distributions, p.distribution.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechniqueProfile {
    pub name: String,
    pub phases: BTreeSet<Phase>,
    pub goals: BTreeSet<GoalSpec>,
    #[serde(default)]
    pub params: ParamConstraints,
    #[serde(default)]
    pub strategy_tags: BTreeSet<String>,
    #[serde(default)]
    pub verfahren_tags: BTreeSet<String>,
}

impl TechniqueProfile {
    /// Profile whose goals are the valid part of the product of the given
    /// intents, times and scopes, as ticked in a classification template.
    pub fn from_checkboxes(
        name: &str,
        phases: &[Phase],
        intents: &[Intent],
        times: &[GoalTime],
        scopes: &[GoalScope],
    ) -> Self {
        let goals = intents
            .iter()
            .flat_map(|&intent| {
                times.iter().flat_map(move |&time| {
                    scopes.iter().map(move |&scope| GoalSpec {
                        intent,
                        time,
                        scope,
                    })
                })
            })
            .filter(GoalSpec::is_valid)
            .collect();
        Self {
            name: name.to_string(),
            phases: phases.iter().copied().collect(),
            goals,
            params: ParamConstraints::default(),
            strategy_tags: BTreeSet::new(),
            verfahren_tags: BTreeSet::new(),
        }
    }

    fn tags(mut self, strategy: &[&str], verfahren: &[&str]) -> Self {
        self.strategy_tags = strategy.iter().map(|s| s.to_string()).collect();
        self.verfahren_tags = verfahren.iter().map(|s| s.to_string()).collect();
        self
    }

    fn constrained(mut self, params: ParamConstraints) -> Self {
        self.params = params;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechniqueMatch {
    pub technique: TechniqueProfile,
    /// Required phases this technique covers.
    pub coverage: BTreeSet<Phase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub goal: GoalSpec,
    pub matches: Vec<TechniqueMatch>,
    /// The matches together cover every required phase.
    pub complete: bool,
    pub missing: BTreeSet<Phase>,
}

/// Techniques of `catalog` that support `goal` and admit `params`, in
/// catalog order.
pub fn select_techniques(
    goal: GoalSpec,
    params: &ProjectParams,
    catalog: &[TechniqueProfile],
) -> Result<Selection, GoalError> {
    if !goal.is_valid() {
        return Err(GoalError::InvalidGoal(goal));
    }
    let required = goal.intent.required_phases();
    let matches: Vec<TechniqueMatch> = catalog
        .iter()
        .filter(|t| t.goals.contains(&goal) && t.params.admits(params))
        .map(|t| TechniqueMatch {
            technique: t.clone(),
            coverage: t.phases.intersection(&required).copied().collect(),
        })
        .collect();
    let covered: BTreeSet<Phase> = matches
        .iter()
        .flat_map(|m| m.coverage.iter().copied())
        .collect();
    let missing: BTreeSet<Phase> = required.difference(&covered).copied().collect();
    Ok(Selection {
        goal,
        complete: missing.is_empty(),
        matches,
        missing,
    })
}

/// The techniques of the FLOW method with their classification templates.
pub fn builtin_catalog() -> Vec<TechniqueProfile> {
    use GoalScope::{Activity as A, Organization as O, Project as P};
    use GoalTime::{After, Before, During};
    use Intent::{Improve as I, Understand as U};
    use Phase::{Analyze, Elicit, Improve};
    let t = TechniqueProfile::from_checkboxes;
    vec![
        t(
            "Informationsflüsse elicitieren",
            &[Elicit],
            &[U, I],
            &[During, After],
            &[A, P, O],
        )
        .tags(&["bottom-up"], &["interview"]),
        t(
            "Informationsflüsse aus Prozessmodell ableiten",
            &[Elicit, Analyze],
            &[U, I],
            &[Before],
            &[P, O],
        )
        .tags(&["top-down"], &["modellableitung"]),
        t("Simulation", &[Elicit, Analyze], &[U], &[During], &[P]).tags(&[], &["simulation"]),
        t(
            "FLOW-Mapping",
            &[Elicit, Analyze, Improve],
            &[U, I],
            &[During],
            &[P],
        )
        .tags(
            &[
                "bottom-up",
                "manuelle analyse",
                "teilautomatische analyse",
                "hauptprodukt",
            ],
            &[
                "kommunikationsereignisableitung",
                "visualisierung",
                "abkürzung",
                "aktivitätsanpassung",
            ],
        )
        .constrained(ParamConstraints {
            distributions: Distribution::DISTRIBUTED.to_vec(),
            ..Default::default()
        }),
        t(
            "Interface-Variation",
            &[Elicit, Analyze, Improve],
            &[I],
            &[Before],
            &[A],
        )
        .tags(
            &["manuelle analyse", "hauptprodukt"],
            &["visualisierung", "schnittstellenanpassung"],
        ),
        t(
            "SCRUM-Integration",
            &[Elicit, Analyze, Improve],
            &[I],
            &[Before, During],
            &[P],
        )
        .tags(
            &[
                "bottom-up",
                "top-down",
                "manuelle analyse",
                "teilautomatische analyse",
                "automatische analyse",
                "schwergewichtig",
            ],
            &[
                "modellableitung",
                "visualisierung",
                "mustersuche",
                "abkürzung",
                "verflüssigen",
                "zusammenführung",
                "aktivitätsanpassung",
            ],
        )
        .constrained(ParamConstraints {
            process_styles: vec![ProcessStyle::Agile, ProcessStyle::ProcessDriven],
            process_models: vec!["SCRUM".into(), "V-Modell XT".into()],
            distributions: vec![Distribution::Local],
            ..Default::default()
        }),
        t("FLOW-Muster", &[Analyze, Improve], &[U, I], &[During], &[P])
            .tags(&["manuelle analyse"], &["visualisierung", "mustersuche"]),
        t("Erfahrungsverfestigung", &[Improve], &[I], &[During], &[O])
            .tags(&["leichtgewichtig"], &["verfestigen"]),
        t(
            "Anforderungsverfestigung",
            &[Improve],
            &[I],
            &[During],
            &[A],
        )
        .tags(&["nebenprodukt", "leichtgewichtig"], &["verfestigen"]),
        t(
            "Prototyp-Demo-Verfestigung",
            &[Improve],
            &[I],
            &[During],
            &[A],
        )
        .tags(&["nebenprodukt", "leichtgewichtig"], &["verfestigen"]),
        t(
            "Verfestigung als Nebenprodukt",
            &[Improve],
            &[I],
            &[During],
            &[A],
        )
        .tags(&["nebenprodukt", "leichtgewichtig"], &["verfestigen"]),
    ]
}
