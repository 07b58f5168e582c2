//! Domain types for information-flow models.
//!
//! A [`FlowModel`] is a directed graph whose nodes are information stores
//! and activities and whose edges are flows. Every store and flow carries an
//! [`AggregateState`]: solid information is retrievable and understandable by
//! everyone in the observation scope, liquid information is bound to people.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Solid, liquid or undefined.
///
/// `Undefined` reads as "not yet decided" in a Soll model and as "unknown"
/// in an Ist model; the owning model's [`ModelKind`] carries that meaning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateState {
    Solid,
    Liquid,
    Undefined,
}

impl AggregateState {
    pub const ALL: [AggregateState; 3] = [Self::Solid, Self::Liquid, Self::Undefined];

    pub fn keyword(self) -> &'static str {
        match self {
            Self::Solid => "solid",
            Self::Liquid => "liquid",
            Self::Undefined => "undefined",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "solid" => Some(Self::Solid),
            "liquid" => Some(Self::Liquid),
            "undefined" => Some(Self::Undefined),
            _ => None,
        }
    }
}

impl fmt::Display for AggregateState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Planned (`Soll`) or observed (`Ist`) information flows.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Soll,
    #[default]
    Ist,
}

impl ModelKind {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Soll => "soll",
            Self::Ist => "ist",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    #[default]
    Single,
    /// A group of documents or persons of one type.
    Multiple,
}

/// Side of an activity a flow is attached to.
///
/// Content flows enter from the left and leave to the right; control
/// information is drawn at the top and supporting information at the bottom.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Attachment {
    #[default]
    Content,
    Control,
    Support,
}

impl Attachment {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Content => "content",
            Self::Control => "control",
            Self::Support => "support",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationStore {
    pub id: String,
    pub name: String,
    pub state: AggregateState,
    #[serde(default)]
    pub multiplicity: Multiplicity,
    #[serde(default)]
    pub is_experience: bool,
    /// Liquid store naming a role rather than an individual.
    #[serde(default)]
    pub is_role: bool,
    #[serde(default)]
    pub site: Option<String>,
}

impl InformationStore {
    pub fn new(id: impl Into<String>, state: AggregateState) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            state,
            multiplicity: Multiplicity::Single,
            is_experience: false,
            is_role: false,
            site: None,
        }
    }

    pub fn solid(id: impl Into<String>) -> Self {
        Self::new(id, AggregateState::Solid)
    }

    pub fn liquid(id: impl Into<String>) -> Self {
        Self::new(id, AggregateState::Liquid)
    }

    pub fn undefined(id: impl Into<String>) -> Self {
        Self::new(id, AggregateState::Undefined)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn multiple(mut self) -> Self {
        self.multiplicity = Multiplicity::Multiple;
        self
    }

    pub fn experience(mut self) -> Self {
        self.is_experience = true;
        self
    }

    pub fn role(mut self) -> Self {
        self.is_role = true;
        self
    }

    pub fn at_site(mut self, site: impl Into<String>) -> Self {
        self.site = Some(site.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: String,
    pub source: String,
    pub target: String,
    pub state: AggregateState,
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default)]
    pub is_experience: bool,
    /// Undirected flows are only meaningful on FLOW-Maps.
    #[serde(default = "default_true")]
    pub directed: bool,
    /// Line thickness on FLOW-Maps; non-negative.
    #[serde(default)]
    pub intensity: Option<f64>,
    #[serde(default)]
    pub attachment: Attachment,
    /// Information that does not flow. Excluded from reachability.
    #[serde(default)]
    pub is_null_flow: bool,
}

fn default_true() -> bool {
    true
}

impl Flow {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        state: AggregateState,
    ) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            state,
            content: None,
            is_experience: false,
            directed: true,
            intensity: None,
            attachment: Attachment::Content,
            is_null_flow: false,
        }
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }

    pub fn experience(mut self) -> Self {
        self.is_experience = true;
        self
    }

    pub fn undirected(mut self) -> Self {
        self.directed = false;
        self
    }

    pub fn null(mut self) -> Self {
        self.is_null_flow = true;
        self
    }

    pub fn attached(mut self, attachment: Attachment) -> Self {
        self.attachment = attachment;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = Some(intensity);
        self
    }

    pub fn touches(&self, id: &str) -> bool {
        self.source == id || self.target == id
    }

    /// The endpoint opposite to `id`, if the flow touches it.
    pub fn other_end(&self, id: &str) -> Option<&str> {
        if self.source == id {
            Some(&self.target)
        } else if self.target == id {
            Some(&self.source)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub id: String,
    pub name: String,
    /// Detail model hidden behind the activity symbol.
    #[serde(default)]
    pub sub_model: Option<Box<FlowModel>>,
}

impl Activity {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            sub_model: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_sub_model(mut self, sub_model: FlowModel) -> Self {
        self.sub_model = Some(Box::new(sub_model));
        self
    }
}

/// Development site of a FLOW-Map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub label: String,
}

/// The persons and time span relative to which solidity is judged.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationScope {
    pub persons: Vec<String>,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowModel {
    pub name: String,
    pub kind: ModelKind,
    /// Marks the model as a FLOW-Map even when no site is declared.
    #[serde(default)]
    pub map: bool,
    #[serde(default)]
    pub sites: Vec<Site>,
    #[serde(default)]
    pub stores: Vec<InformationStore>,
    #[serde(default)]
    pub activities: Vec<Activity>,
    #[serde(default)]
    pub flows: Vec<Flow>,
    #[serde(default)]
    pub scope: Option<ObservationScope>,
}

pub const DEFAULT_MODEL_NAME: &str = "unnamed";

impl Default for FlowModel {
    fn default() -> Self {
        Self::new(DEFAULT_MODEL_NAME, ModelKind::Ist)
    }
}

/// A resolved flow endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeRef<'a> {
    Store(&'a InformationStore),
    Activity(&'a Activity),
}

impl NodeRef<'_> {
    pub fn id(&self) -> &str {
        match self {
            NodeRef::Store(s) => &s.id,
            NodeRef::Activity(a) => &a.id,
        }
    }

    pub fn is_activity(&self) -> bool {
        matches!(self, NodeRef::Activity(_))
    }

    pub fn state(&self) -> Option<AggregateState> {
        match self {
            NodeRef::Store(s) => Some(s.state),
            NodeRef::Activity(_) => None,
        }
    }
}

impl FlowModel {
    pub fn new(name: impl Into<String>, kind: ModelKind) -> Self {
        Self {
            name: name.into(),
            kind,
            map: false,
            sites: Vec::new(),
            stores: Vec::new(),
            activities: Vec::new(),
            flows: Vec::new(),
            scope: None,
        }
    }

    pub fn with_store(mut self, store: InformationStore) -> Self {
        self.stores.push(store);
        self
    }

    pub fn with_activity(mut self, activity: Activity) -> Self {
        self.activities.push(activity);
        self
    }

    pub fn with_flow(mut self, flow: Flow) -> Self {
        self.flows.push(flow);
        self
    }

    pub fn with_site(mut self, id: impl Into<String>, label: impl Into<String>) -> Self {
        self.sites.push(Site {
            id: id.into(),
            label: label.into(),
        });
        self
    }

    /// A model is a FLOW-Map when flagged so or when it declares sites.
    pub fn is_map(&self) -> bool {
        self.map || !self.sites.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.stores.is_empty() && self.activities.is_empty() && self.flows.is_empty()
    }

    pub fn store(&self, id: &str) -> Option<&InformationStore> {
        self.stores.iter().find(|s| s.id == id)
    }

    pub fn store_mut(&mut self, id: &str) -> Option<&mut InformationStore> {
        self.stores.iter_mut().find(|s| s.id == id)
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }

    pub fn activity_mut(&mut self, id: &str) -> Option<&mut Activity> {
        self.activities.iter_mut().find(|a| a.id == id)
    }

    pub fn flow(&self, id: &str) -> Option<&Flow> {
        self.flows.iter().find(|f| f.id == id)
    }

    pub fn flow_mut(&mut self, id: &str) -> Option<&mut Flow> {
        self.flows.iter_mut().find(|f| f.id == id)
    }

    pub fn node(&self, id: &str) -> Option<NodeRef<'_>> {
        self.store(id)
            .map(NodeRef::Store)
            .or_else(|| self.activity(id).map(NodeRef::Activity))
    }

    /// True when `id` names any store, activity or flow of this scope.
    pub fn contains_id(&self, id: &str) -> bool {
        self.node(id).is_some() || self.flow(id).is_some()
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| f.source == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| f.target == id)
    }

    /// All node ids (stores and activities) of this scope, sorted.
    pub fn node_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .stores
            .iter()
            .map(|s| s.id.as_str())
            .chain(self.activities.iter().map(|a| a.id.as_str()))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// A fresh id derived from `base` that is not used anywhere in the model
    /// (including nested detail models).
    pub fn fresh_id(&self, base: &str) -> String {
        let used = self.all_ids();
        if !used.contains_key(base) {
            return base.to_string();
        }
        (1..)
            .map(|n| format!("{base}.{n}"))
            .find(|candidate| !used.contains_key(candidate.as_str()))
            .expect("unbounded id space")
    }

    /// Every id used in this model and its detail models, with its count.
    pub fn all_ids(&self) -> BTreeMap<&str, usize> {
        let mut ids = BTreeMap::new();
        self.collect_ids(&mut ids);
        ids
    }

    fn collect_ids<'a>(&'a self, ids: &mut BTreeMap<&'a str, usize>) {
        for id in self
            .stores
            .iter()
            .map(|s| s.id.as_str())
            .chain(self.activities.iter().map(|a| a.id.as_str()))
            .chain(self.flows.iter().map(|f| f.id.as_str()))
        {
            *ids.entry(id).or_default() += 1;
        }
        for activity in &self.activities {
            if let Some(sub) = &activity.sub_model {
                sub.collect_ids(ids);
            }
        }
    }

    /// Copy with every element list sorted by id, recursively.
    ///
    /// Two models are isomorphic (same graph up to declaration order) exactly
    /// when their canonical forms are equal.
    pub fn canonical(&self) -> FlowModel {
        let mut m = self.clone();
        m.canonicalize();
        m
    }

    pub fn canonicalize(&mut self) {
        self.sites.sort_by(|a, b| a.id.cmp(&b.id));
        self.stores.sort_by(|a, b| a.id.cmp(&b.id));
        self.activities.sort_by(|a, b| a.id.cmp(&b.id));
        self.flows.sort_by(|a, b| a.id.cmp(&b.id));
        for activity in &mut self.activities {
            if let Some(sub) = activity.sub_model.as_deref_mut() {
                sub.canonicalize();
            }
        }
    }

    pub fn is_isomorphic(&self, other: &FlowModel) -> bool {
        self.canonical() == other.canonical()
    }

    /// Replaces `activity` by the contents of its detail model.
    ///
    /// The activity's own flows are dropped; the detail model's boundary
    /// flows already connect to the surrounding stores. Returns `None` when
    /// the activity does not exist or has no detail model.
    pub fn flatten_activity(&self, activity: &str) -> Option<FlowModel> {
        let sub = self.activity(activity)?.sub_model.as_deref()?.clone();
        let mut out = self.clone();
        out.activities.retain(|a| a.id != activity);
        out.flows.retain(|f| !f.touches(activity));
        out.stores.extend(sub.stores);
        out.activities.extend(sub.activities);
        out.flows.extend(sub.flows);
        out.sites.extend(
            sub.sites
                .into_iter()
                .filter(|s| !self.sites.iter().any(|o| o.id == s.id)),
        );
        Some(out)
    }
}

/// Name normalization used when stores are matched by name:
/// trimmed, case-folded, inner whitespace runs collapsed to one space.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Identifiers are `[A-Za-z0-9_.-]+` and must not contain the arrow
/// tokens `->` or `--`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_identifier_char) && !s.contains("->") && !s.contains("--")
}

pub(crate) fn is_identifier_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

/// Maps free text onto the identifier alphabet (used for ids derived from
/// names such as role or person names).
pub fn sanitize_identifier(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.trim().chars() {
        let c = if is_identifier_char(c) { c } else { '_' };
        // "--" and "->" are reserved for flow arrows.
        if c == '-' && out.ends_with('-') {
            out.push('_');
        } else {
            out.push(c);
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}
