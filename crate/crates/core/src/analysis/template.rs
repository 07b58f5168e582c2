//! Pattern templates.
//!
//! A template is a small constraint graph. Node constraints restrict kind,
//! aggregate state, experience flag and (filtered) degrees of the bound
//! element; edge constraints require a flow, or a path when `via` is set,
//! between two bound nodes. Chain templates instead describe maximal runs of
//! nodes relaying the same content.
//!
//! Templates are plain data and load from JSON, so the catalog can be
//! extended without touching code.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AggregateState, Attachment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Store,
    Activity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeDirection {
    In,
    Out,
    /// In or out; an undirected flow counts once.
    Any,
}

/// Bounds on the number of flows at a node that pass the filters.
///
/// Empty filter lists accept everything. Null flows never count; undirected
/// flows count as both incoming and outgoing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeConstraint {
    pub direction: DegreeDirection,
    #[serde(default)]
    pub states: Vec<AggregateState>,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
    #[serde(default)]
    pub min: Option<usize>,
    #[serde(default)]
    pub max: Option<usize>,
}

impl DegreeConstraint {
    pub fn at_least(direction: DegreeDirection, min: usize) -> Self {
        Self {
            direction,
            states: Vec::new(),
            attachments: Vec::new(),
            min: Some(min),
            max: None,
        }
    }

    pub fn at_most(direction: DegreeDirection, max: usize) -> Self {
        Self {
            direction,
            states: Vec::new(),
            attachments: Vec::new(),
            min: None,
            max: Some(max),
        }
    }

    pub fn states(mut self, states: &[AggregateState]) -> Self {
        self.states = states.to_vec();
        self
    }

    pub fn attachments(mut self, attachments: &[Attachment]) -> Self {
        self.attachments = attachments.to_vec();
        self
    }

    pub fn admits(&self, count: usize) -> bool {
        self.min.is_none_or(|m| count >= m) && self.max.is_none_or(|m| count <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeConstraint {
    pub id: String,
    #[serde(default)]
    pub kind: Option<NodeKind>,
    /// Allowed store states; empty means any. A non-empty list excludes
    /// activities, which carry no state.
    #[serde(default)]
    pub states: Vec<AggregateState>,
    #[serde(default)]
    pub experience: Option<bool>,
    #[serde(default)]
    pub degrees: Vec<DegreeConstraint>,
}

impl NodeConstraint {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: None,
            states: Vec::new(),
            experience: None,
            degrees: Vec::new(),
        }
    }

    pub fn store(id: impl Into<String>, states: &[AggregateState]) -> Self {
        Self {
            kind: Some(NodeKind::Store),
            states: states.to_vec(),
            ..Self::new(id)
        }
    }

    pub fn activity(id: impl Into<String>) -> Self {
        Self {
            kind: Some(NodeKind::Activity),
            ..Self::new(id)
        }
    }

    pub fn degree(mut self, d: DegreeConstraint) -> Self {
        self.degrees.push(d);
        self
    }
}

/// A path requirement between two bound nodes: at least `min_len` flows,
/// every intermediate node a store whose state is in `intermediate_states`
/// (any when empty).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub min_len: usize,
    #[serde(default)]
    pub intermediate_states: Vec<AggregateState>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeConstraint {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub states: Vec<AggregateState>,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
    /// All edges with this flag set must carry equal content labels.
    #[serde(default)]
    pub same_content: bool,
    #[serde(default)]
    pub via: Option<PathSpec>,
}

impl EdgeConstraint {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            states: Vec::new(),
            attachments: Vec::new(),
            same_content: false,
            via: None,
        }
    }

    pub fn states(mut self, states: &[AggregateState]) -> Self {
        self.states = states.to_vec();
        self
    }

    pub fn via(mut self, path: PathSpec) -> Self {
        self.via = Some(path);
        self
    }
}

/// Chain of at least `min_len` nodes, each satisfying the template's single
/// node constraint, linked by flows that all carry the same content label
/// (an absent label only links with absent labels).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub min_len: usize,
    #[serde(default)]
    pub flow_states: Vec<AggregateState>,
}

/// Rewrite applied to one match.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    /// Template edge ids whose bound flows are deleted.
    #[serde(default)]
    pub remove_edges: Vec<String>,
    /// Template node ids whose bound elements are deleted with their flows.
    #[serde(default)]
    pub remove_nodes: Vec<String>,
    #[serde(default)]
    pub add_stores: Vec<NewStoreSpec>,
    #[serde(default)]
    pub add_flows: Vec<NewFlowSpec>,
}

/// A store introduced by a replacement. Its model id and name are supplied
/// by the caller when the replacement is applied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewStoreSpec {
    pub id: String,
    pub state: AggregateState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewFlowSpec {
    /// Template node id or new store id.
    pub from: String,
    pub to: String,
    /// Defaults to the source store's state; required when the source is an
    /// activity.
    #[serde(default)]
    pub state: Option<AggregateState>,
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default)]
    pub attachment: Attachment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternTemplate {
    pub name: String,
    pub polarity: Polarity,
    #[serde(default)]
    pub description: String,
    pub nodes: Vec<NodeConstraint>,
    #[serde(default)]
    pub edges: Vec<EdgeConstraint>,
    #[serde(default)]
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub replacement: Option<Replacement>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{0}` has no node constraint")]
    NoNodes(String),
    #[error("template `{name}`: duplicate constraint id `{id}`")]
    DuplicateId { name: String, id: String },
    #[error("template `{name}`: edge `{edge}` refers to unknown node `{node}`")]
    UnknownNode {
        name: String,
        edge: String,
        node: String,
    },
    #[error("template `{0}`: chain templates take exactly one node constraint and no edges")]
    ChainShape(String),
    #[error("template `{0}`: chain length must be at least 2")]
    ChainTooShort(String),
    #[error("template `{0}`: path length must be at least 1")]
    PathTooShort(String),
    #[error("template `{name}`: replacement refers to unknown id `{id}`")]
    UnknownReplacementId { name: String, id: String },
    #[error("invalid template json: {0}")]
    Json(String),
}

impl PatternTemplate {
    pub fn new(name: impl Into<String>, polarity: Polarity) -> Self {
        Self {
            name: name.into(),
            polarity,
            description: String::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            chain: None,
            replacement: None,
        }
    }

    pub fn describe(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn node(mut self, node: NodeConstraint) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn edge(mut self, edge: EdgeConstraint) -> Self {
        self.edges.push(edge);
        self
    }

    pub fn chain(mut self, chain: ChainSpec) -> Self {
        self.chain = Some(chain);
        self
    }

    pub fn check(&self) -> Result<(), TemplateError> {
        let name = || self.name.clone();
        if self.nodes.is_empty() {
            return Err(TemplateError::NoNodes(name()));
        }
        let mut ids: Vec<&str> = self
            .nodes
            .iter()
            .map(|n| n.id.as_str())
            .chain(self.edges.iter().map(|e| e.id.as_str()))
            .collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TemplateError::DuplicateId {
                name: name(),
                id: w[0].to_string(),
            });
        }
        for edge in &self.edges {
            for end in [&edge.from, &edge.to] {
                if !self.nodes.iter().any(|n| &n.id == end) {
                    return Err(TemplateError::UnknownNode {
                        name: name(),
                        edge: edge.id.clone(),
                        node: end.clone(),
                    });
                }
            }
            if edge.via.as_ref().is_some_and(|p| p.min_len == 0) {
                return Err(TemplateError::PathTooShort(name()));
            }
        }
        if let Some(chain) = &self.chain {
            if self.nodes.len() != 1 || !self.edges.is_empty() {
                return Err(TemplateError::ChainShape(name()));
            }
            if chain.min_len < 2 {
                return Err(TemplateError::ChainTooShort(name()));
            }
        }
        if let Some(r) = &self.replacement {
            let known = |id: &str| {
                self.nodes.iter().any(|n| n.id == id) || r.add_stores.iter().any(|s| s.id == id)
            };
            let bad = r
                .remove_edges
                .iter()
                .find(|e| !self.edges.iter().any(|x| &x.id == *e && x.via.is_none()))
                .or_else(|| {
                    r.remove_nodes
                        .iter()
                        .find(|n| !self.nodes.iter().any(|x| &x.id == *n))
                })
                .or_else(|| {
                    r.add_flows
                        .iter()
                        .flat_map(|f| [&f.from, &f.to])
                        .find(|id| !known(id))
                });
            if let Some(id) = bad {
                return Err(TemplateError::UnknownReplacementId {
                    name: name(),
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let t: Self = serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    /// Parses either a single template or an array of templates.
    pub fn list_from_json(text: &str) -> Result<Vec<Self>, TemplateError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
        let list: Vec<Self> = if value.is_array() {
            serde_json::from_value(value)
        } else {
            serde_json::from_value(value).map(|t| vec![t])
        }
        .map_err(|e| TemplateError::Json(e.to_string()))?;
        for t in &list {
            t.check()?;
        }
        Ok(list)
    }
}
