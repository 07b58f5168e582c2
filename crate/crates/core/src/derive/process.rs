//! Process models and the `.proc` format.
//!
//! ```text
//! activity <id> ["<name>"]
//! edge <a> -> <b>
//! in <activity> <document>
//! out <activity> <document>
//! role <activity> <name|"name"> [responsible|participating]
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::lexer::{tokenize, SourceSpan, Tok, Token};
use crate::dsl::ParseError;
use crate::model::is_identifier;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessActivity {
    pub id: String,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    Responsible,
    Participating,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub activity: String,
    pub role: String,
    pub kind: RoleKind,
}

/// Activities, control flow, document input/output and roles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub activities: Vec<ProcessActivity>,
    pub edges: BTreeSet<(String, String)>,
    /// activity -> documents read
    pub inputs: BTreeMap<String, BTreeSet<String>>,
    /// activity -> documents written
    pub outputs: BTreeMap<String, BTreeSet<String>>,
    pub roles: BTreeSet<RoleAssignment>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProcessError {
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseError>),
    #[error("activity `{0}` is declared twice")]
    DuplicateActivity(String),
    #[error("`{0}` refers to undeclared activity `{1}`")]
    UnknownActivity(&'static str, String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("control flow has a cycle through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

impl ProcessModel {
    pub fn activity(mut self, id: &str) -> Self {
        self.activities.push(ProcessActivity {
            id: id.into(),
            name: id.into(),
        });
        self
    }

    pub fn edge(mut self, a: &str, b: &str) -> Self {
        self.edges.insert((a.into(), b.into()));
        self
    }

    pub fn reads(mut self, activity: &str, doc: &str) -> Self {
        self.inputs
            .entry(activity.into())
            .or_default()
            .insert(doc.into());
        self
    }

    pub fn writes(mut self, activity: &str, doc: &str) -> Self {
        self.outputs
            .entry(activity.into())
            .or_default()
            .insert(doc.into());
        self
    }

    pub fn role(mut self, activity: &str, role: &str, kind: RoleKind) -> Self {
        self.roles.insert(RoleAssignment {
            activity: activity.into(),
            role: role.into(),
            kind,
        });
        self
    }

    pub fn has_activity(&self, id: &str) -> bool {
        self.activities.iter().any(|a| a.id == id)
    }

    pub fn documents(&self) -> BTreeSet<&str> {
        self.inputs
            .values()
            .chain(self.outputs.values())
            .flatten()
            .map(String::as_str)
            .collect()
    }

    pub fn predecessors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(_, b)| b == id)
            .map(|(a, _)| a.as_str())
    }

    pub fn successors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(a, _)| a == id)
            .map(|(_, b)| b.as_str())
    }

    pub fn reads_doc(&self, activity: &str, doc: &str) -> bool {
        self.inputs.get(activity).is_some_and(|d| d.contains(doc))
    }

    pub fn writes_doc(&self, activity: &str, doc: &str) -> bool {
        self.outputs.get(activity).is_some_and(|d| d.contains(doc))
    }

    /// Checks references, identifiers and acyclicity.
    pub fn check(&self) -> Result<(), ProcessError> {
        let mut seen = BTreeSet::new();
        for a in &self.activities {
            if !is_identifier(&a.id) {
                return Err(ProcessError::BadIdentifier(a.id.clone()));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(ProcessError::DuplicateActivity(a.id.clone()));
            }
        }
        let known = |what, id: &String| {
            if seen.contains(id.as_str()) {
                Ok(())
            } else {
                Err(ProcessError::UnknownActivity(what, id.clone()))
            }
        };
        for (a, b) in &self.edges {
            known("edge", a)?;
            known("edge", b)?;
        }
        for (what, map) in [("in", &self.inputs), ("out", &self.outputs)] {
            for (a, docs) in map {
                known(what, a)?;
                if let Some(d) = docs.iter().find(|d| !is_identifier(d)) {
                    return Err(ProcessError::BadIdentifier(d.clone()));
                }
            }
        }
        for r in &self.roles {
            known("role", &r.activity)?;
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm, ties broken by declaration order.
    pub fn topological_order(&self) -> Result<Vec<&str>, ProcessError> {
        let mut indegree: BTreeMap<&str, usize> =
            self.activities.iter().map(|a| (a.id.as_str(), 0)).collect();
        for (_, b) in &self.edges {
            *indegree.entry(b.as_str()).or_default() += 1;
        }
        let mut order = Vec::new();
        let mut ready: Vec<&str> = self
            .activities
            .iter()
            .map(|a| a.id.as_str())
            .filter(|a| indegree[a] == 0)
            .collect();
        ready.reverse();
        while let Some(a) = ready.pop() {
            order.push(a);
            let mut next: Vec<&str> = Vec::new();
            for b in self.successors(a) {
                let d = indegree.get_mut(b).expect("checked edge");
                *d -= 1;
                if *d == 0 {
                    next.push(b);
                }
            }
            let position = |id: &str| self.activities.iter().position(|x| x.id == id);
            next.sort_by_key(|id| std::cmp::Reverse(position(id)));
            ready.extend(next);
        }
        if order.len() < self.activities.len() {
            let mut cyclic: Vec<String> = indegree
                .iter()
                .filter(|(_, &d)| d > 0)
                .map(|(a, _)| a.to_string())
                .collect();
            cyclic.sort();
            return Err(ProcessError::Cycle(cyclic));
        }
        Ok(order)
    }
}

/// Parses and checks a `.proc` document.
pub fn parse_process(text: &str) -> Result<ProcessModel, ProcessError> {
    let tokens = tokenize(text);
    let mut p = ProcessModel::default();
    let mut errors = Vec::new();
    for line in tokens.split(|t| t.tok == Tok::Newline) {
        if line.is_empty() {
            continue;
        }
        if let Err(e) = statement(&mut p, line) {
            errors.push(e);
            if errors.len() >= crate::dsl::parser::MAX_ERRORS {
                break;
            }
        }
    }
    if !errors.is_empty() {
        return Err(ProcessError::Parse(errors));
    }
    p.check()?;
    Ok(p)
}

fn perr(t: &Token, expected: &[&str]) -> ParseError {
    let message = match &t.tok {
        Tok::Bad(m) => m.clone(),
        other => format!("unexpected {}", other.describe()),
    };
    ParseError {
        span: t.span,
        message,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn ident(t: &Token, what: &str) -> Result<String, ParseError> {
    match &t.tok {
        Tok::Ident(s) => Ok(s.clone()),
        _ => Err(perr(t, &[what])),
    }
}

fn statement(p: &mut ProcessModel, line: &[Token]) -> Result<(), ParseError> {
    let last = line.last().expect("non-empty line").span;
    let end = Token {
        tok: Tok::Newline,
        span: SourceSpan {
            column: last.column + last.length,
            length: 0,
            ..last
        },
    };
    let toks: Vec<&Token> = line.iter().chain(std::iter::once(&end)).collect();
    let at = |i: usize| toks.get(i).copied().unwrap_or(&end);
    let keyword = ident(at(0), "statement")?;
    match keyword.as_str() {
        "activity" => {
            let id = ident(at(1), "activity id")?;
            let (name, rest) = match &at(2).tok {
                Tok::Str(s) => (s.clone(), 3),
                _ => (id.clone(), 2),
            };
            expect_end(at(rest))?;
            p.activities.push(ProcessActivity { id, name });
        }
        "edge" => {
            let a = ident(at(1), "activity id")?;
            if at(2).tok != Tok::Arrow {
                return Err(perr(at(2), &["`->`"]));
            }
            let b = ident(at(3), "activity id")?;
            expect_end(at(4))?;
            p.edges.insert((a, b));
        }
        "in" | "out" => {
            let a = ident(at(1), "activity id")?;
            let d = ident(at(2), "document id")?;
            expect_end(at(3))?;
            let map = if keyword == "in" {
                &mut p.inputs
            } else {
                &mut p.outputs
            };
            map.entry(a).or_default().insert(d);
        }
        "role" => {
            let a = ident(at(1), "activity id")?;
            let role = match &at(2).tok {
                Tok::Ident(s) | Tok::Str(s) => s.clone(),
                _ => return Err(perr(at(2), &["role name"])),
            };
            let (kind, rest) = match &at(3).tok {
                Tok::Ident(k) if k == "responsible" => (RoleKind::Responsible, 4),
                Tok::Ident(k) if k == "participating" => (RoleKind::Participating, 4),
                _ => (RoleKind::Participating, 3),
            };
            expect_end(at(rest))?;
            p.roles.insert(RoleAssignment {
                activity: a,
                role,
                kind,
            });
        }
        _ => {
            return Err(ParseError {
                span: line[0].span,
                message: format!("unknown statement `{keyword}`"),
                expected: ["`activity`", "`edge`", "`in`", "`out`", "`role`"]
                    .map(String::from)
                    .to_vec(),
            })
        }
    }
    Ok(())
}

fn expect_end(t: &Token) -> Result<(), ParseError> {
    match t.tok {
        Tok::Newline => Ok(()),
        _ => Err(perr(t, &["end of line"])),
    }
}
