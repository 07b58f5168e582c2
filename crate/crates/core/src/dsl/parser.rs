//! Parser for the `.flow` text format.
//!
//! ```text
//! model <name> [soll|ist] [map]
//! site <id> "<label>"
//! scope "<start>" "<end>" "<person>"...
//! store <id> ["<name>"] [solid|liquid|undefined] [multi] [role] [experience] [@<site>]
//! activity <id> ["<name>"] [{
//!   ...nested model...
//! }]
//! flow [<id>:] <src> (->|--) <dst> ["<content>"] [solid|liquid|undefined]
//!      [experience] [null] [content|control|support] [intensity <real>]
//! # comment
//! ```
//!
//! A store without a state is undefined. A flow without a state takes the
//! state of its source store, or `undefined` when the source is an activity
//! or unknown. Flows without an id are numbered `f1`, `f2`, ... in document
//! order, skipping ids already in use. Parsing does not validate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, SourceSpan, Tok, Token};
use crate::model::{
    Activity, AggregateState, Attachment, Flow, FlowModel, InformationStore, ModelKind,
    Multiplicity, NodeRef, ObservationScope, Site,
};
use crate::validate::resolve;

pub const MAX_ERRORS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// A parsed model with the position of every declared element.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub model: FlowModel,
    /// First declaration of each store, activity, flow and site id.
    pub spans: BTreeMap<String, SourceSpan>,
}

/// Parses a `.flow` document.
pub fn parse(text: &str) -> Result<FlowModel, Vec<ParseError>> {
    parse_document(text).map(|d| d.model)
}

pub fn parse_document(text: &str) -> Result<Document, Vec<ParseError>> {
    let tokens = tokenize(text);
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        errors: Vec::new(),
        spans: BTreeMap::new(),
    };
    let mut model = FlowModel::default();
    let mut pending = Vec::new();
    p.block(&mut model, &mut pending, 0);
    if !p.errors.is_empty() {
        p.errors.truncate(MAX_ERRORS);
        return Err(p.errors);
    }
    let ids = finish(&mut model, &pending);
    let mut spans = p.spans;
    for (p, id) in pending.iter().zip(ids) {
        if p.id.is_none() {
            spans.entry(id).or_insert(p.span);
        }
    }
    Ok(Document { model, spans })
}

/// Flow parsed without an id or state; completed once the whole document
/// is known.
struct Pending {
    id: Option<String>,
    needs_state: bool,
    span: SourceSpan,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    errors: Vec<ParseError>,
    spans: BTreeMap<String, SourceSpan>,
}

type Step<T> = Result<T, ParseError>;

fn err(span: SourceSpan, message: impl Into<String>, expected: &[&str]) -> ParseError {
    ParseError {
        span,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn next(&mut self) -> &'t Token {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn at_line_end(&self) -> bool {
        matches!(self.peek().tok, Tok::Newline)
    }

    fn skip_line(&mut self) {
        while !self.at_end() && !self.at_line_end() {
            self.pos += 1;
        }
    }

    fn fail(&mut self, e: ParseError) {
        if self.errors.len() < MAX_ERRORS {
            self.errors.push(e);
        }
    }

    fn unexpected(&self, t: &Token, expected: &[&str]) -> ParseError {
        let message = match &t.tok {
            Tok::Bad(m) => m.clone(),
            other => format!("unexpected {}", other.describe()),
        };
        err(t.span, message, expected)
    }

    fn ident(&mut self, what: &str) -> Step<(String, SourceSpan)> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.span)),
            _ => Err(self.unexpected(t, &[what])),
        }
    }

    fn string(&mut self, what: &str) -> Step<String> {
        let t = self.next();
        match &t.tok {
            Tok::Str(s) => Ok(s.clone()),
            _ => Err(self.unexpected(t, &[what])),
        }
    }

    fn optional_string(&mut self) -> Option<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                self.pos += 1;
                Some(s.clone())
            }
            _ => None,
        }
    }

    fn record(&mut self, id: &str, span: SourceSpan) {
        self.spans.entry(id.to_string()).or_insert(span);
    }

    /// Statements until `}` (nested) or end of input (top level).
    fn block(&mut self, model: &mut FlowModel, pending: &mut Vec<Pending>, depth: usize) {
        let mut seen_model = false;
        loop {
            if self.errors.len() >= MAX_ERRORS {
                return;
            }
            if self.at_end() {
                if depth > 0 {
                    let span = self.tokens.last().map_or(
                        SourceSpan {
                            line: 1,
                            column: 1,
                            length: 1,
                        },
                        |t| t.span,
                    );
                    self.fail(err(span, "unclosed activity block", &["`}`"]));
                }
                return;
            }
            let t = self.peek();
            match &t.tok {
                Tok::Newline => {
                    self.pos += 1;
                    continue;
                }
                Tok::RBrace if depth > 0 => {
                    self.pos += 1;
                    self.end_of_statement();
                    return;
                }
                _ => {}
            }
            let result = self.statement(model, pending, depth, &mut seen_model);
            if let Err(e) = result {
                self.fail(e);
                self.skip_line();
            }
        }
    }

    fn end_of_statement(&mut self) {
        if !self.at_line_end() {
            let t = self.peek();
            let e = self.unexpected(t, &["end of line"]);
            self.fail(e);
            self.skip_line();
        }
    }

    fn statement(
        &mut self,
        model: &mut FlowModel,
        pending: &mut Vec<Pending>,
        depth: usize,
        seen_model: &mut bool,
    ) -> Step<()> {
        const STATEMENTS: [&str; 6] = [
            "`model`",
            "`site`",
            "`scope`",
            "`store`",
            "`activity`",
            "`flow`",
        ];
        let t = self.next();
        let keyword = match &t.tok {
            Tok::Ident(k) => k.as_str(),
            _ => return Err(self.unexpected(t, &STATEMENTS)),
        };
        match keyword {
            "model" => {
                if *seen_model {
                    return Err(err(t.span, "duplicate `model` header", &[]));
                }
                *seen_model = true;
                self.model_header(model)?;
            }
            "site" => {
                if depth > 0 {
                    return Err(err(t.span, "sites are declared at top level", &[]));
                }
                let (id, span) = self.ident("site id")?;
                let label = self.string("site label")?;
                self.record(&id, span);
                model.sites.push(Site { id, label });
            }
            "scope" => {
                if model.scope.is_some() {
                    return Err(err(t.span, "duplicate `scope`", &[]));
                }
                let start = self.timestamp()?;
                let end = self.timestamp()?;
                let mut persons = Vec::new();
                while let Some(p) = self.optional_string() {
                    persons.push(p);
                }
                model.scope = Some(ObservationScope {
                    persons,
                    start,
                    end,
                });
            }
            "store" => {
                let store = self.store()?;
                model.stores.push(store);
            }
            "activity" => {
                let (id, span) = self.ident("activity id")?;
                self.record(&id, span);
                let name = self.optional_string().unwrap_or_else(|| id.clone());
                let mut activity = Activity {
                    id,
                    name,
                    sub_model: None,
                };
                if matches!(self.peek().tok, Tok::LBrace) {
                    self.pos += 1;
                    self.end_of_statement();
                    let mut sub = FlowModel::default();
                    self.block(&mut sub, pending, depth + 1);
                    activity.sub_model = Some(Box::new(sub));
                    model.activities.push(activity);
                    return Ok(());
                }
                model.activities.push(activity);
            }
            "flow" => {
                let (flow, p) = self.flow(pending.len())?;
                model.flows.push(flow);
                pending.push(p);
            }
            other => {
                return Err(err(
                    t.span,
                    format!("unknown statement `{other}`"),
                    &STATEMENTS,
                ))
            }
        }
        self.end_of_statement();
        Ok(())
    }

    fn model_header(&mut self, model: &mut FlowModel) -> Step<()> {
        let t = self.next();
        model.name = match &t.tok {
            Tok::Ident(s) | Tok::Str(s) => s.clone(),
            _ => return Err(self.unexpected(t, &["model name"])),
        };
        let mut kind = None;
        while let Tok::Ident(word) = &self.peek().tok {
            let span = self.peek().span;
            match word.as_str() {
                "soll" | "ist" if kind.is_some() => {
                    return Err(err(span, "model kind given twice", &[]))
                }
                "soll" => kind = Some(ModelKind::Soll),
                "ist" => kind = Some(ModelKind::Ist),
                "map" if model.map => return Err(err(span, "`map` given twice", &[])),
                "map" => model.map = true,
                _ => return Err(self.unexpected(self.peek(), &["`soll`", "`ist`", "`map`"])),
            }
            self.pos += 1;
        }
        model.kind = kind.unwrap_or_default();
        Ok(())
    }

    fn timestamp(&mut self) -> Step<DateTime<Utc>> {
        let span = self.peek().span;
        let text = self.string("RFC 3339 timestamp")?;
        DateTime::parse_from_rfc3339(&text)
            .map(|d| d.with_timezone(&Utc))
            .map_err(|e| {
                err(
                    span,
                    format!("invalid timestamp {text:?}: {e}"),
                    &["RFC 3339 timestamp"],
                )
            })
    }

    fn store(&mut self) -> Step<InformationStore> {
        let (id, span) = self.ident("store id")?;
        self.record(&id, span);
        let name = self.optional_string().unwrap_or_else(|| id.clone());
        let mut store = InformationStore::undefined(id).named(name);
        let mut state_set = false;
        loop {
            let t = self.peek();
            match &t.tok {
                Tok::Ident(word) => {
                    let twice = |what: &str| err(t.span, format!("{what} given twice"), &[]);
                    if let Some(state) = AggregateState::from_keyword(word) {
                        if state_set {
                            return Err(twice("state"));
                        }
                        store.state = state;
                        state_set = true;
                    } else {
                        let flag = match word.as_str() {
                            "multi" => store.multiplicity == Multiplicity::Multiple,
                            "role" => std::mem::replace(&mut store.is_role, true),
                            "experience" => std::mem::replace(&mut store.is_experience, true),
                            _ => {
                                return Err(self.unexpected(
                                    t,
                                    &[
                                        "state",
                                        "`multi`",
                                        "`role`",
                                        "`experience`",
                                        "`@`",
                                        "end of line",
                                    ],
                                ))
                            }
                        };
                        if flag {
                            return Err(twice(&format!("`{word}`")));
                        }
                        if word == "multi" {
                            store.multiplicity = Multiplicity::Multiple;
                        }
                    }
                    self.pos += 1;
                }
                Tok::At => {
                    if store.site.is_some() {
                        return Err(err(t.span, "site given twice", &[]));
                    }
                    self.pos += 1;
                    store.site = Some(self.ident("site id")?.0);
                }
                _ => return Ok(store),
            }
        }
    }

    fn flow(&mut self, seq: usize) -> Step<(Flow, Pending)> {
        let first = self.ident("flow id or source")?;
        let (id, source) = if matches!(self.peek().tok, Tok::Colon) {
            self.pos += 1;
            self.record(&first.0, first.1);
            (Some(first.0), self.ident("flow source")?.0)
        } else {
            (None, first.0)
        };
        let arrow = self.next();
        let directed = match arrow.tok {
            Tok::Arrow => true,
            Tok::Dash => false,
            _ => return Err(self.unexpected(arrow, &["`->`", "`--`"])),
        };
        let target = self.ident("flow target")?.0;
        let mut flow = Flow::new(placeholder(seq), source, target, AggregateState::Undefined);
        flow.directed = directed;
        flow.content = self.optional_string();
        let mut state_set = false;
        let mut attachment_set = false;
        while let Tok::Ident(word) = &self.peek().tok {
            let span = self.peek().span;
            let twice = |what: &str| err(span, format!("{what} given twice"), &[]);
            self.pos += 1;
            if let Some(state) = AggregateState::from_keyword(word) {
                if std::mem::replace(&mut state_set, true) {
                    return Err(twice("state"));
                }
                flow.state = state;
                continue;
            }
            match word.as_str() {
                "experience" if std::mem::replace(&mut flow.is_experience, true) => {
                    return Err(twice("`experience`"))
                }
                "null" if std::mem::replace(&mut flow.is_null_flow, true) => {
                    return Err(twice("`null`"))
                }
                "experience" | "null" => {}
                "content" | "control" | "support" => {
                    if std::mem::replace(&mut attachment_set, true) {
                        return Err(twice("attachment"));
                    }
                    flow.attachment = match word.as_str() {
                        "control" => Attachment::Control,
                        "support" => Attachment::Support,
                        _ => Attachment::Content,
                    };
                }
                "intensity" => {
                    if flow.intensity.is_some() {
                        return Err(twice("`intensity`"));
                    }
                    let t = self.next();
                    let value = match &t.tok {
                        Tok::Ident(n) => n.parse::<f64>().ok(),
                        _ => None,
                    };
                    flow.intensity =
                        Some(value.ok_or_else(|| err(t.span, "invalid intensity", &["number"]))?);
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected(
                        self.peek(),
                        &[
                            "state",
                            "`experience`",
                            "`null`",
                            "`control`",
                            "`support`",
                            "`intensity`",
                            "end of line",
                        ],
                    ));
                }
            }
        }
        let pending = Pending {
            id,
            needs_state: !state_set,
            span: first.1,
        };
        Ok((flow, pending))
    }
}

/// Flows carry a placeholder id `\0<n>` (n = position in the document)
/// until the whole document is known; then ids and default states are
/// filled in.
fn placeholder(seq: usize) -> String {
    format!("\0{seq}")
}

fn placeholder_seq(id: &str) -> Option<usize> {
    id.strip_prefix('\0')?.parse().ok()
}

/// Returns the final id of every flow, by document position.
fn finish(model: &mut FlowModel, pending: &[Pending]) -> Vec<String> {
    let mut states: BTreeMap<usize, AggregateState> = BTreeMap::new();
    let mut enclosing = Vec::new();
    collect_default_states(model, &mut enclosing, pending, &mut states);

    let mut used: BTreeSet<String> = model
        .all_ids()
        .keys()
        .filter(|id| placeholder_seq(id).is_none())
        .map(|s| s.to_string())
        .collect();
    used.extend(pending.iter().filter_map(|p| p.id.clone()));
    let mut counter = 0;
    let ids: Vec<String> = pending
        .iter()
        .map(|p| match &p.id {
            Some(id) => id.clone(),
            None => loop {
                counter += 1;
                let candidate = format!("f{counter}");
                if used.insert(candidate.clone()) {
                    break candidate;
                }
            },
        })
        .collect();
    apply_pending(model, &ids, &states);
    ids
}

fn collect_default_states<'a>(
    model: &'a FlowModel,
    enclosing: &mut Vec<&'a FlowModel>,
    pending: &[Pending],
    states: &mut BTreeMap<usize, AggregateState>,
) {
    for flow in &model.flows {
        let Some(seq) = placeholder_seq(&flow.id) else {
            continue;
        };
        if pending[seq].needs_state {
            let state = match resolve(model, enclosing, &flow.source) {
                Some(NodeRef::Store(s)) => s.state,
                _ => AggregateState::Undefined,
            };
            states.insert(seq, state);
        }
    }
    enclosing.push(model);
    for a in &model.activities {
        if let Some(sub) = a.sub_model.as_deref() {
            collect_default_states(sub, enclosing, pending, states);
        }
    }
    enclosing.pop();
}

fn apply_pending(model: &mut FlowModel, ids: &[String], states: &BTreeMap<usize, AggregateState>) {
    for flow in &mut model.flows {
        if let Some(seq) = placeholder_seq(&flow.id) {
            flow.id = ids[seq].clone();
            if let Some(state) = states.get(&seq) {
                flow.state = *state;
            }
        }
    }
    for a in &mut model.activities {
        if let Some(sub) = a.sub_model.as_deref_mut() {
            apply_pending(sub, ids, states);
        }
    }
}
