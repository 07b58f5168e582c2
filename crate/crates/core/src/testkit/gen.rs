//! Seeded random generators. Every generator is a plain function of an RNG so
//! property tests can drive it from a proptest-chosen seed.

use chrono::{TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derive::{ProcessModel, RoleKind};
use crate::model::{
    Activity, AggregateState, Attachment, Flow, FlowModel, InformationStore, ModelKind,
    Multiplicity, NodeRef, ObservationScope, Site,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct ModelShape {
    pub max_stores: usize,
    pub max_activities: usize,
    pub max_flows: usize,
    /// Nesting depth of detail models.
    pub max_depth: usize,
    /// Use names and contents that need quoting and escaping.
    pub awkward_text: bool,
    /// Prepended to every generated id, to keep several models apart.
    pub id_prefix: String,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            max_stores: 6,
            max_activities: 3,
            max_flows: 9,
            max_depth: 2,
            awkward_text: true,
            id_prefix: String::new(),
        }
    }
}

const PLAIN: &[&str] = &[
    "Kunde",
    "Analyst",
    "Spec",
    "Tester",
    "Wiki",
    "Entwickler",
    "Plan",
];
const AWKWARD: &[&str] = &[
    "Frau Müller",
    "Lasten heft",
    "say \"hi\"",
    "back\\slash",
    "tab\there",
    "line\nbreak",
    "# not a comment",
    "a -> b",
    "{brace}",
    "ünïcödé ✓",
    "bell\u{7}",
];
const CONTENTS: &[&str] = &["Anforderungen", "Testfälle", "req", "Design \"v2\""];

fn text(rng: &mut impl Rng, shape: &ModelShape) -> String {
    let pool = if shape.awkward_text && rng.random_bool(0.4) {
        AWKWARD
    } else {
        PLAIN
    };
    pool.choose(rng).expect("non-empty pool").to_string()
}

fn state(rng: &mut impl Rng) -> AggregateState {
    *AggregateState::ALL.choose(rng).expect("three states")
}

struct Ids {
    next: usize,
    prefix: String,
}

impl Ids {
    fn take(&mut self, kind: &str) -> String {
        self.next += 1;
        let prefix = format!("{}{kind}", self.prefix);
        // Mix in separators the identifier grammar allows.
        match self.next % 4 {
            0 => format!("{prefix}{}", self.next),
            1 => format!("{prefix}_{}", self.next),
            2 => format!("{prefix}.{}", self.next),
            _ => format!("{prefix}-{}", self.next),
        }
    }
}

/// A model that passes `validate` without errors, detail models included.
pub fn valid_model(rng: &mut impl Rng, shape: &ModelShape) -> FlowModel {
    let mut ids = Ids {
        next: 0,
        prefix: shape.id_prefix.clone(),
    };
    let map = rng.random_bool(0.3);
    let mut m = FlowModel::new(
        text(rng, shape),
        if rng.random_bool(0.5) {
            ModelKind::Soll
        } else {
            ModelKind::Ist
        },
    );
    m.map = map;
    if map {
        for _ in 0..rng.random_range(0..=2) {
            let id = ids.take("site");
            m.sites.push(Site {
                id,
                label: text(rng, shape),
            });
        }
    }
    if rng.random_bool(0.3) {
        let start = rng.random_range(1_500_000_000i64..1_700_000_000);
        let end = start + rng.random_range(0..10_000_000);
        m.scope = Some(ObservationScope {
            start: Utc
                .timestamp_opt(start, 0)
                .single()
                .expect("valid timestamp"),
            end: Utc
                .timestamp_millis_opt(end * 1000 + rng.random_range(0..1000))
                .single()
                .expect("valid timestamp"),
            persons: (0..rng.random_range(1..=3))
                .map(|_| text(rng, shape))
                .collect(),
        });
    }
    fill(rng, shape, &mut ids, &mut m, &[], 0, map);
    m
}

/// Adds stores, activities and flows to `m`. `outer` lists the ids visible
/// from enclosing scopes.
fn fill(
    rng: &mut impl Rng,
    shape: &ModelShape,
    ids: &mut Ids,
    m: &mut FlowModel,
    outer: &[&FlowModel],
    depth: usize,
    map_context: bool,
) {
    for _ in 0..rng.random_range(0..=shape.max_stores) {
        let mut s = InformationStore::new(ids.take("s"), state(rng));
        if rng.random_bool(0.5) {
            s.name = text(rng, shape);
        }
        if rng.random_bool(0.2) {
            s.multiplicity = Multiplicity::Multiple;
        }
        s.is_experience = rng.random_bool(0.2);
        s.is_role = rng.random_bool(0.15);
        if depth == 0 && !m.sites.is_empty() && rng.random_bool(0.5) {
            s.site = Some(m.sites.choose(rng).expect("sites").id.clone());
        }
        m.stores.push(s);
    }
    for _ in 0..rng.random_range(0..=shape.max_activities) {
        let mut a = Activity::new(ids.take("A"));
        if rng.random_bool(0.5) {
            a.name = text(rng, shape);
        }
        m.activities.push(a);
    }
    let nodes: Vec<String> = m.node_ids().into_iter().map(String::from).collect();
    if !nodes.is_empty() {
        for _ in 0..rng.random_range(0..=shape.max_flows) {
            let source = nodes.choose(rng).expect("nodes").clone();
            let target = nodes.choose(rng).expect("nodes").clone();
            let f = random_flow(rng, shape, ids.take("f"), m, &source, &target, map_context);
            m.flows.push(f);
        }
    }
    // Detail models are built after the flows so their boundary can mirror
    // the activity's interface.
    if depth < shape.max_depth {
        for i in 0..m.activities.len() {
            if rng.random_bool(0.3) {
                let id = m.activities[i].id.clone();
                let mut scopes = outer.to_vec();
                scopes.push(m);
                let sub = detail_model(rng, shape, ids, &scopes, &id, depth + 1, map_context);
                m.activities[i].sub_model = Some(Box::new(sub));
            }
        }
    }
}

fn random_flow(
    rng: &mut impl Rng,
    shape: &ModelShape,
    id: String,
    m: &FlowModel,
    source: &str,
    target: &str,
    map_context: bool,
) -> Flow {
    let src_state = match m.node(source) {
        Some(NodeRef::Store(s)) => Some(s.state),
        _ => None,
    };
    let mut f = Flow::new(id, source, target, src_state.unwrap_or_else(|| state(rng)));
    let touches_activity = [source, target].iter().any(|n| m.activity(n).is_some());
    if touches_activity {
        f.attachment = *[
            Attachment::Content,
            Attachment::Control,
            Attachment::Support,
        ]
        .choose(rng)
        .expect("three");
    }
    if rng.random_bool(0.5) {
        f.content = Some(if shape.awkward_text {
            CONTENTS.choose(rng).expect("pool").to_string()
        } else {
            "req".into()
        });
    }
    f.is_experience = rng.random_bool(0.2);
    f.is_null_flow = rng.random_bool(0.1);
    f.directed = !(map_context && rng.random_bool(0.3));
    if rng.random_bool(0.3) {
        f.intensity = Some(if rng.random_bool(0.5) {
            f64::from(rng.random_range(0u32..100))
        } else {
            rng.random_range(0.0..200.0)
        });
    }
    f
}

/// A detail model for `activity` whose boundary equals the activity's
/// interface in the innermost enclosing scope.
fn detail_model(
    rng: &mut impl Rng,
    shape: &ModelShape,
    ids: &mut Ids,
    scopes: &[&FlowModel],
    activity: &str,
    depth: usize,
    map_context: bool,
) -> FlowModel {
    let parent = *scopes.last().expect("parent scope");
    let mut sub = FlowModel::new(text(rng, shape), parent.kind);
    let inner = ids.take("I");
    sub.activities.push(Activity::new(&inner));
    let small = ModelShape {
        max_stores: 2,
        max_activities: 1,
        max_flows: 3,
        ..shape.clone()
    };
    // Internal elements first, without nesting; nesting happens below.
    let mut no_nest = small.clone();
    no_nest.max_depth = 0;
    fill(rng, &no_nest, ids, &mut sub, scopes, depth, map_context);
    for f in parent
        .flows
        .iter()
        .filter(|f| f.touches(activity) && f.source != f.target)
    {
        let outer_end = f.other_end(activity).expect("touches").to_string();
        let mut b = f.clone();
        b.id = ids.take("b");
        b.intensity = None;
        let local_is_source = f.source == activity;
        let local = boundary_endpoint(rng, &sub, &inner, f.state, local_is_source);
        if local_is_source {
            b.source = local.clone();
            b.target = outer_end.clone();
        } else {
            b.source = outer_end.clone();
            b.target = local.clone();
        }
        if sub.activity(&local).is_none() && !is_activity(scopes, &outer_end) {
            b.attachment = Attachment::Content;
        }
        sub.flows.push(b);
    }
    if depth < shape.max_depth {
        for i in 0..sub.activities.len() {
            if rng.random_bool(0.3) {
                let id = sub.activities[i].id.clone();
                let mut inner_scopes = scopes.to_vec();
                inner_scopes.push(&sub);
                let nested =
                    detail_model(rng, shape, ids, &inner_scopes, &id, depth + 1, map_context);
                sub.activities[i].sub_model = Some(Box::new(nested));
            }
        }
    }
    sub
}

fn is_activity(scopes: &[&FlowModel], id: &str) -> bool {
    scopes
        .iter()
        .rev()
        .find_map(|s| s.node(id))
        .is_some_and(|n| n.is_activity())
}

/// A local endpoint for a boundary flow: sometimes a store (which must have
/// the flow's state when it is the source), otherwise the inner activity.
fn boundary_endpoint(
    rng: &mut impl Rng,
    sub: &FlowModel,
    inner: &str,
    state: AggregateState,
    emits: bool,
) -> String {
    let candidates: Vec<&str> = sub
        .stores
        .iter()
        .filter(|s| !emits || s.state == state)
        .map(|s| s.id.as_str())
        .collect();
    if !candidates.is_empty() && rng.random_bool(0.5) {
        candidates.choose(rng).expect("non-empty").to_string()
    } else {
        inner.to_string()
    }
}

/// Top-level-only model with at most `max_elements` nodes plus flows, biased
/// towards the shapes the built-in patterns look for.
pub fn small_model(rng: &mut impl Rng, max_elements: usize) -> FlowModel {
    let mut m = FlowModel {
        map: rng.random_bool(0.3),
        ..FlowModel::default()
    };
    let total = rng.random_range(1..=max_elements);
    let nodes = rng.random_range(1..=total.min(6));
    let flows = total - nodes;
    for i in 0..nodes {
        if rng.random_bool(0.2) {
            m.activities.push(Activity::new(format!("a{i}")));
        } else {
            let st = if rng.random_bool(0.5) {
                AggregateState::Liquid
            } else {
                *AggregateState::ALL.choose(rng).expect("states")
            };
            let mut s = InformationStore::new(format!("n{i}"), st);
            s.is_experience = rng.random_bool(0.1);
            m.stores.push(s);
        }
    }
    let ids = m
        .node_ids()
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for j in 0..flows {
        let source = ids.choose(rng).expect("nodes").clone();
        let target = ids.choose(rng).expect("nodes").clone();
        let st = m.store(&source).map_or_else(|| state(rng), |s| s.state);
        let mut f = Flow::new(format!("f{j}"), &source, &target, st);
        if rng.random_bool(0.7) {
            f.content = Some(if rng.random_bool(0.8) { "req" } else { "other" }.into());
        }
        if m.activity(&source).is_some() || m.activity(&target).is_some() {
            f.attachment = *[
                Attachment::Content,
                Attachment::Content,
                Attachment::Control,
                Attachment::Support,
            ]
            .choose(rng)
            .expect("four");
        }
        f.is_null_flow = rng.random_bool(0.05);
        f.directed = !(m.map && rng.random_bool(0.3));
        m.flows.push(f);
    }
    m
}

/// Random DAG process: edges only go from lower to higher index, so the
/// declaration order is a topological order before shuffling.
pub fn process(rng: &mut impl Rng, max_activities: usize, max_documents: usize) -> ProcessModel {
    let n = rng.random_range(1..=max_activities);
    let docs = rng.random_range(1..=max_documents);
    let mut p = ProcessModel::default();
    for i in 0..n {
        p = p.activity(&format!("A{i}"));
    }
    let density = rng.random_range(0.1..0.6);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                p = p.edge(&format!("A{i}"), &format!("A{j}"));
            }
        }
    }
    for i in 0..n {
        for d in 0..docs {
            if rng.random_bool(0.3) {
                p = p.reads(&format!("A{i}"), &format!("D{d}"));
            }
            if rng.random_bool(0.25) {
                p = p.writes(&format!("A{i}"), &format!("D{d}"));
            }
        }
        if rng.random_bool(0.3) {
            let kind = if rng.random_bool(0.5) {
                RoleKind::Responsible
            } else {
                RoleKind::Participating
            };
            let role = *["Analyst", "Tester", "Architekt"]
                .choose(rng)
                .expect("roles");
            p = p.role(&format!("A{i}"), role, kind);
        }
    }
    p
}

/// Product graph for integration cuts: `n <= max_stores` solid stores with
/// random (possibly cyclic) dependencies, the odd activity and null flow.
pub fn product_graph(rng: &mut impl Rng, max_stores: usize) -> FlowModel {
    let n = rng.random_range(2..=max_stores);
    let mut m = FlowModel::default();
    for i in 0..n {
        m.stores.push(InformationStore::solid(format!("P{i}")));
    }
    if rng.random_bool(0.3) {
        m.activities.push(Activity::new("X"));
    }
    let nodes: Vec<String> = m.node_ids().into_iter().map(String::from).collect();
    let edges = rng.random_range(1..=2 * n);
    for j in 0..edges {
        let a = nodes.choose(rng).expect("nodes").clone();
        let b = nodes.choose(rng).expect("nodes").clone();
        if a == b {
            continue;
        }
        let mut f = Flow::new(format!("f{j}"), a, b, AggregateState::Solid);
        f.is_null_flow = rng.random_bool(0.1);
        m.flows.push(f);
    }
    m
}
