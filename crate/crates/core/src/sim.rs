//! Software-quanta simulation.
//!
//! Requirements are modelled as `n` distinguishable quanta held by a source
//! (usually the customer). Each step, every content flow draws `k` quanta
//! with replacement from its source's set of the previous step and hands
//! them to the target, possibly falsified or omitted. Quanta `0..n` are the
//! correct ones; every falsification mints a new id `>= n`.
//!
//! Generator: ChaCha8 seeded with `seed`; trial `i` of a batch uses stream
//! `i`, so a single run equals trial 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AggregateState, Attachment, FlowModel};
use crate::validate::{validate, Violation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantaConfig {
    pub n_quanta: u32,
    pub draws_per_step: u32,
    #[serde(default)]
    pub falsify_prob: f64,
    #[serde(default)]
    pub omit_prob: f64,
    pub seed: u64,
    pub steps: u32,
    /// Per-step probability that a liquid store keeps a quantum. 1 = no
    /// forgetting.
    #[serde(default = "one")]
    pub retention: f64,
}

fn one() -> f64 {
    1.0
}

impl QuantaConfig {
    pub fn new(n_quanta: u32, draws_per_step: u32, steps: u32, seed: u64) -> Self {
        Self {
            n_quanta,
            draws_per_step,
            falsify_prob: 0.0,
            omit_prob: 0.0,
            seed,
            steps,
            retention: 1.0,
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_quanta == 0 {
            return Err(SimError::Config("n_quanta must be positive".into()));
        }
        if self.draws_per_step == 0 {
            return Err(SimError::Config("draws_per_step must be positive".into()));
        }
        if !prob(self.falsify_prob)
            || !prob(self.omit_prob)
            || self.falsify_prob + self.omit_prob > 1.0
        {
            return Err(SimError::Config(
                "falsify_prob and omit_prob must lie in [0,1] and sum to at most 1".into(),
            ));
        }
        if !prob(self.retention) {
            return Err(SimError::Config("retention must lie in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("source `{0}` is not a store of the model")]
    UnknownSource(String),
    #[error("model is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeQuanta {
    pub correct: BTreeSet<u64>,
    pub wrong: BTreeSet<u64>,
}

impl NodeQuanta {
    fn insert(&mut self, q: u64, n: u32) {
        if q < u64::from(n) {
            self.correct.insert(q);
        } else {
            self.wrong.insert(q);
        }
    }

    fn members(&self) -> Vec<u64> {
        self.correct.iter().chain(&self.wrong).copied().collect()
    }
}

/// Quanta held by every node (stores and activities) of the model.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantaState {
    pub nodes: BTreeMap<String, NodeQuanta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub node: String,
    pub correct: usize,
    pub coverage: f64,
    pub contamination: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: QuantaConfig,
    pub source: String,
    /// Step 0 is the initial state.
    pub trace: Vec<StepRecord>,
    pub final_state: QuantaState,
}

impl SimReport {
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).expect("plain record"));
            out.push('\n');
        }
        out
    }

    pub fn final_records(&self) -> impl Iterator<Item = &StepRecord> {
        self.trace
            .iter()
            .filter(move |r| r.step == self.config.steps)
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>8} {:>9} {:>13}\n",
            "node", "correct", "coverage", "contamination"
        );
        for r in self.final_records() {
            let _ = writeln!(
                out,
                "{:<24} {:>8} {:>9.3} {:>13}",
                r.node, r.correct, r.coverage, r.contamination
            );
        }
        out
    }
}

/// Expected number of distinct quanta after `k` uniform draws with
/// replacement from `n`.
pub fn expected_distinct(n: u32, k: u32) -> f64 {
    let n = f64::from(n);
    n * (1.0 - (1.0 - 1.0 / n).powf(f64::from(k)))
}

struct Transfer<'a> {
    from: &'a str,
    to: &'a str,
}

struct Prepared<'a> {
    transfers: Vec<Transfer<'a>>,
    nodes: Vec<&'a str>,
    liquid: BTreeSet<&'a str>,
}

fn prepare<'a>(
    m: &'a FlowModel,
    cfg: &QuantaConfig,
    source: &str,
) -> Result<Prepared<'a>, SimError> {
    cfg.check()?;
    if m.store(source).is_none() {
        return Err(SimError::UnknownSource(source.into()));
    }
    let errors: Vec<Violation> = validate(m)
        .into_iter()
        .filter(Violation::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(SimError::InvalidModel(errors));
    }
    let mut flows: Vec<_> = m
        .flows
        .iter()
        .filter(|f| !f.is_null_flow && f.attachment == Attachment::Content)
        .collect();
    flows.sort_by(|a, b| a.id.cmp(&b.id));
    let mut transfers = Vec::new();
    for f in flows {
        transfers.push(Transfer {
            from: &f.source,
            to: &f.target,
        });
        if !f.directed {
            transfers.push(Transfer {
                from: &f.target,
                to: &f.source,
            });
        }
    }
    let liquid = m
        .stores
        .iter()
        .filter(|s| s.state == AggregateState::Liquid)
        .map(|s| s.id.as_str())
        .collect();
    Ok(Prepared {
        transfers,
        nodes: m.node_ids(),
        liquid,
    })
}

fn run(
    p: &Prepared<'_>,
    cfg: &QuantaConfig,
    source: &str,
    stream: u64,
    trace: bool,
) -> (QuantaState, Vec<StepRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let n = cfg.n_quanta;
    let mut state: BTreeMap<&str, NodeQuanta> = p
        .nodes
        .iter()
        .map(|id| (*id, NodeQuanta::default()))
        .collect();
    state.get_mut(source).expect("source checked").correct = (0..u64::from(n)).collect();
    let mut next_wrong = u64::from(n);
    let mut records = Vec::new();
    let record = |step: u32, state: &BTreeMap<&str, NodeQuanta>, records: &mut Vec<StepRecord>| {
        for (id, q) in state {
            records.push(StepRecord {
                step,
                node: id.to_string(),
                correct: q.correct.len(),
                coverage: q.correct.len() as f64 / f64::from(n),
                contamination: q.wrong.len(),
            });
        }
    };
    if trace {
        record(0, &state, &mut records);
    }
    let noisy = cfg.falsify_prob + cfg.omit_prob > 0.0;
    for step in 1..=cfg.steps {
        let members: BTreeMap<&str, Vec<u64>> =
            state.iter().map(|(id, q)| (*id, q.members())).collect();
        for t in &p.transfers {
            let pool = &members[t.from];
            if pool.is_empty() {
                continue;
            }
            let target = state.get_mut(t.to).expect("validated endpoint");
            for _ in 0..cfg.draws_per_step {
                let q = pool[rng.random_range(0..pool.len())];
                if noisy {
                    let u: f64 = rng.random();
                    if u < cfg.falsify_prob {
                        target.wrong.insert(next_wrong);
                        next_wrong += 1;
                        continue;
                    }
                    if u < cfg.falsify_prob + cfg.omit_prob {
                        continue;
                    }
                }
                target.insert(q, n);
            }
        }
        if cfg.retention < 1.0 {
            for (id, q) in state.iter_mut() {
                if *id == source || !p.liquid.contains(id) {
                    continue;
                }
                q.correct.retain(|_| rng.random_bool(cfg.retention));
                q.wrong.retain(|_| rng.random_bool(cfg.retention));
            }
        }
        if trace {
            record(step, &state, &mut records);
        }
    }
    let final_state = QuantaState {
        nodes: state
            .into_iter()
            .map(|(id, q)| (id.to_string(), q))
            .collect(),
    };
    (final_state, records)
}

pub fn simulate(m: &FlowModel, cfg: &QuantaConfig, source: &str) -> Result<SimReport, SimError> {
    let p = prepare(m, cfg, source)?;
    let (final_state, trace) = run(&p, cfg, source, 0, true);
    Ok(SimReport {
        config: cfg.clone(),
        source: source.into(),
        trace,
        final_state,
    })
}

/// Final-step statistics of one node over a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node: String,
    pub mean_correct: f64,
    /// Standard error of `mean_correct`.
    pub std_err: f64,
    pub mean_coverage: f64,
    pub mean_contamination: f64,
    pub max_contamination: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub config: QuantaConfig,
    pub source: String,
    pub trials: u32,
    pub nodes: Vec<NodeSummary>,
}

impl TrialSummary {
    pub fn node(&self, id: &str) -> Option<&NodeSummary> {
        self.nodes.iter().find(|n| n.node == id)
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>12} {:>9} {:>9} {:>13}\n",
            "node", "mean correct", "std err", "coverage", "contamination"
        );
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{:<24} {:>12.4} {:>9.4} {:>9.4} {:>13.4}",
                n.node, n.mean_correct, n.std_err, n.mean_coverage, n.mean_contamination
            );
        }
        out
    }
}

/// Runs `trials` independent simulations in parallel. The result does not
/// depend on the thread count.
pub fn simulate_trials(
    m: &FlowModel,
    cfg: &QuantaConfig,
    source: &str,
    trials: u32,
) -> Result<TrialSummary, SimError> {
    let p = prepare(m, cfg, source)?;
    if trials == 0 {
        return Err(SimError::Config("trials must be positive".into()));
    }
    let finals: Vec<Vec<(usize, usize)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (state, _) = run(&p, cfg, source, u64::from(i), false);
            state
                .nodes
                .values()
                .map(|q| (q.correct.len(), q.wrong.len()))
                .collect()
        })
        .collect();
    let count = f64::from(trials);
    let nodes = p
        .nodes
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let correct: Vec<f64> = finals.iter().map(|f| f[i].0 as f64).collect();
            let mean = correct.iter().sum::<f64>() / count;
            let var = if trials > 1 {
                correct.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            NodeSummary {
                node: id.to_string(),
                mean_correct: mean,
                std_err: (var / count).sqrt(),
                mean_coverage: mean / f64::from(cfg.n_quanta),
                mean_contamination: finals.iter().map(|f| f[i].1 as f64).sum::<f64>() / count,
                max_contamination: finals.iter().map(|f| f[i].1).max().unwrap_or(0),
            }
        })
        .collect();
    Ok(TrialSummary {
        config: cfg.clone(),
        source: source.into(),
        trials,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Flow, InformationStore};

    fn pair() -> FlowModel {
        FlowModel::default()
            .with_store(InformationStore::liquid("Kunde"))
            .with_store(InformationStore::liquid("Analyst"))
            .with_flow(Flow::new("f1", "Kunde", "Analyst", AggregateState::Liquid))
    }

    fn chain() -> FlowModel {
        pair()
            .with_store(InformationStore::liquid("Entwickler"))
            .with_flow(Flow::new(
                "f2",
                "Analyst",
                "Entwickler",
                AggregateState::Liquid,
            ))
    }

    fn final_coverage(r: &SimReport, node: &str) -> f64 {
        r.final_records().find(|x| x.node == node).unwrap().coverage
    }

    #[test]
    fn expected_distinct_values() {
        assert_eq!(expected_distinct(10, 0), 0.0);
        assert!((expected_distinct(1, 5) - 1.0).abs() < 1e-12);
        assert!((expected_distinct(10, 10) - 6.513_215_599).abs() < 1e-9);
    }

    #[test]
    fn single_quantum_is_always_transferred() {
        let r = simulate(&pair(), &QuantaConfig::new(1, 3, 1, 7), "Kunde").unwrap();
        assert_eq!(final_coverage(&r, "Analyst"), 1.0);
    }

    #[test]
    fn zero_steps_transfer_nothing() {
        let r = simulate(&pair(), &QuantaConfig::new(10, 3, 0, 7), "Kunde").unwrap();
        assert_eq!(final_coverage(&r, "Analyst"), 0.0);
        assert_eq!(final_coverage(&r, "Kunde"), 1.0);
    }

    #[test]
    fn falsification_mints_wrong_quanta_that_propagate() {
        let mut cfg = QuantaConfig::new(5, 20, 5, 3);
        cfg.falsify_prob = 0.5;
        let r = simulate(&chain(), &cfg, "Kunde").unwrap();
        let analyst = &r.final_state.nodes["Analyst"];
        assert!(!analyst.wrong.is_empty());
        assert!(analyst.wrong.iter().all(|&q| q >= 5));
        assert!(!r.final_state.nodes["Entwickler"].wrong.is_empty());
    }

    #[test]
    fn deterministic_and_trial_zero_matches_single_run() {
        let cfg = QuantaConfig::new(20, 5, 3, 42);
        let a = simulate(&chain(), &cfg, "Kunde").unwrap();
        assert_eq!(a, simulate(&chain(), &cfg, "Kunde").unwrap());
        let t = simulate_trials(&chain(), &cfg, "Kunde", 1).unwrap();
        let last = a.final_records().find(|r| r.node == "Entwickler").unwrap();
        assert_eq!(
            t.node("Entwickler").unwrap().mean_correct,
            last.correct as f64
        );
    }

    #[test]
    fn forgetting_only_affects_liquid_non_source_stores() {
        let mut cfg = QuantaConfig::new(50, 50, 4, 1);
        cfg.retention = 0.0;
        let r = simulate(&pair(), &cfg, "Kunde").unwrap();
        assert_eq!(final_coverage(&r, "Analyst"), 0.0);
        assert_eq!(final_coverage(&r, "Kunde"), 1.0);
    }

    #[test]
    fn bad_inputs() {
        let cfg = QuantaConfig::new(10, 1, 1, 0);
        assert_eq!(
            simulate(&pair(), &cfg, "X").unwrap_err(),
            SimError::UnknownSource("X".into())
        );
        let mut bad = cfg.clone();
        bad.falsify_prob = 0.7;
        bad.omit_prob = 0.7;
        assert!(matches!(
            simulate(&pair(), &bad, "Kunde"),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn records_and_table() {
        let r = simulate(&pair(), &QuantaConfig::new(4, 2, 2, 9), "Kunde").unwrap();
        assert_eq!(r.to_records().lines().count(), 6);
        assert!(r.summary_table().contains("Analyst"));
    }
}
