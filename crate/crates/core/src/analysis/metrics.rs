use serde::{Deserialize, Serialize};

use crate::model::{AggregateState, FlowModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Solid flows over solid plus liquid flows; absent without such flows.
    pub solidity_ratio: Option<f64>,
    pub undefined_count: usize,
    /// Share of flows marked as experience; absent without flows.
    pub experience_share: Option<f64>,
    pub flow_count: usize,
    pub store_count: usize,
}

/// Counts over the top level of `m`. Null flows are included; they are
/// information, just not moving.
pub fn metrics(m: &FlowModel) -> Metrics {
    let count = |s| m.flows.iter().filter(|f| f.state == s).count();
    let (solid, liquid) = (count(AggregateState::Solid), count(AggregateState::Liquid));
    let flow_count = m.flows.len();
    let experience = m.flows.iter().filter(|f| f.is_experience).count();
    Metrics {
        solidity_ratio: (solid + liquid > 0).then(|| solid as f64 / (solid + liquid) as f64),
        undefined_count: count(AggregateState::Undefined),
        experience_share: (flow_count > 0).then(|| experience as f64 / flow_count as f64),
        flow_count,
        store_count: m.stores.len(),
    }
}
