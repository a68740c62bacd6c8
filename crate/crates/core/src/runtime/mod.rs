//! Execution-time support: transition validation with recovery, simple
//! temporal networks, deviation classification, impact scoring and
//! disruption handling.

mod disruption;
mod stn;
mod transition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Minute;
use crate::workflow::{ConstraintKind, EdgeKind, MetaValue, Workflow, WorkflowError};

pub use disruption::{handle_disruption, Alert, Disruption, DisruptionEvent, ReactiveOutcome, Replan};
pub use stn::{Stn, StnError};
pub use transition::{
    recover, validate_transition, Action, ActorState, Activity, Alternative, Check, LogEntry, RuntimeRules, SoftRule,
    TransitionOutcome, TransitionProposal, TransitionReport, WorldState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationThresholds {
    /// Deviations smaller than this are normal.
    pub buffer: Minute,
    /// Deviations of at least this much are violations.
    pub tau: Minute,
}

impl Default for DeviationThresholds {
    fn default() -> Self {
        DeviationThresholds { buffer: 15, tau: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationClass {
    Normal,
    Warning,
    Violation,
}

/// Classifies `planned - actual` against the thresholds.
pub fn classify_deviation(planned: Minute, actual: Minute, thresholds: DeviationThresholds) -> DeviationClass {
    let delta = (planned - actual).abs();
    if delta < thresholds.buffer {
        DeviationClass::Normal
    } else if delta < thresholds.tau {
        DeviationClass::Warning
    } else {
        DeviationClass::Violation
    }
}

/// Default (severity, urgency) for a disrupted constraint of each kind.
pub fn default_severity(kind: ConstraintKind) -> (u32, u32) {
    match kind {
        ConstraintKind::Safety => (5, 5),
        ConstraintKind::Temporal => (4, 3),
        ConstraintKind::Spatial => (3, 3),
        ConstraintKind::Resource | ConstraintKind::Data => (3, 2),
        ConstraintKind::Preference => (1, 1),
    }
}

/// Sum of severity times urgency over the affected elements.
pub fn impact(affected: &[(u32, u32)]) -> u32 {
    affected.iter().map(|(s, u)| s * u).sum()
}

/// A candidate response with its cost and feasibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate<T, C> {
    pub plan: T,
    pub cost: C,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no feasible candidate")]
pub struct NoSolution;

/// Cheapest feasible candidate; the earliest one wins ties.
pub fn generate_solution<T, C: Ord>(candidates: Vec<Candidate<T, C>>) -> Result<Candidate<T, C>, NoSolution> {
    let mut best: Option<Candidate<T, C>> = None;
    for c in candidates.into_iter().filter(|c| c.feasible) {
        if best.as_ref().is_none_or(|b| c.cost < b.cost) {
            best = Some(c);
        }
    }
    best.ok_or(NoSolution)
}

/// Changes to apply to a workflow after replanning.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowUpdate {
    /// Role node id to new person.
    #[serde(default)]
    pub reassign: std::collections::BTreeMap<String, String>,
    /// Move the `anchor` minute of every temporal edge downstream of a node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<AnchorShift>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorShift {
    pub from_node: String,
    pub minutes: Minute,
}

/// Returns a copy of `workflow` with the update applied.
pub fn apply_update(workflow: &Workflow, update: &WorkflowUpdate) -> Result<Workflow, WorkflowError> {
    let mut next = workflow.clone();
    for (node, person) in &update.reassign {
        next.node_mut(node).ok_or_else(|| WorkflowError::UnknownNode(node.clone()))?.assigned_person = Some(person.clone());
    }
    if let Some(shift) = &update.shift {
        if next.node(&shift.from_node).is_none() {
            return Err(WorkflowError::UnknownNode(shift.from_node.clone()));
        }
        let mut frontier = vec![shift.from_node.clone()];
        let mut reached = std::collections::BTreeSet::new();
        while let Some(node) = frontier.pop() {
            if !reached.insert(node.clone()) {
                continue;
            }
            for edge in next.edges.iter_mut().filter(|e| e.kind == EdgeKind::Temporal && e.from_node == node) {
                if let Some(MetaValue::Int(anchor)) = edge.metadata.get_mut("anchor") {
                    *anchor += shift.minutes;
                }
                frontier.push(edge.to_node.clone());
            }
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{DependencyEdge, RoleNode};

    #[test]
    fn deviation_classes() {
        let t = DeviationThresholds::default();
        assert_eq!(classify_deviation(100, 95, t), DeviationClass::Normal);
        assert_eq!(classify_deviation(100, 120, t), DeviationClass::Warning);
        assert_eq!(classify_deviation(780, 960, t), DeviationClass::Violation);
    }

    #[test]
    fn impact_examples() {
        assert_eq!(impact(&[]), 0);
        assert_eq!(impact(&[(3, 2), (5, 5)]), 31);
        let affected = [default_severity(ConstraintKind::Safety), default_severity(ConstraintKind::Temporal)];
        assert_eq!(impact(&affected), 37);
    }

    #[test]
    fn cheapest_feasible_candidate() {
        let pick = |items: Vec<(u32, bool)>| {
            generate_solution(items.into_iter().enumerate().map(|(i, (cost, feasible))| Candidate { plan: i, cost, feasible }).collect())
        };
        assert_eq!(pick(vec![(5, true), (3, false), (7, true)]).unwrap().cost, 5);
        assert_eq!(pick(vec![(5, false)]), Err(NoSolution));
        assert_eq!(pick(vec![(4, true), (4, true)]).unwrap().plan, 0);
    }

    fn chain() -> Workflow {
        let mut w = Workflow::new();
        for id in ["a", "b", "c", "d"] {
            w.add_node(RoleNode::new(id, id, ["x"])).unwrap();
        }
        w.add_edge(DependencyEdge::new("ab", "a", "b", EdgeKind::Temporal).with_meta("anchor", 780)).unwrap();
        w.add_edge(DependencyEdge::new("bc", "b", "c", EdgeKind::Temporal).with_meta("anchor", 900)).unwrap();
        w.add_edge(DependencyEdge::new("dc", "d", "c", EdgeKind::Temporal).with_meta("anchor", 600)).unwrap();
        w
    }

    #[test]
    fn identity_update_is_a_no_op() {
        let w = chain();
        assert_eq!(apply_update(&w, &WorkflowUpdate::default()).unwrap(), w);
    }

    #[test]
    fn reassignment_touches_one_node() {
        let w = chain();
        let update = WorkflowUpdate { reassign: [("b".to_string(), "michael".to_string())].into(), shift: None };
        let next = apply_update(&w, &update).unwrap();
        let changed = w.nodes.iter().zip(&next.nodes).filter(|(x, y)| x != y).count();
        assert_eq!(changed, 1);
    }

    #[test]
    fn shift_moves_only_downstream_anchors() {
        let w = chain();
        let update = WorkflowUpdate { shift: Some(AnchorShift { from_node: "a".into(), minutes: 180 }), ..Default::default() };
        let next = apply_update(&w, &update).unwrap();
        let anchor = |w: &Workflow, id: &str| w.edge(id).unwrap().metadata["anchor"].as_int().unwrap();
        assert_eq!(anchor(&next, "ab"), 960);
        assert_eq!(anchor(&next, "bc"), 1080);
        assert_eq!(anchor(&next, "dc"), 600);
    }
}
