use serde::{Deserialize, Serialize};

use super::{classify_deviation, default_severity, impact, DeviationClass, DeviationThresholds, LogEntry};
use crate::clock::{Clock, Minute};
use crate::planner::{plan, PlanError, PlanOutcome, PlanningProblem};
use crate::scenario::ScenarioError;
use crate::workflow::ConstraintKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Disruption {
    FlightDelay { actor: String, new_time: Minute },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisruptionEvent {
    pub detected_at: Minute,
    #[serde(flatten)]
    pub disruption: Disruption,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub at: Minute,
    pub deviation: DeviationClass,
    pub impact: u32,
    pub message: String,
}

/// Which part of the plan has to be redone, and over what window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replan {
    pub affected: Vec<String>,
    pub window: (Minute, Minute),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveOutcome {
    pub alert: Alert,
    /// `None` when the deviation is within the buffer and the plan stands.
    pub replan: Option<Replan>,
    pub baseline: PlanOutcome,
    pub outcome: PlanOutcome,
    pub log: Vec<LogEntry>,
}

/// Plans the original problem, rates the disruption, and re-plans from
/// the detection time with the updated facts.
pub fn handle_disruption(problem: &PlanningProblem, event: &DisruptionEvent) -> Result<ReactiveOutcome, PlanError> {
    let Disruption::FlightDelay { actor, new_time } = &event.disruption;
    let planned = problem
        .scenario
        .flight(actor)
        .ok_or_else(|| PlanError::Scenario(ScenarioError::UnknownActor(actor.clone())))?
        .lands_at;
    if event.detected_at < problem.scenario.start || event.detected_at > problem.scenario.deadline {
        return Err(PlanError::Scenario(ScenarioError::Invalid(format!(
            "disruption detected at {} outside the planning window",
            Clock(event.detected_at)
        ))));
    }

    let baseline = plan(problem)?;
    let deviation = classify_deviation(planned, *new_time, DeviationThresholds::default());

    // Roles held by the delayed person are at risk, and so is dinner.
    let mut affected: Vec<String> = baseline
        .workflow
        .nodes
        .iter()
        .filter(|n| n.assigned_person.as_deref() == Some(actor.as_str()))
        .map(|n| n.id.clone())
        .collect();
    let mut weights: Vec<(u32, u32)> = affected.iter().map(|_| default_severity(ConstraintKind::Safety)).collect();
    affected.push("dinner".into());
    weights.push(default_severity(ConstraintKind::Temporal));
    let severity = if deviation == DeviationClass::Normal { 0 } else { impact(&weights) };

    let alert = Alert {
        at: event.detected_at,
        deviation,
        impact: severity,
        message: format!(
            "{actor}'s flight now lands at {} instead of {} ({:?}, impact {severity})",
            Clock(*new_time),
            Clock(planned),
            deviation
        ),
    };
    let mut log = vec![LogEntry { at: event.detected_at, text: alert.message.clone() }];

    if deviation == DeviationClass::Normal {
        log.push(LogEntry { at: event.detected_at, text: "within buffer, plan unchanged".into() });
        let outcome = baseline.clone();
        return Ok(ReactiveOutcome { alert, replan: None, baseline, outcome, log });
    }

    let replan = Replan { affected, window: (event.detected_at, problem.scenario.deadline) };
    let mut updated = problem.clone();
    updated.scenario.delay_flight(actor, *new_time)?;
    updated.scenario.start = event.detected_at;
    updated.metrics.horizon_start = event.detected_at;
    let outcome = plan(&updated)?;
    let changed: Vec<String> = outcome
        .assignment()
        .iter()
        .filter(|(role, person)| baseline.assignment().get(*role) != Some(person))
        .map(|(role, person)| format!("{role} -> {person}"))
        .collect();
    log.push(LogEntry {
        at: event.detected_at,
        text: if changed.is_empty() {
            "replanned with the same roles".into()
        } else {
            format!("replanned: {}", changed.join(", "))
        },
    });
    Ok(ReactiveOutcome { alert, replan: Some(replan), baseline, outcome, log })
}
