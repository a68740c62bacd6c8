use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::check::{check_schedule, traces};
use super::{Scenario, ScenarioError, Schedule, Task};
use crate::clock::Minute;
use crate::workflow::RuleCode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetrics {
    /// Share of rules R1-R12 with no violation, in percent.
    pub satisfaction_pct: f64,
    /// Minutes between each deadline-bound completion and the deadline:
    /// turkey, side dishes and every travelling actor's final arrival home.
    pub total_slack: Minute,
    /// Unoccupied minutes per actor between their first and last activity,
    /// clipped to the window from the scenario start to the deadline.
    pub idle: BTreeMap<String, Minute>,
    pub makespan: Minute,
}

impl ScheduleMetrics {
    pub fn total_idle(&self) -> Minute {
        self.idle.values().sum()
    }
}

pub fn metrics(scenario: &Scenario, schedule: &Schedule) -> Result<ScheduleMetrics, ScenarioError> {
    let report = check_schedule(scenario, schedule)?;
    let traces = traces(scenario, schedule)?;
    let deadline = scenario.deadline;

    let violated = report.violated_rules();
    let satisfied = RuleCode::ALL.iter().filter(|r| !violated.contains(r)).count();
    let satisfaction_pct = 100.0 * satisfied as f64 / RuleCode::ALL.len() as f64;

    let finish = |task: Task| schedule.entries.iter().filter(|e| e.task == task).map(|e| e.end).max();
    let mut total_slack = 0;
    for end in [finish(Task::Turkey), finish(Task::SideDishes)].into_iter().flatten() {
        total_slack += (deadline - end).max(0);
    }
    for trace in traces.values().filter(|t| t.travels) {
        if let Some(since) = trace.home_since(deadline) {
            total_slack += (deadline - since.max(scenario.start)).max(0);
        }
    }

    let mut idle = BTreeMap::new();
    for actor in &scenario.actors {
        let mine: Vec<_> = schedule
            .entries
            .iter()
            .filter(|e| e.assignees.contains(&actor.id) && !matches!(e.task, Task::Dinner | Task::Wait))
            .collect();
        let (Some(first), Some(last)) = (mine.iter().map(|e| e.start).min(), mine.iter().map(|e| e.end).max()) else {
            idle.insert(actor.id.clone(), 0);
            continue;
        };
        let (lo, hi) = (first.max(scenario.start), last.min(deadline));
        let mut spans: Vec<(Minute, Minute)> = mine
            .iter()
            .filter(|e| e.task.occupies())
            .map(|e| (e.start.max(lo), e.end.min(hi)))
            .filter(|(a, b)| a < b)
            .collect();
        spans.sort_unstable();
        let mut busy = 0;
        let mut cursor = lo;
        for (a, b) in spans {
            let a = a.max(cursor);
            if b > a {
                busy += b - a;
                cursor = b;
            }
        }
        idle.insert(actor.id.clone(), (hi - lo - busy).max(0));
    }

    let makespan = match (
        schedule.entries.iter().map(|e| e.start).min(),
        schedule.entries.iter().map(|e| e.end).max(),
    ) {
        (Some(a), Some(b)) => b - a,
        _ => 0,
    };
    Ok(ScheduleMetrics { satisfaction_pct, total_slack, idle, makespan })
}

/// Sum over tasks of best-known cost divided by achieved cost.
pub fn ipc_score(results: &[(f64, f64)]) -> f64 {
    results
        .iter()
        .map(|&(best, achieved)| if achieved <= 0.0 { if best <= 0.0 { 1.0 } else { 0.0 } } else { best / achieved })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ipc_examples() {
        assert_eq!(ipc_score(&[(60.0, 60.0)]), 1.0);
        assert!((ipc_score(&[(60.0, 66.0), (24.0, 24.0)]) - 1.909_090_9).abs() < 1e-6);
        assert_eq!(ipc_score(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn ipc_shrinks_as_cost_grows(best in 1.0f64..100.0, a in 1.0f64..100.0, extra in 0.0f64..100.0) {
            let achieved = best + a;
            prop_assert!(ipc_score(&[(best, achieved + extra)]) <= ipc_score(&[(best, achieved)]));
        }
    }

    #[test]
    fn empty_scenario_has_vacuous_metrics() {
        let m = metrics(&Scenario::empty(), &Schedule::default()).unwrap();
        assert_eq!(m.satisfaction_pct, 100.0);
        assert_eq!((m.total_slack, m.makespan, m.total_idle()), (0, 0, 0));
    }
}
