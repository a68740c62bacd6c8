use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Minute;
use crate::scenario::{Scenario, Schedule, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StnError {
    #[error("unknown time point `{0}`")]
    UnknownPoint(String),
    #[error("duplicate time point `{0}`")]
    DuplicatePoint(String),
}

/// A simple temporal network: named time points and difference
/// constraints `t[to] - t[from] <= bound`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stn {
    pub points: Vec<String>,
    pub constraints: Vec<(usize, usize, i64)>,
}

pub const ORIGIN: &str = "origin";

impl Stn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_point(&mut self, name: &str) -> Result<usize, StnError> {
        if self.points.iter().any(|p| p == name) {
            return Err(StnError::DuplicatePoint(name.to_string()));
        }
        self.points.push(name.to_string());
        Ok(self.points.len() - 1)
    }

    pub fn index(&self, name: &str) -> Result<usize, StnError> {
        self.points.iter().position(|p| p == name).ok_or_else(|| StnError::UnknownPoint(name.to_string()))
    }

    /// `t[to] - t[from] <= bound`.
    pub fn add_constraint(&mut self, from: usize, to: usize, bound: i64) {
        self.constraints.push((from, to, bound));
    }

    /// `lo <= t[to] - t[from] <= hi`; either side may be open.
    pub fn add_interval(&mut self, from: usize, to: usize, lo: Option<i64>, hi: Option<i64>) {
        if let Some(hi) = hi {
            self.add_constraint(from, to, hi);
        }
        if let Some(lo) = lo {
            self.add_constraint(to, from, -lo);
        }
    }

    /// True when the distance graph has no negative cycle.
    pub fn is_consistent(&self) -> bool {
        self.shortest_paths().is_some()
    }

    /// All-pairs shortest paths (Floyd-Warshall), `None` on a negative cycle.
    pub fn shortest_paths(&self) -> Option<Vec<Vec<Option<i64>>>> {
        let n = self.points.len();
        let mut d = vec![vec![None; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for &(a, b, w) in &self.constraints {
            if d[a][b].is_none_or(|cur| w < cur) {
                d[a][b] = Some(w);
            }
        }
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = d[i][k] else { continue };
                for j in 0..n {
                    if let Some(kj) = d[k][j] {
                        if d[i][j].is_none_or(|cur| ik + kj < cur) {
                            d[i][j] = Some(ik + kj);
                        }
                    }
                }
            }
        }
        (0..n).all(|i| d[i][i] == Some(0)).then_some(d)
    }

    /// The temporal skeleton of a schedule: minimum durations, release
    /// times, each actor's order of occupying entries, and the deadline.
    /// Consistent when that ordering can be met at all, whatever the
    /// exact minutes written in the schedule.
    pub fn from_schedule(scenario: &Scenario, schedule: &Schedule) -> Stn {
        let mut stn = Stn::new();
        let origin = stn.add_point(ORIGIN).expect("fresh network");
        let mut last_end: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, entry) in schedule.entries.iter().enumerate() {
            let s = stn.add_point(&format!("{i}:{}:start", entry.task)).expect("unique");
            let e = stn.add_point(&format!("{i}:{}:end", entry.task)).expect("unique");
            stn.add_interval(s, e, Some(min_duration(scenario, &entry.task)), None);
            if let Some(release) = release(scenario, entry) {
                stn.add_interval(origin, s, Some(release), None);
            }
            if !entry.task.is_marker() {
                stn.add_interval(origin, e, None, Some(scenario.deadline));
            }
            if entry.task.occupies() {
                for who in &entry.assignees {
                    if let Some(prev) = last_end.insert(who, e) {
                        stn.add_interval(prev, s, Some(0), None);
                    }
                }
            }
        }
        stn
    }
}

fn min_duration(scenario: &Scenario, task: &Task) -> Minute {
    match task {
        Task::Drive { from, to } => scenario.travel(from, to).unwrap_or(0),
        Task::Turkey => scenario.turkey_minutes.unwrap_or(0),
        Task::SideDishes => scenario.sides_minutes.unwrap_or(0),
        Task::Luggage => scenario.luggage_minutes,
        Task::RentCar => scenario.rental_minutes,
        _ => 0,
    }
}

fn release(scenario: &Scenario, entry: &crate::scenario::Entry) -> Option<Minute> {
    let fliers = entry.assignees.iter().filter_map(|a| scenario.flight(a));
    match &entry.task {
        Task::Land => fliers.map(|f| f.lands_at).max(),
        Task::Drive { from, .. } if *from == scenario.airport => {
            entry.assignees.iter().filter_map(|a| scenario.ready_after_landing(a)).max()
        }
        _ => Some(scenario.start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_thanksgiving, greedy_schedule, Entry};
    use proptest::prelude::*;

    /// Bellman-Ford from a virtual source linked to every point.
    fn bellman_ford_consistent(n: usize, edges: &[(usize, usize, i64)]) -> bool {
        let mut dist = vec![0i64; n];
        for _ in 0..n {
            let mut changed = false;
            for &(a, b, w) in edges {
                if dist[a] + w < dist[b] {
                    dist[b] = dist[a] + w;
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
        edges.iter().all(|&(a, b, w)| dist[a] + w >= dist[b])
    }

    #[test]
    fn simple_networks() {
        let mut stn = Stn::new();
        let a = stn.add_point("a").unwrap();
        let b = stn.add_point("b").unwrap();
        stn.add_interval(a, b, Some(10), Some(20));
        assert!(stn.is_consistent());
        stn.add_interval(a, b, Some(25), None);
        assert!(!stn.is_consistent());
        assert_eq!(stn.add_point("a"), Err(StnError::DuplicatePoint("a".into())));
        assert!(Stn::new().is_consistent());
    }

    #[test]
    fn greedy_plan_skeleton_is_consistent() {
        let scenario = builtin_thanksgiving(false, false);
        let mapping = [("cook", "sarah"), ("supervisor", "sarah"), ("driver1", "james"), ("driver2", "michael")]
            .into_iter()
            .map(|(r, p)| (r.to_string(), p.to_string()))
            .collect();
        let schedule = greedy_schedule(&scenario, &mapping).unwrap();
        assert!(Stn::from_schedule(&scenario, &schedule).is_consistent());
    }

    #[test]
    fn chain_past_the_deadline_is_inconsistent() {
        let scenario = builtin_thanksgiving(false, false);
        let mut schedule = Schedule::new(vec![
            Entry::new(870, 930, "drive:airport:home".parse().unwrap(), &["james", "emily"]),
            Entry::new(930, 1230, "drive:home:ny".parse().unwrap(), &["james"]),
        ]);
        assert!(!Stn::from_schedule(&scenario, &schedule).is_consistent());
        schedule.entries.pop();
        assert!(Stn::from_schedule(&scenario, &schedule).is_consistent());
    }

    proptest! {
        #[test]
        fn agrees_with_bellman_ford(
            n in 1usize..7,
            raw in proptest::collection::vec((0usize..7, 0usize..7, -20i64..40), 0..16),
        ) {
            let mut stn = Stn::new();
            for i in 0..n {
                stn.add_point(&i.to_string()).unwrap();
            }
            for (a, b, w) in raw {
                stn.add_constraint(a % n, b % n, w);
            }
            prop_assert_eq!(stn.is_consistent(), bellman_ford_consistent(n, &stn.constraints));
        }
    }
}
