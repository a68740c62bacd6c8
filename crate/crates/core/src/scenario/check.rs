// Rule checker.
//
// Each actor's entries are replayed in time order to track where they are.
// Location and travel problems (R6, plus R3 for cooking away from home) are
// found during the replay; the remaining rules work on the resulting home
// intervals or directly on the entries. Findings on the same entry and rule
// are merged into one violation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Entry, Preference, Scenario, ScenarioError, Schedule, Task};
use crate::clock::{Clock, Minute};
use crate::workflow::RuleCode;

pub(crate) const FOREVER: Minute = Minute::MAX / 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleCode,
    pub window: (Minute, Minute),
    pub description: String,
    pub hard: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn hard_count(&self) -> usize {
        self.violations.iter().filter(|v| v.hard).count()
    }

    pub fn soft_count(&self) -> usize {
        self.violations.len() - self.hard_count()
    }

    pub fn is_feasible(&self) -> bool {
        self.hard_count() == 0
    }

    pub fn violated_rules(&self) -> BTreeSet<RuleCode> {
        self.violations.iter().map(|v| v.rule).collect()
    }

    pub fn of_rule(&self, rule: RuleCode) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.rule == rule)
    }

    /// One line per violation, `R6 [15:00-15:15] hard: ...`.
    pub fn render(&self) -> String {
        self.violations
            .iter()
            .map(|v| {
                format!(
                    "{} [{}-{}] {}: {}\n",
                    v.rule,
                    Clock(v.window.0),
                    Clock(v.window.1),
                    if v.hard { "hard" } else { "soft" },
                    v.description
                )
            })
            .collect()
    }
}

/// Where an actor was over the day, as replayed from the schedule.
#[derive(Debug, Clone, Default)]
pub(crate) struct ActorTrace {
    /// Half-open intervals spent at home.
    pub home: Vec<(Minute, Minute)>,
    /// The actor was not at home at the scenario start or drove somewhere.
    pub travels: bool,
}

impl ActorTrace {
    pub fn home_at(&self, t: Minute) -> bool {
        self.home.iter().any(|&(a, b)| a <= t && t < b)
    }

    /// Start of the home interval covering `t`.
    pub fn home_since(&self, t: Minute) -> Option<Minute> {
        self.home.iter().find(|&&(a, b)| a <= t && t < b).map(|&(a, _)| a)
    }
}

#[derive(Default)]
struct Findings {
    entries: BTreeMap<(usize, RuleCode), ((Minute, Minute), Vec<String>)>,
    global: Vec<Violation>,
}

impl Findings {
    fn on(&mut self, idx: usize, entry: &Entry, rule: RuleCode, text: String) {
        let slot = self.entries.entry((idx, rule)).or_insert(((entry.start, entry.end), Vec::new()));
        if !slot.1.contains(&text) {
            slot.1.push(text);
        }
    }

    fn global(&mut self, rule: RuleCode, window: (Minute, Minute), text: String) {
        self.global.push(Violation { rule, window, description: text, hard: !rule.is_soft() });
    }

    fn into_report(self) -> ViolationReport {
        let mut violations: Vec<Violation> = self
            .entries
            .into_iter()
            .map(|((_, rule), (window, texts))| Violation {
                rule,
                window,
                description: texts.join("; "),
                hard: !rule.is_soft(),
            })
            .chain(self.global)
            .collect();
        violations.sort_by(|a, b| {
            (a.window.0, a.rule, a.window.1, &a.description).cmp(&(b.window.0, b.rule, b.window.1, &b.description))
        });
        ViolationReport { violations }
    }
}

fn validate_entries(scenario: &Scenario, schedule: &Schedule) -> Result<(), ScenarioError> {
    for e in &schedule.entries {
        if e.end < e.start {
            return Err(ScenarioError::InvalidEntry(format!("{} ends before it starts", e.task)));
        }
        if e.assignees.is_empty() {
            return Err(ScenarioError::InvalidEntry(format!("{} at {} has no assignees", e.task, Clock(e.start))));
        }
        for a in &e.assignees {
            if scenario.actor(a).is_none() {
                return Err(ScenarioError::UnknownActor(a.clone()));
            }
        }
        let places: Vec<&String> = match &e.task {
            Task::Drive { from, to } => vec![from, to],
            Task::Arrive(at) => vec![at],
            _ => Vec::new(),
        };
        if let Some(p) = places.into_iter().find(|p| !scenario.locations.contains(p)) {
            return Err(ScenarioError::UnknownLocation(p.clone()));
        }
    }
    Ok(())
}

/// Replays every actor; records location findings and returns the traces.
fn replay(scenario: &Scenario, schedule: &Schedule, findings: &mut Findings) -> BTreeMap<String, ActorTrace> {
    let mut order: Vec<usize> = (0..schedule.entries.len()).collect();
    order.sort_by_key(|&i| schedule.entries[i].order_key());
    let home = scenario.home.as_str();

    let mut traces = BTreeMap::new();
    for actor in &scenario.actors {
        let mine: Vec<usize> = order.iter().copied().filter(|&i| schedule.entries[i].assignees.contains(&actor.id)).collect();
        let first_drive_from = mine.iter().find_map(|&i| match &schedule.entries[i].task {
            Task::Drive { from, .. } => Some(from.as_str()),
            Task::Land | Task::Arrive(_) => None,
            _ => Some(""),
        });
        let (mut location, present_from) = match &actor.en_route {
            Some(route) if first_drive_from == Some(route.from.as_str()) => (route.from.clone(), route.depart),
            _ => scenario.presence(actor),
        };
        let mut trace = ActorTrace { home: Vec::new(), travels: location != home || present_from > scenario.start };
        let mut home_open = (location == home).then_some(present_from);
        let mut arrived_at = present_from;

        for idx in mine {
            let e = &schedule.entries[idx];
            let name = &actor.id;
            match &e.task {
                Task::Land => {
                    match scenario.flight(name) {
                        Some(f) if f.lands_at != e.start => findings.on(
                            idx,
                            e,
                            RuleCode::R6,
                            format!("{name} lands at {}, not {}", Clock(f.lands_at), Clock(e.start)),
                        ),
                        None => findings.on(idx, e, RuleCode::R6, format!("{name} has no flight")),
                        _ => {}
                    }
                    continue;
                }
                Task::Arrive(at) => {
                    if e.start < present_from || *at != location {
                        findings.on(
                            idx,
                            e,
                            RuleCode::R6,
                            format!("{name} cannot arrive at {at} at {}", Clock(e.start)),
                        );
                    }
                    continue;
                }
                _ => {}
            }
            if e.start < present_from {
                findings.on(idx, e, RuleCode::R6, format!("{name} is not available until {}", Clock(present_from)));
            } else if e.start < arrived_at {
                findings.on(idx, e, RuleCode::R6, format!("{name} is still travelling until {}", Clock(arrived_at)));
            }
            if let Some(required) = e.task.location(scenario) {
                if required != location {
                    let rule = if e.task == Task::SideDishes { RuleCode::R3 } else { RuleCode::R6 };
                    findings.on(
                        idx,
                        e,
                        rule,
                        format!("{name} is at {location} but {} needs {required}", e.task),
                    );
                    if let Some(since) = home_open.take() {
                        trace.home.push((since, e.start));
                    }
                    location = required.to_string();
                    if location == home {
                        home_open = Some(e.start);
                    }
                }
            }
            if let Task::Drive { from, to } = &e.task {
                trace.travels = true;
                if e.assignees.first() == Some(name) {
                    match scenario.travel(from, to) {
                        None => findings.on(idx, e, RuleCode::R6, format!("no route from {from} to {to}")),
                        Some(need) if e.end - e.start < need => findings.on(
                            idx,
                            e,
                            RuleCode::R6,
                            format!("{from} to {to} takes {need} min, scheduled {} min", e.end - e.start),
                        ),
                        _ => {}
                    }
                }
                if let Some(since) = home_open.take() {
                    trace.home.push((since, e.start));
                }
                location = to.clone();
                arrived_at = e.end;
                if location == home {
                    home_open = Some(e.end);
                }
            }
        }
        if let Some(since) = home_open {
            trace.home.push((since, FOREVER));
        }
        trace.home.retain(|(a, b)| a < b);
        traces.insert(actor.id.clone(), trace);
    }
    traces
}

pub(crate) fn traces(scenario: &Scenario, schedule: &Schedule) -> Result<BTreeMap<String, ActorTrace>, ScenarioError> {
    validate_entries(scenario, schedule)?;
    Ok(replay(scenario, schedule, &mut Findings::default()))
}

/// Checks a schedule against rules R1-R12 for the given scenario.
pub fn check_schedule(scenario: &Scenario, schedule: &Schedule) -> Result<ViolationReport, ScenarioError> {
    validate_entries(scenario, schedule)?;
    let mut f = Findings::default();
    let traces = replay(scenario, schedule, &mut f);
    let entries = &schedule.entries;
    let indexed = || entries.iter().enumerate();
    let deadline = scenario.deadline;

    // R1: turkey in the oven for its full time, out by the deadline.
    if let Some(need) = scenario.turkey_minutes {
        let turkeys: Vec<(usize, &Entry)> = indexed().filter(|(_, e)| e.task == Task::Turkey).collect();
        if turkeys.is_empty() {
            f.global(RuleCode::R1, (deadline - need, deadline), "the turkey is never cooked".into());
        }
        for (k, (idx, e)) in turkeys.iter().enumerate() {
            if k > 0 {
                f.on(*idx, e, RuleCode::R1, "turkey scheduled more than once".into());
            }
            if e.end - e.start < need {
                f.on(*idx, e, RuleCode::R1, format!("turkey needs {need} min, scheduled {}", e.end - e.start));
            }
            if e.end > deadline {
                f.on(*idx, e, RuleCode::R1, format!("turkey is ready at {}, after dinner", Clock(e.end)));
            }
        }
    }

    // R2: somebody at home for every minute the turkey is in.
    for e in entries.iter().filter(|e| e.task == Task::Turkey) {
        let mut covered: Vec<(Minute, Minute)> = traces.values().flat_map(|t| t.home.iter().copied()).collect();
        covered.sort_unstable();
        let mut cursor = e.start;
        for (a, b) in covered {
            if cursor >= e.end {
                break;
            }
            if a > cursor {
                let gap_end = a.min(e.end);
                f.global(
                    RuleCode::R2,
                    (cursor, gap_end),
                    format!("nobody is home with the turkey from {} to {}", Clock(cursor), Clock(gap_end)),
                );
            }
            cursor = cursor.max(b);
        }
        if cursor < e.end {
            f.global(
                RuleCode::R2,
                (cursor, e.end),
                format!("nobody is home with the turkey from {} to {}", Clock(cursor), Clock(e.end)),
            );
        }
    }

    // R3: side dishes prepared for their full time before dinner.
    if let Some(need) = scenario.sides_minutes {
        let sides: Vec<(usize, &Entry)> = indexed().filter(|(_, e)| e.task == Task::SideDishes).collect();
        if !sides.iter().any(|(_, e)| e.end - e.start >= need) {
            f.global(RuleCode::R3, (deadline - need, deadline), format!("side dishes never get {need} min"));
        }
        for (idx, e) in sides.iter().filter(|(_, e)| e.end > deadline) {
            f.on(*idx, e, RuleCode::R3, format!("side dishes finish at {}, after dinner", Clock(e.end)));
        }
    }

    // R4: non-driving fliers are collected once their bags are out.
    for flight in &scenario.flights {
        let Some(actor) = scenario.actor(&flight.actor).filter(|a| !a.can_drive) else {
            continue;
        };
        let ready = flight.lands_at + scenario.luggage_minutes;
        let ride = indexed().find(|(_, e)| {
            matches!(&e.task, Task::Drive { from, .. } if *from == scenario.airport) && e.assignees[1..].contains(&actor.id)
        });
        match ride {
            None => f.global(RuleCode::R4, (ready, deadline), format!("{} is never picked up from the airport", actor.id)),
            Some((idx, e)) if e.start < ready => f.on(
                idx,
                e,
                RuleCode::R4,
                format!("{} picked up at {} but is ready at {}", actor.id, Clock(e.start), Clock(ready)),
            ),
            _ => {}
        }
    }

    // R5: renters get their car after their bags and before driving.
    for actor in scenario.actors.iter().filter(|a| a.rents_car) {
        let ready = scenario.ready_after_landing(&actor.id).unwrap_or(scenario.start);
        let rental = indexed().find(|(_, e)| e.task == Task::RentCar && e.assignees.contains(&actor.id));
        let mut car_from = None;
        if let Some((idx, e)) = rental {
            if e.start < ready {
                f.on(idx, e, RuleCode::R5, format!("rental starts at {} before {}", Clock(e.start), Clock(ready)));
            }
            if e.end - e.start < scenario.rental_minutes {
                f.on(idx, e, RuleCode::R5, format!("rental needs {} min", scenario.rental_minutes));
            }
            car_from = Some(e.end);
        }
        for (idx, e) in indexed().filter(|(_, e)| matches!(e.task, Task::Drive { .. }) && e.assignees[0] == actor.id) {
            match car_from {
                None => f.on(idx, e, RuleCode::R5, format!("{} drives without a rental car", actor.id)),
                Some(t) if e.start < t => {
                    f.on(idx, e, RuleCode::R5, format!("{} drives before the rental is ready at {}", actor.id, Clock(t)))
                }
                _ => {}
            }
        }
    }

    // R7: dinner at the deadline with everyone home.
    for (idx, e) in indexed().filter(|(_, e)| e.task == Task::Dinner && e.start != deadline) {
        f.on(idx, e, RuleCode::R7, format!("dinner is at {}, not {}", Clock(e.start), Clock(deadline)));
    }
    let missing: Vec<&str> = scenario
        .actors
        .iter()
        .filter(|a| !traces.get(&a.id).is_some_and(|t| t.home_at(deadline)))
        .map(|a| a.id.as_str())
        .collect();
    if !missing.is_empty() {
        f.global(RuleCode::R7, (deadline, deadline), format!("not home for dinner: {}", missing.join(", ")));
    }

    // R8: only drivers drive.
    for (idx, e) in indexed() {
        if let Task::Drive { .. } = e.task {
            if scenario.actor(&e.assignees[0]).is_some_and(|a| !a.can_drive) {
                f.on(idx, e, RuleCode::R8, format!("{} does not drive", e.assignees[0]));
            }
        }
    }

    // R9: nobody does two occupying things at once.
    for actor in &scenario.actors {
        let mut busy: Vec<(usize, &Entry)> =
            indexed().filter(|(_, e)| e.task.occupies() && e.assignees.contains(&actor.id) && e.end > e.start).collect();
        busy.sort_by_key(|(_, e)| (e.start, e.end));
        let mut until = Minute::MIN;
        for (idx, e) in busy {
            if e.start < until {
                f.on(idx, e, RuleCode::R9, format!("{} is already busy until {}", actor.id, Clock(until)));
            }
            until = until.max(e.end);
        }
    }

    // R10 and R11: soft household preferences.
    for pref in &scenario.preferences {
        match pref {
            Preference::PreferredDriver { passenger, driver, .. } => {
                for (idx, e) in indexed().filter(|(_, e)| {
                    matches!(e.task, Task::Drive { .. }) && e.assignees[1..].contains(passenger) && e.assignees[0] != *driver
                }) {
                    f.on(idx, e, RuleCode::R10, format!("{passenger} would rather ride with {driver}"));
                }
            }
            Preference::SeparateCooking { a, b, .. } => {
                let spans = |who: &String| -> Vec<(Minute, Minute)> {
                    entries
                        .iter()
                        .filter(|e| e.assignees.contains(who))
                        .filter_map(|e| match e.task {
                            Task::Turkey => Some((e.start, e.start + 1)),
                            Task::SideDishes => Some((e.start, e.end)),
                            _ => None,
                        })
                        .collect()
                };
                for (s1, e1) in spans(a) {
                    for (s2, e2) in spans(b) {
                        if s1 < e2 && s2 < e1 {
                            f.global(
                                RuleCode::R11,
                                (s1.max(s2), e1.min(e2)),
                                format!("{a} and {b} cook at the same time"),
                            );
                        }
                    }
                }
            }
        }
    }

    // R12: nothing happens before the plan can take effect.
    for (idx, e) in indexed().filter(|(_, e)| !matches!(e.task, Task::Land | Task::Arrive(_)) && e.start < scenario.start) {
        f.on(idx, e, RuleCode::R12, format!("starts before {}", Clock(scenario.start)));
    }

    Ok(f.into_report())
}
