use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, Minute};
use crate::scenario::{Preference, Scenario};

pub const OVEN_WATCH: &str = "oven_watch";
const COOKING: [&str; 2] = ["turkey", "side_dishes"];
const SHIFT_STEP: Minute = 15;
const RELAX_PENALTY: Minute = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activity {
    Idle,
    Travelling { from: String, to: String, until: Minute },
    Task { name: String, until: Minute },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub location: String,
    #[serde(default)]
    pub resources_held: BTreeSet<String>,
    pub busy_until: Minute,
    pub activity: Activity,
}

impl ActorState {
    /// First minute from which the actor is at home, if they are headed there.
    fn home_from(&self, home: &str) -> Option<Minute> {
        if self.location != home {
            return None;
        }
        Some(match &self.activity {
            Activity::Travelling { until, .. } => *until,
            _ => Minute::MIN,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub at: Minute,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub clock: Minute,
    pub actors: BTreeMap<String, ActorState>,
    #[serde(default)]
    pub log: Vec<LogEntry>,
}

impl WorldState {
    /// Everyone where the scenario first puts them, unavailable until then.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let actors = scenario
            .actors
            .iter()
            .map(|a| {
                let (location, from) = scenario.presence(a);
                let activity = match &a.en_route {
                    Some(trip) if from > scenario.start => {
                        Activity::Travelling { from: trip.from.clone(), to: location.clone(), until: from }
                    }
                    _ => Activity::Idle,
                };
                let state = ActorState {
                    role: None,
                    location,
                    resources_held: BTreeSet::new(),
                    busy_until: from.max(scenario.start),
                    activity,
                };
                (a.id.clone(), state)
            })
            .collect();
        WorldState { clock: scenario.start, actors, log: Vec::new() }
    }

    pub fn holder(&self, resource: &str) -> Option<&str> {
        self.actors.iter().find(|(_, s)| s.resources_held.contains(resource)).map(|(id, _)| id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Travel { to: String },
    /// Drive `passenger` from the shared current location to `to`.
    Pickup { passenger: String, to: String },
    StartTask { task: String },
    EndTask { task: String },
    Handoff { resource: String, to_actor: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionProposal {
    pub actor: String,
    #[serde(flatten)]
    pub action: Action,
    pub start: Minute,
    pub end: Minute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SoftKind {
    PreferredDriver { passenger: String, driver: String },
    SeparateCooking { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftRule {
    pub id: String,
    pub priority: u8,
    #[serde(flatten)]
    pub kind: SoftKind,
}

/// What transitions are checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeRules {
    pub scenario: Scenario,
    /// While the turkey is in the oven somebody must stay home.
    pub supervision: Option<(Minute, Minute)>,
    pub soft: Vec<SoftRule>,
    pub relaxed: BTreeSet<String>,
}

impl RuntimeRules {
    pub fn new(scenario: &Scenario) -> Self {
        let mut soft: Vec<SoftRule> = scenario
            .preferences
            .iter()
            .map(|p| match p {
                Preference::PreferredDriver { passenger, driver, priority } => SoftRule {
                    id: format!("prefer-{driver}-drives-{passenger}"),
                    priority: *priority,
                    kind: SoftKind::PreferredDriver { passenger: passenger.clone(), driver: driver.clone() },
                },
                Preference::SeparateCooking { a, b, priority } => SoftRule {
                    id: format!("separate-cooking-{a}-{b}"),
                    priority: *priority,
                    kind: SoftKind::SeparateCooking { a: a.clone(), b: b.clone() },
                },
            })
            .collect();
        soft.sort_by(|x, y| (x.priority, &x.id).cmp(&(y.priority, &y.id)));
        RuntimeRules { scenario: scenario.clone(), supervision: None, soft, relaxed: BTreeSet::new() }
    }

    pub fn supervising(mut self, start: Minute, end: Minute) -> Self {
        self.supervision = Some((start, end));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Temporal,
    Spatial,
    Role,
    Resource,
    Safety,
    Constraint,
    Preference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<Check>,
    pub reason: String,
    /// Soft rule that blocked the transition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionOutcome {
    pub accepted: bool,
    /// The successor state, or an untouched copy of the input on rejection.
    pub state: WorldState,
    pub report: TransitionReport,
}

struct Rejection {
    check: Check,
    reason: String,
    soft_rule: Option<String>,
}

fn reject(check: Check, reason: impl Into<String>) -> Rejection {
    Rejection { check, reason: reason.into(), soft_rule: None }
}

/// Checks a proposal and applies it atomically.
pub fn validate_transition(state: &WorldState, proposal: &TransitionProposal, rules: &RuntimeRules) -> TransitionOutcome {
    let attempt = pre_checks(state, proposal, rules).and_then(|()| {
        let next = apply(state, proposal);
        post_checks(&next, proposal, rules).map(|()| next)
    });
    match attempt {
        Ok(next) => TransitionOutcome {
            accepted: true,
            state: next,
            report: TransitionReport { failed: None, reason: "accepted".into(), soft_rule: None },
        },
        Err(r) => TransitionOutcome {
            accepted: false,
            state: state.clone(),
            report: TransitionReport { failed: Some(r.check), reason: r.reason, soft_rule: r.soft_rule },
        },
    }
}

fn pre_checks(state: &WorldState, p: &TransitionProposal, rules: &RuntimeRules) -> Result<(), Rejection> {
    let scenario = &rules.scenario;
    let Some(me) = state.actors.get(&p.actor) else {
        return Err(reject(Check::Role, format!("unknown actor {}", p.actor)));
    };
    let profile = scenario.actor(&p.actor);
    let route = |to: &str| scenario.travel(&me.location, to);

    // temporal
    if p.end < p.start {
        return Err(reject(Check::Temporal, "ends before it starts"));
    }
    if p.start < state.clock {
        return Err(reject(Check::Temporal, format!("starts before the current time {}", Clock(state.clock))));
    }
    if p.start < me.busy_until {
        return Err(reject(Check::Temporal, format!("{} is busy until {}", p.actor, Clock(me.busy_until))));
    }
    if p.end > scenario.deadline {
        return Err(reject(Check::Temporal, "ends after the deadline"));
    }
    if let Action::Travel { to } | Action::Pickup { to, .. } = &p.action {
        if let Some(needed) = route(to) {
            if p.end - p.start < needed {
                return Err(reject(Check::Temporal, format!("travel takes {needed} minutes")));
            }
        }
    }
    if let Action::Pickup { passenger, .. } = &p.action {
        let ready = scenario
            .ready_after_landing(passenger)
            .max(state.actors.get(passenger).map(|s| s.busy_until))
            .unwrap_or(Minute::MIN);
        if p.start < ready {
            return Err(reject(Check::Temporal, format!("{passenger} is not ready until {}", Clock(ready))));
        }
    }

    // spatial
    match &p.action {
        Action::Travel { to } | Action::Pickup { to, .. } => {
            if !scenario.locations.contains(to) || route(to).is_none() {
                return Err(reject(Check::Spatial, format!("no route from {} to {to}", me.location)));
            }
        }
        Action::StartTask { .. } if me.location != scenario.home => {
            return Err(reject(Check::Spatial, format!("{} is not at {}", p.actor, scenario.home)));
        }
        _ => {}
    }
    if let Action::Pickup { passenger, .. } = &p.action {
        match state.actors.get(passenger) {
            Some(other) if other.location == me.location => {}
            Some(_) => return Err(reject(Check::Spatial, format!("{passenger} is not at {}", me.location))),
            None => return Err(reject(Check::Role, format!("unknown passenger {passenger}"))),
        }
    }

    // role
    match &p.action {
        Action::Travel { .. } | Action::Pickup { .. } if !profile.is_some_and(|a| a.can_drive) => {
            return Err(reject(Check::Role, format!("{} cannot drive", p.actor)));
        }
        Action::Pickup { passenger, .. } if passenger == &p.actor => {
            return Err(reject(Check::Role, "cannot pick oneself up"));
        }
        Action::StartTask { task } if COOKING.contains(&task.as_str()) && !profile.is_some_and(|a| a.can_cook) => {
            return Err(reject(Check::Role, format!("{} cannot cook", p.actor)));
        }
        _ => {}
    }

    // resource
    match &p.action {
        Action::StartTask { task } => {
            if let Some(holder) = state.holder(task) {
                return Err(reject(Check::Resource, format!("{task} is held by {holder}")));
            }
        }
        Action::EndTask { task } if !me.resources_held.contains(task) => {
            return Err(reject(Check::Resource, format!("{} does not hold {task}", p.actor)));
        }
        Action::Handoff { resource, to_actor } => {
            if !me.resources_held.contains(resource) {
                return Err(reject(Check::Resource, format!("{} does not hold {resource}", p.actor)));
            }
            if !state.actors.contains_key(to_actor) || to_actor == &p.actor {
                return Err(reject(Check::Resource, format!("cannot hand {resource} to {to_actor}")));
            }
        }
        _ => {}
    }
    Ok(())
}

fn apply(state: &WorldState, p: &TransitionProposal) -> WorldState {
    let mut next = state.clone();
    let from = next.actors[&p.actor].location.clone();
    let travelling = |to: &str| Activity::Travelling { from: from.clone(), to: to.to_string(), until: p.end };
    let text = match &p.action {
        Action::Travel { to } => {
            let me = next.actors.get_mut(&p.actor).expect("checked");
            me.location = to.clone();
            me.busy_until = p.end;
            me.activity = travelling(to);
            format!("{} travels {from} -> {to}", p.actor)
        }
        Action::Pickup { passenger, to } => {
            for id in [&p.actor, passenger] {
                let s = next.actors.get_mut(id).expect("checked");
                s.location = to.clone();
                s.busy_until = p.end;
                s.activity = travelling(to);
            }
            format!("{} drives {passenger} {from} -> {to}", p.actor)
        }
        Action::StartTask { task } => {
            let me = next.actors.get_mut(&p.actor).expect("checked");
            me.resources_held.insert(task.clone());
            me.busy_until = p.end;
            me.activity = Activity::Task { name: task.clone(), until: p.end };
            format!("{} starts {task}", p.actor)
        }
        Action::EndTask { task } => {
            let me = next.actors.get_mut(&p.actor).expect("checked");
            me.resources_held.remove(task);
            me.busy_until = me.busy_until.max(p.end);
            me.activity = Activity::Idle;
            format!("{} ends {task}", p.actor)
        }
        Action::Handoff { resource, to_actor } => {
            let me = next.actors.get_mut(&p.actor).expect("checked");
            me.resources_held.remove(resource);
            me.busy_until = me.busy_until.max(p.end);
            next.actors.get_mut(to_actor).expect("checked").resources_held.insert(resource.clone());
            format!("{} hands {resource} to {to_actor}", p.actor)
        }
    };
    next.clock = next.clock.max(p.start);
    next.log.push(LogEntry { at: p.start, text });
    next
}

fn post_checks(next: &WorldState, p: &TransitionProposal, rules: &RuntimeRules) -> Result<(), Rejection> {
    let scenario = &rules.scenario;
    let home = scenario.home.as_str();

    // safety
    if let Some((w0, w1)) = rules.supervision {
        let moving: Vec<&str> = match &p.action {
            Action::Travel { .. } => vec![&p.actor],
            Action::Pickup { passenger, .. } => vec![&p.actor, passenger],
            _ => Vec::new(),
        };
        let (a, b) = (p.start.max(w0), p.end.min(w1));
        if !moving.is_empty() && a < b {
            let covered = next
                .actors
                .iter()
                .filter(|(id, _)| !moving.contains(&id.as_str()))
                .any(|(_, s)| s.home_from(home).is_some_and(|t| t <= a));
            if !covered {
                return Err(reject(Check::Safety, format!("nobody stays home with the oven at {}", Clock(a))));
            }
        }
        if let Some(holder) = next.holder(OVEN_WATCH) {
            let from = p.start.max(w0);
            let ok = next.actors[holder].home_from(home).is_some_and(|t| t <= from);
            if from < w1 && !ok {
                return Err(reject(Check::Safety, format!("{holder} holds {OVEN_WATCH} away from {home}")));
            }
        }
    }

    // hard constraints
    for id in [Some(&p.actor), match &p.action {
        Action::Pickup { passenger, .. } => Some(passenger),
        _ => None,
    }]
    .into_iter()
    .flatten()
    {
        let s = &next.actors[id];
        let back = scenario.travel(&s.location, home).map(|t| p.end.max(s.busy_until) + t);
        if back.is_none_or(|t| t > scenario.deadline) {
            return Err(reject(Check::Constraint, format!("{id} cannot be home by {}", Clock(scenario.deadline))));
        }
    }

    // soft preferences still in force
    for rule in rules.soft.iter().filter(|r| !rules.relaxed.contains(&r.id)) {
        let broken = match (&rule.kind, &p.action) {
            (SoftKind::PreferredDriver { passenger, driver }, Action::Pickup { passenger: who, .. }) => {
                who == passenger && &p.actor != driver
            }
            (SoftKind::SeparateCooking { a, b }, Action::StartTask { task }) if COOKING.contains(&task.as_str()) => {
                let other = if &p.actor == a { Some(b) } else if &p.actor == b { Some(a) } else { None };
                other.and_then(|o| next.actors.get(o)).is_some_and(|o| COOKING.iter().any(|c| o.resources_held.contains(*c)))
            }
            _ => false,
        };
        if broken {
            return Err(Rejection {
                check: Check::Preference,
                reason: format!("breaks preference {}", rule.id),
                soft_rule: Some(rule.id.clone()),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Shift,
    Substitute,
    Relax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub strategy: Strategy,
    pub proposal: TransitionProposal,
    #[serde(default)]
    pub relaxed: Vec<String>,
    /// Added delay plus a fixed penalty per relaxed soft rule.
    pub cost: Minute,
}

/// Feasible alternatives to a rejected proposal, cheapest first.
pub fn recover(state: &WorldState, proposal: &TransitionProposal, rules: &RuntimeRules) -> Vec<Alternative> {
    let mut found = Vec::new();

    let mut delay = SHIFT_STEP;
    while proposal.end + delay <= rules.scenario.deadline {
        let shifted = TransitionProposal { start: proposal.start + delay, end: proposal.end + delay, ..proposal.clone() };
        if validate_transition(state, &shifted, rules).accepted {
            found.push(Alternative { strategy: Strategy::Shift, proposal: shifted, relaxed: Vec::new(), cost: delay });
            break;
        }
        delay += SHIFT_STEP;
    }

    let origin = state.actors.get(&proposal.actor).map(|s| s.location.as_str());
    for (other, other_state) in state.actors.iter().filter(|(id, _)| **id != proposal.actor) {
        if matches!(&proposal.action, Action::Pickup { passenger, .. } if passenger == other) {
            continue;
        }
        if matches!(&proposal.action, Action::Travel { .. }) && Some(other_state.location.as_str()) != origin {
            continue;
        }
        let swapped = TransitionProposal { actor: other.clone(), ..proposal.clone() };
        if validate_transition(state, &swapped, rules).accepted {
            found.push(Alternative { strategy: Strategy::Substitute, proposal: swapped, relaxed: Vec::new(), cost: 0 });
        }
    }

    // Soft rules are checked lowest priority first, so this relaxes the
    // blocking rules in ascending priority.
    let mut loosened = rules.clone();
    let mut relaxed = Vec::new();
    loop {
        let out = validate_transition(state, proposal, &loosened);
        if out.accepted {
            if !relaxed.is_empty() {
                let cost = RELAX_PENALTY * relaxed.len() as Minute;
                found.push(Alternative { strategy: Strategy::Relax, proposal: proposal.clone(), relaxed, cost });
            }
            break;
        }
        match out.report.soft_rule {
            Some(id) if loosened.relaxed.insert(id.clone()) => relaxed.push(id),
            _ => break,
        }
    }

    found.sort_by_key(|a| a.cost);
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::hm;
    use crate::scenario::builtin_thanksgiving;

    fn travel(actor: &str, to: &str, start: Minute, end: Minute) -> TransitionProposal {
        TransitionProposal { actor: actor.into(), action: Action::Travel { to: to.into() }, start, end }
    }

    fn pickup(actor: &str, passenger: &str, to: &str, start: Minute, end: Minute) -> TransitionProposal {
        TransitionProposal {
            actor: actor.into(),
            action: Action::Pickup { passenger: passenger.into(), to: to.into() },
            start,
            end,
        }
    }

    fn place(state: &mut WorldState, id: &str, location: &str, free: Minute) {
        let s = state.actors.get_mut(id).unwrap();
        s.location = location.into();
        s.busy_until = free;
    }

    #[test]
    fn free_driver_travel_is_accepted_and_logged() {
        let scenario = builtin_thanksgiving(false, false);
        let state = WorldState::from_scenario(&scenario);
        let rules = RuntimeRules::new(&scenario);
        let out = validate_transition(&state, &travel("sarah", "airport", hm(14, 0), hm(15, 0)), &rules);
        assert!(out.accepted, "{:?}", out.report);
        assert_eq!(out.state.actors["sarah"].location, "airport");
        assert_eq!(out.state.actors["sarah"].busy_until, hm(15, 0));
        assert_eq!(out.state.log.len(), 1);
    }

    #[test]
    fn too_short_travel_is_temporal() {
        let scenario = builtin_thanksgiving(false, false);
        let state = WorldState::from_scenario(&scenario);
        let out = validate_transition(&state, &travel("sarah", "airport", hm(14, 0), hm(14, 30)), &RuntimeRules::new(&scenario));
        assert!(!out.accepted);
        assert_eq!(out.report.failed, Some(Check::Temporal));
        assert_eq!(out.state, state);
    }

    #[test]
    fn handing_the_oven_watch_away_from_home_is_unsafe() {
        let scenario = builtin_thanksgiving(false, false);
        let mut state = WorldState::from_scenario(&scenario);
        state.actors.get_mut("sarah").unwrap().resources_held.insert(OVEN_WATCH.into());
        let rules = RuntimeRules::new(&scenario).supervising(hm(14, 0), hm(18, 0));
        let handoff = TransitionProposal {
            actor: "sarah".into(),
            action: Action::Handoff { resource: OVEN_WATCH.into(), to_actor: "james".into() },
            start: hm(14, 0),
            end: hm(14, 0),
        };
        let out = validate_transition(&state, &handoff, &rules);
        assert_eq!(out.report.failed, Some(Check::Safety));
        assert_eq!(out.state, state);
    }

    #[test]
    fn leaving_the_house_empty_is_unsafe() {
        let scenario = builtin_thanksgiving(false, false);
        let mut state = WorldState::from_scenario(&scenario);
        place(&mut state, "michael", "ny", hm(15, 0));
        let rules = RuntimeRules::new(&scenario).supervising(hm(14, 0), hm(18, 0));
        let out = validate_transition(&state, &travel("sarah", "airport", hm(14, 0), hm(15, 0)), &rules);
        assert_eq!(out.report.failed, Some(Check::Safety));
    }

    #[test]
    fn early_pickup_recovers_by_waiting() {
        let scenario = builtin_thanksgiving(true, false);
        let mut state = WorldState::from_scenario(&scenario);
        place(&mut state, "james", "airport", hm(14, 0));
        let rules = RuntimeRules::new(&scenario);
        let early = pickup("james", "emily", "home", hm(14, 30), hm(15, 30));
        let out = validate_transition(&state, &early, &rules);
        assert_eq!(out.report.failed, Some(Check::Temporal));
        let alternatives = recover(&state, &early, &rules);
        assert_eq!(alternatives.len(), 1);
        let best = &alternatives[0];
        assert_eq!((best.strategy, best.proposal.actor.as_str(), best.proposal.start), (Strategy::Shift, "james", hm(15, 0)));
        assert_eq!(best.cost, 30);
    }

    #[test]
    fn blocked_preference_can_be_relaxed_at_a_price() {
        let scenario = builtin_thanksgiving(true, false);
        let mut state = WorldState::from_scenario(&scenario);
        place(&mut state, "sarah", "grandma", hm(15, 0));
        let rules = RuntimeRules::new(&scenario);
        let proposal = pickup("sarah", "grandma", "home", hm(16, 0), hm(16, 30));
        let out = validate_transition(&state, &proposal, &rules);
        assert_eq!(out.report.failed, Some(Check::Preference));
        assert_eq!(out.report.soft_rule.as_deref(), Some("prefer-michael-drives-grandma"));
        let alternatives = recover(&state, &proposal, &rules);
        let relax = alternatives.iter().find(|a| a.strategy == Strategy::Relax).expect("relaxation offered");
        assert_eq!(relax.relaxed, vec!["prefer-michael-drives-grandma"]);
        assert_eq!(relax.cost, 60);
    }

    #[test]
    fn hard_conflict_without_help_has_no_alternative() {
        let scenario = builtin_thanksgiving(false, false);
        let state = WorldState::from_scenario(&scenario);
        let rules = RuntimeRules::new(&scenario);
        let proposal = travel("james", "home", hm(17, 30), hm(18, 30));
        assert_eq!(validate_transition(&state, &proposal, &rules).report.failed, Some(Check::Temporal));
        assert!(recover(&state, &proposal, &rules).is_empty());
    }

    #[test]
    fn cooking_requires_a_cook_at_home() {
        let scenario = builtin_thanksgiving(false, false);
        let state = WorldState::from_scenario(&scenario);
        let rules = RuntimeRules::new(&scenario);
        let start = |actor: &str| TransitionProposal {
            actor: actor.into(),
            action: Action::StartTask { task: "turkey".into() },
            start: hm(14, 0),
            end: hm(14, 0),
        };
        assert!(validate_transition(&state, &start("sarah"), &rules).accepted);
        assert_eq!(validate_transition(&state, &start("grandma"), &rules).report.failed, Some(Check::Spatial));
        let after = validate_transition(&state, &start("sarah"), &rules).state;
        let again = validate_transition(&after, &start("sarah"), &rules);
        assert_eq!(again.report.failed, Some(Check::Resource));
    }
}
