//! Meta-planning: turn a scenario into a role network, add common-sense
//! constraints from knowledge packs, attach monitoring agents and search
//! role assignments for the best-scoring feasible schedule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, AgentRepository};
use crate::clock::Minute;
use crate::scenario::{
    check_schedule, greedy_schedule, metrics, Preference, RoleMapping, Scenario, ScenarioError, Schedule,
    ScheduleMetrics, ViolationReport, ROLE_AIRPORT_DRIVER, ROLE_COOK, ROLE_LOCAL_DRIVER, ROLE_SUPERVISOR,
};
use crate::workflow::{
    Constraint, ConstraintKind, ConstraintSet, DependencyEdge, MetricSet, Origin, RoleNode, RuleCode, Workflow,
    WorkflowError,
};

pub const DEFAULT_MAX_ROUNDS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("objective `{0}` has no required capabilities")]
    EmptyCapabilities(String),
    #[error("unknown knowledge pack `{0}`")]
    UnknownPack(String),
    #[error("nobody qualifies for role `{0}`")]
    Unassignable(String),
    #[error("no feasible assignment: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Agents(#[from] AgentError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// One thing that has to get done, and what it takes to do it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDescriptor {
    pub id: String,
    pub role: String,
    pub capabilities: BTreeSet<String>,
    pub duration: Minute,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<Minute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub id: String,
    pub qualifications: BTreeSet<String>,
    pub available_from: Minute,
    pub initial_location: String,
}

impl Person {
    pub fn qualifies_for(&self, node: &RoleNode) -> bool {
        node.qualifications.is_subset(&self.qualifications)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub scenario: Scenario,
    pub objectives: Vec<TaskDescriptor>,
    pub explicit: ConstraintSet,
    pub people: Vec<Person>,
    pub metrics: MetricSet,
    pub knowledge_packs: Vec<String>,
}

fn tags(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl PlanningProblem {
    /// Objectives, people and explicit constraints read off the scenario.
    /// Augmented scenarios also get the airport and household packs.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let s = scenario;
        let mut objectives = Vec::new();
        let task = |id: &str, role: &str, caps: &[&str], duration: Minute| TaskDescriptor {
            id: id.to_string(),
            role: role.to_string(),
            capabilities: tags(caps),
            duration,
            deadline: Some(s.deadline),
            location: Some(s.home.clone()),
        };
        if let Some(m) = s.turkey_minutes {
            objectives.push(task("turkey", ROLE_COOK, &["cook"], m));
        }
        if let Some(m) = s.sides_minutes {
            objectives.push(task("side_dishes", ROLE_COOK, &["cook"], m));
        }
        let airport_pickups: Vec<&str> = s
            .flights
            .iter()
            .filter(|f| s.actor(&f.actor).is_some_and(|a| !a.can_drive))
            .map(|f| f.actor.as_str())
            .collect();
        for who in &airport_pickups {
            let leg = s.travel(&s.airport, &s.home).unwrap_or(0);
            let mut t = task(&format!("pickup-{who}"), ROLE_AIRPORT_DRIVER, &["drive", "airport_pickup"], leg);
            t.location = Some(s.airport.clone());
            objectives.push(t);
        }
        for p in &s.pickups {
            let leg = s.travel(&p.location, &s.home).unwrap_or(0);
            let mut t = task(&format!("pickup-{}", p.passenger), ROLE_LOCAL_DRIVER, &["drive", "local_pickup"], leg);
            t.location = Some(p.location.clone());
            objectives.push(t);
        }
        if let Some(m) = s.turkey_minutes {
            objectives.push(task("oven_watch", ROLE_SUPERVISOR, &["oven_watch"], m));
        }

        let roles: BTreeSet<&str> = objectives.iter().map(|o| o.role.as_str()).collect();
        let has = |r: &str| roles.contains(r);
        let mut explicit = ConstraintSet::new();
        let explicit_hard = |id: &str, kind, rule| Constraint::hard(id, Origin::Explicit, kind, rule);
        if s.actors.iter().any(|a| a.rents_car) {
            let scope: Vec<&str> = [ROLE_AIRPORT_DRIVER].into_iter().filter(|r| has(r)).collect();
            explicit.insert(
                explicit_hard("c-rental", ConstraintKind::Temporal, RuleCode::R5)
                    .scoped(scope)
                    .described("a renter drives only once the rental is done"),
            );
        }
        for who in &airport_pickups {
            if has(ROLE_AIRPORT_DRIVER) && has(ROLE_COOK) {
                let lands = s.flight(who).map_or(0, |f| f.lands_at);
                explicit.insert(
                    explicit_hard(&format!("c-pickup-{who}"), ConstraintKind::Temporal, RuleCode::R4)
                        .scoped([ROLE_AIRPORT_DRIVER, ROLE_COOK])
                        .described(&format!("{who} is collected from the airport after landing"))
                        .param("min_gap", 0)
                        .param("anchor", lands),
                );
            }
        }
        if s.turkey_minutes.is_some() && has(ROLE_COOK) && has(ROLE_SUPERVISOR) {
            explicit.insert(
                explicit_hard("c-oven-supervision", ConstraintKind::Safety, RuleCode::R2)
                    .scoped([ROLE_COOK, ROLE_SUPERVISOR])
                    .described("someone is home while the turkey is in the oven"),
            );
        }
        if s.sides_minutes.is_some() && has(ROLE_COOK) {
            explicit.insert(
                explicit_hard("c-side-dishes", ConstraintKind::Temporal, RuleCode::R3)
                    .scoped([ROLE_COOK])
                    .described("side dishes are made at home before dinner"),
            );
        }
        // Travel legs between places the household actually uses.
        let role_at = |place: &str| {
            if place == s.airport {
                Some(ROLE_AIRPORT_DRIVER)
            } else if place == s.home {
                Some(ROLE_COOK)
            } else if s.pickups.iter().any(|p| p.location == place) {
                Some(ROLE_LOCAL_DRIVER)
            } else {
                None
            }
        };
        let precedence = |r: &str| [ROLE_AIRPORT_DRIVER, ROLE_LOCAL_DRIVER, ROLE_COOK].iter().position(|x| *x == r);
        for leg in &s.travel {
            let (Some(a), Some(b)) = (role_at(&leg.from), role_at(&leg.to)) else { continue };
            let mut scope = [a, b];
            scope.sort_by_key(|r| precedence(r));
            if !has(scope[0]) || !has(scope[1]) {
                continue;
            }
            explicit.insert(
                explicit_hard(&format!("c-travel-{}-{}", leg.from, leg.to), ConstraintKind::Spatial, RuleCode::R6)
                    .scoped(scope)
                    .described(&format!("{} to {} takes {} minutes", leg.from, leg.to, leg.minutes))
                    .param("route", format!("{}-{}", leg.from, leg.to).as_str())
                    .param("minutes", leg.minutes),
            );
        }

        let people = s
            .actors
            .iter()
            .map(|a| {
                let mut q = tags(&["oven_watch"]);
                if a.can_drive {
                    q.extend(tags(&["drive", "airport_pickup", "local_pickup"]));
                }
                if a.can_cook {
                    q.insert("cook".into());
                }
                let (initial_location, available_from) = s.presence(a);
                Person { id: a.id.clone(), qualifications: q, available_from, initial_location }
            })
            .collect();

        let metrics = MetricSet { horizon_start: s.start, horizon_end: s.deadline, ..MetricSet::default() };
        let knowledge_packs =
            if s.augmented { vec!["airport".to_string(), "household".to_string()] } else { Vec::new() };
        PlanningProblem { scenario: s.clone(), objectives, explicit, people, metrics, knowledge_packs }
    }
}

/// One role node per distinct capability set, one edge per explicit
/// constraint that relates two roles.
pub fn build_network(problem: &PlanningProblem) -> Result<Workflow, PlanError> {
    let mut workflow = Workflow::new();
    workflow.metrics = problem.metrics;
    let mut seen: Vec<&BTreeSet<String>> = Vec::new();
    for objective in &problem.objectives {
        if objective.capabilities.is_empty() {
            return Err(PlanError::EmptyCapabilities(objective.id.clone()));
        }
        if seen.contains(&&objective.capabilities) {
            continue;
        }
        seen.push(&objective.capabilities);
        workflow.add_node(RoleNode::new(&objective.role, &objective.role, objective.capabilities.iter().cloned()))?;
    }
    for constraint in problem.explicit.iter() {
        workflow.constraints.insert(constraint.clone());
        let (Some(kind), [from, to]) = (constraint.kind.edge_kind(), constraint.scope.as_slice()) else { continue };
        let mut edge = DependencyEdge::new(&format!("e-{}", constraint.id), from, to, kind);
        for (key, value) in &constraint.predicate.params {
            edge.metadata.insert(key.clone(), value.clone());
        }
        workflow.add_edge(edge)?;
    }
    Ok(workflow)
}

/// When a pack rule applies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "when", rename_all = "snake_case")]
pub enum Trigger {
    AnyFlight,
    AnyRental,
    CooksTwoDishes,
    ActorsPresent { actors: Vec<String> },
}

impl Trigger {
    fn holds(&self, s: &Scenario) -> bool {
        match self {
            Trigger::AnyFlight => !s.flights.is_empty(),
            Trigger::AnyRental => s.actors.iter().any(|a| a.rents_car),
            Trigger::CooksTwoDishes => s.turkey_minutes.is_some() && s.sides_minutes.is_some(),
            Trigger::ActorsPresent { actors } => actors.iter().all(|a| s.actor(a).is_some()),
        }
    }
}

/// How a pack rule changes the scenario facts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum Adjustment {
    LuggageMinutes { minutes: Minute },
    RentalMinutes { minutes: Minute },
    AddPreference { preference: Preference },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackRule {
    pub trigger: Trigger,
    pub constraint: Constraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjustment: Option<Adjustment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePack {
    pub name: String,
    pub rules: Vec<PackRule>,
}

impl KnowledgePack {
    pub fn builtin(name: &str) -> Option<KnowledgePack> {
        let implicit = |id: &str, kind, rule| Constraint::hard(id, Origin::Implicit, kind, rule);
        let rules = match name {
            "airport" => vec![
                PackRule {
                    trigger: Trigger::AnyFlight,
                    constraint: implicit("k-luggage", ConstraintKind::Temporal, RuleCode::R4)
                        .scoped([ROLE_AIRPORT_DRIVER])
                        .described("bags take 30 minutes after landing")
                        .param("minutes", 30),
                    adjustment: Some(Adjustment::LuggageMinutes { minutes: 30 }),
                },
                PackRule {
                    trigger: Trigger::AnyRental,
                    constraint: implicit("k-rental", ConstraintKind::Temporal, RuleCode::R5)
                        .described("picking up a rental car takes 30 minutes after the bags")
                        .param("minutes", 30),
                    adjustment: Some(Adjustment::RentalMinutes { minutes: 30 }),
                },
                PackRule {
                    trigger: Trigger::AnyFlight,
                    constraint: implicit("k-traffic", ConstraintKind::Spatial, RuleCode::R6)
                        .described("travel times assume normal traffic")
                        .param("traffic", "none"),
                    adjustment: None,
                },
            ],
            "household" => vec![
                PackRule {
                    trigger: Trigger::CooksTwoDishes,
                    constraint: implicit("k-multitask", ConstraintKind::Resource, RuleCode::R9)
                        .scoped([ROLE_COOK])
                        .described("the cook can do other things while the turkey roasts")
                        .param("exempt", "turkey"),
                    adjustment: None,
                },
                PackRule {
                    trigger: Trigger::ActorsPresent { actors: vec!["grandma".into(), "michael".into()] },
                    constraint: Constraint::soft(
                        "k-grandma-prefers-michael",
                        Origin::Implicit,
                        ConstraintKind::Preference,
                        RuleCode::R10,
                        2,
                    )
                    .scoped([ROLE_LOCAL_DRIVER])
                    .described("grandma would rather ride with michael"),
                    adjustment: Some(Adjustment::AddPreference {
                        preference: Preference::PreferredDriver {
                            passenger: "grandma".into(),
                            driver: "michael".into(),
                            priority: 2,
                        },
                    }),
                },
                PackRule {
                    trigger: Trigger::ActorsPresent { actors: vec!["sarah".into(), "grandma".into()] },
                    constraint: Constraint::soft(
                        "k-separate-cooking",
                        Origin::Implicit,
                        ConstraintKind::Preference,
                        RuleCode::R11,
                        1,
                    )
                    .scoped([ROLE_COOK])
                    .described("sarah and grandma would rather not cook at the same time"),
                    adjustment: Some(Adjustment::AddPreference {
                        preference: Preference::SeparateCooking { a: "sarah".into(), b: "grandma".into(), priority: 1 },
                    }),
                },
            ],
            _ => return None,
        };
        Some(KnowledgePack { name: name.to_string(), rules })
    }
}

/// Adds each triggered pack rule's constraint to the workflow and applies
/// its adjustment to the scenario. Applying the same packs twice changes
/// nothing the second time.
pub fn augment_constraints(
    workflow: &Workflow,
    scenario: &Scenario,
    packs: &[String],
) -> Result<(Workflow, Scenario), PlanError> {
    let resolved: Vec<KnowledgePack> = packs
        .iter()
        .map(|name| KnowledgePack::builtin(name).ok_or_else(|| PlanError::UnknownPack(name.clone())))
        .collect::<Result<_, _>>()?;
    let mut workflow = workflow.clone();
    let mut scenario = scenario.clone();
    for rule in resolved.iter().flat_map(|p| &p.rules) {
        if !rule.trigger.holds(&scenario) {
            continue;
        }
        workflow.constraints.insert(rule.constraint.clone());
        match &rule.adjustment {
            Some(Adjustment::LuggageMinutes { minutes }) => scenario.luggage_minutes = *minutes,
            Some(Adjustment::RentalMinutes { minutes }) => scenario.rental_minutes = *minutes,
            Some(Adjustment::AddPreference { preference }) if !scenario.preferences.contains(preference) => {
                scenario.preferences.push(preference.clone());
            }
            _ => {}
        }
    }
    Ok((workflow, scenario))
}

/// Weighted score of a schedule; negative infinity when a hard rule breaks.
pub fn score(workflow: &Workflow, scenario: &Scenario, schedule: &Schedule) -> Result<f64, ScenarioError> {
    let report = check_schedule(scenario, schedule)?;
    if !report.is_feasible() {
        return Ok(f64::NEG_INFINITY);
    }
    let m = metrics(scenario, schedule)?;
    Ok(score_parts(workflow, scenario, &report, &m))
}

fn score_parts(workflow: &Workflow, scenario: &Scenario, report: &ViolationReport, m: &ScheduleMetrics) -> f64 {
    let weights = workflow.metrics;
    let violated = report.violated_rules();
    let total = workflow.constraints.len();
    let satisfied = workflow.constraints.iter().filter(|c| !violated.contains(&c.predicate.rule)).count();
    let sat = if total == 0 { 1.0 } else { satisfied as f64 / total as f64 };
    let horizon = weights.horizon().max(1) as f64;
    let people = scenario.actors.len().max(1) as f64;
    weights.w_sat * sat + weights.w_slack * m.total_slack as f64 / horizon
        - weights.w_idle * m.total_idle() as f64 / (horizon * people)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub workflow: Workflow,
    pub schedule: Option<Schedule>,
    /// Score of the starting assignment, then of every accepted move.
    pub history: Vec<f64>,
}

fn evaluate(workflow: &Workflow, scenario: &Scenario, mapping: &RoleMapping) -> (f64, Option<Schedule>) {
    match greedy_schedule(scenario, mapping) {
        Ok(schedule) => match score(workflow, scenario, &schedule) {
            Ok(v) => (v, Some(schedule)),
            Err(_) => (f64::NEG_INFINITY, None),
        },
        Err(_) => (f64::NEG_INFINITY, None),
    }
}

/// Steepest-ascent search over single role reassignments. A move is taken
/// only when it strictly improves the score.
pub fn refine(
    workflow: &Workflow,
    scenario: &Scenario,
    people: &[Person],
    max_rounds: usize,
) -> Result<Refinement, PlanError> {
    let mut mapping = RoleMapping::new();
    let mut used = BTreeSet::new();
    for node in &workflow.nodes {
        let chosen = match &node.assigned_person {
            Some(p) => p.clone(),
            None => {
                let qualified: Vec<&Person> = people.iter().filter(|p| p.qualifies_for(node)).collect();
                let pick = qualified.iter().find(|p| !used.contains(&p.id)).or(qualified.first());
                pick.ok_or_else(|| PlanError::Unassignable(node.id.clone()))?.id.clone()
            }
        };
        used.insert(chosen.clone());
        mapping.insert(node.id.clone(), chosen);
    }

    let (mut best, mut schedule) = evaluate(workflow, scenario, &mapping);
    let mut history = vec![best];
    for _ in 0..max_rounds {
        let mut improvement: Option<(f64, RoleMapping, Option<Schedule>)> = None;
        for node in &workflow.nodes {
            for person in people.iter().filter(|p| p.qualifies_for(node) && mapping[&node.id] != p.id) {
                let mut candidate = mapping.clone();
                candidate.insert(node.id.clone(), person.id.clone());
                let (v, s) = evaluate(workflow, scenario, &candidate);
                let target = improvement.as_ref().map_or(best, |(b, _, _)| *b);
                if v > target {
                    improvement = Some((v, candidate, s));
                }
            }
        }
        match improvement {
            Some((v, m, s)) => {
                best = v;
                mapping = m;
                schedule = s;
                history.push(v);
            }
            None => break,
        }
    }

    let mut refined = workflow.clone();
    for node in &mut refined.nodes {
        node.assigned_person = mapping.get(&node.id).cloned();
    }
    refined.score = Some(best);
    Ok(Refinement { workflow: refined, schedule, history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub workflow: Workflow,
    /// The scenario after knowledge-pack adjustments.
    pub scenario: Scenario,
    pub schedule: Schedule,
    pub report: ViolationReport,
    pub metrics: ScheduleMetrics,
    pub history: Vec<f64>,
}

impl PlanOutcome {
    pub fn assignment(&self) -> BTreeMap<String, String> {
        self.workflow.assignment()
    }
}

/// Full pipeline: network, augmentation, agent attachment, refinement.
pub fn plan(problem: &PlanningProblem) -> Result<PlanOutcome, PlanError> {
    plan_with(problem, DEFAULT_MAX_ROUNDS)
}

pub fn plan_with(problem: &PlanningProblem, max_rounds: usize) -> Result<PlanOutcome, PlanError> {
    problem.metrics.validate()?;
    let network = build_network(problem)?;
    let (mut workflow, scenario) = augment_constraints(&network, &problem.scenario, &problem.knowledge_packs)?;
    scenario.validate()?;
    let mut repo = AgentRepository::new();
    repo.seed_common_agents()?;
    repo.seed_household_monitors()?;
    repo.attach_agents(&mut workflow)?;

    let refined = refine(&workflow, &scenario, &problem.people, max_rounds)?;
    let schedule = if workflow.nodes.is_empty() {
        Schedule::default()
    } else {
        refined.schedule.ok_or_else(|| PlanError::Infeasible("every role assignment breaks a hard rule".into()))?
    };
    let report = check_schedule(&scenario, &schedule)?;
    let metrics = metrics(&scenario, &schedule)?;
    Ok(PlanOutcome { workflow: refined.workflow, scenario, schedule, report, metrics, history: refined.history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_thanksgiving;
    use crate::workflow::EdgeKind;

    #[test]
    fn thanksgiving_network_shape() {
        let problem = PlanningProblem::from_scenario(&builtin_thanksgiving(true, false));
        assert_eq!(problem.explicit.len(), 7);
        let w = build_network(&problem).unwrap();
        let ids: Vec<&str> = w.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["cook", "driver1", "driver2", "supervisor"]);
        let kinds: BTreeSet<EdgeKind> = w.edges.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [EdgeKind::Temporal, EdgeKind::Spatial, EdgeKind::Safety].into());
        assert!(w.validate_structure().is_empty());
    }

    #[test]
    fn empty_capabilities_are_rejected() {
        let mut problem = PlanningProblem::from_scenario(&builtin_thanksgiving(false, false));
        problem.objectives[0].capabilities.clear();
        assert_eq!(build_network(&problem), Err(PlanError::EmptyCapabilities("turkey".into())));
    }

    #[test]
    fn packs_add_six_implicit_constraints_once() {
        let scenario = builtin_thanksgiving(false, false);
        let problem = PlanningProblem::from_scenario(&scenario);
        let w = build_network(&problem).unwrap();
        let packs = vec!["airport".to_string(), "household".to_string()];
        let (once, s1) = augment_constraints(&w, &scenario, &packs).unwrap();
        let implicit = once.constraints.iter().filter(|c| c.origin == Origin::Implicit).count();
        assert_eq!(implicit, 6);
        assert_eq!((s1.luggage_minutes, s1.rental_minutes, s1.preferences.len()), (30, 30, 2));
        let (twice, s2) = augment_constraints(&once, &s1, &packs).unwrap();
        assert_eq!((twice, s2), (once, s1));
        assert_eq!(augment_constraints(&w, &scenario, &[]).unwrap().0, w);
        assert_eq!(
            augment_constraints(&w, &scenario, &["weather".to_string()]),
            Err(PlanError::UnknownPack("weather".into()))
        );
    }

    #[test]
    fn score_of_a_perfect_schedule() {
        let mut w = Workflow::new();
        w.metrics = MetricSet { w_sat: 1.0, w_slack: 1.0, w_idle: 1.0, ..MetricSet::default() };
        assert_eq!(score(&w, &Scenario::empty(), &Schedule::default()).unwrap(), 1.0);
    }

    #[test]
    fn plan_is_feasible_and_history_climbs() {
        for augmented in [false, true] {
            let outcome = plan(&PlanningProblem::from_scenario(&builtin_thanksgiving(augmented, false))).unwrap();
            assert!(outcome.report.is_feasible(), "{}", outcome.report.render());
            assert!(outcome.history.windows(2).all(|w| w[1] > w[0]));
            assert!(outcome.workflow.nodes.iter().all(|n| n.node_agent.is_some()));
            assert!(outcome.workflow.edges.iter().all(|e| e.edge_agent.is_some()));
        }
    }

    #[test]
    fn emily_is_never_a_driver() {
        let problem = PlanningProblem::from_scenario(&builtin_thanksgiving(true, false));
        let outcome = plan(&problem).unwrap();
        let map = outcome.assignment();
        assert_ne!(map["driver1"], "emily");
        assert_ne!(map["driver2"], "emily");
    }

    #[test]
    fn empty_problem_plans_to_nothing() {
        let outcome = plan(&PlanningProblem::from_scenario(&Scenario::empty())).unwrap();
        assert!(outcome.schedule.is_empty());
        assert!(outcome.workflow.nodes.is_empty());
    }
}
