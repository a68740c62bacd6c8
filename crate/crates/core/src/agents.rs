//! Agent catalog with capability-distance matching.
//!
//! Registration hands out gap-free sequence numbers, so the `(distance,
//! rating, registration_seq)` ordering used by [`AgentRepository::match_agents`]
//! is total and matching is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workflow::{EdgeKind, Workflow};

pub const MAX_CONTEXT_WINDOW: u32 = 1024;

/// Schema ids used by the built-in monitoring agents.
pub const STATE_SCHEMA: &str = "maci.state.v1";
pub const ALERT_SCHEMA: &str = "maci.alert.v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Protocol {
    pub input_schema_id: String,
    pub output_schema_id: String,
}

impl Protocol {
    pub fn new(input: &str, output: &str) -> Self {
        Protocol { input_schema_id: input.to_string(), output_schema_id: output.to_string() }
    }

    pub fn monitoring() -> Self {
        Protocol::new(STATE_SCHEMA, ALERT_SCHEMA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Common,
    Specialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyClass {
    Light,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub protocol: Protocol,
    pub agent_type: AgentType,
    pub capabilities: BTreeSet<String>,
    pub context_window: u32,
    pub efficiency_class: EfficiencyClass,
    pub rating: f64,
    /// Assigned by the repository on registration; ignored on input.
    #[serde(default)]
    pub registration_seq: u64,
}

impl AgentSpec {
    pub fn new<I, S>(id: &str, name: &str, agent_type: AgentType, capabilities: I, rating: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AgentSpec {
            id: id.to_string(),
            name: name.to_string(),
            protocol: Protocol::monitoring(),
            agent_type,
            capabilities: capabilities.into_iter().map(Into::into).collect(),
            context_window: MAX_CONTEXT_WINDOW,
            efficiency_class: EfficiencyClass::Light,
            rating,
            registration_seq: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub required: BTreeSet<String>,
    pub needed_input_schema: String,
    pub needed_output_schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind_hint: Option<EdgeKind>,
}

impl Requirement {
    pub fn new<I, S>(required: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Requirement {
            required: required.into_iter().map(Into::into).collect(),
            needed_input_schema: STATE_SCHEMA.to_string(),
            needed_output_schema: ALERT_SCHEMA.to_string(),
            kind_hint: None,
        }
    }

    fn accepts(&self, agent: &AgentSpec) -> bool {
        agent.protocol.input_schema_id == self.needed_input_schema
            && agent.protocol.output_schema_id == self.needed_output_schema
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Workflow element id to agent id.
    pub element_map: BTreeMap<String, String>,
    pub total_distance: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent `{0}` is already registered")]
    Duplicate(String),
    #[error("agent `{id}` declares context window {window} (limit {MAX_CONTEXT_WINDOW})")]
    ContextWindowTooLarge { id: String, window: u32 },
    #[error("agent `{id}` has rating {rating} outside [0, 5]")]
    InvalidRating { id: String, rating: f64 },
    #[error("agent `{0}` declares no capabilities")]
    NoCapabilities(String),
    #[error("no compatible agent for: {}", .0.join(", "))]
    Unassignable(Vec<String>),
    #[error("catalog error: {0}")]
    Catalog(String),
}

/// Number of required tags the offered set does not cover.
pub fn capability_distance(required: &BTreeSet<String>, offered: &BTreeSet<String>) -> usize {
    required.difference(offered).count()
}

#[derive(Debug, Clone, Default)]
pub struct AgentRepository {
    agents: Vec<AgentSpec>,
    next_seq: u64,
}

impl AgentRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn get(&self, id: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Registers an agent and returns the sequence number it was given.
    pub fn register(&mut self, mut spec: AgentSpec) -> Result<u64, AgentError> {
        if self.get(&spec.id).is_some() {
            return Err(AgentError::Duplicate(spec.id));
        }
        if spec.context_window > MAX_CONTEXT_WINDOW {
            return Err(AgentError::ContextWindowTooLarge { id: spec.id, window: spec.context_window });
        }
        if !(0.0..=5.0).contains(&spec.rating) {
            return Err(AgentError::InvalidRating { id: spec.id, rating: spec.rating });
        }
        if spec.capabilities.is_empty() {
            return Err(AgentError::NoCapabilities(spec.id));
        }
        spec.registration_seq = self.next_seq;
        self.next_seq += 1;
        self.agents.push(spec);
        Ok(self.next_seq - 1)
    }

    /// Ranks agents for a requirement: tag filter, protocol filter, then
    /// ascending distance, descending rating, ascending registration order.
    pub fn match_agents(&self, requirement: &Requirement) -> Vec<&AgentSpec> {
        let need = requirement.required.len();
        let mut ranked: Vec<(usize, &AgentSpec)> = self
            .agents
            .iter()
            .map(|a| (capability_distance(&requirement.required, &a.capabilities), a))
            .filter(|(d, _)| *d < need)
            .filter(|(_, a)| requirement.accepts(a))
            .collect();
        ranked.sort_by(|(da, a), (db, b)| rank(*da, a, *db, b));
        ranked.into_iter().map(|(_, a)| a).collect()
    }

    /// Best protocol-compatible agent for one requirement, if any. Unlike
    /// matching, an agent sharing no tag is still eligible here.
    fn best_for(&self, requirement: &Requirement) -> Option<(usize, &AgentSpec)> {
        self.agents
            .iter()
            .filter(|a| requirement.accepts(a))
            .map(|a| (capability_distance(&requirement.required, &a.capabilities), a))
            .min_by(|(da, a), (db, b)| rank(*da, a, *db, b))
    }

    fn assign<'a, I>(&self, elements: I) -> Result<Assignment, AgentError>
    where
        I: IntoIterator<Item = (&'a str, Requirement)>,
    {
        let mut assignment = Assignment::default();
        let mut missing = Vec::new();
        for (id, requirement) in elements {
            match self.best_for(&requirement) {
                Some((d, agent)) => {
                    assignment.element_map.insert(id.to_string(), agent.id.clone());
                    assignment.total_distance += d;
                }
                None => missing.push(id.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(assignment)
        } else {
            Err(AgentError::Unassignable(missing))
        }
    }

    /// Picks a monitoring agent for every role node.
    pub fn assign_node_agents(&self, workflow: &Workflow) -> Result<Assignment, AgentError> {
        self.assign(workflow.nodes.iter().map(|n| (n.id.as_str(), node_requirement(&n.qualifications))))
    }

    /// Picks a monitoring agent for every dependency edge.
    pub fn assign_edge_agents(&self, workflow: &Workflow) -> Result<Assignment, AgentError> {
        self.assign(workflow.edges.iter().map(|e| (e.id.as_str(), edge_requirement(e.kind))))
    }

    /// Writes node and edge agent ids into the workflow.
    pub fn attach_agents(&self, workflow: &mut Workflow) -> Result<usize, AgentError> {
        let nodes = self.assign_node_agents(workflow)?;
        let edges = self.assign_edge_agents(workflow)?;
        for node in &mut workflow.nodes {
            node.node_agent = nodes.element_map.get(&node.id).cloned();
        }
        for edge in &mut workflow.edges {
            edge.edge_agent = edges.element_map.get(&edge.id).cloned();
        }
        Ok(nodes.total_distance + edges.total_distance)
    }

    /// Registers the ten general-purpose agents every workflow can draw on.
    pub fn seed_common_agents(&mut self) -> Result<(), AgentError> {
        for spec in common_agents() {
            self.register(spec)?;
        }
        Ok(())
    }

    /// Registers role monitors for cooking, driving and oven supervision.
    pub fn seed_household_monitors(&mut self) -> Result<(), AgentError> {
        for spec in household_monitors() {
            self.register(spec)?;
        }
        Ok(())
    }

    pub fn load_catalog(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AgentError::Catalog(format!("{}: {e}", path.display())))?;
        let specs: Vec<AgentSpec> =
            serde_json::from_str(&text).map_err(|e| AgentError::Catalog(format!("{}: {e}", path.display())))?;
        let mut repo = AgentRepository::new();
        for spec in specs {
            repo.register(spec)?;
        }
        Ok(repo)
    }

    pub fn catalog_json(&self) -> String {
        serde_json::to_string_pretty(&self.agents).expect("catalog serializes")
    }
}

fn rank(da: usize, a: &AgentSpec, db: usize, b: &AgentSpec) -> std::cmp::Ordering {
    da.cmp(&db)
        .then_with(|| b.rating.total_cmp(&a.rating))
        .then_with(|| a.registration_seq.cmp(&b.registration_seq))
}

/// Tags a node monitor needs: the role's qualifications plus role tracking.
pub fn node_requirement(qualifications: &BTreeSet<String>) -> Requirement {
    let mut required = qualifications.clone();
    required.insert("roles".to_string());
    Requirement { required, ..Requirement::new(Vec::<String>::new()) }
}

/// Tags an edge monitor needs for a dependency of the given kind.
pub fn edge_requirement(kind: EdgeKind) -> Requirement {
    let tags: &[&str] = match kind {
        EdgeKind::Temporal => &["temporal", "scheduling"],
        EdgeKind::Spatial => &["spatial", "routing"],
        EdgeKind::Resource => &["resource", "allocation"],
        EdgeKind::Safety => &["safety", "supervision"],
        EdgeKind::Data => &["data", "explanation"],
    };
    Requirement { kind_hint: Some(kind), ..Requirement::new(tags.iter().copied()) }
}

fn common_agents() -> Vec<AgentSpec> {
    use AgentType::Common;
    vec![
        AgentSpec::new("role-manager", "Role Manager Agent", Common, ["roles", "actors", "qualifications", "assignment"], 4.5),
        AgentSpec::new("spatial", "Spatial Agent", Common, ["spatial", "routing", "locations", "travel"], 4.5),
        AgentSpec::new("temporal", "Temporal Agent", Common, ["temporal", "scheduling", "deadlines", "durations"], 4.5),
        AgentSpec::new("resource", "Resource Agent", Common, ["resource", "allocation", "vehicles", "capacity"], 4.5),
        AgentSpec::new(
            "reasoning",
            "Reasoning and Explanation Agent",
            Common,
            ["data", "explanation", "rationale", "dependencies"],
            4.0,
        ),
        AgentSpec::new(
            "common-sense",
            "Common Sense Agent",
            Common,
            ["common_sense", "implicit_constraints", "practical_knowledge"],
            4.0,
        ),
        AgentSpec::new(
            "constraint-validation",
            "Constraint Validation Agent",
            Common,
            ["validation", "constraints", "feasibility"],
            4.0,
        ),
        AgentSpec::new("plan-evaluation", "Plan Evaluation Agent", Common, ["evaluation", "metrics", "scoring"], 4.0),
        AgentSpec::new("what-if", "What-If Testing Agent", Common, ["what_if", "simulation", "robustness"], 4.0),
        AgentSpec::new(
            "compliance-safety",
            "Compliance and Safety Agent",
            Common,
            ["safety", "compliance", "supervision", "oven_watch"],
            4.8,
        ),
    ]
}

fn household_monitors() -> Vec<AgentSpec> {
    use AgentType::Specialized;
    vec![
        AgentSpec::new("cook-monitor", "Cook Monitor", Specialized, ["roles", "cook", "kitchen", "timing"], 4.2),
        AgentSpec::new(
            "driver-monitor",
            "Driver Monitor",
            Specialized,
            ["roles", "drive", "airport_pickup", "local_pickup", "navigation"],
            4.2,
        ),
        AgentSpec::new(
            "supervisor-monitor",
            "Supervisor Monitor",
            Specialized,
            ["roles", "oven_watch", "home_presence"],
            4.2,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn distance_counts_unmet_tags() {
        assert_eq!(capability_distance(&tags(&["a", "b"]), &tags(&["a", "b", "c"])), 0);
        assert_eq!(capability_distance(&tags(&["a", "b"]), &tags(&["a"])), 1);
        assert_eq!(capability_distance(&tags(&[]), &tags(&["a"])), 0);
    }

    #[test]
    fn registration_rules() {
        let mut repo = AgentRepository::new();
        let mut big = AgentSpec::new("big", "Big", AgentType::Common, ["x"], 3.0);
        big.context_window = 2048;
        assert!(matches!(repo.register(big), Err(AgentError::ContextWindowTooLarge { .. })));
        assert_eq!(repo.register(AgentSpec::new("a", "A", AgentType::Common, ["x"], 3.0)), Ok(0));
        assert_eq!(
            repo.register(AgentSpec::new("a", "A", AgentType::Common, ["x"], 3.0)),
            Err(AgentError::Duplicate("a".into()))
        );
        assert_eq!(repo.register(AgentSpec::new("b", "B", AgentType::Common, ["x"], 3.0)), Ok(1));
    }

    #[test]
    fn seeding_twice_is_a_duplicate() {
        let mut repo = AgentRepository::new();
        repo.seed_common_agents().unwrap();
        assert_eq!(repo.len(), 10);
        assert!(matches!(repo.seed_common_agents(), Err(AgentError::Duplicate(_))));
    }

    #[test]
    fn safety_query_prefers_compliance_agent() {
        let mut repo = AgentRepository::new();
        repo.seed_common_agents().unwrap();
        let ranked = repo.match_agents(&Requirement::new(["oven_watch", "safety"]));
        assert_eq!(ranked[0].name, "Compliance and Safety Agent");
    }

    #[test]
    fn protocol_mismatch_is_dropped() {
        let mut repo = AgentRepository::new();
        let mut other = AgentSpec::new("other", "Other", AgentType::Specialized, ["x"], 5.0);
        other.protocol = Protocol::new("foreign.in", "foreign.out");
        repo.register(other).unwrap();
        repo.register(AgentSpec::new("ok", "Ok", AgentType::Specialized, ["x"], 1.0)).unwrap();
        let ranked: Vec<&str> = repo.match_agents(&Requirement::new(["x"])).iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ranked, vec!["ok"]);
    }

    #[test]
    fn ties_fall_back_to_rating_then_registration_order() {
        let mut repo = AgentRepository::new();
        repo.register(AgentSpec::new("low", "L", AgentType::Common, ["x"], 2.0)).unwrap();
        repo.register(AgentSpec::new("first", "F", AgentType::Common, ["x"], 4.0)).unwrap();
        repo.register(AgentSpec::new("second", "S", AgentType::Common, ["x"], 4.0)).unwrap();
        let ranked: Vec<&str> = repo.match_agents(&Requirement::new(["x"])).iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ranked, vec!["first", "second", "low"]);
    }

    #[test]
    fn catalog_round_trips_through_a_file() {
        let mut repo = AgentRepository::new();
        repo.seed_common_agents().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.json");
        std::fs::write(&path, repo.catalog_json()).unwrap();
        let loaded = AgentRepository::load_catalog(&path).unwrap();
        assert_eq!(loaded.agents(), repo.agents());
    }
}
