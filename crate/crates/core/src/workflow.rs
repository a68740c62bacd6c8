//! Role-based workflow graphs.
//!
//! A [`Workflow`] holds role nodes, typed dependency edges between them and
//! the constraint set that the planner scores against. The subgraph made of
//! temporal edges must stay acyclic; every other edge kind may form cycles and
//! parallel edges are permitted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Temporal,
    Spatial,
    Resource,
    Safety,
    Data,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [
        EdgeKind::Temporal,
        EdgeKind::Spatial,
        EdgeKind::Resource,
        EdgeKind::Safety,
        EdgeKind::Data,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Temporal => "temporal",
            EdgeKind::Spatial => "spatial",
            EdgeKind::Resource => "resource",
            EdgeKind::Safety => "safety",
            EdgeKind::Data => "data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Temporal,
    Spatial,
    Resource,
    Safety,
    Data,
    Preference,
}

impl ConstraintKind {
    /// The edge kind a constraint of this kind produces, if any.
    pub fn edge_kind(self) -> Option<EdgeKind> {
        match self {
            ConstraintKind::Temporal => Some(EdgeKind::Temporal),
            ConstraintKind::Spatial => Some(EdgeKind::Spatial),
            ConstraintKind::Resource => Some(EdgeKind::Resource),
            ConstraintKind::Safety => Some(EdgeKind::Safety),
            ConstraintKind::Data => Some(EdgeKind::Data),
            ConstraintKind::Preference => None,
        }
    }
}

impl From<EdgeKind> for ConstraintKind {
    fn from(kind: EdgeKind) -> Self {
        match kind {
            EdgeKind::Temporal => ConstraintKind::Temporal,
            EdgeKind::Spatial => ConstraintKind::Spatial,
            EdgeKind::Resource => ConstraintKind::Resource,
            EdgeKind::Safety => ConstraintKind::Safety,
            EdgeKind::Data => ConstraintKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Explicit,
    Implicit,
    Derived,
}

/// Schedule rule identifiers checked by [`crate::scenario::check_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleCode {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
}

impl RuleCode {
    pub const ALL: [RuleCode; 12] = [
        RuleCode::R1,
        RuleCode::R2,
        RuleCode::R3,
        RuleCode::R4,
        RuleCode::R5,
        RuleCode::R6,
        RuleCode::R7,
        RuleCode::R8,
        RuleCode::R9,
        RuleCode::R10,
        RuleCode::R11,
        RuleCode::R12,
    ];

    /// Soft rules express preferences and never make a schedule infeasible.
    pub fn is_soft(self) -> bool {
        matches!(self, RuleCode::R10 | RuleCode::R11)
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Metadata value: integer minutes or a string identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetaValue {
    Int(i64),
    Text(String),
}

impl MetaValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            MetaValue::Int(v) => Some(*v),
            MetaValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            MetaValue::Text(v) => Some(v),
            MetaValue::Int(_) => None,
        }
    }
}

impl From<i64> for MetaValue {
    fn from(v: i64) -> Self {
        MetaValue::Int(v)
    }
}

impl From<&str> for MetaValue {
    fn from(v: &str) -> Self {
        MetaValue::Text(v.to_string())
    }
}

pub type Metadata = BTreeMap<String, MetaValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleNode {
    pub id: String,
    pub role_name: String,
    pub qualifications: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigned_person: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_agent: Option<String>,
}

impl RoleNode {
    pub fn new<I, S>(id: &str, role_name: &str, qualifications: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RoleNode {
            id: id.to_string(),
            role_name: role_name.to_string(),
            qualifications: qualifications.into_iter().map(Into::into).collect(),
            assigned_person: None,
            node_agent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub kind: EdgeKind,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_agent: Option<String>,
}

impl DependencyEdge {
    /// Builds an edge with the metadata its kind requires filled with defaults
    /// (`min_gap = 0` for temporal edges, `route = "<from>-<to>"` for spatial).
    pub fn new(id: &str, from_node: &str, to_node: &str, kind: EdgeKind) -> Self {
        let mut metadata = Metadata::new();
        match kind {
            EdgeKind::Temporal => {
                metadata.insert("min_gap".into(), MetaValue::Int(0));
            }
            EdgeKind::Spatial => {
                metadata.insert("route".into(), MetaValue::Text(format!("{from_node}-{to_node}")));
            }
            _ => {}
        }
        DependencyEdge {
            id: id.to_string(),
            from_node: from_node.to_string(),
            to_node: to_node.to_string(),
            kind,
            metadata,
            edge_agent: None,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<MetaValue>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    fn missing_metadata(&self) -> Option<&'static str> {
        match self.kind {
            EdgeKind::Temporal if self.metadata.get("min_gap").and_then(MetaValue::as_int).is_none() => {
                Some("min_gap")
            }
            EdgeKind::Spatial if self.metadata.get("route").and_then(MetaValue::as_text).is_none() => {
                Some("route")
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub rule: RuleCode,
    #[serde(default)]
    pub params: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub origin: Origin,
    pub kind: ConstraintKind,
    pub hard: bool,
    pub priority: u8,
    /// Role node ids the constraint relates. Two entries make it an edge.
    #[serde(default)]
    pub scope: Vec<String>,
    #[serde(default)]
    pub description: String,
    pub predicate: Predicate,
}

impl Constraint {
    /// A hard constraint (priority pinned to 5).
    pub fn hard(id: &str, origin: Origin, kind: ConstraintKind, rule: RuleCode) -> Self {
        Constraint {
            id: id.to_string(),
            origin,
            kind,
            hard: true,
            priority: 5,
            scope: Vec::new(),
            description: String::new(),
            predicate: Predicate { rule, params: Metadata::new() },
        }
    }

    pub fn soft(id: &str, origin: Origin, kind: ConstraintKind, rule: RuleCode, priority: u8) -> Self {
        Constraint {
            hard: false,
            priority,
            ..Constraint::hard(id, origin, kind, rule)
        }
    }

    pub fn scoped<I, S>(mut self, scope: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.scope = scope.into_iter().map(Into::into).collect();
        self
    }

    pub fn described(mut self, text: &str) -> Self {
        self.description = text.to_string();
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<MetaValue>) -> Self {
        self.predicate.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintSet {
    pub items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.iter().any(|c| c.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Constraint> {
        self.items.iter().find(|c| c.id == id)
    }

    /// Inserts a constraint; returns `false` when the id is already present.
    pub fn insert(&mut self, constraint: Constraint) -> bool {
        if self.contains(&constraint.id) {
            return false;
        }
        self.items.push(constraint);
        true
    }

    /// Splits the set by origin into (explicit, implicit, derived).
    pub fn partition(&self) -> (ConstraintSet, ConstraintSet, ConstraintSet) {
        let pick = |origin: Origin| ConstraintSet {
            items: self.items.iter().filter(|c| c.origin == origin).cloned().collect(),
        };
        (pick(Origin::Explicit), pick(Origin::Implicit), pick(Origin::Derived))
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<T: IntoIterator<Item = Constraint>>(iter: T) -> Self {
        ConstraintSet { items: iter.into_iter().collect() }
    }
}

/// Weights and horizon used to score schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub w_sat: f64,
    pub w_slack: f64,
    pub w_idle: f64,
    /// Start of the planning horizon in minutes.
    pub horizon_start: i64,
    /// End of the planning horizon (normally the dinner deadline).
    pub horizon_end: i64,
}

impl Default for MetricSet {
    fn default() -> Self {
        MetricSet { w_sat: 1.0, w_slack: 0.5, w_idle: 0.25, horizon_start: 600, horizon_end: 1080 }
    }
}

impl MetricSet {
    pub fn horizon(&self) -> i64 {
        self.horizon_end - self.horizon_start
    }

    pub fn validate(&self) -> Result<(), WorkflowError> {
        let weights = [self.w_sat, self.w_slack, self.w_idle];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
            return Err(WorkflowError::InvalidMetrics(
                "weights must be non-negative with at least one positive".into(),
            ));
        }
        if self.horizon() <= 0 {
            return Err(WorkflowError::InvalidMetrics("horizon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge `{edge}` references unknown node `{node}`")]
    DanglingEndpoint { edge: String, node: String },
    #[error("edge `{0}` is a self-loop")]
    SelfLoop(String),
    #[error("temporal edge `{0}` would close a cycle")]
    TemporalCycle(String),
    #[error("edge `{edge}` is missing required metadata `{key}`")]
    MissingMetadata { edge: String, key: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid metrics: {0}")]
    InvalidMetrics(String),
    #[error("invalid workflow json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    DuplicateId,
    DanglingEndpoint,
    SelfLoop,
    TemporalCycle,
    MissingMetadata,
    UnresolvedScope,
    EmptyQualifications,
    InvalidPriority,
}

/// One structural problem found by [`Workflow::validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defect {
    pub kind: DefectKind,
    /// Ids of the offending elements. For cycles, the edges in cycle order.
    pub elements: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Workflow {
    pub nodes: Vec<RoleNode>,
    pub edges: Vec<DependencyEdge>,
    #[serde(default)]
    pub constraints: ConstraintSet,
    #[serde(default)]
    pub metrics: MetricSet,
    #[serde(default, with = "score_serde")]
    pub score: Option<f64>,
}

impl Workflow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&self, id: &str) -> Option<&RoleNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut RoleNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&DependencyEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    fn id_taken(&self, id: &str) -> bool {
        self.nodes.iter().any(|n| n.id == id) || self.edges.iter().any(|e| e.id == id)
    }

    pub fn add_node(&mut self, node: RoleNode) -> Result<(), WorkflowError> {
        if self.id_taken(&node.id) {
            return Err(WorkflowError::DuplicateId(node.id));
        }
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: DependencyEdge) -> Result<(), WorkflowError> {
        if self.id_taken(&edge.id) {
            return Err(WorkflowError::DuplicateId(edge.id));
        }
        for endpoint in [&edge.from_node, &edge.to_node] {
            if self.node(endpoint).is_none() {
                return Err(WorkflowError::DanglingEndpoint { edge: edge.id.clone(), node: endpoint.clone() });
            }
        }
        if edge.from_node == edge.to_node {
            return Err(WorkflowError::SelfLoop(edge.id));
        }
        if let Some(key) = edge.missing_metadata() {
            return Err(WorkflowError::MissingMetadata { edge: edge.id, key: key.to_string() });
        }
        if edge.kind == EdgeKind::Temporal && self.temporal_reachable(&edge.to_node, &edge.from_node) {
            return Err(WorkflowError::TemporalCycle(edge.id));
        }
        self.edges.push(edge);
        Ok(())
    }

    /// Whether `target` can be reached from `start` along temporal edges.
    fn temporal_reachable(&self, start: &str, target: &str) -> bool {
        let mut stack = vec![start];
        let mut seen = BTreeSet::new();
        while let Some(current) = stack.pop() {
            if current == target {
                return true;
            }
            if !seen.insert(current) {
                continue;
            }
            for e in self.edges.iter().filter(|e| e.kind == EdgeKind::Temporal && e.from_node == current) {
                stack.push(&e.to_node);
            }
        }
        false
    }

    /// Full structural audit. Unlike the `add_*` operations it reports every
    /// defect instead of stopping at the first one.
    pub fn validate_structure(&self) -> Vec<Defect> {
        let mut defects = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for id in self.nodes.iter().map(|n| n.id.as_str()).chain(self.edges.iter().map(|e| e.id.as_str())) {
            *seen.entry(id).or_default() += 1;
        }
        let mut dupes: Vec<&str> = seen.iter().filter(|(_, n)| **n > 1).map(|(id, _)| *id).collect();
        dupes.sort_unstable();
        for id in dupes {
            defects.push(Defect {
                kind: DefectKind::DuplicateId,
                elements: vec![id.to_string()],
                message: format!("id `{id}` is used {} times", seen[id]),
            });
        }

        let node_ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        for node in &self.nodes {
            if node.qualifications.is_empty() {
                defects.push(Defect {
                    kind: DefectKind::EmptyQualifications,
                    elements: vec![node.id.clone()],
                    message: format!("role `{}` has no qualifications", node.id),
                });
            }
        }
        for edge in &self.edges {
            for endpoint in [&edge.from_node, &edge.to_node] {
                if !node_ids.contains(endpoint.as_str()) {
                    defects.push(Defect {
                        kind: DefectKind::DanglingEndpoint,
                        elements: vec![edge.id.clone(), endpoint.clone()],
                        message: format!("edge `{}` points at missing node `{endpoint}`", edge.id),
                    });
                }
            }
            if edge.from_node == edge.to_node {
                defects.push(Defect {
                    kind: DefectKind::SelfLoop,
                    elements: vec![edge.id.clone()],
                    message: format!("edge `{}` is a self-loop", edge.id),
                });
            }
            if let Some(key) = edge.missing_metadata() {
                defects.push(Defect {
                    kind: DefectKind::MissingMetadata,
                    elements: vec![edge.id.clone()],
                    message: format!("{} edge `{}` lacks `{key}`", edge.kind.as_str(), edge.id),
                });
            }
        }
        for cycle in self.temporal_cycles() {
            defects.push(Defect {
                kind: DefectKind::TemporalCycle,
                message: format!("temporal cycle through {}", cycle.join(" -> ")),
                elements: cycle,
            });
        }

        let edge_ids: BTreeSet<&str> = self.edges.iter().map(|e| e.id.as_str()).collect();
        for c in self.constraints.iter() {
            if let Some(missing) =
                c.scope.iter().find(|s| !node_ids.contains(s.as_str()) && !edge_ids.contains(s.as_str()))
            {
                defects.push(Defect {
                    kind: DefectKind::UnresolvedScope,
                    elements: vec![c.id.clone(), missing.clone()],
                    message: format!("constraint `{}` refers to unknown element `{missing}`", c.id),
                });
            }
            if !(1..=5).contains(&c.priority) || (c.hard && c.priority != 5) {
                defects.push(Defect {
                    kind: DefectKind::InvalidPriority,
                    elements: vec![c.id.clone()],
                    message: format!("constraint `{}` has priority {} (hard={})", c.id, c.priority, c.hard),
                });
            }
        }
        defects
    }

    /// Cycles in the temporal subgraph, each reported once as its edge ids.
    pub fn temporal_cycles(&self) -> Vec<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut adjacency: Vec<Vec<(usize, &str)>> = vec![Vec::new(); self.nodes.len()];
        for e in self.edges.iter().filter(|e| e.kind == EdgeKind::Temporal) {
            if let (Some(&a), Some(&b)) = (index.get(e.from_node.as_str()), index.get(e.to_node.as_str())) {
                adjacency[a].push((b, e.id.as_str()));
            }
        }

        let mut marks = vec![Mark::White; self.nodes.len()];
        let mut cycles = Vec::new();
        for root in 0..self.nodes.len() {
            if marks[root] != Mark::White {
                continue;
            }
            // Iterative DFS; `path` holds (node, edge used to enter it).
            let mut path: Vec<(usize, Option<&str>)> = vec![(root, None)];
            let mut cursor: Vec<usize> = vec![0];
            marks[root] = Mark::Grey;
            while let Some(&(node, _)) = path.last() {
                let next = cursor.last_mut().expect("cursor tracks path");
                if let Some(&(succ, edge_id)) = adjacency[node].get(*next) {
                    *next += 1;
                    match marks[succ] {
                        Mark::White => {
                            marks[succ] = Mark::Grey;
                            path.push((succ, Some(edge_id)));
                            cursor.push(0);
                        }
                        Mark::Grey => {
                            let start = path.iter().position(|(n, _)| *n == succ).expect("grey node on path");
                            let mut cycle: Vec<String> =
                                path[start + 1..].iter().filter_map(|(_, e)| e.map(str::to_string)).collect();
                            cycle.push(edge_id.to_string());
                            cycles.push(cycle);
                        }
                        Mark::Black => {}
                    }
                } else {
                    marks[node] = Mark::Black;
                    path.pop();
                    cursor.pop();
                }
            }
        }
        cycles
    }

    /// Current role-to-person mapping, in node order.
    pub fn assignment(&self) -> BTreeMap<String, String> {
        self.nodes
            .iter()
            .filter_map(|n| n.assigned_person.clone().map(|p| (n.id.clone(), p)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workflow serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WorkflowError> {
        serde_json::from_str(text).map_err(|e| WorkflowError::Json(e.to_string()))
    }
}

/// Scores are finite numbers or `-inf` for infeasible plans. JSON has no
/// infinity, so `-inf` travels as the string `"-inf"`.
mod score_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            None => serializer.serialize_none(),
            Some(v) if v.is_finite() => Repr::Number(*v).serialize(serializer),
            Some(v) if *v < 0.0 => Repr::Text("-inf".into()).serialize(serializer),
            Some(_) => Repr::Text("inf".into()).serialize(serializer),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(deserializer)? {
            None => Ok(None),
            Some(Repr::Number(v)) => Ok(Some(v)),
            Some(Repr::Text(t)) if t == "-inf" => Ok(Some(f64::NEG_INFINITY)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("invalid score `{t}`"))),
        }
    }
}
